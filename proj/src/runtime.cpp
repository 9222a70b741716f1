#include "sessionml/runtime.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace sessionml {

std::string show(const Endpoint& p) {
  return std::string(p.dual ? "~p" : "p") + std::to_string(p.id) + (p.label ? "^l" + std::to_string(p.label) : "");
}

std::string show(const Event& e) {
  std::ostringstream os;
  os << e.step << ", " << e.rule << ", [";
  for (size_t i = 0; i < e.pids.size(); ++i) os << (i ? " " : "") << e.pids[i];
  os << "], [";
  for (size_t i = 0; i < e.endpoints.size(); ++i) os << (i ? " " : "") << show(e.endpoints[i]);
  os << "], " << e.payload;
  return os.str();
}

namespace {

// ---------------------------------------------------------------- expressions

bool is_value(const ExprP& e) {
  switch (e->tag) {
    case ExprTag::Unit: case ExprTag::Bool: case ExprTag::Int: case ExprTag::Prim:
    case ExprTag::Request: case ExprTag::Accept: case ExprTag::Send: case ExprTag::Recv:
    case ExprTag::Select: case ExprTag::Deleg: case ExprTag::Resume:
    case ExprTag::Lam: case ExprTag::Fix: case ExprTag::Endpoint:
      return true;
    case ExprTag::Pair: return is_value(e->a) && is_value(e->b);
    default: return false;
  }
}

ExprP with(const ExprP& e, ExprP a, ExprP b, ExprP c) {
  auto n = std::make_shared<Expr>(*e);
  n->a = std::move(a);
  n->b = std::move(b);
  n->c = std::move(c);
  return n;
}

// Values substituted here are closed, so no capture can occur.
ExprP subst(const ExprP& e, const std::string& x, const ExprP& v) {
  if (!e) return e;
  switch (e->tag) {
    case ExprTag::Var: return e->name == x ? v : e;
    case ExprTag::Lam:
      if (e->param == x) return e;
      return with(e, subst(e->a, x, v), e->b, e->c);
    case ExprTag::Fix:
      if (e->param == x || e->fname == x) return e;
      return with(e, subst(e->a, x, v), e->b, e->c);
    case ExprTag::Let:
      return with(e, subst(e->a, x, v), e->param == x ? e->b : subst(e->b, x, v), e->c);
    case ExprTag::Case: {
      auto n = std::make_shared<Expr>(*e);
      n->a = subst(e->a, x, v);
      for (auto& [l, arm] : n->branches) arm = subst(arm, x, v);
      return n;
    }
    case ExprTag::Pair: case ExprTag::App: case ExprTag::If: case ExprTag::Spawn:
      return with(e, subst(e->a, x, v), subst(e->b, x, v), subst(e->c, x, v));
    default: return e;
  }
}

enum class RKind { None, Local, Spawn, Request, Accept, Send, Recv, Deleg, Resume, Select, Offer, Stuck };

struct Redex {
  RKind kind = RKind::None;
  ExprP redex;
  std::vector<std::pair<ExprP, int>> path;  // parents and the slot leading to the hole
};

Redex find_redex(const ExprP& e) {
  Redex r;
  ExprP cur = e;
  while (true) {
    if (is_value(cur)) return r;
    auto descend = [&](int slot, const ExprP& child) {
      r.path.emplace_back(cur, slot);
      cur = child;
    };
    switch (cur->tag) {
      case ExprTag::Pair:
        if (!is_value(cur->a)) descend(0, cur->a);
        else descend(1, cur->b);
        continue;
      case ExprTag::App:
        if (!is_value(cur->a)) { descend(0, cur->a); continue; }
        if (!is_value(cur->b)) { descend(1, cur->b); continue; }
        break;
      case ExprTag::Let: case ExprTag::If: case ExprTag::Spawn: case ExprTag::Case:
        if (!is_value(cur->a)) { descend(0, cur->a); continue; }
        break;
      default: break;
    }
    r.redex = cur;
    break;
  }
  const ExprP& x = r.redex;
  auto ep = [](const ExprP& v) { return v->tag == ExprTag::Endpoint; };
  switch (x->tag) {
    case ExprTag::Let: case ExprTag::If: r.kind = RKind::Local; break;
    case ExprTag::Spawn: r.kind = RKind::Spawn; break;
    case ExprTag::Case: r.kind = ep(x->a) ? RKind::Offer : RKind::Stuck; break;
    case ExprTag::App: {
      const ExprP& f = x->a;
      const ExprP& v = x->b;
      switch (f->tag) {
        case ExprTag::Lam: case ExprTag::Fix: case ExprTag::Prim: r.kind = RKind::Local; break;
        case ExprTag::Request: r.kind = v->tag == ExprTag::Unit ? RKind::Request : RKind::Stuck; break;
        case ExprTag::Accept: r.kind = v->tag == ExprTag::Unit ? RKind::Accept : RKind::Stuck; break;
        case ExprTag::Send: r.kind = v->tag == ExprTag::Pair && ep(v->a) ? RKind::Send : RKind::Stuck; break;
        case ExprTag::Recv: r.kind = ep(v) ? RKind::Recv : RKind::Stuck; break;
        case ExprTag::Deleg:
          r.kind = v->tag == ExprTag::Pair && ep(v->a) && ep(v->b) ? RKind::Deleg : RKind::Stuck;
          break;
        case ExprTag::Resume: r.kind = ep(v) ? RKind::Resume : RKind::Stuck; break;
        case ExprTag::Select: r.kind = ep(v) ? RKind::Select : RKind::Stuck; break;
        default: r.kind = RKind::Stuck; break;
      }
      break;
    }
    default: r.kind = RKind::Stuck; break;
  }
  return r;
}

ExprP plug(const Redex& r, ExprP hole) {
  for (auto it = r.path.rbegin(); it != r.path.rend(); ++it) {
    auto n = std::make_shared<Expr>(*it->first);
    (it->second == 0 ? n->a : n->b) = hole;
    hole = n;
  }
  return hole;
}

std::optional<ExprP> delta(const std::string& prim, const ExprP& v, std::string& err) {
  auto num = [](const ExprP& x) { return x->tag == ExprTag::Int; };
  if (prim == "fst" || prim == "snd") {
    if (v->tag != ExprTag::Pair) return err = prim + " of a non-pair", std::nullopt;
    return prim == "fst" ? v->a : v->b;
  }
  if (prim == "not") {
    if (v->tag != ExprTag::Bool) return err = "not of a non-boolean", std::nullopt;
    return mk_bool(v->ival == 0);
  }
  if (v->tag != ExprTag::Pair) return err = prim + " expects a pair", std::nullopt;
  const ExprP &x = v->a, &y = v->b;
  if (prim == "eq") {
    if (x->tag != y->tag || (x->tag != ExprTag::Int && x->tag != ExprTag::Bool && x->tag != ExprTag::Unit))
      return err = "eq on incomparable values", std::nullopt;
    return mk_bool(x->ival == y->ival);
  }
  if (!num(x) || !num(y)) return err = prim + " expects integers", std::nullopt;
  if (prim == "add") return mk_int(x->ival + y->ival);
  if (prim == "sub") return mk_int(x->ival - y->ival);
  if (prim == "mul") return mk_int(x->ival * y->ival);
  if (prim == "lt") return mk_bool(x->ival < y->ival);
  err = "unknown primitive " + prim;
  return std::nullopt;
}

std::optional<ExprP> reduce_local(const ExprP& x, std::string& err) {
  switch (x->tag) {
    case ExprTag::Let: return x->param == "_" ? x->b : subst(x->b, x->param, x->a);
    case ExprTag::If:
      if (x->a->tag != ExprTag::Bool) return err = "if on a non-boolean", std::nullopt;
      return x->a->ival ? x->b : x->c;
    case ExprTag::App: {
      const ExprP& f = x->a;
      if (f->tag == ExprTag::Lam) return f->param == "_" ? f->a : subst(f->a, f->param, x->b);
      if (f->tag == ExprTag::Fix) {
        ExprP body = subst(f->a, f->fname, f);
        return f->param == "_" ? body : subst(body, f->param, x->b);
      }
      if (f->tag == ExprTag::Prim) return delta(f->name, x->b, err);
      break;
    }
    default: break;
  }
  err = "stuck expression " + pretty(x);
  return std::nullopt;
}

Endpoint endpoint_of(const ExprP& e) { return {e->endpoint, e->dual, e->label}; }
ExprP endpoint_expr(const Endpoint& p) { return mk_endpoint(p.id, p.dual, p.label); }

// ---------------------------------------------------------------- monitor

using Cont = std::vector<Beh>;  // back runs next

Beh residual_beh(const Cont& k) {
  if (k.empty()) return b_tau();
  Beh b = k.front();
  for (size_t i = 1; i < k.size(); ++i) b = b_seq(k[i], b);
  return b;
}

// Expands internal moves (tau, seq, plus, behaviour variables, rec unfolding) until every
// candidate shows an observable head or is finished.
std::vector<Cont> frontier(const std::vector<Cont>& start, const ConstraintSet& c, bool stop_at_end = false) {
  constexpr size_t kMaxDepth = 256, kMaxStates = 200000;
  std::vector<Cont> out;
  std::deque<Cont> work(start.begin(), start.end());
  std::set<std::vector<const BehNode*>> seen;
  while (!work.empty() && seen.size() < kMaxStates) {
    Cont k = std::move(work.front());
    work.pop_front();
    std::vector<const BehNode*> key;
    for (auto& b : k) key.push_back(b.get());
    if (!seen.insert(key).second) continue;
    if (k.empty()) {
      out.push_back(k);
      if (stop_at_end) break;
      continue;
    }
    if (k.size() > kMaxDepth) continue;
    Beh h = k.back();
    k.pop_back();
    switch (h->tag) {
      case BehTag::Tau: work.push_back(k); break;
      case BehTag::Seq:
        k.push_back(h->b);
        k.push_back(h->a);
        work.push_back(k);
        break;
      case BehTag::Plus: {
        Cont k2 = k;
        k.push_back(h->a);
        k2.push_back(h->b);
        work.push_back(k);
        work.push_back(k2);
        break;
      }
      case BehTag::Var: {
        auto& bs = c.bindings_of(h->x);
        if (bs.empty()) work.push_back(k);
        for (auto& b : bs) {
          Cont k2 = k;
          k2.push_back(b);
          work.push_back(k2);
        }
        break;
      }
      case BehTag::Rec:
        k.push_back(h->a);
        work.push_back(k);
        break;
      default:
        k.push_back(h);
        out.push_back(k);
        break;
    }
  }
  return out;
}

bool value_fits(const ExprP& v, const Type& t0, const TypeClosure& tc, int depth = 0) {
  Type t = t0;
  if (depth > 32) return true;
  if (t->tag == TypeTag::Var) {
    auto g = tc.ground_of(t);
    if (!g) return true;
    t = *g;
  }
  switch (t->tag) {
    case TypeTag::Unit: return v->tag == ExprTag::Unit;
    case TypeTag::Bool: return v->tag == ExprTag::Bool;
    case TypeTag::Int: return v->tag == ExprTag::Int;
    case TypeTag::Pair:
      return v->tag == ExprTag::Pair && value_fits(v->a, t->a, tc, depth + 1) && value_fits(v->b, t->b, tc, depth + 1);
    case TypeTag::Ses: return v->tag == ExprTag::Endpoint;
    case TypeTag::Fun: return is_value(v) && v->tag != ExprTag::Pair && v->tag != ExprTag::Endpoint &&
                              v->tag != ExprTag::Int && v->tag != ExprTag::Bool && v->tag != ExprTag::Unit;
    default: return true;
  }
}

void drop_ends(Process& p) {
  while (!p.stack.frames.empty() && p.stack.frames.front().ses && p.stack.frames.front().ses->tag == SesTag::End) {
    p.stack.frames.erase(p.stack.frames.begin());
    p.endpoints.erase(p.endpoints.begin());
  }
}

void push_frame(Process& p, const Endpoint& e, const Session& s, size_t at = 0) {
  p.stack.frames.insert(p.stack.frames.begin() + static_cast<std::ptrdiff_t>(at), Frame{e.label, s});
  p.endpoints.insert(p.endpoints.begin() + static_cast<std::ptrdiff_t>(at), e);
}

}  // namespace

SystemConfig initial_config(const ExprP& program, const Beh& b) {
  SystemConfig sys;
  Process p;
  p.pid = sys.next_pid++;
  p.expr = program;
  p.residual = {Cont{b}};
  sys.procs.push_back(std::move(p));
  return sys;
}

// ---------------------------------------------------------------- machine

struct Machine::Action {
  RKind kind;
  size_t i;
  size_t j;  // partner for synchronisations
};

Machine::Machine(SystemConfig sys, const ConstraintSet& c, uint64_t seed, Policy policy, bool typed)
    : sys_(std::move(sys)), c_(c), judge_(c), rng_(seed), policy_(policy), typed_(typed) {}

std::vector<Machine::Action> Machine::enabled(bool internal_only) const {
  std::vector<Redex> rs;
  for (auto& p : sys_.procs) rs.push_back(p.error.empty() ? find_redex(p.expr) : Redex{});
  std::vector<Action> out;
  for (size_t i = 0; i < rs.size(); ++i) {
    if (rs[i].kind == RKind::Local || rs[i].kind == RKind::Spawn) out.push_back({rs[i].kind, i, i});
    if (internal_only) continue;
    for (size_t j = 0; j < rs.size(); ++j) {
      if (i == j) continue;
      const ExprP& x = rs[i].redex;
      const ExprP& y = rs[j].redex;
      auto dual_of = [](const ExprP& a, const ExprP& b) {
        return a->endpoint == b->endpoint && a->dual != b->dual;
      };
      if (rs[i].kind == RKind::Request && rs[j].kind == RKind::Accept && x->a->name == y->a->name)
        out.push_back({RKind::Request, i, j});
      if (rs[i].kind == RKind::Send && rs[j].kind == RKind::Recv && dual_of(x->b->a, y->b))
        out.push_back({RKind::Send, i, j});
      if (rs[i].kind == RKind::Deleg && rs[j].kind == RKind::Resume && dual_of(x->b->a, y->b))
        out.push_back({RKind::Deleg, i, j});
      if (rs[i].kind == RKind::Select && rs[j].kind == RKind::Offer && dual_of(x->b, y->a)) {
        bool has = false;
        for (auto& [l, arm] : y->branches) has |= l == x->a->name;
        if (has) out.push_back({RKind::Select, i, j});
      }
    }
  }
  return out;
}

bool Machine::can_step() const { return !enabled(false).empty(); }

bool Machine::can_communicate() const {
  for (auto& a : enabled(false))
    if (a.kind != RKind::Local && a.kind != RKind::Spawn) return true;
  return false;
}

std::vector<int> Machine::locally_enabled() const {
  std::vector<int> out;
  for (auto& a : enabled(true)) out.push_back(sys_.procs[a.i].pid);
  return out;
}

std::optional<Event> Machine::step() {
  auto acts = enabled(false);
  if (acts.empty()) return std::nullopt;
  size_t pick = 0;
  if (policy_ == Policy::Random) {
    pick = std::uniform_int_distribution<size_t>(0, acts.size() - 1)(rng_);
  } else {
    // Round robin over the lowest process index involved in each action.
    size_t best = acts.size();
    for (size_t k = 0; k < acts.size(); ++k) {
      size_t lo = std::min(acts[k].i, acts[k].j);
      if (lo >= cursor_ && (best == acts.size() || lo < std::min(acts[best].i, acts[best].j))) best = k;
    }
    if (best == acts.size()) {
      best = 0;
      for (size_t k = 1; k < acts.size(); ++k)
        if (std::min(acts[k].i, acts[k].j) < std::min(acts[best].i, acts[best].j)) best = k;
    }
    pick = best;
    cursor_ = std::min(acts[pick].i, acts[pick].j) + 1;
  }
  return fire(acts[pick]);
}

void Machine::run_internal(size_t budget) {
  for (size_t n = 0; n < budget; ++n) {
    auto acts = enabled(true);
    if (acts.empty()) return;
    fire(acts[n % acts.size()]);
  }
}

Event Machine::fire(const Action& a) {
  Event ev;
  ev.step = ++sys_.steps;
  Process* P = &sys_.procs[a.i];
  Redex r = find_redex(P->expr);
  const ExprP x = r.redex;
  ev.pids.push_back(P->pid);

  auto violate = [&](Process& p, const std::string& why) {
    violations_.push_back({ev, "process " + std::to_string(p.pid) + ": " + why + " at stack " + show(p.stack)});
    p.residual.clear();
    p.unmonitored = true;
  };
  auto top_ok = [&](Process& p, const Endpoint& e) {
    return !p.endpoints.empty() && p.endpoints.front() == e;
  };
  auto region_ok = [&](uint32_t rho, uint32_t label) {
    return judge_.regions.same(rvar(rho), rlabel(label));
  };
  // Keeps candidates whose head passes test; advance returns the continuation after the head.
  using Test = std::function<bool(const Beh&)>;
  auto match = [&](Process& p, const Test& test,
                   const std::function<std::vector<Cont>(Cont, const Beh&)>& advance) -> std::vector<Beh> {
    std::vector<Beh> heads;
    if (!typed_ || p.unmonitored) return heads;
    std::vector<Cont> next;
    std::set<std::vector<const BehNode*>> seen;
    for (auto& k : frontier(p.residual, c_)) {
      if (k.empty() || !test(k.back())) continue;
      Beh h = k.back();
      k.pop_back();
      heads.push_back(h);
      for (auto& n : advance(k, h)) {
        std::vector<const BehNode*> key;
        for (auto& b : n) key.push_back(b.get());
        if (seen.insert(key).second) next.push_back(n);
      }
    }
    p.residual = next;
    return heads;
  };
  auto plain = [](Cont k, const Beh&) { return std::vector<Cont>{k}; };

  switch (a.kind) {
    case RKind::Local: {
      ev.rule = "Beta";
      std::string err;
      auto out = reduce_local(x, err);
      if (!out) {
        P->error = err;
        errors_.push_back("process " + std::to_string(P->pid) + ": " + err);
        break;
      }
      P->expr = plug(r, *out);
      break;
    }
    case RKind::Spawn: {
      ev.rule = "Spn";
      std::vector<Beh> heads = match(*P, [](const Beh& h) { return h->tag == BehTag::Spawn; }, plain);
      if (typed_ && !P->unmonitored && heads.empty()) violate(*P, "spawn without a spawn behaviour");
      Process child;
      child.pid = sys_.next_pid++;
      child.expr = mk_app(x->a, mk_unit());
      for (auto& h : heads) child.residual.push_back(Cont{h->a});
      child.unmonitored = typed_ && heads.empty();
      P->expr = plug(r, mk_unit());
      ev.pids.push_back(child.pid);
      sys_.procs.push_back(std::move(child));
      break;
    }
    case RKind::Request: {
      ev.rule = "Init";
      Process* Q = &sys_.procs[a.j];
      Redex rq = find_redex(Q->expr);
      ev.pids.push_back(Q->pid);
      ev.payload = x->a->name;
      uint64_t id = sys_.next_endpoint++;
      Endpoint p{id, false, x->a->label}, q{id, true, rq.redex->a->label};
      ev.endpoints = {p, q};
      for (auto [proc, e] : {std::pair{P, p}, std::pair{Q, q}}) {
        Session eta;
        bool was = typed_ && !proc->unmonitored;
        auto heads = match(*proc, [&](const Beh& h) { return h->tag == BehTag::Push && h->x == e.label; }, plain);
        if (!heads.empty()) eta = heads.front()->ses;
        else if (was) violate(*proc, "no push(l" + std::to_string(e.label) + ") expected");
        if (typed_) push_frame(*proc, e, eta ? eta : s_end());
      }
      P->expr = plug(r, endpoint_expr(p));
      Q->expr = plug(rq, endpoint_expr(q));
      drop_ends(*P);
      drop_ends(*Q);
      break;
    }
    case RKind::Send: {
      ev.rule = "Com";
      Process* Q = &sys_.procs[a.j];
      Redex rq = find_redex(Q->expr);
      ev.pids.push_back(Q->pid);
      Endpoint p = endpoint_of(x->b->a), q = endpoint_of(rq.redex->b);
      ExprP v = x->b->b;
      ev.endpoints = {p, q};
      ev.payload = pretty(v);
      if (typed_) {
        bool shape = top_ok(*P, p) && top_ok(*Q, q) && P->stack.frames[0].ses->tag == SesTag::Out &&
                     Q->stack.frames[0].ses->tag == SesTag::In;
        if (!shape) {
          violate(*P, "send on " + show(p) + " does not match the top frame");
          violate(*Q, "receive on " + show(q) + " does not match the top frame");
        } else {
          Session sp = P->stack.frames[0].ses, sq = Q->stack.frames[0].ses;
          uint32_t lp = P->stack.frames[0].label, lq = Q->stack.frames[0].label;
          if (!value_fits(v, sp->payload, judge_.types)) violate(*P, "value " + ev.payload + " does not fit " + show(sp));
          if (!P->unmonitored && match(*P, [&](const Beh& h) {
                return h->tag == BehTag::Out && region_ok(h->x, lp) && judge_.subtype(h->payload, sp->payload);
              }, plain).empty())
            violate(*P, "no matching output behaviour for " + show(sp));
          if (!Q->unmonitored && match(*Q, [&](const Beh& h) {
                return h->tag == BehTag::In && region_ok(h->x, lq) && judge_.subtype(sq->payload, h->payload);
              }, plain).empty())
            violate(*Q, "no matching input behaviour for " + show(sq));
          P->stack.frames[0].ses = sp->next;
          Q->stack.frames[0].ses = sq->next;
        }
      }
      P->expr = plug(r, mk_unit());
      Q->expr = plug(rq, v);
      drop_ends(*P);
      drop_ends(*Q);
      break;
    }
    case RKind::Deleg: {
      ev.rule = "Del";
      Process* Q = &sys_.procs[a.j];
      Redex rq = find_redex(Q->expr);
      ev.pids.push_back(Q->pid);
      Endpoint p = endpoint_of(x->b->a), moved = endpoint_of(x->b->b), q = endpoint_of(rq.redex->b);
      uint32_t lr = rq.redex->a->label;
      Endpoint arrived{moved.id, moved.dual, lr};
      ev.endpoints = {p, q, moved};
      ev.payload = show(moved);
      if (typed_) {
        bool shape = top_ok(*P, p) && P->stack.frames.size() >= 2 && P->endpoints[1] == moved &&
                     top_ok(*Q, q) && Q->stack.frames.size() == 1 &&
                     P->stack.frames[0].ses->tag == SesTag::Deleg && Q->stack.frames[0].ses->tag == SesTag::Resume;
        if (!shape) {
          violate(*P, "delegation of " + show(moved) + " over " + show(p) + " does not match the stack");
          violate(*Q, "resume on " + show(q) + " does not match the stack");
        } else {
          Session sp = P->stack.frames[0].ses, sq = Q->stack.frames[0].ses;
          Session held = P->stack.frames[1].ses;
          uint32_t lp = P->stack.frames[0].label, ld = P->stack.frames[1].label, lq = Q->stack.frames[0].label;
          if (!judge_.session_subtype(held, sp->carried))
            violate(*P, "delegated session " + show(held) + " is not a subtype of " + show(sp->carried));
          if (!P->unmonitored && match(*P, [&](const Beh& h) {
                return h->tag == BehTag::Deleg && region_ok(h->x, lp) && region_ok(h->y, ld);
              }, plain).empty())
            violate(*P, "no matching delegation behaviour");
          if (!Q->unmonitored && match(*Q, [&](const Beh& h) {
                return h->tag == BehTag::Resume && region_ok(h->x, lq) && h->y == lr;
              }, plain).empty())
            violate(*Q, "no matching resume behaviour");
          P->stack.frames[0].ses = sp->next;
          P->stack.frames.erase(P->stack.frames.begin() + 1);
          P->endpoints.erase(P->endpoints.begin() + 1);
          Q->stack.frames[0].ses = sq->next;
          push_frame(*Q, arrived, sq->carried, 1);
        }
      }
      P->expr = plug(r, mk_unit());
      Q->expr = plug(rq, endpoint_expr(arrived));
      drop_ends(*P);
      drop_ends(*Q);
      break;
    }
    case RKind::Select: {
      ev.rule = "Sel";
      Process* Q = &sys_.procs[a.j];
      Redex rq = find_redex(Q->expr);
      ev.pids.push_back(Q->pid);
      const std::string L = x->a->name;
      Endpoint p = endpoint_of(x->b), q = endpoint_of(rq.redex->a);
      ev.endpoints = {p, q};
      ev.payload = L;
      if (typed_) {
        bool shape = top_ok(*P, p) && top_ok(*Q, q) && P->stack.frames[0].ses->tag == SesTag::Internal &&
                     Q->stack.frames[0].ses->tag == SesTag::External &&
                     P->stack.frames[0].ses->branches.count(L) && Q->stack.frames[0].ses->branches.count(L);
        if (!shape) {
          violate(*P, "select " + L + " on " + show(p) + " does not match the top frame");
          violate(*Q, "offer on " + show(q) + " does not match the top frame");
        } else {
          Session sp = P->stack.frames[0].ses, sq = Q->stack.frames[0].ses;
          uint32_t lp = P->stack.frames[0].label, lq = Q->stack.frames[0].label;
          if (!P->unmonitored && match(*P, [&](const Beh& h) {
                return h->tag == BehTag::Select && region_ok(h->x, lp) && h->choice == L;
              }, plain).empty())
            violate(*P, "no matching selection behaviour for " + L);
          auto branch = [&](Cont k, const Beh& h) {
            std::vector<Cont> out;
            for (auto& [l, b] : h->branches)
              if (l == L) {
                k.push_back(b);
                out.push_back(k);
              }
            return out;
          };
          if (!Q->unmonitored && match(*Q, [&](const Beh& h) {
                if (h->tag != BehTag::Offer || !region_ok(h->x, lq)) return false;
                for (auto& [l, b] : h->branches)
                  if (l == L) return true;
                return false;
              }, branch).empty())
            violate(*Q, "no matching offer behaviour for " + L);
          P->stack.frames[0].ses = sp->branches.at(L);
          Q->stack.frames[0].ses = sq->branches.at(L);
        }
      }
      ExprP arm;
      for (auto& [l, e] : rq.redex->branches)
        if (l == L) arm = e;
      P->expr = plug(r, mk_unit());
      Q->expr = plug(rq, arm);
      drop_ends(*P);
      drop_ends(*Q);
      break;
    }
    default: break;
  }
  return ev;
}

// ---------------------------------------------------------------- well-stackedness

bool well_stacked(const SystemConfig& sys, const Judge& judge) {
  using Stk = std::vector<std::pair<Endpoint, Session>>;
  std::vector<Stk> stacks;
  for (auto& p : sys.procs) {
    Stk s;
    for (size_t i = 0; i < p.endpoints.size(); ++i) s.emplace_back(p.endpoints[i], p.stack.frames[i].ses);
    if (!s.empty()) stacks.push_back(std::move(s));
  }
  std::set<std::vector<std::string>> failed;
  auto fingerprint = [](const std::vector<Stk>& ss) {
    std::vector<std::string> fp;
    for (auto& s : ss) {
      std::string f;
      for (auto& [e, t] : s) f += show(e) + ":" + show(t) + "|";
      fp.push_back(f);
    }
    std::sort(fp.begin(), fp.end());
    return fp;
  };
  std::function<bool(std::vector<Stk>&)> go = [&](std::vector<Stk>& ss) -> bool {
    bool all_empty = true;
    for (auto& s : ss) all_empty &= s.empty();
    if (all_empty) return true;
    auto fp = fingerprint(ss);
    if (failed.count(fp)) return false;
    for (size_t i = 0; i < ss.size(); ++i) {
      if (ss[i].empty()) continue;
      for (size_t j = i + 1; j < ss.size(); ++j) {
        if (ss[j].empty()) continue;
        auto& [ei, ti] = ss[i].front();
        auto& [ej, tj] = ss[j].front();
        if (ei.id != ej.id || ei.dual == ej.dual) continue;
        if (!judge.dual(ti, tj) && !judge.dual(tj, ti)) continue;
        auto a = ss[i].front(), b = ss[j].front();
        ss[i].erase(ss[i].begin());
        ss[j].erase(ss[j].begin());
        bool ok = go(ss);
        ss[i].insert(ss[i].begin(), a);
        ss[j].insert(ss[j].begin(), b);
        if (ok) return true;
      }
    }
    failed.insert(fp);
    return false;
  };
  return go(stacks);
}

// ---------------------------------------------------------------- classification

Classification classify(Machine& m, size_t budget) {
  m.run_internal(budget);
  Classification cl;
  cl.communication_possible = m.can_communicate();
  const auto& procs = m.system().procs;
  std::map<int, char> bucket;
  for (auto& p : procs) {
    Redex r = p.error.empty() ? find_redex(p.expr) : Redex{RKind::Stuck};
    char b = 'A';
    switch (r.kind) {
      case RKind::None: b = p.endpoints.empty() ? 'F' : 'A'; break;
      case RKind::Local: case RKind::Spawn: b = 'D'; break;
      case RKind::Request: case RKind::Accept: b = 'W'; break;
      case RKind::Stuck: b = 'A'; break;
      default: b = 'B'; break;
    }
    bucket[p.pid] = b;
    (b == 'F' ? cl.finished : b == 'D' ? cl.diverging : b == 'W' ? cl.waiting : b == 'B' ? cl.blocked : cl.anomalous)
        .push_back(p.pid);
  }
  for (auto& p : procs) {
    if (p.endpoints.empty()) continue;
    const Endpoint& top = p.endpoints.front();
    for (auto& q : procs) {
      if (q.pid == p.pid) continue;
      for (size_t k = 0; k < q.endpoints.size(); ++k) {
        if (q.endpoints[k].id != top.id || q.endpoints[k].dual == top.dual) continue;
        (k == 0 ? cl.ready : cl.waits).emplace_back(p.pid, q.pid);
      }
    }
  }
  auto in = [&](int pid, const std::string& set) { return set.find(bucket[pid]) != std::string::npos; };
  for (int P : cl.blocked) {
    // P waits transitively on Q, and Q is ready with R.
    std::set<int> reach;
    std::vector<int> todo{P};
    while (!todo.empty()) {
      int u = todo.back();
      todo.pop_back();
      for (auto& [a, b] : cl.waits)
        if (a == u && reach.insert(b).second) todo.push_back(b);
    }
    bool ok = false;
    for (int Q : reach) {
      if (!in(Q, "DW")) continue;
      for (auto& [a, R] : cl.ready)
        if (a == Q && in(R, "DWB")) ok = true;
    }
    // P itself ready with a diverging or waiting partner.
    for (auto& [a, R] : cl.ready)
      if (a == P && in(R, "DW")) ok = true;
    if (!ok) cl.undepended.push_back(P);
  }
  return cl;
}

// ---------------------------------------------------------------- runs

size_t RunReport::clean_runs() const {
  size_t n = 0;
  for (auto& r : runs) n += r.clean();
  return n;
}

size_t RunReport::violations() const {
  size_t n = 0;
  for (auto& r : runs) n += r.violations.size();
  return n;
}

RunReport run(const ExprP& program, const Beh& b, const ConstraintSet& c, const RunConfig& cfg) {
  RunReport report;
  Judge judge(c);
  Explorer explorer(c);
  for (size_t s = 0; s < cfg.schedules; ++s) {
    ScheduleResult res;
    res.seed = cfg.seed + s;
    Machine m(initial_config(program, b), c, res.seed, cfg.fair ? Policy::Fair : Policy::Random, cfg.typed);
    while (res.steps < cfg.max_steps) {
      auto ev = m.step();
      if (!ev) {
        res.terminated = true;
        break;
      }
      ++res.steps;
      if (cfg.log) res.trace.push_back(*ev);
      if (ev->rule == "Beta") continue;
      if (cfg.typed && !well_stacked(m.system(), judge)) ++res.wst_failures;
      if (cfg.preservation) {
        for (auto& p : m.system().procs) {
          for (auto& k : p.residual) {
            Verdict v = explorer.normalizes(p.stack, residual_beh(k));
            if (!v.ok) {
              ++res.preservation_failures;
              res.preservation_details.push_back("step " + std::to_string(ev->step) + " process " +
                                                 std::to_string(p.pid) + ": " + v.detail);
            }
          }
        }
      }
    }
    res.final = classify(m, 1000);
    for (auto& p : m.system().procs) {
      // A finished process must be able to finish its behaviour too.
      if (!cfg.typed || p.unmonitored || !p.error.empty() || !p.endpoints.empty()) continue;
      if (find_redex(p.expr).kind != RKind::None) continue;
      bool done = false;
      for (auto& k : frontier(p.residual, c, true)) done |= k.empty();
      if (!done) res.final.anomalous.push_back(p.pid);
    }
    res.violations = m.violations();
    res.errors = m.errors();
    res.lock_freedom_applies =
        !res.final.communication_possible && res.final.diverging.empty() && res.final.waiting.empty();
    res.lock_freedom_ok = !res.lock_freedom_applies || res.final.blocked.empty();
    report.runs.push_back(std::move(res));
  }
  return report;
}

}  // namespace sessionml
