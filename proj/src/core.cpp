#include "sessionml/core.hpp"

#include <algorithm>
#include <sstream>

namespace sessionml {

namespace {

size_t mix(size_t h, size_t v) { return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)); }

template <class T>
size_t hash_of(const std::shared_ptr<const T>& p) {
  return p ? p->hash : 0x51ed27;
}

Type mk_type(TypeNode n) {
  size_t h = mix(static_cast<size_t>(n.tag) * 1315423911u, n.id);
  h = mix(h, hash_of(n.a));
  h = mix(h, hash_of(n.b));
  n.hash = h;
  return std::make_shared<const TypeNode>(std::move(n));
}

Session mk_session(SessionNode n) {
  size_t h = mix(static_cast<size_t>(n.tag) * 2654435761u, n.id);
  h = mix(h, hash_of(n.payload));
  h = mix(h, hash_of(n.carried));
  h = mix(h, hash_of(n.next));
  for (auto& [k, v] : n.branches) {
    h = mix(h, std::hash<std::string>{}(k));
    h = mix(h, hash_of(v));
    h = mix(h, n.active.count(k));
  }
  n.hash = h;
  return std::make_shared<const SessionNode>(std::move(n));
}

Beh mk_beh(BehNode n) {
  size_t h = mix(static_cast<size_t>(n.tag) * 40503u, n.x);
  h = mix(h, n.y);
  h = mix(h, hash_of(n.a));
  h = mix(h, hash_of(n.b));
  h = mix(h, hash_of(n.payload));
  h = mix(h, hash_of(n.ses));
  h = mix(h, std::hash<std::string>{}(n.choice));
  for (auto& [k, v] : n.branches) {
    h = mix(h, std::hash<std::string>{}(k));
    h = mix(h, hash_of(v));
  }
  n.hash = h;
  return std::make_shared<const BehNode>(std::move(n));
}

}  // namespace

// ---------------------------------------------------------------- types

Type t_unit() {
  static const Type t = mk_type({TypeTag::Unit});
  return t;
}
Type t_bool() {
  static const Type t = mk_type({TypeTag::Bool});
  return t;
}
Type t_int() {
  static const Type t = mk_type({TypeTag::Int});
  return t;
}
Type t_pair(Type a, Type b) { return mk_type({TypeTag::Pair, std::move(a), std::move(b)}); }
Type t_fun(Type arg, Type res, uint32_t beta) {
  return mk_type({TypeTag::Fun, std::move(arg), std::move(res), beta});
}
Type t_ses(uint32_t rho) { return mk_type({TypeTag::Ses, nullptr, nullptr, rho}); }
Type t_var(uint32_t alpha) { return mk_type({TypeTag::Var, nullptr, nullptr, alpha}); }

bool equal(const Type& x, const Type& y) {
  if (x == y) return true;
  if (!x || !y || x->hash != y->hash || x->tag != y->tag || x->id != y->id) return false;
  return equal(x->a, y->a) && equal(x->b, y->b);
}

std::string show(const Type& t) {
  switch (t->tag) {
    case TypeTag::Unit: return "unit";
    case TypeTag::Bool: return "bool";
    case TypeTag::Int: return "int";
    case TypeTag::Pair: return "(" + show(t->a) + " * " + show(t->b) + ")";
    case TypeTag::Fun: return "(" + show(t->a) + " -b" + std::to_string(t->id) + "-> " + show(t->b) + ")";
    case TypeTag::Ses: return "ses r" + std::to_string(t->id);
    case TypeTag::Var: return "'a" + std::to_string(t->id);
  }
  return "?";
}

// ---------------------------------------------------------------- sessions

Session s_end() {
  static const Session s = mk_session({SesTag::End});
  return s;
}
Session s_out(Type t, Session k) {
  SessionNode n{SesTag::Out};
  n.payload = std::move(t);
  n.next = std::move(k);
  return mk_session(std::move(n));
}
Session s_in(Type t, Session k) {
  SessionNode n{SesTag::In};
  n.payload = std::move(t);
  n.next = std::move(k);
  return mk_session(std::move(n));
}
Session s_deleg(Session d, Session k) {
  SessionNode n{SesTag::Deleg};
  n.carried = std::move(d);
  n.next = std::move(k);
  return mk_session(std::move(n));
}
Session s_resume(Session r, Session k) {
  SessionNode n{SesTag::Resume};
  n.carried = std::move(r);
  n.next = std::move(k);
  return mk_session(std::move(n));
}
Session s_internal(std::map<std::string, Session> br) {
  SessionNode n{SesTag::Internal};
  n.branches = std::move(br);
  return mk_session(std::move(n));
}
Session s_external(std::set<std::string> active, std::map<std::string, Session> br) {
  SessionNode n{SesTag::External};
  n.branches = std::move(br);
  n.active = std::move(active);
  return mk_session(std::move(n));
}
Session s_var(uint32_t psi) {
  SessionNode n{SesTag::Var};
  n.id = psi;
  return mk_session(std::move(n));
}
Session s_ivar(uint32_t psi) {
  SessionNode n{SesTag::IVar};
  n.id = psi;
  return mk_session(std::move(n));
}
Session s_evar(uint32_t psi) {
  SessionNode n{SesTag::EVar};
  n.id = psi;
  return mk_session(std::move(n));
}

bool is_choice_var(const Session& s) { return s->tag == SesTag::IVar || s->tag == SesTag::EVar; }

bool equal(const Session& x, const Session& y) {
  if (x == y) return true;
  if (!x || !y || x->hash != y->hash || x->tag != y->tag || x->id != y->id) return false;
  if (x->active != y->active || x->branches.size() != y->branches.size()) return false;
  for (auto i = x->branches.begin(), j = y->branches.begin(); i != x->branches.end(); ++i, ++j)
    if (i->first != j->first || !equal(i->second, j->second)) return false;
  if (x->payload || y->payload)
    if (!x->payload || !y->payload || !equal(x->payload, y->payload)) return false;
  return equal(x->carried, y->carried) && equal(x->next, y->next);
}

std::string show(const Session& s) {
  switch (s->tag) {
    case SesTag::End: return "end";
    case SesTag::Out: return "!" + show(s->payload) + "." + show(s->next);
    case SesTag::In: return "?" + show(s->payload) + "." + show(s->next);
    case SesTag::Deleg: return "!<" + show(s->carried) + ">." + show(s->next);
    case SesTag::Resume: return "?<" + show(s->carried) + ">." + show(s->next);
    case SesTag::Internal: {
      std::string r = "+{";
      bool first = true;
      for (auto& [k, v] : s->branches) {
        r += (first ? "" : ", ") + k + ": " + show(v);
        first = false;
      }
      return r + "}";
    }
    case SesTag::External: {
      std::string r = "&{";
      bool first = true;
      for (auto& [k, v] : s->branches) {
        r += (first ? "" : ", ") + k + (s->active.count(k) ? "!" : "?") + ": " + show(v);
        first = false;
      }
      return r + "}";
    }
    case SesTag::Var: return "psi" + std::to_string(s->id);
    case SesTag::IVar: return "psi+" + std::to_string(s->id);
    case SesTag::EVar: return "psi&" + std::to_string(s->id);
  }
  return "?";
}

Session mirror(const Session& s) {
  switch (s->tag) {
    case SesTag::End: return s;
    case SesTag::Out: return s_in(s->payload, mirror(s->next));
    case SesTag::In: return s_out(s->payload, mirror(s->next));
    case SesTag::Deleg: return s_resume(s->carried, mirror(s->next));
    case SesTag::Resume: return s_deleg(s->carried, mirror(s->next));
    case SesTag::Internal: {
      std::map<std::string, Session> br;
      std::set<std::string> act;
      for (auto& [k, v] : s->branches) {
        br[k] = mirror(v);
        act.insert(k);
      }
      return s_external(act, br);
    }
    case SesTag::External: {
      std::map<std::string, Session> br;
      for (auto& [k, v] : s->branches)
        if (s->active.count(k)) br[k] = mirror(v);
      return s_internal(br);
    }
    default: return s;
  }
}

// ---------------------------------------------------------------- behaviours

Beh b_var(uint32_t beta) {
  BehNode n{BehTag::Var};
  n.x = beta;
  return mk_beh(std::move(n));
}
Beh b_tau() {
  static const Beh t = mk_beh({BehTag::Tau});
  return t;
}
Beh b_seq(Beh a, Beh b) {
  BehNode n{BehTag::Seq};
  n.a = std::move(a);
  n.b = std::move(b);
  return mk_beh(std::move(n));
}
Beh b_plus(Beh a, Beh b) {
  BehNode n{BehTag::Plus};
  n.a = std::move(a);
  n.b = std::move(b);
  return mk_beh(std::move(n));
}
Beh b_rec(uint32_t beta, Beh body) {
  BehNode n{BehTag::Rec};
  n.x = beta;
  n.a = std::move(body);
  return mk_beh(std::move(n));
}
Beh b_spawn(Beh body) {
  BehNode n{BehTag::Spawn};
  n.a = std::move(body);
  return mk_beh(std::move(n));
}
Beh b_push(uint32_t label, Session s, Span sp) {
  BehNode n{BehTag::Push};
  n.x = label;
  n.ses = std::move(s);
  n.span = sp;
  return mk_beh(std::move(n));
}
Beh b_out(uint32_t rho, Type t, Span sp) {
  BehNode n{BehTag::Out};
  n.x = rho;
  n.payload = std::move(t);
  n.span = sp;
  return mk_beh(std::move(n));
}
Beh b_in(uint32_t rho, Type t, Span sp) {
  BehNode n{BehTag::In};
  n.x = rho;
  n.payload = std::move(t);
  n.span = sp;
  return mk_beh(std::move(n));
}
Beh b_deleg(uint32_t rho, uint32_t rho_d, Span sp) {
  BehNode n{BehTag::Deleg};
  n.x = rho;
  n.y = rho_d;
  n.span = sp;
  return mk_beh(std::move(n));
}
Beh b_resume(uint32_t rho, uint32_t label, Span sp) {
  BehNode n{BehTag::Resume};
  n.x = rho;
  n.y = label;
  n.span = sp;
  return mk_beh(std::move(n));
}
Beh b_select(uint32_t rho, std::string choice, Span sp) {
  BehNode n{BehTag::Select};
  n.x = rho;
  n.choice = std::move(choice);
  n.span = sp;
  return mk_beh(std::move(n));
}
Beh b_offer(uint32_t rho, std::vector<std::pair<std::string, Beh>> br, Span sp) {
  BehNode n{BehTag::Offer};
  n.x = rho;
  std::sort(br.begin(), br.end(), [](auto& p, auto& q) { return p.first < q.first; });
  n.branches = std::move(br);
  n.span = sp;
  return mk_beh(std::move(n));
}

bool equal(const Beh& x, const Beh& y) {
  if (x == y) return true;
  if (!x || !y || x->hash != y->hash || x->tag != y->tag || x->x != y->x || x->y != y->y ||
      x->choice != y->choice || x->branches.size() != y->branches.size())
    return false;
  for (size_t i = 0; i < x->branches.size(); ++i)
    if (x->branches[i].first != y->branches[i].first || !equal(x->branches[i].second, y->branches[i].second))
      return false;
  if (x->payload || y->payload)
    if (!x->payload || !y->payload || !equal(x->payload, y->payload)) return false;
  if (x->ses || y->ses)
    if (!x->ses || !y->ses || !equal(x->ses, y->ses)) return false;
  return equal(x->a, y->a) && equal(x->b, y->b);
}

bool is_communication(const Beh& b) {
  switch (b->tag) {
    case BehTag::Out: case BehTag::In: case BehTag::Deleg: case BehTag::Resume: case BehTag::Select:
    case BehTag::Offer:
      return true;
    default:
      return false;
  }
}

namespace {

std::string show_beh(const Beh& b, int prec) {
  auto paren = [&](int p, std::string s) { return p < prec ? "(" + s + ")" : s; };
  switch (b->tag) {
    case BehTag::Var: return "b" + std::to_string(b->x);
    case BehTag::Tau: return "tau";
    case BehTag::Seq: return paren(1, show_beh(b->a, 2) + "; " + show_beh(b->b, 1));
    case BehTag::Plus: return paren(0, show_beh(b->a, 1) + " + " + show_beh(b->b, 0));
    case BehTag::Rec: return "rec b" + std::to_string(b->x) + ".(" + show_beh(b->a, 0) + ")";
    case BehTag::Spawn: return "spawn(" + show_beh(b->a, 0) + ")";
    case BehTag::Push: return "push(l" + std::to_string(b->x) + ", " + show(b->ses) + ")";
    case BehTag::Out: return "r" + std::to_string(b->x) + "!" + show(b->payload);
    case BehTag::In: return "r" + std::to_string(b->x) + "?" + show(b->payload);
    case BehTag::Deleg: return "r" + std::to_string(b->x) + "!r" + std::to_string(b->y);
    case BehTag::Resume: return "r" + std::to_string(b->x) + "?l" + std::to_string(b->y);
    case BehTag::Select: return "r" + std::to_string(b->x) + "!" + b->choice;
    case BehTag::Offer: {
      std::string r = "r" + std::to_string(b->x) + "?{";
      for (size_t i = 0; i < b->branches.size(); ++i)
        r += (i ? ", " : "") + b->branches[i].first + ": " + show_beh(b->branches[i].second, 0);
      return r + "}";
    }
  }
  return "?";
}

}  // namespace

std::string show(const Beh& b) { return show_beh(b, 0); }

Beh simplify(const Beh& b) {
  switch (b->tag) {
    case BehTag::Seq: {
      Beh l = simplify(b->a), r = simplify(b->b);
      if (l->tag == BehTag::Tau) return r;
      if (r->tag == BehTag::Tau) return l;
      if (l->tag == BehTag::Seq) return b_seq(l->a, simplify(b_seq(l->b, r)));
      return b_seq(l, r);
    }
    case BehTag::Plus: return b_plus(simplify(b->a), simplify(b->b));
    case BehTag::Rec: return b_rec(b->x, simplify(b->a));
    case BehTag::Spawn: return b_spawn(simplify(b->a));
    case BehTag::Offer: {
      auto br = b->branches;
      for (auto& p : br) p.second = simplify(p.second);
      return b_offer(b->x, br, b->span);
    }
    default: return b;
  }
}

std::string show_simplified(const Beh& b) { return show(simplify(b)); }

// ---------------------------------------------------------------- traversals

Type map_type(const Type& t, const Mapper& m) {
  switch (t->tag) {
    case TypeTag::Var:
      if (m.alpha)
        if (auto r = m.alpha(t->id)) return *r;
      return t;
    case TypeTag::Pair: {
      Type a = map_type(t->a, m), b = map_type(t->b, m);
      if (a == t->a && b == t->b) return t;
      return t_pair(a, b);
    }
    case TypeTag::Fun: {
      Type a = map_type(t->a, m), b = map_type(t->b, m);
      uint32_t beta = m.beta ? m.beta(t->id) : t->id;
      if (a == t->a && b == t->b && beta == t->id) return t;
      return t_fun(a, b, beta);
    }
    case TypeTag::Ses: {
      uint32_t r = m.rho ? m.rho(t->id) : t->id;
      return r == t->id ? t : t_ses(r);
    }
    default: return t;
  }
}

Session map_session(const Session& s, const Mapper& m) {
  switch (s->tag) {
    case SesTag::End: return s;
    case SesTag::Var: case SesTag::IVar: case SesTag::EVar:
      if (m.psi)
        if (auto r = m.psi(*s)) return *r;
      return s;
    case SesTag::Out: case SesTag::In: {
      Type p = map_type(s->payload, m);
      Session k = map_session(s->next, m);
      if (p == s->payload && k == s->next) return s;
      return s->tag == SesTag::Out ? s_out(p, k) : s_in(p, k);
    }
    case SesTag::Deleg: case SesTag::Resume: {
      Session d = map_session(s->carried, m), k = map_session(s->next, m);
      if (d == s->carried && k == s->next) return s;
      return s->tag == SesTag::Deleg ? s_deleg(d, k) : s_resume(d, k);
    }
    case SesTag::Internal: case SesTag::External: {
      bool same = true;
      std::map<std::string, Session> br;
      for (auto& [k, v] : s->branches) {
        br[k] = map_session(v, m);
        same = same && br[k] == v;
      }
      if (same) return s;
      return s->tag == SesTag::Internal ? s_internal(br) : s_external(s->active, br);
    }
  }
  return s;
}

Beh map_beh(const Beh& b, const Mapper& m) {
  auto rho = [&](uint32_t r) { return m.rho ? m.rho(r) : r; };
  switch (b->tag) {
    case BehTag::Var: {
      uint32_t x = m.beta ? m.beta(b->x) : b->x;
      return x == b->x ? b : b_var(x);
    }
    case BehTag::Tau: return b;
    case BehTag::Seq: case BehTag::Plus: {
      Beh x = map_beh(b->a, m), y = map_beh(b->b, m);
      if (x == b->a && y == b->b) return b;
      return b->tag == BehTag::Seq ? b_seq(x, y) : b_plus(x, y);
    }
    case BehTag::Rec: {
      Beh x = map_beh(b->a, m);
      uint32_t beta = m.beta ? m.beta(b->x) : b->x;
      if (x == b->a && beta == b->x) return b;
      return b_rec(beta, x);
    }
    case BehTag::Spawn: {
      Beh x = map_beh(b->a, m);
      return x == b->a ? b : b_spawn(x);
    }
    case BehTag::Push: {
      Session s = map_session(b->ses, m);
      return s == b->ses ? b : b_push(b->x, s, b->span);
    }
    case BehTag::Out: case BehTag::In: {
      Type t = map_type(b->payload, m);
      uint32_t r = rho(b->x);
      if (t == b->payload && r == b->x) return b;
      return b->tag == BehTag::Out ? b_out(r, t, b->span) : b_in(r, t, b->span);
    }
    case BehTag::Deleg: {
      uint32_t r = rho(b->x), d = rho(b->y);
      if (r == b->x && d == b->y) return b;
      return b_deleg(r, d, b->span);
    }
    case BehTag::Resume: {
      uint32_t r = rho(b->x);
      return r == b->x ? b : b_resume(r, b->y, b->span);
    }
    case BehTag::Select: {
      uint32_t r = rho(b->x);
      return r == b->x ? b : b_select(r, b->choice, b->span);
    }
    case BehTag::Offer: {
      bool same = true;
      auto br = b->branches;
      for (auto& p : br) {
        Beh x = map_beh(p.second, m);
        same = same && x == p.second;
        p.second = x;
      }
      uint32_t r = rho(b->x);
      if (same && r == b->x) return b;
      return b_offer(r, br, b->span);
    }
  }
  return b;
}

void FreeVars::add(const Type& t) {
  switch (t->tag) {
    case TypeTag::Var: alpha.insert(t->id); break;
    case TypeTag::Ses: rho.insert(t->id); break;
    case TypeTag::Fun: beta.insert(t->id); [[fallthrough]];
    case TypeTag::Pair:
      add(t->a);
      add(t->b);
      break;
    default: break;
  }
}

void FreeVars::add(const Session& s) {
  switch (s->tag) {
    case SesTag::Var: case SesTag::IVar: case SesTag::EVar: psi.insert(s->id); break;
    case SesTag::Out: case SesTag::In:
      add(s->payload);
      add(s->next);
      break;
    case SesTag::Deleg: case SesTag::Resume:
      add(s->carried);
      add(s->next);
      break;
    case SesTag::Internal: case SesTag::External:
      for (auto& [k, v] : s->branches) add(v);
      break;
    default: break;
  }
}

void FreeVars::add(const Beh& b) {
  switch (b->tag) {
    case BehTag::Var: beta.insert(b->x); break;
    case BehTag::Tau: break;
    case BehTag::Seq: case BehTag::Plus:
      add(b->a);
      add(b->b);
      break;
    case BehTag::Rec:
      beta.insert(b->x);
      add(b->a);
      break;
    case BehTag::Spawn: add(b->a); break;
    case BehTag::Push:
      labels.insert(b->x);
      add(b->ses);
      break;
    case BehTag::Out: case BehTag::In:
      rho.insert(b->x);
      add(b->payload);
      break;
    case BehTag::Deleg:
      rho.insert(b->x);
      rho.insert(b->y);
      break;
    case BehTag::Resume:
      rho.insert(b->x);
      labels.insert(b->y);
      break;
    case BehTag::Select: rho.insert(b->x); break;
    case BehTag::Offer:
      rho.insert(b->x);
      for (auto& p : b->branches) add(p.second);
      break;
  }
}

std::string show(const Region& r) { return (r.is_label ? "l" : "r") + std::to_string(r.id); }

}  // namespace sessionml
