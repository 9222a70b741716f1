#include <algorithm>
#include <deque>

#include "sessionml/core.hpp"

namespace sessionml {

// ---------------------------------------------------------------- constraint set

void ConstraintSet::add_incl(Type a, Type b) {
  for (auto& [x, y] : type_incl)
    if (equal(x, a) && equal(y, b)) return;
  type_incl.emplace_back(std::move(a), std::move(b));
}

void ConstraintSet::add_binding(Beh b, uint32_t beta) {
  auto& v = bindings[beta];
  for (auto& x : v)
    if (equal(x, b)) return;
  v.push_back(std::move(b));
}

void ConstraintSet::add_region(Region a, Region b) {
  if (a == b) return;
  for (auto& [x, y] : regions)
    if ((x == a && y == b) || (x == b && y == a)) return;
  regions.emplace_back(a, b);
}

const std::vector<Beh>& ConstraintSet::bindings_of(uint32_t beta) const {
  static const std::vector<Beh> none;
  auto it = bindings.find(beta);
  return it == bindings.end() ? none : it->second;
}

size_t ConstraintSet::size() const {
  size_t n = type_incl.size() + type_cf.size() + beh_cf.size() + regions.size() + chan.size() +
             cochan.size() + choices.size() + duals.size();
  for (auto& [k, v] : bindings) n += v.size();
  return n;
}

std::vector<std::string> show_lines(const ConstraintSet& c) {
  std::vector<std::string> out;
  for (auto& [a, b] : c.type_incl) out.push_back(show(a) + " <= " + show(b));
  for (auto& t : c.type_cf) out.push_back(show(t) + " cf");
  for (auto& b : c.beh_cf) out.push_back(show(b) + " cf");
  for (auto& [beta, bs] : c.bindings)
    for (auto& b : bs) out.push_back(show(b) + " <= b" + std::to_string(beta));
  for (auto& [a, b] : c.regions) out.push_back(show(a) + " ~ " + show(b));
  for (auto& [k, s] : c.chan) out.push_back(k + " ~ " + show(s));
  for (auto& [k, s] : c.cochan) out.push_back("~" + k + " ~ " + show(s));
  for (auto& [k, s] : c.choices)
    out.push_back(show(s) + " = " + (s->tag == SesTag::Internal ? "psi+" : "psi&") + std::to_string(k));
  for (auto& [a, b] : c.duals) out.push_back(show(a) + " |><| " + show(b));
  return out;
}

// ---------------------------------------------------------------- regions

RegionClosure::RegionClosure(const ConstraintSet& c) {
  for (auto& [a, b] : c.regions) {
    Region x = find(a), y = find(b);
    if (!(x == y)) parent_[x] = y;
  }
  for (auto& [a, b] : c.regions)
    for (Region r : {a, b})
      if (r.is_label) labels_[find(r)].insert(r.id);
}

Region RegionClosure::find(Region r) const {
  auto it = parent_.find(r);
  if (it == parent_.end()) return r;
  Region root = find(it->second);
  parent_[r] = root;
  return root;
}

bool RegionClosure::same(Region a, Region b) const { return a == b || find(a) == find(b); }

std::set<uint32_t> RegionClosure::labels_of(Region r) const {
  auto it = labels_.find(find(r));
  std::set<uint32_t> out;
  if (it != labels_.end()) out = it->second;
  if (r.is_label) out.insert(r.id);
  return out;
}

std::optional<uint32_t> RegionClosure::label_of(uint32_t rho) const {
  auto ls = labels_of(rvar(rho));
  if (ls.size() != 1) return std::nullopt;
  return *ls.begin();
}

bool derives_region(const ConstraintSet& c, Region a, Region b) { return RegionClosure(c).same(a, b); }

// ---------------------------------------------------------------- type inclusions

namespace {

bool is_ground_base(const Type& t) {
  return t->tag == TypeTag::Unit || t->tag == TypeTag::Bool || t->tag == TypeTag::Int;
}

struct PairHash {
  size_t operator()(const std::pair<Type, Type>& p) const { return p.first->hash * 31 + p.second->hash; }
};
struct PairEq {
  bool operator()(const std::pair<Type, Type>& p, const std::pair<Type, Type>& q) const {
    return equal(p.first, q.first) && equal(p.second, q.second);
  }
};

}  // namespace

TypeClosure::TypeClosure(const ConstraintSet& c) { saturate(c.type_incl); }

void TypeClosure::saturate(std::vector<std::pair<Type, Type>> work) {
  std::unordered_map<std::pair<Type, Type>, bool, PairHash, PairEq> seen;
  std::unordered_map<Type, std::vector<Type>, TypeHash, TypeEq> down;
  std::deque<std::pair<Type, Type>> q(work.begin(), work.end());
  while (!q.empty()) {
    auto [a, b] = q.front();
    q.pop_front();
    if (equal(a, b) || seen.count({a, b})) continue;
    seen[{a, b}] = true;
    if (a->tag != TypeTag::Var && b->tag != TypeTag::Var) {
      if (a->tag != b->tag) {
        clashes_.emplace_back(a, b);
      } else if (a->tag == TypeTag::Pair) {
        q.emplace_back(a->a, b->a);
        q.emplace_back(a->b, b->b);
      } else if (a->tag == TypeTag::Fun) {
        q.emplace_back(b->a, a->a);
        q.emplace_back(a->b, b->b);
      }
    }
    auto ups = up_[b];
    auto downs = down[a];
    up_[a].push_back(b);
    down[b].push_back(a);
    for (auto& y : ups) q.emplace_back(a, y);
    for (auto& x : downs) q.emplace_back(x, b);
  }
  // Undirected components for ground-type lookup.
  std::unordered_map<Type, std::vector<Type>, TypeHash, TypeEq> adj;
  for (auto& [a, ys] : up_)
    for (auto& y : ys) {
      adj[a].push_back(y);
      adj[y].push_back(a);
    }
  std::unordered_map<Type, bool, TypeHash, TypeEq> done;
  for (auto& [start, unused] : adj) {
    (void)unused;
    if (done.count(start)) continue;
    std::vector<Type> comp{start}, stack{start};
    done[start] = true;
    std::optional<Type> g, shaped;
    while (!stack.empty()) {
      Type t = stack.back();
      stack.pop_back();
      if (is_ground_base(t) && !g) g = t;
      if (t->tag == TypeTag::Pair && !shaped) shaped = t;
      for (auto& n : adj[t])
        if (!done.count(n)) {
          done[n] = true;
          comp.push_back(n);
          stack.push_back(n);
        }
    }
    // Without a base type, a pair in the component still fixes the shape.
    if (!g) g = shaped;
    if (g)
      for (auto& t : comp) ground_[t] = *g;
  }
}

bool TypeClosure::reach(const Type& a, const Type& b) const {
  auto it = up_.find(a);
  if (it == up_.end()) return false;
  for (auto& y : it->second)
    if (equal(y, b)) return true;
  return false;
}

bool TypeClosure::derives(const Type& a, const Type& b) const {
  if (equal(a, b) || reach(a, b)) return true;
  if (a->tag == b->tag && a->tag == TypeTag::Pair) return derives(a->a, b->a) && derives(a->b, b->b);
  if (a->tag == b->tag && a->tag == TypeTag::Fun)
    return a->id == b->id && derives(b->a, a->a) && derives(a->b, b->b);
  return false;
}

std::optional<Type> TypeClosure::ground_of(const Type& t) const {
  if (is_ground_base(t)) return t;
  auto it = ground_.find(t);
  if (it == ground_.end()) return std::nullopt;
  return it->second;
}

const std::vector<Type>& TypeClosure::ups(const Type& t) const {
  static const std::vector<Type> none;
  auto it = up_.find(t);
  return it == up_.end() ? none : it->second;
}

bool derives_type(const ConstraintSet& c, const Type& a, const Type& b) { return TypeClosure(c).derives(a, b); }

bool derives_behaviour(const ConstraintSet& c, const Beh& b, uint32_t beta) {
  std::set<uint32_t> seen;
  std::vector<uint32_t> work{beta};
  while (!work.empty()) {
    uint32_t x = work.back();
    work.pop_back();
    if (!seen.insert(x).second) continue;
    if (b->tag == BehTag::Var && b->x == x) return true;
    for (auto& y : c.bindings_of(x)) {
      if (equal(y, b)) return true;
      if (y->tag == BehTag::Var) work.push_back(y->x);
    }
  }
  return false;
}

// ---------------------------------------------------------------- confinement

Confinement::Confinement(const ConstraintSet& c) : c_(c) {
  std::vector<Type> tw(c.type_cf.begin(), c.type_cf.end());
  std::vector<Beh> bw(c.beh_cf.begin(), c.beh_cf.end());
  while (!tw.empty() || !bw.empty()) {
    while (!tw.empty()) {
      Type t = tw.back();
      tw.pop_back();
      if (types_.count(t)) continue;
      types_[t] = true;
      switch (t->tag) {
        case TypeTag::Fun:
          tw.push_back(t->a);
          tw.push_back(t->b);
          bw.push_back(b_var(t->id));
          break;
        case TypeTag::Pair:
          tw.push_back(t->a);
          tw.push_back(t->b);
          break;
        default: break;
      }
      for (auto& [x, y] : c.type_incl)
        if (equal(y, t)) tw.push_back(x);
    }
    while (!bw.empty()) {
      Beh b = bw.back();
      bw.pop_back();
      if (behs_.count(b)) continue;
      behs_[b] = true;
      switch (b->tag) {
        case BehTag::Seq: case BehTag::Plus:
          bw.push_back(b->a);
          bw.push_back(b->b);
          break;
        case BehTag::Spawn: bw.push_back(b->a); break;
        case BehTag::Var:
          betas_.insert(b->x);
          for (auto& y : c.bindings_of(b->x)) bw.push_back(y);
          break;
        default: break;
      }
    }
  }
}

std::vector<Violation> Confinement::violations() const {
  std::vector<Violation> out;
  for (auto& [t, unused] : types_) {
    (void)unused;
    if (t->tag == TypeTag::Ses) out.push_back({"Well-Confined", show(t) + " is required to be confined"});
  }
  for (auto& [b, unused] : behs_) {
    (void)unused;
    if (is_communication(b)) out.push_back({"Well-Confined", show(b) + " is required to be confined"});
  }
  std::sort(out.begin(), out.end(), [](auto& x, auto& y) { return x.witness < y.witness; });
  return out;
}

bool Confinement::type(const Type& t) const {
  if (types_.count(t)) return t->tag != TypeTag::Ses;
  switch (t->tag) {
    case TypeTag::Unit: case TypeTag::Bool: case TypeTag::Int: return true;
    case TypeTag::Pair: return type(t->a) && type(t->b);
    case TypeTag::Fun: return type(t->a) && type(t->b) && behaviour(b_var(t->id));
    default: return false;
  }
}

bool Confinement::behaviour(const Beh& b) const {
  std::set<uint32_t> visiting;
  return beh_rec(b, visiting);
}

bool Confinement::beh_rec(const Beh& b, std::set<uint32_t>& visiting) const {
  if (behs_.count(b) && !is_communication(b)) return true;
  switch (b->tag) {
    case BehTag::Tau: case BehTag::Rec: return true;
    case BehTag::Seq: case BehTag::Plus: return beh_rec(b->a, visiting) && beh_rec(b->b, visiting);
    case BehTag::Spawn: return beh_rec(b->a, visiting);
    case BehTag::Var: {
      if (betas_.count(b->x)) return true;
      if (!visiting.insert(b->x).second) return true;
      bool ok = true;
      for (auto& y : c_.bindings_of(b->x)) ok = ok && beh_rec(y, visiting);
      visiting.erase(b->x);
      return ok;
    }
    default: return false;
  }
}

bool confined_type(const ConstraintSet& c, const Type& t) { return Confinement(c).type(t); }
bool confined_behaviour(const ConstraintSet& c, const Beh& b) { return Confinement(c).behaviour(b); }

// ---------------------------------------------------------------- well-formedness

std::vector<Violation> well_formed(const ConstraintSet& c) {
  std::vector<Violation> out;
  TypeClosure tc(c);
  for (auto& [a, b] : tc.clashes())
    out.push_back({"Type-Consistent", show(a) + " <= " + show(b) + " relates different constructors"});

  RegionClosure rc(c);
  std::set<std::set<uint32_t>> reported;
  for (auto& [a, b] : c.regions)
    for (Region r : {a, b}) {
      auto ls = rc.labels_of(r);
      if (ls.size() > 1 && reported.insert(ls).second) {
        std::string w;
        for (uint32_t l : ls) w += (w.empty() ? "" : ", ") + std::string("l") + std::to_string(l);
        out.push_back({"Region-Consistent", "one region flows from distinct sources {" + w + "}"});
      }
    }

  // Behaviour-Compact: rec bindings are unique and own their variable; no cycle avoids a rec binding.
  for (auto& [beta, bs] : c.bindings)
    for (auto& b : bs)
      if (b->tag == BehTag::Rec) {
        if (b->x != beta)
          out.push_back({"Behaviour-Compact", show(b) + " <= b" + std::to_string(beta) + " binds a foreign variable"});
        else if (bs.size() != 1)
          out.push_back({"Behaviour-Compact", "b" + std::to_string(beta) + " has a rec binding and other bindings"});
      }
  std::map<uint32_t, std::set<uint32_t>> edges;
  for (auto& [beta, bs] : c.bindings)
    for (auto& b : bs) {
      if (b->tag == BehTag::Rec) continue;
      FreeVars fv;
      fv.add(b);
      edges[beta].insert(fv.beta.begin(), fv.beta.end());
    }
  std::map<uint32_t, int> colour;
  std::vector<uint32_t> path;
  std::function<bool(uint32_t)> dfs = [&](uint32_t v) {
    colour[v] = 1;
    path.push_back(v);
    for (uint32_t w : edges[v]) {
      if (colour[w] == 1) {
        std::string cyc;
        auto it = std::find(path.begin(), path.end(), w);
        for (; it != path.end(); ++it) cyc += "b" + std::to_string(*it) + " -> ";
        out.push_back({"Behaviour-Compact", "cycle without rec: " + cyc + "b" + std::to_string(w)});
        return true;
      }
      if (colour[w] == 0 && dfs(w)) return true;
    }
    colour[v] = 2;
    path.pop_back();
    return false;
  };
  for (auto& [beta, unused] : edges) {
    (void)unused;
    if (colour[beta] == 0) {
      path.clear();
      if (dfs(beta)) break;
    }
  }

  for (auto& v : Confinement(c).violations()) out.push_back(v);
  return out;
}

// ---------------------------------------------------------------- subtyping and duality

bool Judge::subtype(const Type& a, const Type& b) const {
  if (types.derives(a, b)) return true;
  if (a->tag == b->tag) {
    switch (a->tag) {
      case TypeTag::Pair: return subtype(a->a, b->a) && subtype(a->b, b->b);
      case TypeTag::Fun:
        return subtype(b->a, a->a) && subtype(a->b, b->b) && derives_behaviour(c, b_var(a->id), b->id);
      case TypeTag::Ses: return regions.same(rvar(a->id), rvar(b->id));
      default: break;
    }
  }
  // Through one declared inclusion on either side.
  for (auto& u : types.ups(a))
    if (u->tag != TypeTag::Var && u->tag == b->tag && !equal(u, a) && subtype(u, b)) return true;
  return false;
}

bool Judge::session_subtype(const Session& a, const Session& b) const {
  if (equal(a, b)) return true;
  if (a->tag != b->tag) return false;
  switch (a->tag) {
    case SesTag::End: return true;
    case SesTag::Out: return subtype(b->payload, a->payload) && session_subtype(a->next, b->next);
    case SesTag::In: return subtype(a->payload, b->payload) && session_subtype(a->next, b->next);
    case SesTag::Deleg: return session_subtype(b->carried, a->carried) && session_subtype(a->next, b->next);
    case SesTag::Resume: return session_subtype(a->carried, b->carried) && session_subtype(a->next, b->next);
    case SesTag::Internal:
      // Selecting from more labels refines selecting from fewer.
      for (auto& [k, v] : b->branches) {
        auto it = a->branches.find(k);
        if (it == a->branches.end() || !session_subtype(it->second, v)) return false;
      }
      return true;
    case SesTag::External:
      for (auto& k : a->active)
        if (!b->active.count(k)) return false;
      for (auto& [k, v] : b->branches) {
        auto it = a->branches.find(k);
        if (it == a->branches.end() || !session_subtype(it->second, v)) return false;
      }
      return true;
    default: return false;
  }
}

bool Judge::dual(const Session& a, const Session& b) const {
  switch (a->tag) {
    case SesTag::End: return b->tag == SesTag::End;
    case SesTag::Out: return b->tag == SesTag::In && subtype(a->payload, b->payload) && dual(a->next, b->next);
    case SesTag::In: return b->tag == SesTag::Out && subtype(b->payload, a->payload) && dual(a->next, b->next);
    case SesTag::Deleg:
      return b->tag == SesTag::Resume && session_subtype(a->carried, b->carried) && dual(a->next, b->next);
    case SesTag::Resume:
      return b->tag == SesTag::Deleg && session_subtype(b->carried, a->carried) && dual(a->next, b->next);
    case SesTag::Internal:
      if (b->tag != SesTag::External) return false;
      for (auto& [k, v] : a->branches) {
        if (!b->active.count(k)) return false;
        if (!dual(v, b->branches.at(k))) return false;
      }
      return true;
    case SesTag::External:
      return b->tag == SesTag::Internal && dual(b, a);
    default: return false;
  }
}

bool subtype(const ConstraintSet& c, const Type& a, const Type& b) { return Judge(c).subtype(a, b); }
bool session_subtype(const ConstraintSet& c, const Session& a, const Session& b) {
  return Judge(c).session_subtype(a, b);
}
bool dual(const ConstraintSet& c, const Session& a, const Session& b) { return Judge(c).dual(a, b); }

// ---------------------------------------------------------------- substitutions and schemas

Mapper Substitution::mapper() const {
  Mapper m;
  m.alpha = [this](uint32_t a) -> std::optional<Type> {
    auto it = alpha.find(a);
    if (it == alpha.end()) return std::nullopt;
    return it->second;
  };
  m.beta = [this](uint32_t b) {
    auto it = beta.find(b);
    return it == beta.end() ? b : it->second;
  };
  m.rho = [this](uint32_t r) {
    auto it = rho.find(r);
    return it == rho.end() ? r : it->second;
  };
  m.psi = [this](const SessionNode& n) -> std::optional<Session> {
    auto it = psi.find(n.id);
    if (it == psi.end()) return std::nullopt;
    return it->second;
  };
  return m;
}

ConstraintSet apply(const ConstraintSet& c, const Mapper& m) {
  ConstraintSet out;
  auto region = [&](Region r) { return r.is_label || !m.rho ? r : rvar(m.rho(r.id)); };
  for (auto& [a, b] : c.type_incl) out.add_incl(map_type(a, m), map_type(b, m));
  for (auto& t : c.type_cf) out.type_cf.push_back(map_type(t, m));
  for (auto& b : c.beh_cf) out.beh_cf.push_back(map_beh(b, m));
  for (auto& [beta, bs] : c.bindings)
    for (auto& b : bs) out.add_binding(map_beh(b, m), m.beta ? m.beta(beta) : beta);
  for (auto& [a, b] : c.regions) out.add_region(region(a), region(b));
  for (auto& [k, s] : c.chan) out.chan[k] = map_session(s, m);
  for (auto& [k, s] : c.cochan) out.cochan[k] = map_session(s, m);
  for (auto& [k, s] : c.choices) out.choices[k] = map_session(s, m);
  for (auto& [a, b] : c.duals) out.duals.emplace_back(map_session(a, m), map_session(b, m));
  return out;
}

std::string show(const TypeSchema& s) {
  std::string q;
  for (uint32_t v : s.quantified) q += (q.empty() ? "" : " ") + std::to_string(v);
  std::string cs;
  for (auto& line : show_lines(s.bound)) cs += (cs.empty() ? "" : ", ") + line;
  return "forall(" + q + " : " + cs + "). " + show(s.body);
}

TypeSchema constant_schema(const Expr& k, Supply& supply, uint32_t channel_psi) {
  TypeSchema ts;
  auto fresh = [&] {
    uint32_t v = supply.fresh();
    ts.quantified.insert(v);
    return v;
  };
  switch (k.tag) {
    case ExprTag::Unit: ts.body = t_unit(); break;
    case ExprTag::Bool: ts.body = t_bool(); break;
    case ExprTag::Int: ts.body = t_int(); break;
    case ExprTag::Request:
    case ExprTag::Accept: {
      if (k.label == 0) throw std::invalid_argument("request/accept schema needs a label");
      uint32_t beta = fresh(), rho = fresh();
      uint32_t psi = channel_psi ? channel_psi : fresh();
      ts.bound.add_binding(b_push(k.label, s_var(psi), k.span), beta);
      ts.bound.add_region(rvar(rho), rlabel(k.label));
      (k.tag == ExprTag::Request ? ts.bound.chan : ts.bound.cochan)[k.name] = s_var(psi);
      ts.body = t_fun(t_unit(), t_ses(rho), beta);
      break;
    }
    case ExprTag::Send:
    case ExprTag::Recv: {
      uint32_t alpha = fresh(), beta = fresh(), rho = fresh();
      Type a = t_var(alpha);
      ts.bound.type_cf.push_back(a);
      if (k.tag == ExprTag::Send) {
        ts.bound.add_binding(b_out(rho, a, k.span), beta);
        ts.body = t_fun(t_pair(t_ses(rho), a), t_unit(), beta);
      } else {
        ts.bound.add_binding(b_in(rho, a, k.span), beta);
        ts.body = t_fun(t_ses(rho), a, beta);
      }
      break;
    }
    case ExprTag::Select: {
      uint32_t beta = fresh(), rho = fresh();
      ts.bound.add_binding(b_select(rho, k.name, k.span), beta);
      ts.body = t_fun(t_ses(rho), t_unit(), beta);
      break;
    }
    case ExprTag::Deleg: {
      uint32_t beta = fresh(), rho = fresh(), rho_d = fresh();
      ts.bound.add_binding(b_deleg(rho, rho_d, k.span), beta);
      ts.body = t_fun(t_pair(t_ses(rho), t_ses(rho_d)), t_unit(), beta);
      break;
    }
    case ExprTag::Resume: {
      if (k.label == 0) throw std::invalid_argument("resume schema needs a label");
      uint32_t beta = fresh(), rho = fresh(), rho_r = fresh();
      ts.bound.add_binding(b_resume(rho, k.label, k.span), beta);
      ts.bound.add_region(rvar(rho_r), rlabel(k.label));
      ts.body = t_fun(t_ses(rho), t_ses(rho_r), beta);
      break;
    }
    case ExprTag::Prim: {
      uint32_t beta = fresh();
      ts.bound.add_binding(b_tau(), beta);
      const std::string& n = k.name;
      if (n == "add" || n == "sub" || n == "mul") {
        ts.body = t_fun(t_pair(t_int(), t_int()), t_int(), beta);
      } else if (n == "lt" || n == "eq") {
        ts.body = t_fun(t_pair(t_int(), t_int()), t_bool(), beta);
      } else if (n == "not") {
        ts.body = t_fun(t_bool(), t_bool(), beta);
      } else if (n == "fst" || n == "snd") {
        Type a = t_var(fresh()), b = t_var(fresh());
        ts.body = t_fun(t_pair(a, b), n == "fst" ? a : b, beta);
      } else {
        throw std::invalid_argument("unknown primitive " + n);
      }
      break;
    }
    default: throw std::invalid_argument("not a constant");
  }
  return ts;
}

bool solvable(const TypeSchema& ts, const ConstraintSet& c, const Substitution& s) {
  for (auto& [k, v] : s.alpha)
    if (!ts.quantified.count(k)) return false;
  for (auto& [k, v] : s.beta)
    if (!ts.quantified.count(k)) return false;
  for (auto& [k, v] : s.rho)
    if (!ts.quantified.count(k)) return false;
  for (auto& [k, v] : s.psi)
    if (!ts.quantified.count(k)) return false;
  ConstraintSet need = apply(ts.bound, s.mapper());
  Judge j(c);
  for (auto& [a, b] : need.type_incl)
    if (!j.subtype(a, b)) return false;
  Confinement cf(c);
  for (auto& t : need.type_cf)
    if (!cf.type(t)) return false;
  for (auto& b : need.beh_cf)
    if (!cf.behaviour(b)) return false;
  for (auto& [beta, bs] : need.bindings)
    for (auto& b : bs)
      if (!derives_behaviour(c, b, beta)) return false;
  for (auto& [a, b] : need.regions)
    if (!j.regions.same(a, b)) return false;
  for (auto& [k, v] : need.chan) {
    auto it = c.chan.find(k);
    if (it == c.chan.end() || !equal(it->second, v)) return false;
  }
  for (auto& [k, v] : need.cochan) {
    auto it = c.cochan.find(k);
    if (it == c.cochan.end() || !equal(it->second, v)) return false;
  }
  return true;
}

}  // namespace sessionml
