#include "sessionml/infer.hpp"

#include <functional>

namespace sessionml {

namespace {

bool occurs(uint32_t alpha, const Type& t) {
  switch (t->tag) {
    case TypeTag::Var: return t->id == alpha;
    case TypeTag::Pair: case TypeTag::Fun: return occurs(alpha, t->a) || occurs(alpha, t->b);
    default: return false;
  }
}

void bind_alpha(Substitution& s, uint32_t a, const Type& t) {
  Substitution one;
  one.alpha[a] = t;
  Mapper m = one.mapper();
  for (auto& [k, v] : s.alpha) v = map_type(v, m);
  s.alpha[a] = t;
}

void bind_beta(Substitution& s, uint32_t from, uint32_t to) {
  Substitution one;
  one.beta[from] = to;
  Mapper m = one.mapper();
  for (auto& [k, v] : s.alpha) v = map_type(v, m);
  for (auto& [k, v] : s.beta)
    if (v == from) v = to;
  s.beta[from] = to;
}

// s := u after s. Domains are disjoint because u was computed on s-resolved terms.
void compose(Substitution& s, const Substitution& u) {
  Mapper m = u.mapper();
  for (auto& [k, v] : s.alpha) v = map_type(v, m);
  for (auto& [k, v] : s.beta) v = m.beta(v);
  for (auto& [k, v] : u.alpha) s.alpha[k] = v;
  for (auto& [k, v] : u.beta) s.beta[k] = v;
}

// Every variable of each constraint, for connectivity during generalisation.
template <typename F>
void for_each_constraint(const ConstraintSet& c, F f) {
  for (size_t i = 0; i < c.type_incl.size(); ++i) {
    FreeVars fv;
    fv.add(c.type_incl[i].first);
    fv.add(c.type_incl[i].second);
    f(0, i, fv);
  }
  for (size_t i = 0; i < c.type_cf.size(); ++i) {
    FreeVars fv;
    fv.add(c.type_cf[i]);
    f(1, i, fv);
  }
  for (size_t i = 0; i < c.beh_cf.size(); ++i) {
    FreeVars fv;
    fv.add(c.beh_cf[i]);
    f(2, i, fv);
  }
  for (auto& [beta, bs] : c.bindings)
    for (size_t i = 0; i < bs.size(); ++i) {
      FreeVars fv;
      fv.beta.insert(beta);
      fv.add(bs[i]);
      f(3, (size_t(beta) << 20) | i, fv);
    }
  for (size_t i = 0; i < c.regions.size(); ++i) {
    FreeVars fv;
    for (Region r : {c.regions[i].first, c.regions[i].second})
      if (!r.is_label) fv.rho.insert(r.id);
    f(4, i, fv);
  }
}

std::set<uint32_t> all_ids(const FreeVars& fv) {
  std::set<uint32_t> out;
  for (auto* s : {&fv.alpha, &fv.beta, &fv.rho, &fv.psi}) out.insert(s->begin(), s->end());
  return out;
}

class W {
 public:
  W(Supply& supply) : supply_(supply) {}

  InferenceResult run(const TypeEnv& env, const ExprP& e) {
    auto [t, b] = infer(env, e);
    Mapper m = s_.mapper();
    InferenceResult r;
    r.c = apply(c_, m);
    r.type = map_type(t, m);
    r.beh = map_beh(b, m);
    r.sigma = s_;
    auto bad = Confinement(r.c).violations();
    if (!bad.empty()) throw TypeError(e->span, "confinement violated: " + bad.front().witness);
    return r;
  }

 private:
  Supply& supply_;
  Substitution s_;
  ConstraintSet c_;
  std::set<uint32_t> global_;

  Type resolve(const Type& t) const { return map_type(t, s_.mapper()); }

  void unify_at(const Type& a, const Type& b, Span sp) {
    Type x = resolve(a), y = resolve(b);
    try {
      compose(s_, unify(x, y, c_));
    } catch (const TypeError& err) {
      throw TypeError(sp, std::string(err.what()) + " while unifying " + show(x) + " with " + show(y));
    }
  }

  void add_constraints(const ConstraintSet& extra) {
    for (auto& [a, b] : extra.type_incl) c_.add_incl(a, b);
    for (auto& t : extra.type_cf) c_.type_cf.push_back(t);
    for (auto& b : extra.beh_cf) c_.beh_cf.push_back(b);
    for (auto& [beta, bs] : extra.bindings)
      for (auto& b : bs) c_.add_binding(b, beta);
    for (auto& [a, b] : extra.regions) c_.add_region(a, b);
    for (auto& [k, v] : extra.chan) c_.chan[k] = v;
    for (auto& [k, v] : extra.cochan) c_.cochan[k] = v;
  }

  // One pair of session variables per global channel, created on first use.
  uint32_t channel_psi(const std::string& ch, bool request) {
    if (!c_.chan.count(ch)) {
      uint32_t p = supply_.fresh(), q = supply_.fresh();
      c_.chan[ch] = s_var(p);
      c_.cochan[ch] = s_var(q);
      global_.insert(p);
      global_.insert(q);
    }
    return (request ? c_.chan : c_.cochan)[ch]->id;
  }

  std::pair<Type, Beh> infer(const TypeEnv& env, const ExprP& e) {
    switch (e->tag) {
      case ExprTag::Var: {
        auto it = env.find(e->name);
        if (it == env.end()) throw TypeError(e->span, "unbound variable " + e->name);
        TypeSchema ts = it->second;
        ts.body = resolve(ts.body);
        auto [t, extra] = instantiate(ts, supply_);
        add_constraints(extra);
        return {t, b_tau()};
      }
      case ExprTag::Unit: case ExprTag::Bool: case ExprTag::Int: case ExprTag::Prim:
      case ExprTag::Send: case ExprTag::Recv: case ExprTag::Select: case ExprTag::Deleg:
      case ExprTag::Resume: {
        TypeSchema ts = constant_schema(*e, supply_);
        auto [t, extra] = instantiate(ts, supply_);
        add_constraints(extra);
        return {t, b_tau()};
      }
      case ExprTag::Request: case ExprTag::Accept: {
        uint32_t psi = channel_psi(e->name, e->tag == ExprTag::Request);
        TypeSchema ts = constant_schema(*e, supply_, psi);
        auto [t, extra] = instantiate(ts, supply_);
        add_constraints(extra);
        return {t, b_tau()};
      }
      case ExprTag::Pair: {
        auto [t1, b1] = infer(env, e->a);
        auto [t2, b2] = infer(env, e->b);
        return {t_pair(t1, t2), b_seq(b1, b2)};
      }
      case ExprTag::App: {
        auto [t1, b1] = infer(env, e->a);
        auto [t2, b2] = infer(env, e->b);
        Type res = t_var(supply_.fresh());
        uint32_t beta = supply_.fresh();
        unify_at(t1, t_fun(t2, res, beta), e->span);
        return {res, b_seq(b_seq(b1, b2), b_var(beta))};
      }
      case ExprTag::Lam: {
        Type arg = t_var(supply_.fresh());
        TypeEnv inner = env;
        if (e->param != "_") inner[e->param] = TypeSchema{{}, {}, arg};
        auto [t, b] = infer(inner, e->a);
        uint32_t beta = supply_.fresh();
        c_.add_binding(b, beta);
        return {t_fun(arg, t, beta), b_tau()};
      }
      case ExprTag::Fix: {
        Type arg = t_var(supply_.fresh()), res = t_var(supply_.fresh());
        uint32_t beta_rec = supply_.fresh();
        TypeEnv inner = env;
        inner[e->fname] = TypeSchema{{}, {}, t_fun(arg, res, beta_rec)};
        if (e->param != "_") inner[e->param] = TypeSchema{{}, {}, arg};
        auto [t, b] = infer(inner, e->a);
        unify_at(t, res, e->span);
        Mapper m = s_.mapper();
        uint32_t br = m.beta(beta_rec);
        c_.add_binding(b_rec(br, b), br);
        c_.type_cf.push_back(arg);
        c_.type_cf.push_back(res);
        uint32_t beta_out = supply_.fresh();
        c_.add_binding(b_var(br), beta_out);
        return {t_fun(arg, res, beta_out), b_tau()};
      }
      case ExprTag::Let: {
        auto [t1, b1] = infer(env, e->a);
        TypeEnv inner = env;
        if (e->param != "_") {
          Mapper m = s_.mapper();
          c_ = apply(c_, m);
          TypeEnv resolved;
          for (auto& [k, ts] : env) resolved[k] = TypeSchema{ts.quantified, ts.bound, map_type(ts.body, m)};
          auto [schema, rest] = generalize(resolved, c_, map_type(t1, m), map_beh(b1, m), global_);
          c_ = rest;
          inner[e->param] = schema;
        } else {
          unify_at(t1, t_unit(), e->span);
        }
        auto [t2, b2] = infer(inner, e->b);
        return {t2, b_seq(b1, b2)};
      }
      case ExprTag::If: {
        auto [tc, bc] = infer(env, e->a);
        unify_at(tc, t_bool(), e->a->span);
        auto [t1, b1] = infer(env, e->b);
        auto [t2, b2] = infer(env, e->c);
        unify_at(t1, t2, e->span);
        return {t1, b_seq(bc, b_plus(b1, b2))};
      }
      case ExprTag::Spawn: {
        auto [t, b] = infer(env, e->a);
        Type res = t_var(supply_.fresh());
        uint32_t beta = supply_.fresh();
        unify_at(t, t_fun(t_unit(), res, beta), e->span);
        return {t_unit(), b_seq(b, b_spawn(b_var(beta)))};
      }
      case ExprTag::Case: {
        auto [t, b] = infer(env, e->a);
        uint32_t rho = supply_.fresh();
        unify_at(t, t_ses(rho), e->a->span);
        std::vector<std::pair<std::string, Beh>> br;
        std::optional<Type> common;
        for (auto& [label, arm] : e->branches) {
          auto [ti, bi] = infer(env, arm);
          if (common) unify_at(*common, ti, arm->span);
          else common = ti;
          br.emplace_back(label, bi);
        }
        return {*common, b_seq(b, b_offer(rho, std::move(br), e->span))};
      }
      case ExprTag::Endpoint: throw TypeError(e->span, "endpoint literals cannot be typed statically");
    }
    throw TypeError(e->span, "unknown expression");
  }
};

}  // namespace

Substitution unify(const Type& a, const Type& b, ConstraintSet& c) {
  Substitution u;
  std::function<void(const Type&, const Type&)> go = [&](const Type& x0, const Type& y0) {
    Mapper m = u.mapper();
    Type x = map_type(x0, m), y = map_type(y0, m);
    if (equal(x, y)) return;
    if (x->tag == TypeTag::Var || y->tag == TypeTag::Var) {
      if (x->tag != TypeTag::Var) std::swap(x, y);
      if (occurs(x->id, y)) throw TypeError({}, "occurs check failed for " + show(x) + " in " + show(y));
      bind_alpha(u, x->id, y);
      return;
    }
    if (x->tag != y->tag) throw TypeError({}, "type mismatch " + show(x) + " vs " + show(y));
    switch (x->tag) {
      case TypeTag::Pair:
        go(x->a, y->a);
        go(x->b, y->b);
        break;
      case TypeTag::Fun: {
        go(x->a, y->a);
        go(x->b, y->b);
        Mapper m2 = u.mapper();
        uint32_t bx = m2.beta(x->id), by = m2.beta(y->id);
        if (bx != by) bind_beta(u, bx, by);
        break;
      }
      case TypeTag::Ses: c.add_region(rvar(x->id), rvar(y->id)); break;
      default: break;
    }
  };
  go(a, b);
  return u;
}

FreeVars free_vars(const TypeSchema& ts) {
  FreeVars fv, out;
  fv.add(ts.body);
  for_each_constraint(ts.bound, [&](int, size_t, const FreeVars& f) {
    for (auto* p : {&f.alpha}) fv.alpha.insert(p->begin(), p->end());
    fv.beta.insert(f.beta.begin(), f.beta.end());
    fv.rho.insert(f.rho.begin(), f.rho.end());
    fv.psi.insert(f.psi.begin(), f.psi.end());
  });
  auto keep = [&](const std::set<uint32_t>& in, std::set<uint32_t>& dst) {
    for (uint32_t v : in)
      if (!ts.quantified.count(v)) dst.insert(v);
  };
  keep(fv.alpha, out.alpha);
  keep(fv.beta, out.beta);
  keep(fv.rho, out.rho);
  keep(fv.psi, out.psi);
  return out;
}

std::pair<Type, ConstraintSet> instantiate(const TypeSchema& ts, Supply& supply) {
  Substitution s;
  std::map<uint32_t, uint32_t> fresh;
  for (uint32_t q : ts.quantified) fresh[q] = supply.fresh();
  Mapper m;
  m.alpha = [&](uint32_t a) -> std::optional<Type> {
    auto it = fresh.find(a);
    if (it == fresh.end()) return std::nullopt;
    return t_var(it->second);
  };
  m.beta = [&](uint32_t b) {
    auto it = fresh.find(b);
    return it == fresh.end() ? b : it->second;
  };
  m.rho = m.beta;
  m.psi = [&](const SessionNode& n) -> std::optional<Session> {
    auto it = fresh.find(n.id);
    if (it == fresh.end()) return std::nullopt;
    switch (n.tag) {
      case SesTag::IVar: return s_ivar(it->second);
      case SesTag::EVar: return s_evar(it->second);
      default: return s_var(it->second);
    }
  };
  return {map_type(ts.body, m), apply(ts.bound, m)};
}

std::pair<TypeSchema, ConstraintSet> generalize(const TypeEnv& env, const ConstraintSet& c, const Type& t,
                                                const Beh& b, const std::set<uint32_t>& global) {
  std::map<uint32_t, uint32_t> parent;
  std::function<uint32_t(uint32_t)> find = [&](uint32_t v) -> uint32_t {
    auto it = parent.find(v);
    if (it == parent.end() || it->second == v) return v;
    return it->second = find(it->second);
  };
  auto unite = [&](uint32_t x, uint32_t y) {
    x = find(x);
    y = find(y);
    if (x != y) parent[x] = y;
  };
  for_each_constraint(c, [&](int, size_t, const FreeVars& fv) {
    auto ids = all_ids(fv);
    std::optional<uint32_t> first;
    for (uint32_t v : ids) {
      if (global.count(v)) continue;
      if (first) unite(*first, v);
      else first = v;
    }
  });

  std::set<uint32_t> blocked;
  for (auto& [k, ts] : env)
    for (uint32_t v : all_ids(free_vars(ts))) blocked.insert(find(v));
  FreeVars fb;
  fb.add(b);
  for (uint32_t v : all_ids(fb)) blocked.insert(find(v));
  for (uint32_t v : global) blocked.insert(find(v));

  FreeVars ft;
  ft.add(t);
  std::set<uint32_t> roots;
  for (uint32_t v : all_ids(ft))
    if (!blocked.count(find(v))) roots.insert(find(v));

  TypeSchema ts;
  ts.body = t;
  for (uint32_t v : all_ids(ft))
    if (roots.count(find(v))) ts.quantified.insert(v);

  ConstraintSet rest;
  rest.chan = c.chan;
  rest.cochan = c.cochan;
  rest.choices = c.choices;
  rest.duals = c.duals;
  auto moves = [&](const FreeVars& fv) {
    for (uint32_t v : all_ids(fv))
      if (!global.count(v) && roots.count(find(v))) return true;
    return false;
  };
  auto mark = [&](const FreeVars& fv) {
    for (uint32_t v : all_ids(fv))
      if (!global.count(v)) ts.quantified.insert(v);
  };
  for (auto& [x, y] : c.type_incl) {
    FreeVars fv;
    fv.add(x);
    fv.add(y);
    if (moves(fv)) {
      ts.bound.add_incl(x, y);
      mark(fv);
    } else {
      rest.add_incl(x, y);
    }
  }
  for (auto& x : c.type_cf) {
    FreeVars fv;
    fv.add(x);
    if (moves(fv)) {
      ts.bound.type_cf.push_back(x);
      mark(fv);
    } else {
      rest.type_cf.push_back(x);
    }
  }
  for (auto& x : c.beh_cf) {
    FreeVars fv;
    fv.add(x);
    if (moves(fv)) {
      ts.bound.beh_cf.push_back(x);
      mark(fv);
    } else {
      rest.beh_cf.push_back(x);
    }
  }
  for (auto& [beta, bs] : c.bindings)
    for (auto& x : bs) {
      FreeVars fv;
      fv.beta.insert(beta);
      fv.add(x);
      if (moves(fv)) {
        ts.bound.add_binding(x, beta);
        mark(fv);
      } else {
        rest.add_binding(x, beta);
      }
    }
  for (auto& [x, y] : c.regions) {
    FreeVars fv;
    for (Region r : {x, y})
      if (!r.is_label) fv.rho.insert(r.id);
    if (moves(fv)) {
      ts.bound.add_region(x, y);
      mark(fv);
    } else {
      rest.add_region(x, y);
    }
  }
  return {ts, rest};
}

InferenceResult algW(const TypeEnv& env, const ExprP& e, Supply& supply) { return W(supply).run(env, e); }

}  // namespace sessionml
