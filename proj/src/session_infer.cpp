#include "sessionml/session_infer.hpp"

#include <functional>

namespace sessionml {

// ---------------------------------------------------------------- store

Session SessionStore::resolve(const Session& s) const {
  Session cur = s;
  for (size_t guard = 0; cur->tag == SesTag::Var; ++guard) {
    auto it = psi.find(cur->id);
    if (it == psi.end()) break;
    if (guard > 100000) throw InferenceFailure("internal", "cyclic session binding");
    cur = it->second;
  }
  return cur;
}

namespace {

Session rebuild(const Session& s, const std::function<Session(const Session&)>& f) {
  switch (s->tag) {
    case SesTag::Out: return s_out(s->payload, f(s->next));
    case SesTag::In: return s_in(s->payload, f(s->next));
    case SesTag::Deleg: return s_deleg(f(s->carried), f(s->next));
    case SesTag::Resume: return s_resume(f(s->carried), f(s->next));
    case SesTag::Internal: {
      std::map<std::string, Session> br;
      for (auto& [k, v] : s->branches) br[k] = f(v);
      return s_internal(br);
    }
    case SesTag::External: {
      std::map<std::string, Session> br;
      for (auto& [k, v] : s->branches) br[k] = f(v);
      return s_external(s->active, br);
    }
    default: return s;
  }
}

bool mentions(const Session& s, uint32_t var) {
  FreeVars fv;
  fv.add(s);
  return fv.psi.count(var) > 0;
}

std::string label_set(const std::set<std::string>& xs) {
  std::string out;
  for (auto& x : xs) out += (out.empty() ? "" : ",") + x;
  return "{" + out + "}";
}

}  // namespace

Session SessionStore::deep(const Session& s) const {
  std::function<Session(const Session&)> go = [&](const Session& x) { return rebuild(resolve(x), go); };
  return go(s);
}

Session SessionStore::full(const Session& s) const {
  size_t depth = 0;
  std::function<Session(const Session&)> go = [&](const Session& x) -> Session {
    if (++depth > 100000) throw InferenceFailure("internal", "cyclic choice binding");
    Session r = resolve(x);
    if (r->tag == SesTag::IVar || r->tag == SesTag::EVar) {
      auto it = c.choices.find(r->id);
      if (it != c.choices.end()) r = it->second;
    }
    Session out = rebuild(r, go);
    --depth;
    return out;
  };
  return go(s);
}

void SessionStore::bind(uint32_t var, const Session& s) {
  Session target = full(s);
  if (target->tag == SesTag::Var && target->id == var) return;
  if (mentions(target, var))
    throw InferenceFailure("shape", "recursive session type needed for psi" + std::to_string(var) + " = " +
                                        show(target));
  psi[var] = s;
}

Session SessionStore::new_register(const Session& choice) {
  uint32_t id = supply.fresh();
  c.choices[id] = choice;
  return choice->tag == SesTag::Internal ? s_ivar(id) : s_evar(id);
}

Substitution SessionStore::substitution() const {
  Substitution out;
  for (auto& [k, v] : psi) out.psi[k] = full(v);
  for (auto& [k, v] : c.choices) out.psi[k] = full(v);
  return out;
}

ConstraintSet SessionStore::resolved_constraints() const {
  Substitution s = substitution();
  ConstraintSet out = apply(c, s.mapper());
  out.choices.clear();
  return out;
}

void SessionStore::sub(const Session& a0, const Session& b0) {
  Session a = resolve(a0), b = resolve(b0);
  if (equal(a, b)) return;
  if (a->tag == SesTag::Var) return bind(a->id, b);
  if (b->tag == SesTag::Var) return bind(b->id, a);
  bool ca = a->tag == SesTag::IVar || a->tag == SesTag::EVar || a->tag == SesTag::Internal || a->tag == SesTag::External;
  bool cb = b->tag == SesTag::IVar || b->tag == SesTag::EVar || b->tag == SesTag::Internal || b->tag == SesTag::External;
  if (ca && cb) return sub_choice(a, b);
  if (a->tag != b->tag)
    throw InferenceFailure("shape", "session " + show(full(a)) + " cannot be a subtype of " + show(full(b)));
  switch (a->tag) {
    case SesTag::End: return;
    case SesTag::Out:
      c.add_incl(b->payload, a->payload);
      return sub(a->next, b->next);
    case SesTag::In:
      c.add_incl(a->payload, b->payload);
      return sub(a->next, b->next);
    case SesTag::Deleg:
      sub(b->carried, a->carried);
      return sub(a->next, b->next);
    case SesTag::Resume:
      sub(a->carried, b->carried);
      return sub(a->next, b->next);
    default: throw InferenceFailure("shape", "unexpected session " + show(a));
  }
}

// Choice against choice. Only a register on the left is refined; everything else is checked.
void SessionStore::sub_choice(const Session& a, const Session& b) {
  auto view = [&](const Session& s) { return (s->tag == SesTag::IVar || s->tag == SesTag::EVar) ? c.choices.at(s->id) : s; };
  bool internal_a = a->tag == SesTag::IVar || a->tag == SesTag::Internal;
  bool internal_b = b->tag == SesTag::IVar || b->tag == SesTag::Internal;
  if (internal_a != internal_b)
    throw InferenceFailure("shape", "session " + show(full(a)) + " cannot be a subtype of " + show(full(b)));
  bool mutable_a = a->tag == SesTag::IVar || a->tag == SesTag::EVar;
  Session va = view(a), vb = view(b);
  auto update = [&](Session nv) {
    c.choices[a->id] = nv;
    va = nv;
  };
  if (internal_a) {
    // More labels refine fewer: every label on the right must exist on the left.
    for (auto& [k, v] : vb->branches) {
      if (!va->branches.count(k)) {
        if (!mutable_a)
          throw InferenceFailure("shape", "internal choice " + show(full(a)) + " lacks label " + k);
        auto br = va->branches;
        br[k] = v;
        update(s_internal(br));
        continue;
      }
      sub(view(a)->branches.at(k), vb->branches.at(k));
    }
    return;
  }
  // External: active(a) within active(b), and every label of b available in a.
  auto br = va->branches;
  auto act = va->active;
  bool changed = false;
  for (auto it = act.begin(); it != act.end();) {
    if (!vb->active.count(*it)) {
      if (!mutable_a)
        throw InferenceFailure("shape", "external choice " + show(full(a)) + " must accept " + *it);
      it = act.erase(it);
      changed = true;
    } else {
      ++it;
    }
  }
  for (auto& [k, v] : vb->branches)
    if (!br.count(k)) {
      if (!mutable_a) throw InferenceFailure("shape", "external choice " + show(full(a)) + " lacks label " + k);
      br[k] = v;
      changed = true;
    }
  if (changed) update(s_external(act, br));
  for (auto& [k, v] : vb->branches) sub(view(a)->branches.at(k), v);
}

// ---------------------------------------------------------------- helpers

void check_fresh(SessionStore& st, uint32_t label, Stack& s) {
  for (size_t i = 0; i < s.frames.size(); ++i) {
    if (s.frames[i].label != label) continue;
    Session r = st.resolve(s.frames[i].ses);
    if (r->tag == SesTag::Var) st.bind(r->id, s_end());
    else if (r->tag != SesTag::End)
      throw InferenceFailure("unfinished", "session of l" + std::to_string(label) + " is unfinished: " +
                                               show(st.full(r)),
                             {}, s);
    s.frames.erase(s.frames.begin() + static_cast<std::ptrdiff_t>(i));
    return;
  }
}

void close_top(SessionStore& st, Stack& s) {
  if (!s.frames.empty()) check_fresh(st, s.frames[0].label, s);
}

void finalize(SessionStore& st, Stack& s) {
  while (!s.frames.empty()) close_top(st, s);
}

// ---------------------------------------------------------------- MC

namespace {

class MC {
 public:
  MC(SessionStore& st) : st_(st), regions_(st.c) {}

  void run(Stack s, Beh b, std::vector<Beh> k) {
    while (true) {
      drop_finished(s);
      switch (b->tag) {
        case BehTag::Tau:
          if (k.empty()) {
            finalize(st_, s);
            return;
          }
          b = k.back();
          k.pop_back();
          continue;
        case BehTag::Seq:
          k.push_back(b->b);
          b = b->a;
          continue;
        case BehTag::Var: {
          std::vector<Beh> bs;
          if (override_.count(b->x)) bs = {b_tau()};
          else bs = st_.c.bindings_of(b->x);
          if (bs.empty())
            throw InferenceFailure("unbound", "behaviour variable b" + std::to_string(b->x) + " has no binding",
                                   b->span, s, b);
          if (bs.size() == 1) {
            b = bs[0];
            continue;
          }
          for (auto& x : bs) run(s, x, k);
          return;
        }
        case BehTag::Plus:
          run(s, b->a, k);
          run(s, b->b, k);
          return;
        case BehTag::Push:
          if (s.history.count(b->x))
            throw InferenceFailure("linearity", "linearity violation: label l" + std::to_string(b->x) +
                                                    " is pushed twice on the same stack",
                                   b->span, s, b);
          check_fresh(st_, b->x, s);
          s = s.push(b->x, b->ses);
          b = b_tau();
          continue;
        case BehTag::Rec: {
          bool had = override_.count(b->x) > 0;
          override_.insert(b->x);
          run(Stack{}, b->a, {});
          if (!had) override_.erase(b->x);
          b = b_tau();
          continue;
        }
        case BehTag::Spawn:
          run(Stack{}, b->a, {});
          b = b_tau();
          continue;
        default:
          if (pop(s, b, k)) return;
          b = b_tau();
          continue;
      }
    }
  }

 private:
  SessionStore& st_;
  RegionClosure regions_;
  std::set<uint32_t> override_;

  void drop_finished(Stack& s) {
    while (!s.frames.empty() && st_.resolve(s.frames[0].ses)->tag == SesTag::End) s.frames.erase(s.frames.begin());
  }

  static std::string action_name(const Beh& b) {
    switch (b->tag) {
      case BehTag::Out: return "send";
      case BehTag::In: return "receive";
      case BehTag::Deleg: return "delegation";
      case BehTag::Resume: return "resume";
      case BehTag::Select: return "selection";
      case BehTag::Offer: return "offer";
      default: return "action";
    }
  }

  bool matches(uint32_t rho, uint32_t label) const { return regions_.same(rvar(rho), rlabel(label)); }

  [[noreturn]] void fail(const std::string& reason, const std::string& msg, const Stack& s, const Beh& b) {
    Stack shown = s;
    for (auto& f : shown.frames) f.ses = st_.full(f.ses);
    throw InferenceFailure(reason, msg + " in configuration <" + show(shown) + ", " + show_simplified(b) + ">",
                           b->span, shown, b);
  }

  // Brings the frame owned by rho to the top, closing open frames above it.
  void expose(Stack& s, uint32_t rho, const Beh& b) {
    while (true) {
      drop_finished(s);
      if (s.frames.empty()) fail("stack-principle", "stuck state, not well-stacked: no open endpoint for the " + action_name(b) + " " + show(b), s, b);
      if (matches(rho, s.frames[0].label)) return;
      Session top = st_.resolve(s.frames[0].ses);
      if (top->tag != SesTag::Var)
        fail("stack-principle",
             "stuck state, not well-stacked: the " + action_name(b) + " " + show(b) + " is not on the top endpoint l" +
                 std::to_string(s.frames[0].label) + " whose session is unfinished",
             s, b);
      close_top(st_, s);
    }
  }

  // Returns true when the continuation was handled by recursive calls.
  bool pop(Stack& s, const Beh& b, std::vector<Beh>& k) {
    if (b->tag == BehTag::Resume) {
      // Frames below the top must be closed for a one-frame stack.
      expose(s, b->x, b);
      Stack below = s;
      below.frames.erase(below.frames.begin());
      try {
        finalize(st_, below);
      } catch (const InferenceFailure&) {
        fail("stack-principle", "resume requires a one-frame stack", s, b);
      }
      s.frames.resize(1);
      if (s.frames[0].label == b->y) fail("linearity", "an endpoint cannot resume itself", s, b);
      Session top = st_.resolve(s.frames[0].ses);
      if (top->tag == SesTag::Var) {
        Session r = st_.fresh_var(), n = st_.fresh_var();
        st_.bind(top->id, s_resume(r, n));
        top = st_.resolve(top);
      }
      if (top->tag != SesTag::Resume)
        fail("session", "expected a resume but the session is " + show(st_.full(top)), s, b);
      s.frames[0].ses = top->next;
      s.frames.push_back(Frame{b->y, top->carried});
      s.history.insert(b->y);
      return false;
    }

    if (b->tag == BehTag::Deleg) {
      expose(s, b->x, b);
      // The delegated endpoint must be the second frame.
      while (true) {
        if (s.frames.size() < 2) fail("stack-principle", "delegation needs the delegated endpoint second on the stack", s, b);
        if (st_.resolve(s.frames[1].ses)->tag == SesTag::End) {
          s.frames.erase(s.frames.begin() + 1);
          continue;
        }
        if (matches(b->y, s.frames[1].label)) break;
        check_fresh(st_, s.frames[1].label, s);
      }
      Session top = st_.resolve(s.frames[0].ses);
      if (top->tag == SesTag::Var) {
        Session d = st_.fresh_var(), n = st_.fresh_var();
        st_.bind(top->id, s_deleg(d, n));
        top = st_.resolve(top);
      }
      if (top->tag != SesTag::Deleg)
        fail("session", "expected a delegation but the session is " + show(st_.full(top)), s, b);
      try {
        st_.sub(s.frames[1].ses, top->carried);
      } catch (const InferenceFailure& e) {
        fail("session", e.what(), s, b);
      }
      s.frames[0].ses = top->next;
      s.frames.erase(s.frames.begin() + 1);
      return false;
    }

    expose(s, b->x, b);
    Session top = st_.resolve(s.frames[0].ses);
    switch (b->tag) {
      case BehTag::Out:
        if (top->tag == SesTag::Var) {
          Type a = t_var(st_.supply.fresh());
          Session n = st_.fresh_var();
          st_.bind(top->id, s_out(a, n));
          st_.c.add_incl(b->payload, a);
          s.frames[0].ses = n;
          return false;
        }
        if (top->tag != SesTag::Out) fail("session", "expected " + show_simplified(b) + " but the session is " + show(st_.full(top)), s, b);
        st_.c.add_incl(b->payload, top->payload);
        s.frames[0].ses = top->next;
        return false;
      case BehTag::In:
        if (top->tag == SesTag::Var) {
          Type a = t_var(st_.supply.fresh());
          Session n = st_.fresh_var();
          st_.bind(top->id, s_in(a, n));
          st_.c.add_incl(a, b->payload);
          s.frames[0].ses = n;
          return false;
        }
        if (top->tag != SesTag::In) fail("session", "expected " + show_simplified(b) + " but the session is " + show(st_.full(top)), s, b);
        st_.c.add_incl(top->payload, b->payload);
        s.frames[0].ses = top->next;
        return false;
      case BehTag::Select: {
        if (top->tag == SesTag::Var) {
          Session n = st_.fresh_var();
          Session reg = st_.new_register(s_internal({{b->choice, n}}));
          st_.bind(top->id, reg);
          s.frames[0].ses = n;
          return false;
        }
        if (top->tag == SesTag::IVar) {
          Session cur = st_.c.choices.at(top->id);
          auto it = cur->branches.find(b->choice);
          if (it == cur->branches.end()) {
            auto br = cur->branches;
            Session n = st_.fresh_var();
            br[b->choice] = n;
            st_.c.choices[top->id] = s_internal(br);
            s.frames[0].ses = n;
          } else {
            s.frames[0].ses = it->second;
          }
          return false;
        }
        if (top->tag == SesTag::Internal && top->branches.count(b->choice)) {
          s.frames[0].ses = top->branches.at(b->choice);
          return false;
        }
        fail("session", "cannot select " + b->choice + " on " + show(st_.full(top)), s, b);
      }
      case BehTag::Offer: {
        std::set<std::string> j;
        for (auto& [lab, v] : b->branches) j.insert(lab);
        std::map<std::string, Session> targets;
        if (top->tag == SesTag::Var) {
          std::map<std::string, Session> br;
          for (auto& lab : j) br[lab] = st_.fresh_var();
          Session reg = st_.new_register(s_external(j, br));
          st_.bind(top->id, reg);
          targets = br;
        } else if (top->tag == SesTag::EVar) {
          Session cur = st_.c.choices.at(top->id);
          auto act = cur->active;
          auto br = cur->branches;
          for (auto it = act.begin(); it != act.end();) it = j.count(*it) ? std::next(it) : act.erase(it);
          for (auto& lab : j)
            if (!br.count(lab)) br[lab] = st_.fresh_var();
          st_.c.choices[top->id] = s_external(act, br);
          for (auto& lab : j) targets[lab] = br.at(lab);
        } else if (top->tag == SesTag::External) {
          bool lower = std::all_of(top->active.begin(), top->active.end(), [&](auto& x) { return j.count(x) > 0; });
          bool upper = std::all_of(j.begin(), j.end(), [&](auto& x) { return top->branches.count(x) > 0; });
          if (!lower || !upper)
            fail("session", "offered labels " + label_set(j) + " do not fit " + show(st_.full(top)), s, b);
          for (auto& lab : j) targets[lab] = top->branches.at(lab);
        } else {
          fail("session", "expected an external choice but the session is " + show(st_.full(top)), s, b);
        }
        for (auto& [lab, body] : b->branches) {
          Stack branch = s;
          branch.frames[0].ses = targets.at(lab);
          run(branch, body, k);
        }
        return true;
      }
      default: fail("internal", "unexpected behaviour", s, b);
    }
  }
};

}  // namespace

void algMC(SessionStore& st, Stack s, Beh b, std::vector<Beh> k) { MC(st).run(std::move(s), std::move(b), std::move(k)); }

SIResult algSI(SessionStore& st, const Beh& b) {
  algMC(st, Stack{}, b, {});
  SIResult r;
  r.sigma = st.substitution();
  r.c = st.resolved_constraints();
  return r;
}

SIResult algSI(const Beh& b, const ConstraintSet& c, Supply& supply) {
  SessionStore st(c, supply);
  return algSI(st, b);
}

std::pair<Substitution, ConstraintSet> choice_var_subst(const ConstraintSet& c) {
  Substitution s;
  size_t depth = 0;
  std::function<Session(const Session&)> res = [&](const Session& x) -> Session {
    if (++depth > 100000) throw InferenceFailure("internal", "cyclic choice binding");
    Mapper m;
    m.psi = [&](const SessionNode& n) -> std::optional<Session> {
      if (n.tag == SesTag::Var) return std::nullopt;
      auto it = c.choices.find(n.id);
      if (it == c.choices.end()) return std::nullopt;
      return res(it->second);
    };
    Session out = map_session(x, m);
    --depth;
    return out;
  };
  for (auto& [k, v] : c.choices) s.psi[k] = res(v);
  ConstraintSet out = apply(c, s.mapper());
  out.choices.clear();
  return {s, out};
}

}  // namespace sessionml
