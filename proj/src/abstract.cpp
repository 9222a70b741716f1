#include "sessionml/abstract.hpp"

#include <cstdlib>
#include <functional>

namespace sessionml {

Stack Stack::push(uint32_t label, Session s) const {
  Stack out = *this;
  out.frames.insert(out.frames.begin(), Frame{label, std::move(s)});
  out.history.insert(label);
  return out;
}

bool operator==(const Stack& x, const Stack& y) {
  if (x.frames.size() != y.frames.size() || x.history != y.history) return false;
  for (size_t i = 0; i < x.frames.size(); ++i)
    if (x.frames[i].label != y.frames[i].label || !equal(x.frames[i].ses, y.frames[i].ses)) return false;
  return true;
}

std::string show(const Stack& s) {
  if (s.frames.empty()) return "eps";
  std::string out;
  for (auto& f : s.frames) {
    if (!out.empty()) out += " . ";
    out += "(l" + std::to_string(f.label) + ": " + show(f.ses) + ")";
  }
  return out;
}

size_t default_budget() {
  if (const char* env = std::getenv("SESSIONML_BUDGET")) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && v > 0) return static_cast<size_t>(v);
  }
  return 1000000;
}

size_t Explorer::KeyHash::operator()(const Key& k) const {
  size_t h = k.beh->hash;
  for (auto& f : k.stack.frames) h = h * 1000003u ^ (f.ses->hash + f.label);
  for (uint32_t l : k.stack.history) h = h * 31 + l;
  for (uint32_t b : k.override) h = h * 17 + b;
  return h;
}

bool Explorer::KeyEq::operator()(const Key& a, const Key& b) const {
  return a.override == b.override && a.stack == b.stack && equal(a.beh, b.beh);
}

Explorer::Explorer(const ConstraintSet& c, size_t budget) : c_(c), judge_(c), budget_(budget) {}

const std::vector<Beh>& Explorer::bindings(uint32_t beta) const {
  static const std::vector<Beh> tau_only{b_tau()};
  if (override_.count(beta)) return tau_only;
  return c_.bindings_of(beta);
}

bool Explorer::region_matches(uint32_t rho, uint32_t label) const {
  return judge_.regions.same(rvar(rho), rlabel(label));
}

// Strong normalisation from the empty stack under extra tau-only overrides.
bool Explorer::premise(const Beh& b, const std::set<uint32_t>& override, std::string& why) {
  auto saved = override_;
  override_.insert(override.begin(), override.end());
  Verdict v;
  std::vector<Transition> path;
  bool ok = explore(Stack{}, b, path, v);
  override_ = saved;
  if (!ok) {
    why = v.budget_exceeded ? "state budget exceeded"
                            : "stuck at <" + show(v.stuck_stack) + ", " + show_simplified(v.stuck_beh) + ">" +
                                  (v.detail.empty() ? "" : " (" + v.detail + ")");
  }
  return ok;
}

void Explorer::steps_of(const Stack& s, const Beh& b, std::vector<Transition>& out) {
  auto emit = [&](const char* rule, Stack st, Beh nb) { out.push_back({rule, std::move(st), std::move(nb)}); };
  const Frame* top = s.frames.empty() ? nullptr : &s.frames[0];
  auto rest = [&](size_t drop) {
    Stack st = s;
    st.frames.erase(st.frames.begin(), st.frames.begin() + drop);
    return st;
  };
  switch (b->tag) {
    case BehTag::Var:
      for (auto& x : bindings(b->x)) emit("Beta", s, x);
      break;
    case BehTag::Tau: break;
    case BehTag::Plus:
      emit("Plus", s, b->a);
      emit("Plus", s, b->b);
      break;
    case BehTag::Push:
      if (!s.history.count(b->x)) emit("Push", s.push(b->x, b->ses), b_tau());
      else last_detail_ = "label l" + std::to_string(b->x) + " pushed twice";
      break;
    case BehTag::Out:
      if (top && top->ses->tag == SesTag::Out && region_matches(b->x, top->label) &&
          judge_.subtype(b->payload, top->ses->payload)) {
        Stack st = s;
        st.frames[0].ses = top->ses->next;
        emit("Out", st, b_tau());
      }
      break;
    case BehTag::In:
      if (top && top->ses->tag == SesTag::In && region_matches(b->x, top->label) &&
          judge_.subtype(top->ses->payload, b->payload)) {
        Stack st = s;
        st.frames[0].ses = top->ses->next;
        emit("In", st, b_tau());
      }
      break;
    case BehTag::Deleg:
      if (top && s.frames.size() >= 2 && top->ses->tag == SesTag::Deleg && region_matches(b->x, top->label) &&
          region_matches(b->y, s.frames[1].label) &&
          judge_.session_subtype(s.frames[1].ses, top->ses->carried)) {
        Stack st = rest(2);
        st.frames.insert(st.frames.begin(), Frame{top->label, top->ses->next});
        emit("Del", st, b_tau());
      }
      break;
    case BehTag::Resume:
      if (top && s.frames.size() == 1 && top->ses->tag == SesTag::Resume && top->label != b->y &&
          region_matches(b->x, top->label)) {
        Stack st = s;
        st.frames[0].ses = top->ses->next;
        st.frames.insert(st.frames.begin() + 1, Frame{b->y, top->ses->carried});
        st.history.insert(b->y);
        emit("Res", st, b_tau());
      }
      break;
    case BehTag::Select:
      if (top && top->ses->tag == SesTag::Internal && region_matches(b->x, top->label)) {
        auto it = top->ses->branches.find(b->choice);
        if (it != top->ses->branches.end()) {
          Stack st = s;
          st.frames[0].ses = it->second;
          emit("ICh", st, b_tau());
        }
      }
      break;
    case BehTag::Offer:
      if (top && top->ses->tag == SesTag::External && region_matches(b->x, top->label)) {
        std::set<std::string> j;
        for (auto& [k, v] : b->branches) j.insert(k);
        bool lower = std::all_of(top->ses->active.begin(), top->ses->active.end(),
                                 [&](const std::string& k) { return j.count(k) > 0; });
        bool upper = std::all_of(j.begin(), j.end(),
                                 [&](const std::string& k) { return top->ses->branches.count(k) > 0; });
        if (lower && upper)
          for (auto& [k, v] : b->branches) {
            Stack st = s;
            st.frames[0].ses = top->ses->branches.at(k);
            emit("ECh", st, v);
          }
      }
      break;
    case BehTag::Rec: {
      std::string why;
      if (premise(b->a, {b->x}, why)) emit("Rec", s, b_tau());
      else last_detail_ = "recursive body b" + std::to_string(b->x) + " is not confined: " + why;
      break;
    }
    case BehTag::Spawn: {
      std::string why;
      if (premise(b->a, {}, why)) emit("Spn", s, b_tau());
      else last_detail_ = "spawned behaviour is not confined: " + why;
      break;
    }
    case BehTag::Seq:
      if (b->a->tag == BehTag::Tau) {
        emit("Tau", s, b->b);
      } else {
        std::vector<Transition> inner;
        steps_of(s, b->a, inner);
        for (auto& t : inner) out.push_back({t.rule, std::move(t.stack), b_seq(t.beh, b->b)});
      }
      break;
  }
}

std::vector<Transition> Explorer::step(const Stack& s, const Beh& b) {
  std::vector<Transition> out;
  // A finished top frame is removed before anything else happens.
  if (!s.frames.empty() && s.frames[0].ses->tag == SesTag::End) {
    Stack st = s;
    st.frames.erase(st.frames.begin());
    out.push_back({"End", std::move(st), b});
    return out;
  }
  steps_of(s, b, out);
  if (ground_mode) {
    size_t before = bsize(s, b);
    for (auto& t : out) {
      ++size_checks;
      if (bsize(t.stack, t.beh) >= before) ++size_violations;
    }
  }
  return out;
}

bool Explorer::explore(const Stack& s, const Beh& b, std::vector<Transition>& path, Verdict& v) {
  Key key{override_, s, b};
  if (auto it = memo_.find(key); it != memo_.end()) {
    if (!it->second && !v.stuck_beh) {
      v.stuck_stack = s;
      v.stuck_beh = b;
      v.path = path;
      v.detail = "previously refuted configuration";
    }
    return it->second;
  }
  if (exhausted_ || states_visited >= budget_) {
    exhausted_ = true;
    v.budget_exceeded = true;
    return false;
  }
  if (on_path_.count(key)) {
    v.stuck_stack = s;
    v.stuck_beh = b;
    v.path = path;
    v.detail = "cyclic configuration";
    return false;
  }
  ++states_visited;
  on_path_[key] = true;
  last_detail_.clear();
  auto next = step(s, b);
  bool ok = true;
  if (next.empty()) {
    ok = s.empty() && b->tag == BehTag::Tau;
    if (!ok && !v.stuck_beh) {
      v.stuck_stack = s;
      v.stuck_beh = b;
      v.path = path;
      v.detail = last_detail_;
    }
  }
  for (auto& t : next) {
    path.push_back(t);
    bool sub = explore(t.stack, t.beh, path, v);
    path.pop_back();
    if (!sub) {
      ok = false;
      break;
    }
  }
  on_path_.erase(key);
  if (!exhausted_) memo_[key] = ok;
  return ok;
}

Verdict Explorer::normalizes(const Stack& s, const Beh& b) {
  Verdict v;
  std::vector<Transition> path;
  size_t before = states_visited;
  v.ok = explore(s, b, path, v);
  v.states = states_visited - before;
  if (v.budget_exceeded) v.ok = false;
  return v;
}

void Explorer::trace_rec(const Stack& s, const Beh& b, int depth, std::vector<std::string>& out) {
  std::string indent(static_cast<size_t>(depth) * 2, ' ');
  Stack cur = s;
  Beh beh = b;
  for (size_t guard = 0; guard < budget_; ++guard) {
    auto next = step(cur, beh);
    if (next.empty()) break;
    const Transition& t = next.front();
    // Show the premise of Rec and Spn as a nested run.
    Beh focus = beh;
    while (focus->tag == BehTag::Seq && focus->a->tag != BehTag::Tau) focus = focus->a;
    if ((t.rule == "Rec" || t.rule == "Spn") && (focus->tag == BehTag::Rec || focus->tag == BehTag::Spawn)) {
      auto saved = override_;
      if (focus->tag == BehTag::Rec) override_.insert(focus->x);
      trace_rec(Stack{}, focus->a, depth + 1, out);
      override_ = saved;
    }
    out.push_back(indent + t.rule + " | " + show(t.stack) + " | " + show_simplified(t.beh));
    cur = t.stack;
    beh = t.beh;
  }
}

std::vector<std::string> Explorer::trace(const Stack& s, const Beh& b) {
  std::vector<std::string> out;
  out.push_back("Start | " + show(s) + " | " + show_simplified(b));
  trace_rec(s, b, 0, out);
  return out;
}

// ---------------------------------------------------------------- ground translation and size

Beh ground(const Beh& b, const ConstraintSet& c) {
  std::function<Beh(const Beh&, const std::set<uint32_t>&)> go = [&](const Beh& x,
                                                                    const std::set<uint32_t>& tau) -> Beh {
    switch (x->tag) {
      case BehTag::Var: {
        if (tau.count(x->x)) return b_tau();
        const auto& bs = c.bindings_of(x->x);
        if (bs.empty()) return x;
        Beh acc = go(bs.back(), tau);
        for (size_t i = bs.size() - 1; i-- > 0;) acc = b_plus(go(bs[i], tau), acc);
        return acc;
      }
      case BehTag::Seq: return b_seq(go(x->a, tau), go(x->b, tau));
      case BehTag::Plus: return b_plus(go(x->a, tau), go(x->b, tau));
      case BehTag::Spawn: return b_spawn(go(x->a, tau));
      case BehTag::Rec: {
        auto inner = tau;
        inner.insert(x->x);
        return b_rec(x->x, go(x->a, inner));
      }
      case BehTag::Offer: {
        std::vector<std::pair<std::string, Beh>> br;
        for (auto& [k, v] : x->branches) br.emplace_back(k, go(v, tau));
        return b_offer(x->x, std::move(br), x->span);
      }
      default: return x;
    }
  };
  return go(b, {});
}

size_t bsize(const Beh& b) {
  switch (b->tag) {
    case BehTag::Var: case BehTag::Tau: return 0;
    case BehTag::Push: case BehTag::Resume: return 2;
    case BehTag::Out: case BehTag::In: case BehTag::Deleg: case BehTag::Select: return 1;
    case BehTag::Offer: {
      size_t n = 1;
      for (auto& [k, v] : b->branches) n += bsize(v);
      return n;
    }
    case BehTag::Rec: return 1 + bsize(b->a);
    case BehTag::Seq: case BehTag::Plus: return 1 + bsize(b->a) + bsize(b->b);
    case BehTag::Spawn: return 2 + bsize(b->a);
  }
  return 0;
}

size_t bsize(const Stack& s, const Beh& b) { return 1 + s.frames.size() + bsize(b); }

}  // namespace sessionml
