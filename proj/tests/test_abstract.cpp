#include "sessionml/abstract.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <deque>
#include <random>

namespace sessionml::testing {
namespace {

// Regions r11 ~ l1 and r12 ~ l2.
ConstraintSet two_regions() {
  ConstraintSet c;
  c.add_region(rvar(11), rlabel(1));
  c.add_region(rvar(12), rlabel(2));
  return c;
}

Beh seq(std::initializer_list<Beh> xs) {
  std::vector<Beh> v(xs);
  Beh b = v.back();
  for (size_t i = v.size() - 1; i-- > 0;) b = b_seq(v[i], b);
  return b;
}

bool normalizes(const ConstraintSet& c, const Beh& b, Stack s = {}) { return Explorer(c).normalizes(s, b).ok; }

TEST(ExplorerTest, SendThenEnd) {
  ConstraintSet c = two_regions();
  EXPECT_TRUE(normalizes(c, seq({b_push(1, s_out(t_int(), s_end())), b_out(11, t_int())})));
}

TEST(ExplorerTest, WrongDirectionIsStuck) {
  ConstraintSet c = two_regions();
  Verdict v = Explorer(c).normalizes({}, seq({b_push(1, s_out(t_int(), s_end())), b_in(11, t_int())}));
  EXPECT_FALSE(v.ok);
  EXPECT_FALSE(v.budget_exceeded);
  ASSERT_TRUE(v.stuck_beh);
  EXPECT_EQ(v.stuck_stack.frames.size(), 1u);
}

TEST(ExplorerTest, UnfinishedSessionIsStuck) {
  ConstraintSet c = two_regions();
  EXPECT_FALSE(normalizes(c, b_push(1, s_out(t_int(), s_end()))));
}

TEST(ExplorerTest, OnlyTheTopFrameCommunicates) {
  ConstraintSet c = two_regions();
  Beh pushes = seq({b_push(1, s_out(t_int(), s_end())), b_push(2, s_out(t_int(), s_end()))});
  EXPECT_TRUE(normalizes(c, seq({pushes, b_out(12, t_int()), b_out(11, t_int())})));
  EXPECT_FALSE(normalizes(c, seq({pushes, b_out(11, t_int()), b_out(12, t_int())})));
}

TEST(ExplorerTest, LabelsArePushedAtMostOnce) {
  ConstraintSet c = two_regions();
  Beh once = seq({b_push(1, s_out(t_int(), s_end())), b_out(11, t_int())});
  EXPECT_FALSE(normalizes(c, seq({once, once})));
}

TEST(ExplorerTest, PlusRequiresBothBranches) {
  ConstraintSet c = two_regions();
  Beh open = b_push(1, s_out(t_int(), s_end()));
  EXPECT_TRUE(normalizes(c, seq({open, b_plus(b_out(11, t_int()), b_out(11, t_int()))})));
  EXPECT_FALSE(normalizes(c, seq({open, b_plus(b_out(11, t_int()), b_tau())})));
}

TEST(ExplorerTest, OfferCoversActiveLabelsWithinDeclared) {
  ConstraintSet c = two_regions();
  Session ext = s_external({"A"}, {{"A", s_end()}, {"B", s_out(t_int(), s_end())}});
  Beh open = b_push(1, ext);
  EXPECT_TRUE(normalizes(c, seq({open, b_offer(11, {{"A", b_tau()}})})));
  EXPECT_TRUE(normalizes(c, seq({open, b_offer(11, {{"A", b_tau()}, {"B", b_out(11, t_int())}})})));
  // Missing the active label.
  EXPECT_FALSE(normalizes(c, seq({open, b_offer(11, {{"B", b_out(11, t_int())}})})));
  // A label outside the session.
  EXPECT_FALSE(normalizes(c, seq({open, b_offer(11, {{"A", b_tau()}, {"C", b_tau()}})})));
}

TEST(ExplorerTest, SelectPicksADeclaredBranch) {
  ConstraintSet c = two_regions();
  Beh open = b_push(1, s_internal({{"A", s_end()}, {"B", s_in(t_int(), s_end())}}));
  EXPECT_TRUE(normalizes(c, seq({open, b_select(11, "A")})));
  EXPECT_TRUE(normalizes(c, seq({open, b_select(11, "B"), b_in(11, t_int())})));
  EXPECT_FALSE(normalizes(c, seq({open, b_select(11, "C")})));
}

TEST(ExplorerTest, DelegationTakesTheSecondFrame) {
  ConstraintSet c = two_regions();
  Session carried = s_out(t_int(), s_end());
  Beh ok = seq({b_push(2, carried), b_push(1, s_deleg(carried, s_end())), b_deleg(11, 12)});
  EXPECT_TRUE(normalizes(c, ok));
  Beh wrong = seq({b_push(1, s_deleg(carried, s_end())), b_push(2, carried), b_deleg(11, 12)});
  EXPECT_FALSE(normalizes(c, wrong));
}

TEST(ExplorerTest, ResumeNeedsASingleFrame) {
  ConstraintSet c = two_regions();
  Session carried = s_in(t_int(), s_end());
  Beh ok = seq({b_push(1, s_resume(carried, s_end())), b_resume(11, 2), b_in(12, t_int())});
  EXPECT_TRUE(normalizes(c, ok));
  ConstraintSet c3 = two_regions();
  c3.add_region(rvar(13), rlabel(3));
  Beh buried = seq({b_push(3, s_out(t_int(), s_end())), ok, b_out(13, t_int())});
  EXPECT_FALSE(normalizes(c3, buried));
}

TEST(ExplorerTest, RecursionMustBeSelfContained) {
  ConstraintSet c = two_regions();
  Beh body = b_plus(b_tau(), seq({b_push(1, s_out(t_int(), s_end())), b_out(11, t_int()), b_var(5)}));
  c.add_binding(b_rec(5, body), 5);
  EXPECT_TRUE(normalizes(c, b_var(5)));

  ConstraintSet leaky = two_regions();
  leaky.add_binding(b_rec(6, b_plus(b_tau(), b_seq(b_out(11, t_int()), b_var(6)))), 6);
  EXPECT_FALSE(normalizes(leaky, seq({b_push(1, s_out(t_int(), s_end())), b_var(6)})));
}

TEST(ExplorerTest, SpawnedBehaviourMustNormalizeAlone) {
  ConstraintSet c = two_regions();
  Beh closed = seq({b_push(1, s_out(t_int(), s_end())), b_out(11, t_int())});
  EXPECT_TRUE(normalizes(c, b_spawn(closed)));
  EXPECT_FALSE(normalizes(c, seq({b_push(1, s_out(t_int(), s_end())), b_spawn(b_out(11, t_int()))})));
}

TEST(ExplorerTest, BudgetExhaustionIsReported) {
  ConstraintSet c = two_regions();
  Beh b = b_tau();
  for (int i = 0; i < 20; ++i) b = b_seq(b_plus(b_tau(), b_tau()), b);
  Verdict v = Explorer(c, 5).normalizes({}, b);
  EXPECT_FALSE(v.ok);
  EXPECT_TRUE(v.budget_exceeded);
}

TEST(ExplorerTest, BudgetEnvironmentOverride) {
  ASSERT_EQ(setenv("SESSIONML_BUDGET", "1234", 1), 0);
  EXPECT_EQ(default_budget(), 1234u);
  unsetenv("SESSIONML_BUDGET");
  EXPECT_EQ(default_budget(), 1000000u);
}

TEST(ExplorerTest, TraceEndsInTheTerminalConfiguration) {
  ConstraintSet c = two_regions();
  auto lines = Explorer(c).trace({}, seq({b_push(1, s_out(t_int(), s_end())), b_out(11, t_int())}));
  ASSERT_GE(lines.size(), 3u);
  EXPECT_EQ(lines.front().rfind("Start", 0), 0u);
  EXPECT_EQ(lines.back().rfind("End", 0), 0u) << lines.back();
}

TEST(SizeTest, MeasureOfEachConstructor) {
  EXPECT_EQ(bsize(b_tau()), 0u);
  EXPECT_EQ(bsize(b_var(1)), 0u);
  EXPECT_EQ(bsize(b_push(1, s_end())), 2u);
  EXPECT_EQ(bsize(b_resume(1, 2)), 2u);
  EXPECT_EQ(bsize(b_out(1, t_int())), 1u);
  EXPECT_EQ(bsize(b_select(1, "A")), 1u);
  EXPECT_EQ(bsize(b_offer(1, {{"A", b_out(1, t_int())}, {"B", b_tau()}})), 2u);
  EXPECT_EQ(bsize(b_seq(b_out(1, t_int()), b_in(1, t_int()))), 3u);
  EXPECT_EQ(bsize(b_spawn(b_tau())), 2u);
  EXPECT_EQ(bsize(b_rec(1, b_plus(b_tau(), b_tau()))), 2u);
  Stack s = Stack{}.push(1, s_end()).push(2, s_end());
  EXPECT_EQ(bsize(s, b_tau()), 3u);
}

TEST(SizeTest, GroundTransitionsStrictlyDecrease) {
  ConstraintSet c = two_regions();
  Beh body = b_plus(b_tau(), seq({b_push(1, s_out(t_int(), s_end())), b_out(11, t_int()), b_var(5)}));
  c.add_binding(b_rec(5, body), 5);
  Beh b = ground(seq({b_var(5), b_spawn(b_var(5))}), c);
  Explorer ex(c);
  ex.ground_mode = true;
  EXPECT_TRUE(ex.normalizes({}, b).ok);
  EXPECT_GT(ex.size_checks, 0u);
  EXPECT_EQ(ex.size_violations, 0u);
}

TEST(GroundTest, VariablesBecomeChoicesOfBindings) {
  ConstraintSet c;
  c.add_binding(b_out(1, t_int()), 3);
  c.add_binding(b_in(1, t_int()), 3);
  EXPECT_TRUE(equal(ground(b_var(3), c), b_plus(b_out(1, t_int()), b_in(1, t_int()))));
  EXPECT_TRUE(equal(ground(b_var(4), c), b_var(4)));
}

// Reference semantics for the fragment without variables, recursion, spawn and choice:
// every maximal path must reach the empty stack with nothing left to run.
struct RefFrame {
  uint32_t label;
  Session ses;
};

bool ref_normalizes(std::vector<RefFrame> stack, std::set<uint32_t> history, std::deque<Beh> k) {
  if (!stack.empty() && stack.front().ses->tag == SesTag::End) {
    stack.erase(stack.begin());
    return ref_normalizes(stack, history, k);
  }
  if (k.empty()) return stack.empty();
  Beh b = k.front();
  k.pop_front();
  switch (b->tag) {
    case BehTag::Tau: return ref_normalizes(stack, history, k);
    case BehTag::Seq:
      k.push_front(b->b);
      k.push_front(b->a);
      return ref_normalizes(stack, history, k);
    case BehTag::Plus: {
      auto k1 = k, k2 = k;
      k1.push_front(b->a);
      k2.push_front(b->b);
      return ref_normalizes(stack, history, k1) && ref_normalizes(stack, history, k2);
    }
    case BehTag::Push:
      if (history.count(b->x)) return false;
      history.insert(b->x);
      stack.insert(stack.begin(), {b->x, b->ses});
      return ref_normalizes(stack, history, k);
    case BehTag::Out:
    case BehTag::In: {
      // Regions r(10 + l) belong to label l.
      if (stack.empty() || stack.front().label + 10 != b->x) return false;
      const Session& s = stack.front().ses;
      SesTag want = b->tag == BehTag::Out ? SesTag::Out : SesTag::In;
      if (s->tag != want || !equal(s->payload, b->payload)) return false;
      stack.front().ses = s->next;
      return ref_normalizes(stack, history, k);
    }
    default: return false;
  }
}

class FragmentGen {
 public:
  explicit FragmentGen(uint64_t seed) : rng_(seed) {}
  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  Type base() { return pick(0, 1) ? t_int() : t_bool(); }
  Session ses(int n) {
    if (n == 0) return s_end();
    return pick(0, 1) ? s_out(base(), ses(n - 1)) : s_in(base(), ses(n - 1));
  }
  Beh beh(int depth) {
    switch (depth <= 0 ? pick(2, 5) : pick(0, 5)) {
      case 0: return b_seq(beh(depth - 1), beh(depth - 1));
      case 1: return b_plus(beh(depth - 1), beh(depth - 1));
      case 2: return b_push(static_cast<uint32_t>(pick(1, 2)), ses(pick(0, 2)));
      case 3: return b_out(static_cast<uint32_t>(10 + pick(1, 2)), base());
      case 4: return b_in(static_cast<uint32_t>(10 + pick(1, 2)), base());
      default: return b_tau();
    }
  }
  // Opens l1 and l2 with matching usage, optionally interleaved wrongly.
  Beh protocol() {
    Session s1 = ses(pick(0, 3)), s2 = ses(pick(0, 3));
    std::vector<Beh> xs{b_push(1, s1)};
    auto use = [&](uint32_t rho, Session s) {
      for (; s->tag != SesTag::End; s = s->next)
        xs.push_back(s->tag == SesTag::Out ? b_out(rho, s->payload) : b_in(rho, s->payload));
    };
    bool nested = pick(0, 1);
    if (nested) {
      xs.push_back(b_push(2, s2));
      use(12, s2);
    }
    use(11, s1);
    if (!nested) {
      xs.push_back(b_push(2, s2));
      use(12, s2);
    }
    if (pick(0, 2) == 0) std::swap(xs[static_cast<size_t>(pick(0, static_cast<int>(xs.size()) - 1))], xs.back());
    Beh b = xs.back();
    for (size_t i = xs.size() - 1; i-- > 0;) b = b_seq(xs[i], b);
    return b;
  }

 private:
  std::mt19937_64 rng_;
};

TEST(ExplorerOracleTest, AgreesWithReferenceOnTheFirstOrderFragment) {
  ConstraintSet c = two_regions();
  FragmentGen g(99);
  int positives = 0, total = 0;
  for (int i = 0; i < 3000; ++i) {
    Beh b = i % 2 ? g.beh(4) : g.protocol();
    bool expected = ref_normalizes({}, {}, {b});
    Verdict v = Explorer(c).normalizes({}, b);
    ASSERT_FALSE(v.budget_exceeded);
    EXPECT_EQ(v.ok, expected) << show(b);
    positives += expected;
    ++total;
  }
  EXPECT_GT(positives, 300);
  EXPECT_LT(positives, total - 300);
}

}  // namespace
}  // namespace sessionml::testing
