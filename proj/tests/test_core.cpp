#include "sessionml/core.hpp"

#include <gtest/gtest.h>

#include <random>
#include <string>

#include "generators.hpp"

namespace sessionml::testing {
namespace {

bool has_condition(const std::vector<Violation>& vs, const std::string& cond) {
  for (auto& v : vs)
    if (v.condition == cond) return true;
  return false;
}

TEST(PrintTest, CanonicalSessionSyntax) {
  EXPECT_EQ(show(s_out(t_int(), s_in(t_bool(), s_end()))), "!int.?bool.end");
  EXPECT_EQ(show(s_internal({{"A", s_end()}, {"B", s_out(t_unit(), s_end())}})), "+{A: end, B: !unit.end}");
  EXPECT_EQ(show(s_external({"A"}, {{"A", s_end()}, {"B", s_end()}})), "&{A!: end, B?: end}");
  EXPECT_EQ(show(s_deleg(s_var(3), s_resume(s_end(), s_end()))), "!<psi3>.?<end>.end");
}

TEST(PrintTest, BehavioursAndTypes) {
  Beh b = b_seq(b_push(1, s_var(2)), b_seq(b_out(3, t_int()), b_tau()));
  EXPECT_EQ(show(b), "push(l1, psi2); r3!int; tau");
  EXPECT_EQ(show_simplified(b), "push(l1, psi2); r3!int");
  EXPECT_EQ(show(b_rec(4, b_plus(b_tau(), b_var(4)))), "rec b4.(tau + b4)");
  EXPECT_EQ(show(t_fun(t_int(), t_pair(t_bool(), t_ses(3)), 7)), "(int -b7-> (bool * ses r3))");
}

TEST(EqualityTest, HashConsistentWithStructure) {
  Session a = s_out(t_pair(t_int(), t_bool()), s_internal({{"X", s_end()}}));
  Session b = s_out(t_pair(t_int(), t_bool()), s_internal({{"X", s_end()}}));
  EXPECT_TRUE(equal(a, b));
  EXPECT_EQ(a->hash, b->hash);
  EXPECT_FALSE(equal(a, s_out(t_pair(t_bool(), t_int()), s_internal({{"X", s_end()}}))));
  // Spans are diagnostic only.
  EXPECT_TRUE(equal(b_out(1, t_int(), {3, 4}), b_out(1, t_int(), {9, 9})));
}

TEST(RegionClosureTest, TransitiveAndLabelled) {
  ConstraintSet c;
  c.add_region(rvar(1), rlabel(7));
  c.add_region(rvar(2), rvar(1));
  RegionClosure rc(c);
  EXPECT_TRUE(rc.same(rvar(2), rlabel(7)));
  EXPECT_EQ(rc.label_of(2), std::optional<uint32_t>(7));
  EXPECT_FALSE(rc.same(rvar(3), rlabel(7)));
  EXPECT_TRUE(well_formed(c).empty());
}

TEST(WellFormedTest, RegionFromTwoSourcesIsInconsistent) {
  ConstraintSet c;
  c.add_region(rvar(1), rlabel(1));
  c.add_region(rvar(1), rlabel(2));
  EXPECT_TRUE(has_condition(well_formed(c), "Region-Consistent"));
}

TEST(WellFormedTest, ConstructorClashThroughAVariable) {
  ConstraintSet c;
  c.add_incl(t_int(), t_var(1));
  c.add_incl(t_var(1), t_bool());
  EXPECT_TRUE(has_condition(well_formed(c), "Type-Consistent"));
}

TEST(WellFormedTest, CycleWithoutRecIsNotCompact) {
  ConstraintSet c;
  c.add_binding(b_seq(b_tau(), b_var(2)), 1);
  c.add_binding(b_var(1), 2);
  EXPECT_TRUE(has_condition(well_formed(c), "Behaviour-Compact"));

  ConstraintSet ok;
  ok.add_binding(b_rec(1, b_plus(b_tau(), b_var(1))), 1);
  EXPECT_TRUE(well_formed(ok).empty());
}

TEST(WellFormedTest, ConfinedFunctionMustNotCarryEndpoints) {
  ConstraintSet c;
  c.type_cf.push_back(t_fun(t_ses(1), t_unit(), 2));
  EXPECT_TRUE(has_condition(well_formed(c), "Well-Confined"));

  ConstraintSet d;
  d.beh_cf.push_back(b_var(3));
  d.add_binding(b_out(1, t_int()), 3);
  EXPECT_TRUE(has_condition(well_formed(d), "Well-Confined"));

  ConstraintSet e;
  e.add_binding(b_out(1, t_int()), 3);
  EXPECT_FALSE(confined_behaviour(e, b_var(3)));
  EXPECT_TRUE(confined_behaviour(e, b_seq(b_tau(), b_spawn(b_tau()))));
}

TEST(TypeClosureTest, DerivesThroughChainsAndPairs) {
  ConstraintSet c;
  c.add_incl(t_int(), t_var(1));
  c.add_incl(t_var(1), t_var(2));
  EXPECT_TRUE(derives_type(c, t_int(), t_var(2)));
  EXPECT_FALSE(derives_type(c, t_var(2), t_int()));
  TypeClosure tc(c);
  ASSERT_TRUE(tc.ground_of(t_var(2)).has_value());
  EXPECT_TRUE(equal(*tc.ground_of(t_var(2)), t_int()));
}

TEST(SubtypeTest, ChoiceWidth) {
  ConstraintSet c;
  Session more = s_internal({{"A", s_end()}, {"B", s_end()}});
  Session fewer = s_internal({{"A", s_end()}});
  EXPECT_TRUE(session_subtype(c, more, fewer));
  EXPECT_FALSE(session_subtype(c, fewer, more));
  Session narrow = s_external({"A"}, {{"A", s_end()}});
  Session wide = s_external({"A"}, {{"A", s_end()}, {"B", s_end()}});
  // Offering more labels refines offering fewer.
  EXPECT_TRUE(session_subtype(c, wide, narrow));
  EXPECT_FALSE(session_subtype(c, narrow, wide));
}

class SessionGen {
 public:
  explicit SessionGen(uint64_t seed) : rng_(seed) {}

  Session any(int depth, bool choices = true) {
    int hi = depth <= 0 ? 0 : (choices ? 6 : 4);
    switch (pick(0, hi)) {
      case 0: return s_end();
      case 1: return s_out(base(), any(depth - 1, choices));
      case 2: return s_in(base(), any(depth - 1, choices));
      case 3: return s_deleg(any(depth - 2, false), any(depth - 1, choices));
      case 4: return s_resume(any(depth - 2, false), any(depth - 1, choices));
      case 5: return s_internal(branches(depth));
      default: {
        auto br = branches(depth);
        std::set<std::string> active;
        for (auto& [k, v] : br)
          if (pick(0, 3)) active.insert(k);
        return s_external(active, br);
      }
    }
  }

  // A structurally mirrored partner with all external labels active.
  Session partner(const Session& s) {
    switch (s->tag) {
      case SesTag::End: return s_end();
      case SesTag::Out: return s_in(s->payload, partner(s->next));
      case SesTag::In: return s_out(s->payload, partner(s->next));
      case SesTag::Deleg: return s_resume(s->carried, partner(s->next));
      case SesTag::Resume: return s_deleg(s->carried, partner(s->next));
      case SesTag::Internal: {
        std::map<std::string, Session> br;
        std::set<std::string> active;
        for (auto& [k, v] : s->branches) br[k] = partner(v), active.insert(k);
        return s_external(active, br);
      }
      default: {
        std::map<std::string, Session> br;
        for (auto& [k, v] : s->branches)
          if (s->active.count(k) || pick(0, 1)) br[k] = partner(v);
        if (br.empty()) br = {{s->branches.begin()->first, partner(s->branches.begin()->second)}};
        return s_internal(br);
      }
    }
  }

  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

 private:
  std::mt19937_64 rng_;
  Type base() {
    switch (pick(0, 2)) {
      case 0: return t_int();
      case 1: return t_bool();
      default: return t_unit();
    }
  }
  std::map<std::string, Session> branches(int depth) {
    std::map<std::string, Session> br;
    for (const char* k : {"A", "B", "C"})
      if (br.empty() || pick(0, 1)) br[k] = any(depth - 1);
    return br;
  }
};

TEST(DualityOracleTest, AgreesWithReferenceOnMirroredAndRandomPairs) {
  SessionGen g(7);
  ConstraintSet c;
  int positives = 0;
  for (int i = 0; i < 2000; ++i) {
    Session a = g.any(5);
    Session b = g.pick(0, 1) ? g.partner(a) : g.any(5);
    bool expected = reference_dual(a, b);
    positives += expected;
    EXPECT_EQ(dual(c, a, b), expected) << show(a) << " vs " << show(b);
    EXPECT_EQ(dual(c, b, a), expected) << show(b) << " vs " << show(a);
  }
  EXPECT_GT(positives, 500);
}

TEST(DualityOracleTest, MirrorIsDualAndInvolutive) {
  SessionGen g(11);
  ConstraintSet c;
  for (int i = 0; i < 500; ++i) {
    Session a = g.any(5);
    EXPECT_TRUE(dual(c, a, mirror(a))) << show(a);
    EXPECT_TRUE(reference_dual(a, mirror(a))) << show(a);
  }
}

}  // namespace
}  // namespace sessionml::testing
