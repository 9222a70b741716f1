#include "sessionml/infer.hpp"

#include <gtest/gtest.h>

#include <random>
#include <string>

namespace sessionml::testing {
namespace {

InferenceResult infer(const std::string& src) {
  Supply supply;
  return algW({}, annotate(parse_program(src)), supply);
}

bool has_incl(const ConstraintSet& c, const std::string& text) {
  for (auto& l : show_lines(c))
    if (l == text) return true;
  return false;
}

TEST(AlgWTest, ArithmeticAndPairs) {
  EXPECT_EQ(show(infer("1 + 2").type), "int");
  EXPECT_EQ(show(infer("(1 < 2, ())").type), "(bool * unit)");
}

TEST(AlgWTest, IdentityIsPolymorphicUnderLet) {
  InferenceResult r = infer("let val id = fn x => x in (id 1, id true)");
  EXPECT_EQ(show(r.type), "(int * bool)");
}

TEST(AlgWTest, LambdaBoundVariablesAreMonomorphic) {
  EXPECT_THROW(infer("fn id => (id 1, id true)"), TypeError);
}

TEST(AlgWTest, ConditionMustBeBoolean) {
  try {
    infer("if 1 then 2 else 3");
    FAIL() << "expected a type error";
  } catch (const TypeError& e) {
    EXPECT_EQ(e.span.line, 1);
    EXPECT_EQ(e.span.col, 4);
  }
}

TEST(AlgWTest, OccursCheckRejectsSelfApplication) { EXPECT_THROW(infer("fn f => f f"), TypeError); }

TEST(AlgWTest, SessionOperationsProduceBehaviourAndRegions) {
  InferenceResult r = infer("let val p = request c () in send p 1; recv p");
  std::string b = show_simplified(r.beh);
  EXPECT_EQ(std::count(b.begin(), b.end(), ';'), 2) << b;
  EXPECT_TRUE(has_incl(r.c, "int cf"));
  EXPECT_EQ(r.c.chan.count("c"), 1u);
  EXPECT_EQ(r.c.cochan.count("c"), 1u);
  // Both endpoint uses trace back to the single request label.
  RegionClosure rc(r.c);
  int uses = 0;
  for (auto& [beta, bs] : r.c.bindings)
    for (auto& x : bs)
      if (x->tag == BehTag::Out || x->tag == BehTag::In) {
        ++uses;
        EXPECT_EQ(rc.label_of(x->x), std::optional<uint32_t>(1));
      }
  EXPECT_EQ(uses, 2);
}

TEST(AlgWTest, RecursiveFunctionsAreConfined) {
  InferenceResult r = infer("let fun f(x) = f x in f");
  EXPECT_EQ(r.c.type_cf.size(), 2u);
  bool rec = false;
  for (auto& [beta, bs] : r.c.bindings)
    for (auto& x : bs) rec = rec || x->tag == BehTag::Rec;
  EXPECT_TRUE(rec);
}

TEST(AlgWTest, SpawnRequiresAFunctionOfUnit) {
  EXPECT_EQ(show(infer("spawn (fn _ => ())").type), "unit");
  EXPECT_THROW(infer("spawn 1"), TypeError);
  EXPECT_THROW(infer("spawn (fn x => x + 1)"), TypeError);
}

TEST(UnifyTest, ComposesAndAddsRegionEqualities) {
  ConstraintSet c;
  Substitution s = unify(t_pair(t_var(1), t_ses(5)), t_pair(t_int(), t_ses(6)), c);
  ASSERT_EQ(s.alpha.count(1), 1u);
  EXPECT_TRUE(equal(s.alpha.at(1), t_int()));
  RegionClosure rc(c);
  EXPECT_TRUE(rc.same(rvar(5), rvar(6)));
}

TEST(UnifyTest, BehaviourVariablesOfArrowsAreIdentified) {
  ConstraintSet c;
  Substitution s = unify(t_fun(t_var(1), t_var(2), 3), t_fun(t_var(2), t_bool(), 4), c);
  Type lhs = map_type(t_fun(t_var(1), t_var(2), 3), s.mapper());
  Type rhs = map_type(t_fun(t_var(2), t_bool(), 4), s.mapper());
  EXPECT_TRUE(equal(lhs, rhs)) << show(lhs) << " vs " << show(rhs);
}

TEST(UnifyTest, OccursCheckAndClash) {
  ConstraintSet c;
  EXPECT_THROW(unify(t_var(1), t_pair(t_var(1), t_int()), c), TypeError);
  EXPECT_THROW(unify(t_int(), t_bool(), c), TypeError);
}

// Builds an expression of a chosen simple type; the generated term is well-typed by
// construction, so inference must reproduce that type.
class TypedGen {
 public:
  explicit TypedGen(uint64_t seed) : rng_(seed) {}

  std::string expr(const std::string& ty, int depth) {
    int r = depth <= 0 ? 0 : pick(0, 4);
    if (r == 1) return "(if " + expr("bool", depth - 1) + " then " + expr(ty, depth - 1) + " else " + expr(ty, depth - 1) + ")";
    if (r == 2) {
      std::string x = "v" + std::to_string(next_++);
      return "(let val " + x + " = " + expr("int", depth - 1) + " in " + expr(ty, depth - 1) + ")";
    }
    if (r == 3) return "((fn z" + std::to_string(next_++) + " => " + expr(ty, depth - 1) + ") ())";
    if (ty == "int") return r == 4 ? "(" + expr("int", depth - 1) + " + " + expr("int", depth - 1) + ")" : std::to_string(pick(0, 9));
    if (ty == "bool") return r == 4 ? "(" + expr("int", depth - 1) + " < " + expr("int", depth - 1) + ")" : (pick(0, 1) ? "true" : "false");
    if (ty == "unit") return "()";
    // Pair types are written "a*b" with base components.
    auto star = ty.find('*');
    return "(" + expr(ty.substr(0, star), depth - 1) + ", " + expr(ty.substr(star + 1), depth - 1) + ")";
  }

  std::string type() {
    static const char* tys[] = {"int", "bool", "unit", "int*bool", "bool*unit"};
    return tys[pick(0, 4)];
  }

  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

 private:
  std::mt19937_64 rng_;
  int next_ = 0;
};

std::string printed(const std::string& ty) {
  auto star = ty.find('*');
  if (star == std::string::npos) return ty;
  return "(" + ty.substr(0, star) + " * " + ty.substr(star + 1) + ")";
}

TEST(AlgWProperty, WellTypedByConstructionTermsGetTheirType) {
  TypedGen g(42);
  for (int i = 0; i < 300; ++i) {
    std::string ty = g.type();
    std::string src = g.expr(ty, 4);
    InferenceResult r = infer(src);
    EXPECT_EQ(show(r.type), printed(ty)) << src;
  }
}

}  // namespace
}  // namespace sessionml::testing
