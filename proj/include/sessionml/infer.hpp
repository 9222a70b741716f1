// Level 1: Algorithm W with behaviours and constraints.
#pragma once

#include <map>
#include <stdexcept>
#include <string>

#include "sessionml/core.hpp"
#include "sessionml/syntax.hpp"

namespace sessionml {

using TypeEnv = std::map<std::string, TypeSchema>;

struct InferenceResult {
  Substitution sigma;
  Type type;
  Beh beh;
  ConstraintSet c;
};

struct TypeError : std::runtime_error {
  Span span;
  TypeError(Span s, const std::string& msg) : std::runtime_error(msg), span(s) {}
};

// Infers type, behaviour and constraints. The supply is shared with later stages.
InferenceResult algW(const TypeEnv& env, const ExprP& e, Supply& supply);

std::pair<Type, ConstraintSet> instantiate(const TypeSchema& ts, Supply& supply);

// Quantifies the constraint components reachable from t that touch neither env nor b.
// Returns the schema and the residual constraints. Variables in `global` are never quantified.
std::pair<TypeSchema, ConstraintSet> generalize(const TypeEnv& env, const ConstraintSet& c, const Type& t,
                                                const Beh& b, const std::set<uint32_t>& global = {});

// Most general unifier; region equalities for ses types are added to c.
// Throws TypeError on a constructor clash or a failed occurs check.
Substitution unify(const Type& a, const Type& b, ConstraintSet& c);

// Free variables of a schema, excluding its quantified ones.
FreeVars free_vars(const TypeSchema& ts);

}  // namespace sessionml
