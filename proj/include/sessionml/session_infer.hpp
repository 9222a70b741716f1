// Level 2: session inference by symbolic execution of behaviours (algorithms SI and MC).
#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "sessionml/abstract.hpp"
#include "sessionml/core.hpp"

namespace sessionml {

struct InferenceFailure : std::runtime_error {
  std::string reason;  // short category, e.g. "linearity", "stack-principle", "unfinished", "shape"
  Span span;
  Stack stack;
  Beh focus;
  InferenceFailure(std::string reason, const std::string& msg, Span span = {}, Stack stack = {}, Beh focus = nullptr)
      : std::runtime_error(msg), reason(std::move(reason)), span(span), stack(std::move(stack)), focus(std::move(focus)) {}
};

// Global inference store: session-variable bindings, choice registers (kept in c.choices) and
// the growing constraint set. Substitutions are applied lazily through resolve().
class SessionStore {
 public:
  SessionStore(ConstraintSet c, Supply& supply) : c(std::move(c)), supply(supply) {}

  ConstraintSet c;
  Supply& supply;
  std::map<uint32_t, Session> psi;
  // Choice registers created by duality expansion; only these may be refined by D.
  std::set<uint32_t> flexible;

  // Follows bindings of plain session variables at the head.
  Session resolve(const Session& s) const;
  // Deep resolution; choice variables are replaced by their registers.
  Session full(const Session& s) const;
  // Deep resolution keeping choice variables.
  Session deep(const Session& s) const;
  void bind(uint32_t var, const Session& s);
  Session fresh_var() { return s_var(supply.fresh()); }
  Session new_register(const Session& choice);

  // Refines the store so that a <= b holds; throws InferenceFailure on a shape clash.
  void sub(const Session& a, const Session& b);

  // The accumulated substitution: every bound variable and every choice variable, fully resolved.
  Substitution substitution() const;
  // C with the substitution applied and choice constraints discharged.
  ConstraintSet resolved_constraints() const;

 private:
  void sub_choice(const Session& a, const Session& b);
};

void check_fresh(SessionStore& st, uint32_t label, Stack& s);
void close_top(SessionStore& st, Stack& s);
void finalize(SessionStore& st, Stack& s);

// Symbolic execution of <s, K[b]>; K is applied right to left (back is next).
void algMC(SessionStore& st, Stack s, Beh b, std::vector<Beh> k);

struct SIResult {
  Substitution sigma;
  ConstraintSet c;
};

// Runs MC from the empty stack and resolves choice variables. The store is left refined.
SIResult algSI(SessionStore& st, const Beh& b);
SIResult algSI(const Beh& b, const ConstraintSet& c, Supply& supply);

// Resolves every choice variable by its unique binding.
std::pair<Substitution, ConstraintSet> choice_var_subst(const ConstraintSet& c);

}  // namespace sessionml
