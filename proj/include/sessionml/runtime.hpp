// Small-step execution of process systems with a typed monitor over stacks and behaviours.
#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sessionml/abstract.hpp"
#include "sessionml/core.hpp"
#include "sessionml/syntax.hpp"

namespace sessionml {

struct Endpoint {
  uint64_t id = 0;
  bool dual = false;
  uint32_t label = 0;
  bool operator==(const Endpoint& o) const { return id == o.id && dual == o.dual; }
};

std::string show(const Endpoint& p);

// Typed process: concrete endpoints parallel to the abstract frames (top at [0]) and a set of
// candidate residual behaviours, each a continuation list whose back runs next.
struct Process {
  int pid = 0;
  ExprP expr;
  std::vector<Endpoint> endpoints;
  Stack stack;
  std::vector<std::vector<Beh>> residual;
  // Set once the process has no monitor state left or hit a dynamic error.
  bool unmonitored = false;
  std::string error;
};

struct Event {
  size_t step = 0;
  std::string rule;  // Beta, Spn, Init, Com, Del, Sel
  std::vector<int> pids;
  std::vector<Endpoint> endpoints;
  std::string payload;
};

std::string show(const Event& e);

struct SystemConfig {
  std::vector<Process> procs;
  uint64_t next_endpoint = 1;
  int next_pid = 1;
  size_t steps = 0;
};

// Builds the single initial process <eps, b, e>.
SystemConfig initial_config(const ExprP& program, const Beh& b);

struct MonitorViolation {
  Event event;
  std::string detail;
};

enum class Policy { Random, Fair };

class Machine {
 public:
  Machine(SystemConfig sys, const ConstraintSet& c, uint64_t seed, Policy policy = Policy::Random, bool typed = true);

  // Fires one enabled redex. Returns nullopt when the system is terminal.
  std::optional<Event> step();
  // True when some process can take a local step or a synchronisation is possible.
  bool can_step() const;
  bool can_communicate() const;

  const SystemConfig& system() const { return sys_; }
  const std::vector<MonitorViolation>& violations() const { return violations_; }
  // Dynamic errors such as applying a non-function or a primitive to a bad argument.
  const std::vector<std::string>& errors() const { return errors_; }

  // Runs only internal steps, up to budget.
  void run_internal(size_t budget);
  // Processes with a local redex.
  std::vector<int> locally_enabled() const;

 private:
  struct Action;
  SystemConfig sys_;
  const ConstraintSet& c_;
  Judge judge_;
  std::mt19937_64 rng_;
  Policy policy_;
  bool typed_;
  size_t cursor_ = 0;
  std::vector<MonitorViolation> violations_;
  std::vector<std::string> errors_;

  std::vector<Action> enabled(bool internal_only) const;
  Event fire(const Action& a);
};

// Well-stackedness: repeatedly remove dual top frames of two stacks until all are empty.
bool well_stacked(const SystemConfig& sys, const Judge& judge);

struct Classification {
  std::vector<int> finished, diverging, waiting, blocked, anomalous;
  // P ready with Q, and P waiting on Q.
  std::vector<std::pair<int, int>> ready, waits;
  // Members of B that do not transitively depend on D or W.
  std::vector<int> undepended;
  bool communication_possible = false;
};

Classification classify(Machine& m, size_t budget);

struct RunConfig {
  uint64_t seed = 0;
  size_t max_steps = 10000;
  size_t schedules = 1;
  bool fair = false;
  // Re-run normalizes on every process after each step.
  bool preservation = false;
  bool log = false;
  // Without types only the untyped semantics runs (used for rejected programs under --force).
  bool typed = true;
};

struct ScheduleResult {
  uint64_t seed = 0;
  size_t steps = 0;
  bool terminated = false;
  std::vector<MonitorViolation> violations;
  std::vector<std::string> errors;
  size_t wst_failures = 0;
  size_t preservation_failures = 0;
  std::vector<std::string> preservation_details;
  Classification final;
  bool lock_freedom_applies = false;
  bool lock_freedom_ok = true;
  std::vector<Event> trace;

  bool clean() const {
    return violations.empty() && errors.empty() && wst_failures == 0 && preservation_failures == 0 &&
           lock_freedom_ok && final.undepended.empty() && final.anomalous.empty();
  }
};

struct RunReport {
  std::vector<ScheduleResult> runs;
  size_t clean_runs() const;
  size_t violations() const;
};

RunReport run(const ExprP& program, const Beh& b, const ConstraintSet& c, const RunConfig& cfg);

}  // namespace sessionml
