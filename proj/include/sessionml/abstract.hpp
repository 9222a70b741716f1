// Abstract interpretation of behaviours over endpoint stacks, ground translation and size.
#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "sessionml/core.hpp"

namespace sessionml {

struct Frame {
  uint32_t label = 0;
  Session ses;
};

// frames[0] is the top. history holds every label ever pushed.
struct Stack {
  std::vector<Frame> frames;
  std::set<uint32_t> history;

  bool empty() const { return frames.empty(); }
  Stack push(uint32_t label, Session s) const;
};

bool operator==(const Stack& x, const Stack& y);
std::string show(const Stack& s);

struct Transition {
  std::string rule;
  Stack stack;
  Beh beh;
};

struct Verdict {
  bool ok = false;
  bool budget_exceeded = false;
  // Stuck or wrong-terminal configuration and the path leading to it.
  Stack stuck_stack;
  Beh stuck_beh;
  std::vector<Transition> path;
  std::string detail;
  size_t states = 0;
};

// State cap, overridable through SESSIONML_BUDGET.
size_t default_budget();

class Explorer {
 public:
  explicit Explorer(const ConstraintSet& c, size_t budget = default_budget());

  std::vector<Transition> step(const Stack& s, const Beh& b);
  Verdict normalizes(const Stack& s, const Beh& b);

  // When set, every transition is checked to strictly decrease bsize.
  bool ground_mode = false;
  size_t size_checks = 0;
  size_t size_violations = 0;
  size_t states_visited = 0;

  // One maximal path, with the premises of Rec and Spn expanded and indented.
  std::vector<std::string> trace(const Stack& s, const Beh& b);

  const std::vector<Beh>& bindings(uint32_t beta) const;

 private:
  const ConstraintSet& c_;
  Judge judge_;
  size_t budget_;
  bool exhausted_ = false;
  std::set<uint32_t> override_;  // betas temporarily bound to tau only
  struct Key {
    std::set<uint32_t> override;
    Stack stack;
    Beh beh;
  };
  struct KeyHash {
    size_t operator()(const Key& k) const;
  };
  struct KeyEq {
    bool operator()(const Key& a, const Key& b) const;
  };
  std::unordered_map<Key, bool, KeyHash, KeyEq> memo_;
  std::unordered_map<Key, bool, KeyHash, KeyEq> on_path_;
  std::string last_detail_;

  bool region_matches(uint32_t rho, uint32_t label) const;
  bool premise(const Beh& b, const std::set<uint32_t>& override, std::string& why);
  void steps_of(const Stack& s, const Beh& b, std::vector<Transition>& out);
  bool explore(const Stack& s, const Beh& b, std::vector<Transition>& path, Verdict& v);
  void trace_rec(const Stack& s, const Beh& b, int depth, std::vector<std::string>& out);
};

// Replaces behaviour variables by the internal choice of their bindings.
Beh ground(const Beh& b, const ConstraintSet& c);
size_t bsize(const Beh& b);
size_t bsize(const Stack& s, const Beh& b);

}  // namespace sessionml
