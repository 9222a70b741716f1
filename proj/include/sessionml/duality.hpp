// Algorithm D: duality constraints between the two endpoints of every channel.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sessionml/session_infer.hpp"

namespace sessionml {

struct DualityFailure : std::runtime_error {
  std::string channel;
  DualityFailure(std::string ch, const std::string& msg) : std::runtime_error(msg), channel(std::move(ch)) {}
};

struct ChannelReport {
  std::string channel;
  Session request;  // c
  Session accept;   // ~c
};

struct DResult {
  std::vector<ChannelReport> channels;
  size_t rule_applications = 0;
};

// Simplifies the duality constraints of every channel against the store. With a seed, the
// next constraint is drawn at random instead of first-in first-out.
DResult algD(SessionStore& st, std::optional<uint64_t> seed = std::nullopt);

// Instantiates the variable side of var |><| other to the mirror shape of other's head and
// returns the residual duality constraints.
std::vector<std::pair<Session, Session>> expand(SessionStore& st, const Session& var, const Session& other);

// Replaces type variables by a ground type reachable through inclusions, when one exists.
Session ground_payloads(const Session& s, const ConstraintSet& c);

// Prints a session with variables renamed in order of first appearance.
std::string canonical(const std::vector<Session>& sessions);

}  // namespace sessionml
