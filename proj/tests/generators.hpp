// Test generators and reference oracles.
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "sessionml/core.hpp"

namespace sessionml::testing {

struct GeneratedPair {
  Beh b;
  ConstraintSet c;
  Supply supply;
};

// Stacks of endpoints are opened with push(l, psi) and used through regions rho ~ l. Most
// actions target the top frame; a small fraction target a buried frame so that some
// behaviours are rejected.
GeneratedPair random_pair(std::mt19937_64& rng);

// Reference duality: exact payload and carried-session equality, every selected label offered
// as active.
bool reference_dual(const Session& a, const Session& b);

// Files under the samples directory.
std::vector<std::string> corpus_files();
std::vector<std::string> accepted_files();
std::string read_text(const std::string& path);

}  // namespace sessionml::testing
