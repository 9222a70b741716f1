// Staged analysis: parse, annotate, W, well-formedness, SI, D and a final constraint check.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sessionml/core.hpp"
#include "sessionml/syntax.hpp"

namespace sessionml {

struct Diagnostic {
  std::string severity;  // error, note
  std::string stage;     // parse, W, well-formed, SI, D, post-check, oracle
  std::string category;  // parse, ml-type, well-formedness, session, duality, internal
  std::string message;
  Span span;
};

struct ChannelSessions {
  std::string channel;
  std::string request, accept;  // canonical text
  Session request_ses, accept_ses;
};

struct Analysis {
  bool accepted = false;
  // Category and stage of the first failure; empty when accepted.
  std::string category, stage;
  std::vector<std::string> stages_run;
  std::vector<Diagnostic> diagnostics;

  ExprP program;  // annotated
  Type type;
  Beh beh;         // from W
  Beh final_beh;   // after session inference and duality
  ConstraintSet c_w;
  ConstraintSet c_final;
  std::vector<ChannelSessions> channels;
  std::map<uint32_t, std::string> label_sessions;
  size_t duality_rules = 0;

  struct Oracle {
    bool ran = false;
    bool agrees = false;
    bool budget_exceeded = false;
    size_t states = 0;
  } oracle;
};

struct PipelineOptions {
  bool all_stages = false;
  // Seed for the order in which D picks constraints; FIFO when empty.
  std::optional<uint64_t> duality_seed;
  // Runs the exhaustive explorer on the final behaviour.
  bool oracle = false;
};

Analysis analyze(const std::string& source, const PipelineOptions& opts = {});

// 0 accepted, 1 rejected, 2 internal error or budget exhaustion.
int exit_code(const Analysis& a);

nlohmann::json to_json(const Analysis& a, const std::string& file = "");
// Returns the list of schema problems; empty when the document is a valid report.
std::vector<std::string> validate_report(const nlohmann::json& j);

}  // namespace sessionml
