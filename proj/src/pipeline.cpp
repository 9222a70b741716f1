#include "sessionml/pipeline.hpp"

#include <functional>
#include <sstream>

#include "sessionml/abstract.hpp"
#include "sessionml/duality.hpp"
#include "sessionml/infer.hpp"
#include "sessionml/session_infer.hpp"

namespace sessionml {

namespace {

void collect_pushes(const Beh& b, std::map<uint32_t, Session>& out) {
  if (!b) return;
  if (b->tag == BehTag::Push) out.emplace(b->x, b->ses);
  collect_pushes(b->a, out);
  collect_pushes(b->b, out);
  for (auto& [l, x] : b->branches) collect_pushes(x, out);
}

std::vector<std::string> split_lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string line; std::getline(is, line);) out.push_back(line);
  return out;
}

}  // namespace

Analysis analyze(const std::string& source, const PipelineOptions& opts) {
  Analysis a;
  auto fail = [&](const std::string& stage, const std::string& category, const std::string& msg, Span span = {}) {
    a.diagnostics.push_back({"error", stage, category, msg, span});
    if (a.category.empty()) {
      a.category = category;
      a.stage = stage;
    }
  };

  a.stages_run.push_back("parse");
  try {
    a.program = annotate(parse_program(source));
  } catch (const SyntaxError& e) {
    std::string msg = e.what();
    std::string prefix = to_string(e.span) + ": ";
    if (msg.rfind(prefix, 0) == 0) msg = msg.substr(prefix.size());
    fail("parse", "parse", msg, e.span);
    return a;
  }

  Supply supply;
  a.stages_run.push_back("W");
  try {
    InferenceResult w = algW({}, a.program, supply);
    a.type = w.type;
    a.beh = w.beh;
    a.c_w = w.c;
  } catch (const TypeError& e) {
    fail("W", "ml-type", e.what(), e.span);
    return a;
  }

  a.stages_run.push_back("well-formed");
  for (auto& v : well_formed(a.c_w)) {
    std::string cat = v.condition == "Type-Consistent" ? "ml-type" : "well-formedness";
    fail("well-formed", cat, v.condition + ": " + v.witness);
  }
  if (!a.category.empty() && !opts.all_stages) return a;

  SessionStore st(a.c_w, supply);
  bool session_ok = true;
  a.stages_run.push_back("SI");
  try {
    algMC(st, Stack{}, a.beh, {});
  } catch (const InferenceFailure& e) {
    session_ok = false;
    fail("SI", e.reason == "internal" ? "internal" : "session", e.what(), e.span);
    if (!opts.all_stages) return a;
  }

  if (session_ok) {
    a.stages_run.push_back("D");
    try {
      DResult d = algD(st, opts.duality_seed);
      a.duality_rules = d.rule_applications;
      ConstraintSet c_final = st.resolved_constraints();
      std::vector<Session> all;
      for (auto& ch : d.channels) {
        all.push_back(ground_payloads(ch.request, c_final));
        all.push_back(ground_payloads(ch.accept, c_final));
      }
      auto lines = split_lines(canonical(all));
      for (size_t i = 0; i < d.channels.size(); ++i)
        a.channels.push_back({d.channels[i].channel, lines[2 * i], lines[2 * i + 1], d.channels[i].request,
                              d.channels[i].accept});
    } catch (const DualityFailure& e) {
      fail("D", "duality", e.what());
      if (!opts.all_stages) return a;
    } catch (const InferenceFailure& e) {
      fail("D", "duality", e.what());
      if (!opts.all_stages) return a;
    }

    a.c_final = st.resolved_constraints();
    a.final_beh = map_beh(a.beh, st.substitution().mapper());

    a.stages_run.push_back("post-check");
    for (auto& v : well_formed(a.c_final))
      if (v.condition == "Type-Consistent" || v.condition == "Well-Confined")
        fail("post-check", "duality", v.condition + ": " + v.witness);

    std::map<uint32_t, Session> pushes;
    collect_pushes(a.final_beh, pushes);
    for (auto& [beta, bs] : a.c_final.bindings)
      for (auto& b : bs) collect_pushes(b, pushes);
    for (auto& [l, s] : pushes) a.label_sessions[l] = show(ground_payloads(s, a.c_final));
  }

  if (opts.oracle && a.final_beh) {
    a.stages_run.push_back("oracle");
    Explorer ex(a.c_final);
    Verdict v = ex.normalizes(Stack{}, a.final_beh);
    a.oracle.ran = true;
    a.oracle.agrees = v.ok == a.category.empty();
    a.oracle.budget_exceeded = v.budget_exceeded;
    a.oracle.states = v.states;
    if (v.budget_exceeded) fail("oracle", "internal", "explorer budget exhausted after " + std::to_string(v.states) + " states");
    else if (!a.oracle.agrees)
      a.diagnostics.push_back({"error", "oracle", "internal", "explorer disagrees: " + v.detail, {}});
  }

  a.accepted = a.category.empty();
  return a;
}

int exit_code(const Analysis& a) {
  if (a.accepted) return 0;
  return a.category == "internal" ? 2 : 1;
}

nlohmann::json to_json(const Analysis& a, const std::string& file) {
  using nlohmann::json;
  json j;
  j["file"] = file;
  j["verdict"] = a.accepted ? "accepted" : "rejected";
  j["category"] = a.accepted ? json(nullptr) : json(a.category);
  j["stage"] = a.accepted ? json(nullptr) : json(a.stage);
  j["stages"] = a.stages_run;
  j["type"] = a.type ? json(show(a.type)) : json(nullptr);
  j["behaviour"] = a.final_beh ? json(show_simplified(a.final_beh)) : a.beh ? json(show_simplified(a.beh)) : json(nullptr);
  j["channels"] = json::array();
  for (auto& ch : a.channels) j["channels"].push_back({{"name", ch.channel}, {"request", ch.request}, {"accept", ch.accept}});
  j["labels"] = json::array();
  for (auto& [l, s] : a.label_sessions) j["labels"].push_back({{"label", "l" + std::to_string(l)}, {"session", s}});
  j["diagnostics"] = json::array();
  for (auto& d : a.diagnostics)
    j["diagnostics"].push_back({{"severity", d.severity},
                                {"stage", d.stage},
                                {"category", d.category},
                                {"message", d.message},
                                {"line", d.span.line},
                                {"col", d.span.col}});
  if (a.oracle.ran)
    j["oracle"] = {{"agrees", a.oracle.agrees}, {"budget_exceeded", a.oracle.budget_exceeded}, {"states", a.oracle.states}};
  else
    j["oracle"] = nullptr;
  return j;
}

std::vector<std::string> validate_report(const nlohmann::json& j) {
  std::vector<std::string> errs;
  auto need = [&](const nlohmann::json& o, const std::string& key, const std::function<bool(const nlohmann::json&)>& ok,
                  const std::string& what) {
    if (!o.is_object() || !o.contains(key)) return errs.push_back("missing " + key), false;
    if (!ok(o.at(key))) return errs.push_back(key + " must be " + what), false;
    return true;
  };
  auto str = [](const nlohmann::json& x) { return x.is_string(); };
  auto str_or_null = [](const nlohmann::json& x) { return x.is_string() || x.is_null(); };
  auto arr = [](const nlohmann::json& x) { return x.is_array(); };
  static const std::set<std::string> categories = {"parse", "ml-type", "well-formedness", "session", "duality", "internal"};
  if (!j.is_object()) return {"report must be an object"};
  need(j, "file", str, "a string");
  if (need(j, "verdict", str, "a string") && j["verdict"] != "accepted" && j["verdict"] != "rejected")
    errs.push_back("verdict must be accepted or rejected");
  if (need(j, "category", str_or_null, "a string or null") && j["category"].is_string() &&
      !categories.count(j["category"].get<std::string>()))
    errs.push_back("unknown category");
  if (j.contains("verdict") && j.contains("category") && (j["verdict"] == "accepted") != j["category"].is_null())
    errs.push_back("category must be null exactly when accepted");
  need(j, "stage", str_or_null, "a string or null");
  if (need(j, "stages", arr, "an array"))
    for (auto& s : j["stages"])
      if (!s.is_string()) errs.push_back("stages entries must be strings");
  need(j, "type", str_or_null, "a string or null");
  need(j, "behaviour", str_or_null, "a string or null");
  if (need(j, "channels", arr, "an array"))
    for (auto& c : j["channels"]) {
      need(c, "name", str, "a string");
      need(c, "request", str, "a string");
      need(c, "accept", str, "a string");
    }
  if (need(j, "labels", arr, "an array"))
    for (auto& l : j["labels"]) {
      need(l, "label", str, "a string");
      need(l, "session", str, "a string");
    }
  if (need(j, "diagnostics", arr, "an array"))
    for (auto& d : j["diagnostics"]) {
      if (need(d, "severity", str, "a string") && d["severity"] != "error" && d["severity"] != "note")
        errs.push_back("severity must be error or note");
      need(d, "stage", str, "a string");
      need(d, "category", str, "a string");
      need(d, "message", str, "a string");
      need(d, "line", [](const nlohmann::json& x) { return x.is_number_integer(); }, "an integer");
      need(d, "col", [](const nlohmann::json& x) { return x.is_number_integer(); }, "an integer");
      if (j.value("verdict", "") == "accepted" && d.value("severity", "") == "error")
        errs.push_back("accepted reports carry no error diagnostics");
    }
  if (need(j, "oracle", [](const nlohmann::json& x) { return x.is_null() || x.is_object(); }, "an object or null") &&
      j["oracle"].is_object()) {
    need(j["oracle"], "agrees", [](const nlohmann::json& x) { return x.is_boolean(); }, "a boolean");
    need(j["oracle"], "budget_exceeded", [](const nlohmann::json& x) { return x.is_boolean(); }, "a boolean");
    need(j["oracle"], "states", [](const nlohmann::json& x) { return x.is_number_unsigned(); }, "an unsigned integer");
  }
  return errs;
}

}  // namespace sessionml
