// Command-line driver: infer, check, run and trace.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "sessionml/abstract.hpp"
#include "sessionml/pipeline.hpp"
#include "sessionml/runtime.hpp"

using namespace sessionml;

namespace {

bool read_file(const std::string& path, std::string& out) {
  std::ifstream in(path);
  if (!in) return false;
  std::stringstream ss;
  ss << in.rdbuf();
  out = ss.str();
  return true;
}

void print_text(const Analysis& a) {
  if (a.accepted) {
    std::cout << "accepted\n";
  } else {
    std::cout << "rejected (" << a.category << ", stage " << a.stage << ")\n";
  }
  for (auto& ch : a.channels) {
    std::cout << ch.channel << " : " << ch.request << "\n";
    std::cout << "~" << ch.channel << " : " << ch.accept << "\n";
  }
  for (auto& d : a.diagnostics) {
    std::cout << d.severity << " [" << d.stage << "/" << d.category << "]";
    if (d.span.line) std::cout << " " << d.span.line << ":" << d.span.col;
    std::cout << ": " << d.message << "\n";
  }
  if (a.oracle.ran) std::cout << "oracle " << (a.oracle.agrees ? "agrees" : "disagrees") << " (" << a.oracle.states << " states)\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Session type inference and simulation for a core ML with sessions"};
  app.require_subcommand(1);

  std::string path;
  bool json = false, all_stages = false, force = false, fair = false, show_beh = false, log = false, preserve = false;
  uint64_t seed = 0;
  size_t max_steps = 10000, schedules = 1;

  auto* infer = app.add_subcommand("infer", "Infer channel session types");
  auto* check = app.add_subcommand("check", "Infer and confirm with the exhaustive explorer");
  auto* run = app.add_subcommand("run", "Execute under the typed monitor");
  auto* trace = app.add_subcommand("trace", "Print one abstract execution path of the inferred behaviour");
  for (auto* sc : {infer, check, run, trace}) {
    sc->add_option("file", path, "Source file (.lml)")->required();
    sc->add_flag("--json", json, "Emit the structured report");
    sc->add_flag("--all-stages", all_stages, "Continue past the first failing stage where possible");
  }
  run->add_flag("--force", force, "Run even if the program is rejected (untyped)");
  run->add_option("--seed", seed, "First scheduler seed");
  run->add_option("--max-steps", max_steps, "Step bound per schedule");
  run->add_option("--schedules", schedules, "Number of seeded schedules");
  run->add_flag("--fair", fair, "Round-robin scheduling instead of random");
  run->add_flag("--log", log, "Print the event log of every schedule");
  run->add_flag("--preservation", preserve, "Re-check normalization of every process after each step");
  trace->add_flag("--behaviour", show_beh, "Print the traced behaviour first");

  CLI11_PARSE(app, argc, argv);

  std::string source;
  if (!read_file(path, source)) {
    std::cerr << "cannot read " << path << "\n";
    return 2;
  }
  PipelineOptions opts;
  opts.all_stages = all_stages;
  opts.oracle = check->parsed();
  Analysis a = analyze(source, opts);

  if (infer->parsed() || check->parsed()) {
    if (json) std::cout << to_json(a, path).dump(2) << "\n";
    else print_text(a);
    return exit_code(a);
  }

  if (trace->parsed()) {
    int code = a.final_beh ? exit_code(a) : exit_code(a) ? exit_code(a) : 2;
    std::vector<std::string> lines;
    if (a.final_beh) lines = Explorer(a.c_final).trace(Stack{}, a.final_beh);
    if (json) {
      nlohmann::json j = to_json(a, path);
      j["trace"] = lines;
      std::cout << j.dump(2) << "\n";
      return code;
    }
    if (!a.final_beh) {
      print_text(a);
      return code;
    }
    if (show_beh) std::cout << "behaviour: " << show_simplified(a.final_beh) << "\n";
    for (auto& line : lines) std::cout << line << "\n";
    return code;
  }

  // run
  if (!a.accepted && !force) {
    print_text(a);
    std::cerr << "refusing to run a rejected program (use --force)\n";
    return exit_code(a);
  }
  if (!a.program) return exit_code(a);
  RunConfig cfg;
  cfg.seed = seed;
  cfg.max_steps = max_steps;
  cfg.schedules = schedules;
  cfg.fair = fair;
  cfg.log = log;
  cfg.preservation = preserve;
  cfg.typed = a.accepted;
  Beh b = a.final_beh ? a.final_beh : b_tau();
  RunReport rep = sessionml::run(a.program, b, a.c_final, cfg);

  size_t violations = rep.violations();
  if (json) {
    nlohmann::json j;
    j["analysis"] = to_json(a, path);
    j["schedules"] = rep.runs.size();
    j["clean"] = rep.clean_runs();
    j["violations"] = violations;
    j["runs"] = nlohmann::json::array();
    for (auto& r : rep.runs) {
      nlohmann::json rj{{"seed", r.seed},
                        {"steps", r.steps},
                        {"terminated", r.terminated},
                        {"clean", r.clean()},
                        {"wst_failures", r.wst_failures},
                        {"preservation_failures", r.preservation_failures},
                        {"finished", r.final.finished},
                        {"diverging", r.final.diverging},
                        {"waiting", r.final.waiting},
                        {"blocked", r.final.blocked},
                        {"anomalous", r.final.anomalous},
                        {"lock_freedom_applies", r.lock_freedom_applies},
                        {"lock_freedom_ok", r.lock_freedom_ok}};
      rj["violations"] = nlohmann::json::array();
      for (auto& v : r.violations) rj["violations"].push_back(show(v.event) + ": " + v.detail);
      rj["errors"] = r.errors;
      if (log) {
        rj["trace"] = nlohmann::json::array();
        for (auto& e : r.trace) rj["trace"].push_back(show(e));
      }
      j["runs"].push_back(rj);
    }
    std::cout << j.dump(2) << "\n";
  } else {
    for (auto& r : rep.runs) {
      if (log)
        for (auto& e : r.trace) std::cout << show(e) << "\n";
      std::cout << "seed " << r.seed << ": " << (r.clean() ? "clean" : "FAILED") << ", " << r.steps << " steps, "
                << (r.terminated ? "terminal" : "step bound reached") << ", F=" << r.final.finished.size()
                << " D?=" << r.final.diverging.size() << " W=" << r.final.waiting.size()
                << " B=" << r.final.blocked.size() << "\n";
      for (auto& v : r.violations) std::cout << "  monitor violation: " << show(v.event) << ": " << v.detail << "\n";
      for (auto& e : r.errors) std::cout << "  error: " << e << "\n";
      for (auto& d : r.preservation_details) std::cout << "  preservation: " << d << "\n";
      if (r.wst_failures) std::cout << "  not well-stacked at " << r.wst_failures << " steps\n";
      if (!r.final.diverging.empty()) std::cout << "  suspected diverging processes: " << r.final.diverging.size() << "\n";
    }
    std::cout << rep.clean_runs() << "/" << rep.runs.size() << " schedules clean\n";
  }
  if (violations) return 3;
  if (rep.clean_runs() != rep.runs.size()) return 2;
  return exit_code(a);
}
