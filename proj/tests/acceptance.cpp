// Acceptance suite: one PASS/FAIL line per criterion.
#include <chrono>
#include <iostream>
#include <map>
#include <random>
#include <regex>
#include <sstream>
#include <string>

#include "generators.hpp"
#include "sessionml/abstract.hpp"
#include "sessionml/duality.hpp"
#include "sessionml/pipeline.hpp"
#include "sessionml/runtime.hpp"
#include "sessionml/session_infer.hpp"

using namespace sessionml;
using namespace sessionml::testing;

namespace {

constexpr double kTimeLimitSeconds = 1.0;
constexpr size_t kRandomPairs = 600;
constexpr uint64_t kRandomSeed = 20261016;
constexpr size_t kExplorerBudget = 1000000;
constexpr size_t kSchedules = 100;
constexpr uint64_t kDualitySeeds = 20;

int failures = 0;

void report(int n, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << n << ": " << detail << std::endl;
  failures += !ok;
}

std::string sample(const std::string& name) { return read_text(std::string(SAMPLES_DIR) + "/" + name); }

template <class F>
double seconds(F&& f) {
  auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double s) {
  std::ostringstream os;
  os.precision(3);
  os << std::fixed << s << "s";
  return os.str();
}

// Renames session and type variables in order of first appearance.
std::string rename_fresh(const std::string& text) {
  static const std::regex var(R"((psi|'a)(\d+))");
  std::map<std::string, std::string> names;
  std::string out;
  auto it = std::sregex_iterator(text.begin(), text.end(), var);
  size_t last = 0;
  for (; it != std::sregex_iterator(); ++it) {
    out += text.substr(last, static_cast<size_t>(it->position()) - last);
    std::string key = it->str();
    auto [pos, fresh] = names.emplace(key, "");
    if (fresh) pos->second = (*it)[1].str() + "_" + std::to_string(names.size());
    out += pos->second;
    last = static_cast<size_t>(it->position() + it->length());
  }
  return out + text.substr(last);
}

void criterion1() {
  Analysis a;
  double t = seconds([&] { a = analyze(sample("swap1.lml")); });
  bool ok = a.accepted && a.channels.size() == 1 && a.channels[0].channel == "swp" &&
            a.channels[0].request == "!int.?int.end" && a.channels[0].accept == "?int.!int.end" &&
            t < kTimeLimitSeconds;
  std::string got = a.channels.empty() ? "no channels" : "swp : " + a.channels[0].request + ", ~swp : " + a.channels[0].accept;
  report(1, ok, "swap service infers " + got + " in " + fmt(t));
}

void criterion2() {
  Analysis a;
  double t = seconds([&] { a = analyze(sample("deadlock_client.lml")); });
  std::string msg = a.diagnostics.empty() ? "" : a.diagnostics[0].message;
  bool ok = !a.accepted && a.stage == "SI" && a.category == "session" && msg.find("not well-stacked") != std::string::npos &&
            msg.find("receive") != std::string::npos && a.diagnostics[0].span.line == 11 && t < kTimeLimitSeconds;
  report(2, ok, "deadlocking client rejected at " + a.stage + " (" + to_string(a.diagnostics.empty() ? Span{} : a.diagnostics[0].span) +
                    ": " + msg + ") in " + fmt(t));
}

void criterion3() {
  Analysis a = analyze(sample("swap2.lml"));
  bool ok = a.accepted && a.channels.size() == 1;
  std::string detail = "delegating swap service ";
  if (ok) {
    const auto& ch = a.channels[0];
    ok = ch.request == "&{LEAD!: ?<?int.!int.end>.end, SWAP!: !int.?int.end}" &&
         ch.accept == "+{LEAD: !<?int.!int.end>.end, SWAP: ?int.!int.end}";
    // The session delegated by the coordinator is the one the leader resumes, and the swap
    // branch exchanges the same payload type.
    Session req = ground_payloads(ch.request_ses, a.c_final);
    Session acc = ground_payloads(ch.accept_ses, a.c_final);
    ok = ok && req->tag == SesTag::External && acc->tag == SesTag::Internal &&
         equal(acc->branches.at("LEAD")->carried, req->branches.at("LEAD")->carried) &&
         equal(req->branches.at("SWAP")->payload, req->branches.at("LEAD")->carried->payload) &&
         reference_dual(acc, req);
    detail += "accepted with swp : " + ch.request + ", ~swp : " + ch.accept;
  } else {
    detail += a.accepted ? "accepted without a single channel" : "rejected: " + a.category;
  }
  report(3, ok, detail);
}

void criterion4() {
  Analysis a, b;
  double ta = seconds([&] { a = analyze(sample("aliasing_a.lml")); });
  double tb = seconds([&] { b = analyze(sample("aliasing_b.lml")); });
  bool ok_a = !a.accepted && a.category == "well-formedness" && !a.diagnostics.empty() &&
              a.diagnostics[0].message.rfind("Region-Consistent", 0) == 0;
  bool ok_b = !b.accepted && b.category == "session" && !b.diagnostics.empty() &&
              b.diagnostics[0].message.find("linearity") != std::string::npos;
  report(4, ok_a && ok_b && ta < kTimeLimitSeconds && tb < kTimeLimitSeconds,
         "aliasing (a) " + (ok_a ? std::string("Region-Consistent") : "unexpected " + a.category) + " in " + fmt(ta) +
             ", (b) " + (ok_b ? std::string("linearity") : "unexpected " + b.category) + " in " + fmt(tb));
}

void criterion5(const std::vector<std::string>& accepted) {
  size_t disagreements = 0, exhausted = 0;
  PipelineOptions o;
  o.oracle = true;
  for (auto& f : accepted) {
    Analysis a = analyze(read_text(f), o);
    if (!a.accepted || !a.oracle.agrees) ++disagreements, std::cerr << "oracle disagrees on " << f << "\n";
    exhausted += a.oracle.budget_exceeded;
  }
  std::mt19937_64 rng(kRandomSeed);
  size_t si_ok = 0;
  for (size_t i = 0; i < kRandomPairs; ++i) {
    GeneratedPair g = random_pair(rng);
    SIResult r;
    try {
      r = algSI(g.b, g.c, g.supply);
    } catch (const InferenceFailure&) {
      continue;
    }
    ++si_ok;
    Verdict v = Explorer(r.c, kExplorerBudget).normalizes({}, map_beh(g.b, r.sigma.mapper()));
    if (!v.ok) ++disagreements, std::cerr << "random pair " << i << " disagrees: " << v.detail << "\n";
    exhausted += v.budget_exceeded;
  }
  report(5, accepted.size() >= 30 && disagreements == 0 && exhausted == 0,
         std::to_string(accepted.size()) + " corpus programs and " + std::to_string(kRandomPairs) + " random pairs (" +
             std::to_string(si_ok) + " inferred), " + std::to_string(disagreements) + " disagreements");
}

void criterion6(const std::vector<std::string>& accepted) {
  size_t checks = 0, violations = 0, exhausted = 0, failed = 0, max_states = 0;
  auto explore_ground = [&](const Beh& b, const ConstraintSet& c) {
    Explorer ex(c, kExplorerBudget);
    ex.ground_mode = true;
    Verdict v = ex.normalizes({}, ground(b, c));
    checks += ex.size_checks;
    violations += ex.size_violations;
    exhausted += v.budget_exceeded;
    failed += !v.ok;
    max_states = std::max(max_states, v.states);
  };
  for (auto& f : accepted) {
    Analysis a = analyze(read_text(f));
    explore_ground(a.final_beh, a.c_final);
    Verdict v = Explorer(a.c_final, kExplorerBudget).normalizes({}, a.final_beh);
    exhausted += v.budget_exceeded;
    max_states = std::max(max_states, v.states);
  }
  std::mt19937_64 rng(kRandomSeed);
  for (size_t i = 0; i < kRandomPairs; ++i) {
    GeneratedPair g = random_pair(rng);
    try {
      SIResult r = algSI(g.b, g.c, g.supply);
      explore_ground(map_beh(g.b, r.sigma.mapper()), r.c);
    } catch (const InferenceFailure&) {
    }
  }
  report(6, violations == 0 && exhausted == 0 && failed == 0 && checks > 0,
         std::to_string(checks) + " ground transitions, " + std::to_string(violations) +
             " without a strict size decrease, largest exploration " + std::to_string(max_states) + " states");
}

struct RunTotals {
  size_t programs = 0, runs = 0, clean = 0, violations = 0, wst = 0, preservation = 0;
  size_t lf_applicable = 0, lf_failures = 0;
};

RunTotals criterion7(const std::vector<std::string>& accepted) {
  RunTotals t;
  const std::set<std::string> heavyweight = {"swap1.lml", "swap2.lml", "proxy.lml"};
  size_t heavy = 0;
  for (auto& f : accepted) {
    Analysis a = analyze(read_text(f));
    RunConfig cfg;
    cfg.schedules = kSchedules;
    std::string base = f.substr(f.find_last_of('/') + 1);
    cfg.preservation = heavyweight.count(base) > 0;
    heavy += cfg.preservation;
    RunReport r = run(a.program, a.final_beh, a.c_final, cfg);
    ++t.programs;
    for (auto& s : r.runs) {
      ++t.runs;
      t.clean += s.clean();
      t.violations += s.violations.size();
      t.wst += s.wst_failures;
      t.preservation += s.preservation_failures;
      t.lf_applicable += s.lock_freedom_applies;
      t.lf_failures += s.lock_freedom_applies && !s.lock_freedom_ok;
      if (!s.clean()) std::cerr << f << " seed " << s.seed << " is not clean\n";
    }
  }
  report(7, t.clean == t.runs && t.violations == 0 && t.wst == 0 && t.preservation == 0 && heavy == heavyweight.size(),
         std::to_string(t.runs) + " schedules over " + std::to_string(t.programs) + " programs, " +
             std::to_string(t.clean) + " clean, " + std::to_string(t.violations) + " monitor violations, " +
             std::to_string(t.wst) + " well-stackedness failures, preservation checked on " + std::to_string(heavy) +
             " reference examples with " + std::to_string(t.preservation) + " failures");
  return t;
}

void criterion8(const RunTotals& t) {
  report(8, t.lf_failures == 0 && t.lf_applicable > 0,
         std::to_string(t.lf_applicable) + " terminal classifications without divergence or waiters, " +
             std::to_string(t.lf_failures) + " with blocked processes");
}

void criterion9(const std::vector<std::string>& accepted) {
  size_t compared = 0, different = 0;
  for (auto& f : accepted) {
    std::string src = read_text(f);
    std::string fifo = rename_fresh(to_json(analyze(src), f).dump());
    for (uint64_t seed = 1; seed <= kDualitySeeds; ++seed) {
      PipelineOptions o;
      o.duality_seed = seed;
      ++compared;
      if (rename_fresh(to_json(analyze(src, o), f).dump()) != fifo) {
        ++different;
        std::cerr << f << " differs under duality seed " << seed << "\n";
      }
    }
  }
  report(9, different == 0, std::to_string(compared) + " seeded duality runs, " + std::to_string(different) +
                                " reports differing from first-in first-out order after renaming");
}

}  // namespace

int main() {
  std::vector<std::string> accepted = accepted_files();
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5(accepted);
  criterion6(accepted);
  RunTotals t = criterion7(accepted);
  criterion8(t);
  criterion9(accepted);
  return failures == 0 ? 0 : 1;
}
