#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "csl/parser.hpp"
#include "csl/properties.hpp"
#include "csl/reports.hpp"
#include "../sos_golden.hpp"

// End-to-end acceptance runs against the built CLI and the library. Each
// criterion prints a single PASS/FAIL line.

namespace {

using Json = nlohmann::json;

std::string bin() {
  const char* v = std::getenv("CSLV_BIN");
  return v ? v : CSLV_BIN_DEFAULT;
}
std::string corpus(const std::string& f) {
  const char* v = std::getenv("CSLV_CORPUS");
  return (v ? v : CSLV_CORPUS_DIR) + std::string("/") + f;
}

struct CliResult {
  int exit_code = -1;
  std::string out;
};

CliResult run_cli(const std::string& args) {
  std::string cmd = bin() + " " + args + " 2>/dev/null";
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  CliResult r;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  int status = pclose(p);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::vector<Json> json_lines(const std::string& text) {
  std::vector<Json> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(Json::parse(line));
  return out;
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

void report(int criterion, const std::string& what, bool pass, double secs) {
  std::printf("CRITERION %d (%s): %s  [%.2fs]\n", criterion, what.c_str(), pass ? "PASS" : "FAIL", secs);
  std::fflush(stdout);
  CHECK_MESSAGE(pass, "criterion " << criterion << " failed: " << what);
}

csl::SpecFile load_spec_file(const std::string& name) {
  std::ifstream in(corpus(name));
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return csl::parse_spec_file(ss.str(), name);
}

csl::DerivFile load_deriv_file(const std::string& name) {
  std::ifstream in(corpus(name));
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return csl::parse_derivation_file(ss.str(), name);
}

csl::ExploreOptions options_for(const csl::SpecFile& f, const csl::SpecBlock& sp, int depth) {
  csl::ExploreOptions opts;
  opts.max_depth = depth;
  opts.declared_vars = f.var_names();
  for (const auto& v : f.vars)
    if (v.domain) opts.var_domains[v.name] = *v.domain;
  opts.always = sp.always;
  if (sp.init_cells) opts.init_cells = (size_t)*sp.init_cells;
  return opts;
}

}  // namespace

TEST_CASE("criterion 1: semaphore reproduction") {
  Timer t;
  bool pass = true;

  // the four region derivations and the parallel composition are accepted
  for (const char* d : {"acquire_p", "release_p", "acquire_q", "release_q", "sem_par"}) {
    CliResult r = run_cli("check-proof " + corpus("semaphore.deriv") + " --mode csl --derivation " + std::string(d) +
                          " --format json");
    pass = pass && r.exit_code == 0;
    auto lines = json_lines(r.out);
    pass = pass && lines.size() == 1 && lines[0]["verdict"] == "accept";
  }

  // the looped program at integer bounds {0,1}: no abort, mutual exclusion
  CliResult loop =
      run_cli("verify " + corpus("semaphore_loop.csl") + " --depth 64 --int-min 0 --int-max 1 --format json");
  pass = pass && loop.exit_code == 0;
  auto lines = json_lines(loop.out);
  pass = pass && lines.size() == 1;
  if (pass) {
    pass = pass && lines[0]["verdict"] == "valid";
    pass = pass && lines[0]["always_checked"].get<long long>() > 0;  // the p=1 /\ q=1 assertion ran everywhere
    pass = pass && lines[0]["prop3_violations"] == 0;
  }
  double secs = t.seconds();
  report(1, "semaphore proofs accepted; looped program valid with mutual exclusion", pass && secs < 5.0, secs);
}

TEST_CASE("criterion 2: stack reproduction") {
  Timer t;
  bool pass = true;
  std::string small_bounds = " --int-min 0 --int-max 1 --locations 4";

  // DCSL rejects the parallel rule with overlap exactly {y, z}
  CliResult dcsl = run_cli("check-proof " + corpus("stack.deriv") + " --mode dcsl --format json" + small_bounds);
  pass = pass && dcsl.exit_code == 1;
  auto dl = json_lines(dcsl.out);
  bool overlap_exact = false;
  if (dl.size() == 1 && dl[0]["verdict"] == "reject") {
    for (const auto& node : dl[0]["nodes"]) {
      if (node["rule"] != "PAR") {
        // every other node is fine
        overlap_exact = overlap_exact;
        if (node["ok"] == false) pass = false;
        continue;
      }
      for (const auto& f : node["failures"]) {
        if (f["condition"] == "par-side-condition-dcsl") {
          std::string detail = f["detail"];
          overlap_exact = detail.find("mod(left) meets the right triple on {y, z}") != std::string::npos &&
                          detail.find("mod(right) meets the left triple on {y, z}") != std::string::npos;
        }
      }
    }
  }
  pass = pass && overlap_exact;

  // CSL accepts with rely sets {x1} and {x2}
  CliResult csl = run_cli("check-proof " + corpus("stack.deriv") + " --mode csl --format json" + small_bounds);
  pass = pass && csl.exit_code == 0;
  auto cl = json_lines(csl.out);
  pass = pass && cl.size() == 1 && cl[0]["verdict"] == "accept";

  // exploration from a one-node stack over eight locations
  CliResult ver = run_cli("verify " + corpus("stack.csl") + " --depth 64 --format json");
  pass = pass && ver.exit_code == 0;
  auto vl = json_lines(ver.out);
  pass = pass && vl.size() == 1 && vl[0]["verdict"] == "valid";

  double secs = t.seconds();
  report(2, "stack proofs: DCSL rejects on {y, z}, CSL accepts, exploration valid", pass && secs < 30.0, secs);
}

TEST_CASE("criterion 3: transition propositions at scale") {
  Timer t;
  bool pass = true;
  csl::DomainBounds bounds = csl::DomainBounds::tiny();
  for (const char* id : {"prop2", "prop3", "prop4", "prop5", "prop6", "prop7", "prop8", "prop9"}) {
    csl::SuiteReport rep = csl::property_suite(id, 500, 20250809, bounds);
    bool ok = rep.cases >= 500 && rep.failures == 0 && !rep.generation_starved;
    if (!ok)
      std::printf("  %s: cases %d failures %d%s\n", rep.suite.c_str(), rep.cases, rep.failures,
                  rep.failure_samples.empty() ? "" : (" - " + rep.failure_samples[0]).c_str());
    pass = pass && ok;
  }

  // the configuration-shape proposition additionally holds on every
  // transition explored while verifying the two examples
  {
    csl::SpecFile sem = load_spec_file("semaphore.csl");
    for (const auto& sp : sem.specs) {
      csl::ExploreReport rep = csl::check_valid(sem.ctx, sp.pre, sp.prog, sp.post, csl::DomainBounds::defaults(),
                                                sem.preds, options_for(sem, sp, 64));
      pass = pass && rep.prop3_checked > 0 && rep.prop3_violations == 0;
    }
    csl::SpecFile stk = load_spec_file("stack.csl");
    const csl::SpecBlock& sp = stk.specs.front();
    csl::ExploreReport rep = csl::check_valid(stk.ctx, sp.pre, sp.prog, sp.post, csl::DomainBounds::defaults(),
                                              stk.preds, options_for(stk, sp, 64));
    pass = pass && rep.prop3_checked > 0 && rep.prop3_violations == 0;
  }
  double secs = t.seconds();
  report(3, "propositions 2-9, 500+ cases each, plus exhaustive shape checks", pass && secs < 60.0, secs);
}

TEST_CASE("criterion 4: Safe lemmas at scale") {
  Timer t;
  bool pass = true;
  csl::DomainBounds bounds = csl::DomainBounds::tiny();
  for (const char* id :
       {"prop10", "prop-frame", "prop-par", "prop-with", "prop-res", "prop-rename-safe", "prop-aux"}) {
    csl::SuiteReport rep = csl::property_suite(id, 100, 20250809, bounds);
    bool ok = rep.cases >= 100 && rep.failures == 0 && !rep.generation_starved;
    if (!ok)
      std::printf("  %s: cases %d failures %d%s\n", rep.suite.c_str(), rep.cases, rep.failures,
                  rep.failure_samples.empty() ? "" : (" - " + rep.failure_samples[0]).c_str());
    pass = pass && ok;
  }
  double secs = t.seconds();
  report(4, "Safe lemmas, 100+ cases each at small depth", pass && secs < 120.0, secs);
}

TEST_CASE("criterion 5: soundness smoke and the load-bearing side condition") {
  Timer t;
  bool pass = true;

  // every accepted corpus derivation verifies; initial-state hints come from
  // the matching spec file
  {
    csl::SpecFile sem = load_spec_file("semaphore.csl");
    csl::DerivFile dsem = load_deriv_file("semaphore.deriv");
    for (const auto& [name, d] : dsem.derivations) {
      const csl::SpecBlock* sp = sem.find_spec(name == "sem_par" ? "both" : name);
      REQUIRE(sp);
      csl::SmokeReport rep = csl::soundness_smoke(d, csl::DomainBounds::defaults(), dsem.preds,
                                                  options_for(sem, *sp, 64));
      pass = pass && rep.derivation_accepted && !rep.red_flag;
    }
    csl::SpecFile stk = load_spec_file("stack.csl");
    csl::DerivFile dstk = load_deriv_file("stack.deriv");
    csl::DomainBounds small = csl::DomainBounds::make(0, 1, 10, 4);
    for (const auto& [name, d] : dstk.derivations) {
      csl::CheckReport cr = csl::check_derivation(d, csl::ProofMode::CSL, small, dstk.preds);
      pass = pass && cr.accepted;
      csl::ExploreOptions opts = options_for(stk, stk.specs.front(), 64);
      csl::ExploreReport er = csl::check_valid(d.conclusion.ctx, d.conclusion.pre, d.conclusion.cmd,
                                               d.conclusion.post, csl::DomainBounds::defaults(), dstk.preds, opts);
      pass = pass && er.verdict == csl::ExploreReport::Verdict::Valid;
    }
    // the looped program's full proof, explored at the loop's bounds
    csl::SpecFile lp = load_spec_file("semaphore_loop.csl");
    csl::DerivFile dlp = load_deriv_file("semaphore_loop.deriv");
    csl::DomainBounds binary = csl::DomainBounds::make(0, 1, 10, 8);
    for (const auto& [name, d] : dlp.derivations) {
      csl::SmokeReport rep =
          csl::soundness_smoke(d, binary, dlp.preds, options_for(lp, lp.specs.front(), 64));
      pass = pass && rep.derivation_accepted && !rep.red_flag;
    }
    // assorted single-rule derivations at default bounds
    csl::DerivFile dex = load_deriv_file("extras.deriv");
    for (const auto& [name, d] : dex.derivations) {
      csl::SmokeReport rep = csl::soundness_smoke(d, csl::DomainBounds::defaults(), dex.preds, {});
      pass = pass && rep.derivation_accepted && !rep.red_flag;
    }
  }

  // the racy derivation is rejected in both modes at the parallel rule
  for (const char* mode : {"csl", "dcsl"}) {
    CliResult r = run_cli("check-proof " + corpus("race.deriv") + " --mode " + std::string(mode) + " --format json");
    pass = pass && r.exit_code == 1;
    auto lines = json_lines(r.out);
    bool par_failure = false;
    if (lines.size() == 1)
      for (const auto& node : lines[0]["nodes"])
        for (const auto& f : node["failures"]) {
          std::string cond = f["condition"];
          par_failure = par_failure || cond.rfind("par-side-condition", 0) == 0;
        }
    pass = pass && par_failure;
  }

  // bypassing the checker, the claimed specification is refuted by exploration
  CliResult ver = run_cli("verify " + corpus("race.csl") + " --depth 16 --format json");
  pass = pass && ver.exit_code == 1;
  auto vl = json_lines(ver.out);
  pass = pass && vl.size() == 1 && vl[0]["verdict"] == "postcondition-violated";

  double secs = t.seconds();
  report(5, "accepted proofs verify; the parallel side condition is load-bearing", pass && secs < 10.0, secs);
}

TEST_CASE("criterion 6: byte-identical reruns") {
  Timer t;
  bool pass = true;
  const std::string cmds[] = {
      "verify " + corpus("semaphore.csl") + " --depth 64 --format json",
      "verify " + corpus("stack.csl") + " --depth 64 --format json",
      "verify " + corpus("semaphore_loop.csl") + " --depth 64 --int-min 0 --int-max 1 --format json",
      "check-proof " + corpus("stack.deriv") + " --mode dcsl --int-min 0 --int-max 1 --locations 4 --format json",
      "props --suite prop5 --cases 200 --seed 3 --int-min 0 --int-max 1 --locations 2 --format json",
      "run " + corpus("semaphore_loop.csl") + " --seed 9 --max-steps 40 --format json",
  };
  for (const auto& c : cmds) {
    CliResult a = run_cli(c);
    CliResult b = run_cli(c);
    bool same = a.exit_code == b.exit_code && a.out == b.out && !a.out.empty();
    if (!same) std::printf("  differs: %s\n", c.c_str());
    pass = pass && same;
  }
  double secs = t.seconds();
  report(6, "identical command lines produce identical bytes", pass, secs);
}

TEST_CASE("cli conformance: exit codes") {
  // empty input: nothing to echo
  std::string empty = std::string(std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp") + "/cslv_empty.csl";
  {
    std::ofstream out(empty);
    out << "// nothing here\n";
  }
  CHECK(run_cli("parse " + empty).exit_code == 2);
  CHECK(run_cli("parse " + corpus("semaphore.csl")).exit_code == 0);
  // usage errors
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli("frobnicate").exit_code == 2);
  CHECK(run_cli("verify /nonexistent.csl").exit_code == 2);
  // syntax error in a file
  std::string bad = std::string(std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp") + "/cslv_bad.csl";
  {
    std::ofstream out(bad);
    out << "vars x\nspec s { }\n";
  }
  CHECK(run_cli("parse " + bad).exit_code == 2);
  // rejection vs usage: a failing suite exits 1
  CHECK(run_cli("props --suite nope --cases 1 --seed 1").exit_code == 1);
}

TEST_CASE("cli conformance: worker threads do not change the bytes") {
  std::string base = "verify " + corpus("stack.csl") + " --depth 64 --format json";
  CliResult seq = run_cli(base);
  CliResult par = run_cli(base + " --jobs 4");
  CHECK(seq.exit_code == 0);
  CHECK(seq.out == par.out);
  // the environment variable is the fallback for --jobs
  FILE* p = popen(("CSLV_JOBS=3 " + bin() + " " + base + " 2>/dev/null").c_str(), "r");
  REQUIRE(p);
  std::string out;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
  pclose(p);
  CHECK(out == seq.out);
}

TEST_CASE("criterion 7: transition-rule conformance") {
  Timer t;
  auto cases = golden::cases();
  int passed = 0;
  for (const auto& c : cases) {
    golden::Outcome out = golden::run_case(c);
    if (out.ok)
      ++passed;
    else
      std::printf("  %s: %s\n", c.rule.c_str(), out.detail.c_str());
  }
  bool pass = passed == (int)cases.size() && cases.size() == 25;
  std::printf("  golden rules: %d/%d\n", passed, (int)cases.size());
  report(7, "one golden test per transition rule", pass, t.seconds());
}
