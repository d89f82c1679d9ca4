// cslv: parse, run, prove and verify resource-oriented concurrent programs
// over a small-step semantics with bounded domains.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "csl/parser.hpp"
#include "csl/reports.hpp"

namespace {

struct GlobalOpts {
  long long int_min = -2;
  long long int_max = 2;
  int locations = 8;
  long long loc_base = 10;
  std::string format = "human";

  csl::DomainBounds bounds() const { return csl::DomainBounds::make(int_min, int_max, loc_base, locations); }
  bool json() const { return format == "json"; }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void emit(const GlobalOpts& g, const csl::Json& j, const std::string& human) {
  if (g.json())
    std::cout << j.dump() << "\n";
  else
    std::cout << human;
}

int jobs_from_env() {
  const char* env = std::getenv("CSLV_JOBS");
  if (!env) return 1;
  int n = std::atoi(env);
  return n >= 1 ? n : 1;
}

csl::ExploreOptions explore_options(const csl::SpecFile& file, const csl::SpecBlock& spec, int depth, int init_cells,
                                    int jobs) {
  csl::ExploreOptions opts;
  opts.max_depth = depth;
  opts.jobs = jobs;
  opts.declared_vars = file.var_names();
  for (const auto& v : file.vars)
    if (v.domain) opts.var_domains[v.name] = *v.domain;
  opts.always = spec.always;
  if (init_cells >= 0)
    opts.init_cells = (size_t)init_cells;
  else if (spec.init_cells)
    opts.init_cells = (size_t)*spec.init_cells;
  return opts;
}

// First initial state satisfying pre * inv for the scheduler.
std::optional<csl::MachineState> first_initial_state(const csl::SpecFile& file, const csl::SpecBlock& spec,
                                                     const csl::DomainBounds& bounds) {
  csl::AssertionEval ev(bounds, file.preds);
  csl::AssertPtr init = csl::asep(spec.pre, csl::inv_all(file.ctx));
  std::map<std::string, csl::Value> base;
  std::map<std::string, std::vector<csl::Value>> doms;
  std::vector<std::string> vary;
  for (const auto& v : file.vars) {
    const std::vector<csl::Value>& dom = v.domain ? *v.domain : bounds.quantifier_values;
    base[v.name] = dom.front();
    doms[v.name] = dom;
    vary.push_back(v.name);
  }
  size_t cap = spec.init_cells ? (size_t)*spec.init_cells : bounds.locations.size();
  for (const csl::Store& s : csl::enumerate_stores(csl::Store(base), vary, doms)) {
    auto m = ev.models(s, init, cap);
    if (m && m->is_explicit() && !m->heaps.empty())
      return csl::MachineState{s, m->heaps.front(), csl::ResourceConfig({}, {}, file.ctx.names())};
  }
  return std::nullopt;
}

int precision_gate(const GlobalOpts& g, const csl::SpecFile& file, const csl::DomainBounds& bounds) {
  for (const auto& e : file.ctx.entries) {
    csl::PrecisionReport pr = csl::check_precise(e.invariant, bounds, file.preds);
    if (!pr.precise) {
      csl::Json j;
      j["error"] = "imprecise-invariant";
      j["resource"] = e.name;
      emit(g, j, "error: invariant of resource '" + e.name + "' is not precise at these bounds\n");
      return 1;
    }
  }
  return 0;
}

int cmd_parse(const GlobalOpts& g, const std::string& path) {
  std::string text = read_file(path);
  if (ends_with(path, ".deriv")) {
    csl::DerivFile df = csl::parse_derivation_file(text, path);
    if (df.derivations.empty()) {
      std::cerr << "error: no derivations in '" << path << "'\n";
      return 2;
    }
    for (const auto& [name, d] : df.derivations) {
      csl::Json j;
      j["derivation"] = name;
      j["rule"] = csl::rule_tag_name(d.tag);
      j["conclusion"] = d.conclusion.str();
      emit(g, j, "derivation " + name + ": " + d.conclusion.str() + "\n");
    }
    return 0;
  }
  csl::SpecFile f = csl::parse_spec_file(text, path);
  if (f.empty()) {
    std::cerr << "error: '" << path << "' declares nothing\n";
    return 2;
  }
  for (const auto& v : f.vars) {
    std::string dom;
    if (v.domain) {
      dom = " in {";
      for (size_t i = 0; i < v.domain->size(); ++i) dom += (i ? ", " : "") + (*v.domain)[i].str();
      dom += "}";
    }
    csl::Json j;
    j["var"] = v.name;
    if (v.domain) {
      std::vector<std::string> vals;
      for (const auto& val : *v.domain) vals.push_back(val.str());
      j["domain"] = vals;
    }
    emit(g, j, "vars " + v.name + dom + ";\n");
  }
  for (const auto& [name, def] : f.preds.defs) {
    std::string params;
    for (size_t i = 0; i < def.params.size(); ++i) params += (i ? ", " : "") + def.params[i];
    csl::Json j;
    j["predicate"] = name;
    j["body"] = csl::pp(def.body);
    emit(g, j, "predicate " + name + "(" + params + ") = " + csl::pp(def.body) + ";\n");
  }
  for (const auto& e : f.ctx.entries) {
    std::string pv;
    for (const auto& v : e.protected_vars) pv += (pv.empty() ? "" : ", ") + v;
    csl::Json j;
    j["resource"] = e.name;
    j["protected"] = pv;
    j["invariant"] = csl::pp(e.invariant);
    emit(g, j, "resource " + e.name + "(" + pv + "): " + csl::pp(e.invariant) + ";\n");
  }
  for (const auto& sp : f.specs) {
    csl::Json j;
    j["spec"] = sp.name;
    j["rely"] = csl::join_names(sp.rely);
    j["pre"] = csl::pp(sp.pre);
    j["prog"] = csl::pp(sp.prog);
    j["post"] = csl::pp(sp.post);
    emit(g, j,
         "spec " + sp.name + " rely " + csl::join_names(sp.rely) + "\n  pre  { " + csl::pp(sp.pre) + " }\n  prog { " +
             csl::pp(sp.prog) + " }\n  post { " + csl::pp(sp.post) + " }\n");
  }
  return 0;
}

int cmd_run(const GlobalOpts& g, const std::string& path, const std::string& spec_name, uint64_t seed, int max_steps) {
  csl::DomainBounds bounds = g.bounds();
  csl::SpecFile f = csl::parse_spec_file(read_file(path), path);
  if (f.specs.empty()) {
    std::cerr << "error: no spec blocks in '" << path << "'\n";
    return 2;
  }
  const csl::SpecBlock* spec = spec_name.empty() ? &f.specs.front() : f.find_spec(spec_name);
  if (!spec) {
    std::cerr << "error: no spec named '" << spec_name << "'\n";
    return 2;
  }
  if (int rc = precision_gate(g, f, bounds)) return rc;
  auto st0 = first_initial_state(f, *spec, bounds);
  if (!st0) {
    std::cerr << "error: no initial state satisfies the precondition at these bounds\n";
    return 1;
  }
  csl::Trace tr = csl::run_scheduled(spec->prog, *st0, seed, max_steps, bounds);
  csl::Json j = csl::to_json(tr);
  j["spec"] = spec->name;
  j["seed"] = seed;
  emit(g, j, csl::trace_lines(tr));
  return tr.status == csl::RunStatus::Abort ? 1 : 0;
}

int cmd_check_proof(const GlobalOpts& g, const std::string& path, const std::string& mode_name,
                    const std::string& which) {
  csl::DomainBounds bounds = g.bounds();
  csl::ProofMode mode = mode_name == "dcsl" ? csl::ProofMode::DCSL : csl::ProofMode::CSL;
  csl::DerivFile df = csl::parse_derivation_file(read_file(path), path);
  if (df.derivations.empty()) {
    std::cerr << "error: no derivations in '" << path << "'\n";
    return 2;
  }
  bool all_ok = true;
  for (const auto& [name, d] : df.derivations) {
    if (!which.empty() && name != which) continue;
    csl::CheckReport rep = csl::check_derivation(d, mode, bounds, df.preds);
    all_ok = all_ok && rep.accepted;
    csl::Json j = csl::to_json(rep);
    j["derivation"] = name;
    j["mode"] = mode_name;
    std::string human = "derivation " + name + " [" + mode_name + "]: " + (rep.accepted ? "ACCEPT" : "REJECT") + "\n";
    for (const auto& n : rep.nodes) {
      if (n.ok) continue;
      human += "  node " + std::to_string(n.index) + " (" + n.rule + "): ";
      for (const auto& fl : n.failures) human += fl.condition + " - " + fl.detail + "; ";
      human += "\n";
    }
    emit(g, j, human);
  }
  return all_ok ? 0 : 1;
}

int cmd_verify(const GlobalOpts& g, const std::string& path, const std::string& spec_name, int depth, int init_cells,
               int jobs) {
  csl::DomainBounds bounds = g.bounds();
  csl::SpecFile f = csl::parse_spec_file(read_file(path), path);
  if (f.specs.empty()) {
    std::cerr << "error: no spec blocks in '" << path << "'\n";
    return 2;
  }
  if (int rc = precision_gate(g, f, bounds)) return rc;
  bool all_valid = true;
  for (const auto& sp : f.specs) {
    if (!spec_name.empty() && sp.name != spec_name) continue;
    csl::ExploreOptions opts = explore_options(f, sp, depth, init_cells, jobs);
    csl::ExploreReport rep = csl::check_valid(f.ctx, sp.pre, sp.prog, sp.post, bounds, f.preds, opts);
    bool ok = rep.verdict == csl::ExploreReport::Verdict::Valid;
    all_valid = all_valid && ok;
    csl::Json j = csl::to_json(rep);
    j["spec"] = sp.name;
    std::string human = "spec " + sp.name + ": " + csl::ExploreReport::verdict_name(rep.verdict) + " (states " +
                        std::to_string(rep.states_visited) + ", depth " + std::to_string(rep.depth_reached) + ")\n";
    if (!rep.note.empty()) human += "  note: " + rep.note + "\n";
    for (const auto& line : rep.counterexample) human += "  " + line + "\n";
    emit(g, j, human);
  }
  return all_valid ? 0 : 1;
}

int cmd_props(const GlobalOpts& g, const std::string& suite, int cases, uint64_t seed) {
  csl::DomainBounds bounds = g.bounds();
  std::vector<std::string> ids;
  if (suite == "all")
    ids = csl::known_suites();
  else
    ids.push_back(suite);
  bool all_ok = true;
  for (const auto& id : ids) {
    csl::SuiteReport rep = csl::property_suite(id, cases, seed, bounds);
    all_ok = all_ok && rep.passed();
    std::string human = "suite " + rep.suite + ": " + (rep.passed() ? "PASS" : "FAIL") + " (cases " +
                        std::to_string(rep.cases) + ", discarded " + std::to_string(rep.discarded) + ", failures " +
                        std::to_string(rep.failures) + ")\n";
    for (const auto& s : rep.failure_samples) human += "  " + s + "\n";
    emit(g, csl::to_json(rep), human);
  }
  return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  GlobalOpts g;
  CLI::App app{"checker and bounded verifier for concurrent separation logic over a small-step semantics"};
  app.require_subcommand(1);
  app.fallthrough();  // global bounds/format flags may follow the subcommand
  app.add_option("--int-min", g.int_min, "smallest plain integer value");
  app.add_option("--int-max", g.int_max, "largest plain integer value");
  app.add_option("--locations", g.locations, "number of heap locations");
  app.add_option("--loc-base", g.loc_base, "first heap location");
  app.add_option("--format", g.format, "output format: human|json")
      ->check(CLI::IsMember({"human", "json"}));

  std::string path, spec_name, mode = "csl", deriv_name, suite = "all";
  uint64_t seed = 1;
  int max_steps = 200, depth = 64, init_cells = -1, jobs = jobs_from_env(), cases = 500;

  CLI::App* parse_cmd = app.add_subcommand("parse", "parse a file and echo its canonical form");
  parse_cmd->add_option("file", path)->required();

  CLI::App* run_cmd = app.add_subcommand("run", "run one seeded interleaving");
  run_cmd->add_option("file", path)->required();
  run_cmd->add_option("--spec", spec_name, "spec block to run (default: first)");
  run_cmd->add_option("--seed", seed, "scheduler seed");
  run_cmd->add_option("--max-steps", max_steps, "step budget");

  CLI::App* proof_cmd = app.add_subcommand("check-proof", "check the derivations in a .deriv file");
  proof_cmd->add_option("file", path)->required();
  proof_cmd->add_option("--mode", mode, "csl|dcsl")->check(CLI::IsMember({"csl", "dcsl"}));
  proof_cmd->add_option("--derivation", deriv_name, "check a single derivation by name");

  CLI::App* verify_cmd = app.add_subcommand("verify", "bounded exhaustive verification of spec blocks");
  verify_cmd->add_option("file", path)->required();
  verify_cmd->add_option("--spec", spec_name, "spec block to verify (default: all)");
  verify_cmd->add_option("--depth", depth, "exploration depth bound");
  verify_cmd->add_option("--init-cells", init_cells, "cap on initial-heap cells");
  verify_cmd->add_option("--jobs", jobs, "worker threads for frontier expansion");

  CLI::App* props_cmd = app.add_subcommand("props", "run brute-force metatheory suites");
  props_cmd->add_option("--suite", suite, "suite id or 'all'");
  props_cmd->add_option("--cases", cases, "non-discarded cases per suite");
  props_cmd->add_option("--seed", seed, "generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (parse_cmd->parsed()) return cmd_parse(g, path);
    if (run_cmd->parsed()) return cmd_run(g, path, spec_name, seed, max_steps);
    if (proof_cmd->parsed()) return cmd_check_proof(g, path, mode, deriv_name);
    if (verify_cmd->parsed()) return cmd_verify(g, path, spec_name, depth, init_cells, jobs);
    if (props_cmd->parsed()) return cmd_props(g, suite, cases, seed);
  } catch (const csl::ParseError& e) {
    std::cerr << "parse error: " << e.what() << " at " << e.span.str() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
