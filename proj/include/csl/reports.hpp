#pragma once

#include <json.hpp>

#include "csl/modelcheck.hpp"
#include "csl/properties.hpp"
#include "csl/proof.hpp"
#include "csl/sos.hpp"

// JSON renderings of the report structures. Key order is fixed so that
// identical runs serialize to identical bytes.

namespace csl {

using Json = nlohmann::ordered_json;

inline Json to_json(const CheckFailure& f) {
  Json j;
  j["condition"] = f.condition;
  j["detail"] = f.detail;
  if (f.counterexample) j["counterexample"] = *f.counterexample;
  return j;
}

inline Json to_json(const NodeReport& n) {
  Json j;
  j["rule"] = n.rule;
  j["ok"] = n.ok;
  j["judgment"] = n.judgment;
  j["span"] = n.span;
  Json fs = Json::array();
  for (const auto& f : n.failures) fs.push_back(to_json(f));
  j["failures"] = fs;
  if (!n.notes.empty()) j["notes"] = n.notes;
  return j;
}

inline Json to_json(const CheckReport& r) {
  Json j;
  j["verdict"] = r.accepted ? "accept" : "reject";
  Json ns = Json::array();
  for (const auto& n : r.nodes) ns.push_back(to_json(n));
  j["nodes"] = ns;
  return j;
}

inline Json to_json(const ExploreReport& r) {
  Json j;
  j["verdict"] = ExploreReport::verdict_name(r.verdict);
  j["states"] = r.states_visited;
  j["depth"] = r.depth_reached;
  j["initial_states"] = r.initial_states;
  j["init_exhaustive"] = r.init_exhaustive;
  j["bounds"] = r.bounds_str;
  j["prop3_checked"] = r.prop3_checked;
  j["prop3_violations"] = r.prop3_violations;
  j["always_checked"] = r.always_checked;
  j["blocked_states"] = r.blocked_states;
  j["deadlock_states"] = r.deadlock_states;
  j["exhaustion_events"] = r.exhaustion_events;
  if (!r.note.empty()) j["note"] = r.note;
  if (!r.counterexample.empty()) j["counterexample"] = r.counterexample;
  return j;
}

inline Json to_json(const SuiteReport& r) {
  Json j;
  j["suite"] = r.suite;
  j["requested"] = r.requested;
  j["cases"] = r.cases;
  j["discarded"] = r.discarded;
  j["failures"] = r.failures;
  j["seed"] = r.seed;
  j["bounds"] = r.bounds_str;
  j["passed"] = r.passed();
  if (!r.failure_samples.empty()) j["failure_samples"] = r.failure_samples;
  if (r.generation_starved) j["generation_starved"] = true;
  return j;
}

inline Json to_json(const Trace& t) {
  Json j;
  Json lines = Json::array();
  for (const auto& e : t.entries)
    lines.push_back(std::to_string(e.index) + " " + rule_name(e.rule) + " " + e.cmd + " " + e.state);
  j["trace"] = lines;
  j["status"] = t.status_line().substr(7);  // strip "STATUS "
  if (!t.note.empty()) j["note"] = t.note;
  return j;
}

inline Json to_json(const SmokeReport& r) {
  Json j;
  j["derivation_accepted"] = r.derivation_accepted;
  j["red_flag"] = r.red_flag;
  if (r.derivation_accepted) j["explore"] = to_json(r.explore);
  return j;
}

}  // namespace csl
