#pragma once

// Golden conformance table: one hand-built state per transition rule with
// the exact successor and abort sets the rule figure prescribes.

#include <string>
#include <vector>

#include "csl/parser.hpp"
#include "csl/pretty.hpp"
#include "csl/sos.hpp"

namespace golden {

struct Case {
  std::string rule;  // the tag this case pins down
  std::string cmd;
  csl::MachineState state;
  std::vector<std::string> successors;  // "RULE | cmd | state"
  std::vector<std::string> aborts;      // abort tags
};

inline csl::Store st2(long long x, long long y) {
  return csl::Store(std::map<std::string, csl::Value>{{"x", csl::Value::integer(x)}, {"y", csl::Value::integer(y)}});
}

inline csl::Heap cell(long long l, long long v) { return csl::Heap{}.with(l, csl::Value::integer(v)); }

inline std::vector<Case> cases() {
  using csl::ResourceConfig;
  std::vector<Case> out;
  ResourceConfig none;
  ResourceConfig rD({}, {}, {"r"});
  ResourceConfig rO({"r"}, {}, {});
  ResourceConfig rL({}, {"r"}, {});

  out.push_back({"S1", "skip; x := 1", {st2(0, 0), {}, none},
                 {"S1 | x := 1 | s{x=0,y=0} h{} O{} L{} D{}"}, {}});
  out.push_back({"S2", "x := 1; y := 1", {st2(0, 0), {}, none},
                 {"S2 | skip; y := 1 | s{x=1,y=0} h{} O{} L{} D{}"}, {}});
  out.push_back({"LP", "while true do skip", {st2(0, 0), {}, none},
                 {"LP | if true then (skip; while true do skip) else skip | s{x=0,y=0} h{} O{} L{} D{}"}, {}});
  out.push_back({"IF1", "if x = 0 then y := 1 else y := 0", {st2(0, 0), {}, none},
                 {"IF1 | y := 1 | s{x=0,y=0} h{} O{} L{} D{}"}, {}});
  out.push_back({"IF2", "if x = 1 then y := 1 else y := 0", {st2(0, 0), {}, none},
                 {"IF2 | y := 0 | s{x=0,y=0} h{} O{} L{} D{}"}, {}});
  out.push_back({"P1", "x := 1 || y := 1", {st2(0, 0), {}, none},
                 {"P1 | skip || y := 1 | s{x=1,y=0} h{} O{} L{} D{}",
                  "P2 | x := 1 || skip | s{x=0,y=1} h{} O{} L{} D{}"},
                 {}});
  out.push_back({"P2", "skip || y := 1", {st2(0, 0), {}, none},
                 {"P2 | skip || skip | s{x=0,y=1} h{} O{} L{} D{}"}, {}});
  out.push_back({"P3", "skip || skip", {st2(0, 0), {}, none},
                 {"P3 | skip | s{x=0,y=0} h{} O{} L{} D{}"}, {}});
  out.push_back({"R0", "res r. skip", {st2(0, 0), {}, none},
                 {"R0 | skip | s{x=0,y=0} h{} O{} L{} D{}"}, {}});
  out.push_back({"R1", "res r. within r do skip", {st2(0, 0), {}, none},
                 {"R1 | res r. skip | s{x=0,y=0} h{} O{} L{} D{}"}, {}});
  out.push_back({"R2", "res r. with r when true do skip", {st2(0, 0), {}, none},
                 {"R2 | res r. within r do skip | s{x=0,y=0} h{} O{} L{} D{}"}, {}});
  out.push_back({"W0", "with r when x = 0 do y := 1", {st2(0, 0), {}, rD},
                 {"W0 | within r do y := 1 | s{x=0,y=0} h{} O{r} L{} D{}"}, {}});
  out.push_back({"W1", "within r do x := 1", {st2(0, 0), {}, rO},
                 {"W1 | within r do skip | s{x=1,y=0} h{} O{r} L{} D{}"}, {}});
  out.push_back({"W2", "within r do skip", {st2(0, 0), {}, rO},
                 {"W2 | skip | s{x=0,y=0} h{} O{} L{} D{r}"}, {}});
  out.push_back({"BCT", "x := 1", {st2(0, 0), {}, none},
                 {"BCT | skip | s{x=1,y=0} h{} O{} L{} D{}"}, {}});

  out.push_back({"RA", "res r. skip", {st2(0, 0), {}, rD}, {}, {"RA"}});
  out.push_back({"WA", "with r when true do skip", {st2(0, 0), {}, none}, {}, {"WA"}});
  out.push_back({"RA1", "res r. within r do [10] := 0", {st2(0, 0), {}, none}, {}, {"RA1"}});
  out.push_back({"RA2", "res r. [10] := 0", {st2(0, 0), {}, none}, {}, {"RA2"}});
  out.push_back({"BCA", "[10] := 0", {st2(0, 0), {}, none}, {}, {"BCA"}});
  out.push_back({"SA", "[10] := 0; x := 1", {st2(0, 0), {}, none}, {}, {"SA"}});
  out.push_back({"WA1", "within r do [10] := 0", {st2(0, 0), {}, rO}, {}, {"WA1"}});
  out.push_back({"WA2", "within r do skip", {st2(0, 0), {}, rD}, {}, {"WA2"}});
  out.push_back({"PA1", "[10] := 0 || skip", {st2(0, 0), {}, none}, {}, {"PA1"}});
  out.push_back({"PA2", "skip || [10] := 0", {st2(0, 0), {}, none}, {}, {"PA2"}});
  return out;
}

struct Outcome {
  bool ok = true;
  std::string detail;
};

inline Outcome run_case(const Case& c) {
  csl::DomainBounds bounds = csl::DomainBounds::tiny();
  csl::CmdPtr cmd = csl::parse_program(c.cmd);
  csl::StepResult r = csl::step(cmd, c.state, bounds, csl::AllocMode::All);
  std::multiset<std::string> got_succ, want_succ(c.successors.begin(), c.successors.end());
  for (const auto& s : r.successors)
    got_succ.insert(std::string(csl::rule_name(s.rule)) + " | " + csl::pp(s.cmd) + " | " + s.state.dump());
  std::multiset<std::string> got_ab, want_ab(c.aborts.begin(), c.aborts.end());
  for (const auto& a : r.aborts) got_ab.insert(csl::rule_name(a.rule));
  Outcome out;
  if (got_succ != want_succ) {
    out.ok = false;
    out.detail = "successor set mismatch for " + c.cmd + ": got {";
    for (const auto& s : got_succ) out.detail += "[" + s + "] ";
    out.detail += "}";
  }
  if (got_ab != want_ab) {
    out.ok = false;
    out.detail += " abort set mismatch for " + c.cmd + ": got {";
    for (const auto& s : got_ab) out.detail += s + " ";
    out.detail += "}";
  }
  return out;
}

}  // namespace golden
