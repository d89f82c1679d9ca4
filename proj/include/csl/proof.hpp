#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "csl/assertions.hpp"
#include "csl/ast.hpp"
#include "csl/pretty.hpp"
#include "csl/sos.hpp"

namespace csl {

// ---------------------------------------------------------------------------
// Judgments and derivation trees
// ---------------------------------------------------------------------------

enum class RuleTag { SKP, SEQ, BC, FRA, LP, CONJ, IF, CONS, AUX, REN, PAR, CR, RES };

inline const char* rule_tag_name(RuleTag t) {
  switch (t) {
    case RuleTag::SKP: return "SKP";
    case RuleTag::SEQ: return "SEQ";
    case RuleTag::BC: return "BC";
    case RuleTag::FRA: return "FRA";
    case RuleTag::LP: return "LP";
    case RuleTag::CONJ: return "CONJ";
    case RuleTag::IF: return "IF";
    case RuleTag::CONS: return "CONS";
    case RuleTag::AUX: return "AUX";
    case RuleTag::REN: return "REN";
    case RuleTag::PAR: return "PAR";
    case RuleTag::CR: return "CR";
    case RuleTag::RES: return "RES";
  }
  return "?";
}

inline std::optional<RuleTag> rule_tag_from(const std::string& s) {
  static const std::map<std::string, RuleTag> table = {
      {"SKP", RuleTag::SKP}, {"SEQ", RuleTag::SEQ}, {"BC", RuleTag::BC},   {"FRA", RuleTag::FRA},
      {"LP", RuleTag::LP},   {"CONJ", RuleTag::CONJ}, {"IF", RuleTag::IF}, {"CONS", RuleTag::CONS},
      {"AUX", RuleTag::AUX}, {"REN", RuleTag::REN}, {"PAR", RuleTag::PAR}, {"CR", RuleTag::CR},
      {"RES", RuleTag::RES}};
  auto it = table.find(s);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

inline size_t rule_tag_arity(RuleTag t) {
  switch (t) {
    case RuleTag::SKP:
    case RuleTag::BC: return 0;
    case RuleTag::SEQ:
    case RuleTag::CONJ:
    case RuleTag::IF:
    case RuleTag::PAR: return 2;
    default: return 1;
  }
}

struct SourceSpan {
  std::string file;
  int line0 = 0, col0 = 0, line1 = 0, col1 = 0;
  std::string str() const {
    return file + ":" + std::to_string(line0) + ":" + std::to_string(col0) + "-" + std::to_string(line1) + ":" +
           std::to_string(col1);
  }
};

struct Judgment {
  ResourceContext ctx;
  std::set<std::string> rely;
  AssertPtr pre;
  CmdPtr cmd;
  AssertPtr post;

  std::string str() const {
    std::string a;
    bool first = true;
    for (const auto& x : rely) {
      if (!first) a += ",";
      a += x;
      first = false;
    }
    return pp(ctx) + " |-{" + a + "} {" + pp(pre) + "} " + pp(cmd) + " {" + pp(post) + "}";
  }
};

struct Derivation {
  RuleTag tag = RuleTag::SKP;
  Judgment conclusion;
  std::vector<Derivation> premises;
  // rule-specific data
  std::optional<AssertPtr> frame;                       // FRA
  std::optional<std::set<std::string>> aux;             // AUX
  std::optional<std::pair<std::string, std::string>> rename;  // REN: old, fresh
  SourceSpan span;
};

enum class ProofMode { CSL, DCSL };

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct CheckFailure {
  std::string condition;
  std::string detail;
  std::optional<std::string> counterexample;
};

struct NodeReport {
  int index = 0;
  std::string rule;
  std::string judgment;
  std::string span;
  bool ok = true;
  std::vector<CheckFailure> failures;
  std::vector<std::string> notes;  // e.g. a semantic check hit its cell cap
};

struct CheckReport {
  bool accepted = true;
  std::vector<NodeReport> nodes;
};

// ---------------------------------------------------------------------------
// Well-formedness
// ---------------------------------------------------------------------------

inline std::string join_names(const std::set<std::string>& s) {
  std::string out = "{";
  bool first = true;
  for (const auto& x : s) {
    if (!first) out += ", ";
    out += x;
    first = false;
  }
  return out + "}";
}

inline std::set<std::string> set_minus(const std::set<std::string>& a, const std::set<std::string>& b) {
  std::set<std::string> out;
  for (const auto& x : a)
    if (!b.count(x)) out.insert(x);
  return out;
}

inline std::set<std::string> set_inter(const std::set<std::string>& a, const std::set<std::string>& b) {
  std::set<std::string> out;
  for (const auto& x : a)
    if (b.count(x)) out.insert(x);
  return out;
}

inline std::set<std::string> set_union(const std::set<std::string>& a, const std::set<std::string>& b) {
  std::set<std::string> out = a;
  out.insert(b.begin(), b.end());
  return out;
}

// FV(P,Q) within the rely set; FV(C) within rely plus protected variables;
// context entries well shaped.
inline std::vector<std::string> check_wellformed(const Judgment& j) {
  std::vector<std::string> out;
  std::set<std::string> fvpq = set_union(free_vars(j.pre), free_vars(j.post));
  std::set<std::string> extra = set_minus(fvpq, j.rely);
  if (!extra.empty()) out.push_back("FV(P,Q) not within the rely set: " + join_names(extra) + " escape");
  std::set<std::string> allowed = set_union(j.rely, j.ctx.protected_all());
  std::set<std::string> extrac = set_minus(free_vars(j.cmd), allowed);
  if (!extrac.empty())
    out.push_back("FV(C) not within rely or protected variables: " + join_names(extrac) + " escape");
  std::set<std::string> seen;
  for (const auto& e : j.ctx.entries) {
    if (!seen.insert(e.name).second) out.push_back("duplicate resource '" + e.name + "' in the context");
    std::set<std::string> fvr = set_minus(free_vars(e.invariant), e.protected_vars);
    if (!fvr.empty())
      out.push_back("invariant of '" + e.name + "' mentions unprotected variables " + join_names(fvr));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Semantic validity of a basic-command triple
// ---------------------------------------------------------------------------

struct SlTripleReport {
  bool ok = true;
  bool exhaustive = true;
  long long alloc_exhausted = 0;  // precondition states with no free run
  std::string detail;
  std::optional<std::string> counterexample;
};

// {P} c {Q} holds over the bounds: from every (s,h) with s,h |= P, the
// command does not fault and every outcome satisfies Q. Allocation is
// checked against every free run.
inline SlTripleReport check_sl_triple(const AssertPtr& pre, const BasicCmd& c, const AssertPtr& post,
                                      const DomainBounds& bounds, const PredicateTable& preds) {
  AssertionEval ev(bounds, preds);
  SlTripleReport rep;
  std::set<std::string> fv = free_vars(pre);
  std::set<std::string> fvc;
  collect_free_vars(c, fvc);
  fv.insert(fvc.begin(), fvc.end());
  for (const auto& x : free_vars(post)) fv.insert(x);
  std::map<std::string, Value> base;
  for (const auto& x : fv) base[x] = bounds.quantifier_values.front();
  std::map<std::string, std::vector<Value>> doms;
  for (const auto& x : fv) doms[x] = bounds.quantifier_values;
  size_t cap = default_semantic_cap(bounds);
  for (const Store& s : enumerate_stores(Store(base), {fv.begin(), fv.end()}, doms)) {
    std::vector<Heap> pre_heaps;
    auto mp = ev.models(s, pre, cap);
    if (mp && mp->is_explicit() && !mp->truncated) {
      pre_heaps = mp->heaps;
      rep.exhaustive = rep.exhaustive && !mp->capped;
    } else if (mp && mp->kind == ModelSet::Kind::Explicit && mp->heaps.empty()) {
      continue;
    } else {
      bool complete = true;
      for (const Heap& h : enumerate_heaps(bounds, cap, 200000, &complete)) {
        try {
          if (ev.sat(s, h, pre)) pre_heaps.push_back(h);
        } catch (const UnfoldError&) {
          rep.exhaustive = false;
        }
      }
      rep.exhaustive = rep.exhaustive && complete && cap >= bounds.locations.size();
    }
    for (const Heap& h : pre_heaps) {
      BasicResult r = exec_basic(c, s, h, bounds, AllocMode::All);
      if (r.abort) {
        rep.ok = false;
        rep.detail = "aborts: " + *r.abort;
        rep.counterexample = s.dump() + " " + h.dump();
        return rep;
      }
      // A precondition state leaving no free run is a limit of the bounded
      // location universe, not a fault of the command: the bounded semantics
      // has no continuation there. Counted, never a verdict.
      if (r.exhausted) ++rep.alloc_exhausted;
      for (const auto& [s2, h2] : r.next) {
        if (!ev.sat(s2, h2, post)) {
          rep.ok = false;
          rep.detail = "postcondition fails after execution";
          rep.counterexample = s.dump() + " " + h.dump() + " -> " + s2.dump() + " " + h2.dump();
          return rep;
        }
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Derivation checking
// ---------------------------------------------------------------------------

namespace detail {

struct ProofChecker {
  ProofMode mode;
  const DomainBounds& bounds;
  const PredicateTable& preds;
  CheckReport report;
  int next_index = 0;

  void fail(NodeReport& nr, std::string condition, std::string detail,
            std::optional<std::string> cex = std::nullopt) {
    nr.ok = false;
    nr.failures.push_back({std::move(condition), std::move(detail), std::move(cex)});
  }

  void require_equal_assert(NodeReport& nr, const char* what, const AssertPtr& got, const AssertPtr& want) {
    if (!assertions_equal(got, want))
      fail(nr, what, std::string("expected `") + pp(want) + "` but found `" + pp(got) + "`");
  }
  void require_equal_cmd(NodeReport& nr, const char* what, const CmdPtr& got, const CmdPtr& want) {
    if (!commands_equal(got, want))
      fail(nr, what, std::string("expected `") + pp(want) + "` but found `" + pp(got) + "`");
  }
  void require_equal_ctx(NodeReport& nr, const char* what, const ResourceContext& got, const ResourceContext& want) {
    if (!contexts_equal(got, want))
      fail(nr, what, std::string("expected context `") + pp(want) + "` but found `" + pp(got) + "`");
  }
  void require_rely(NodeReport& nr, const char* what, const std::set<std::string>& got,
                    const std::set<std::string>& want) {
    if (got != want) fail(nr, what, "expected rely " + join_names(want) + " but found " + join_names(got));
  }

  void check_entails(NodeReport& nr, const char* what, const AssertPtr& p, const AssertPtr& q) {
    EntailmentReport er = entails(p, q, bounds, preds);
    if (!er.holds) {
      std::string cex = er.store ? er.store->dump() + " " + er.heap->dump() : std::string();
      fail(nr, what, "`" + pp(p) + "` does not entail `" + pp(q) + "`", cex);
    } else if (!er.exhaustive) {
      nr.notes.push_back(std::string(what) + ": checked up to the semantic cell cap only");
    }
  }

  void check_precision(NodeReport& nr, const ResourceEntry& e) {
    std::set<std::string> fvr = set_minus(free_vars(e.invariant), e.protected_vars);
    if (!fvr.empty())
      fail(nr, "invariant-variables", "invariant of '" + e.name + "' mentions unprotected " + join_names(fvr));
    PrecisionReport pr = check_precise(e.invariant, bounds, preds);
    if (!pr.precise) {
      std::string cex;
      if (pr.store) cex = pr.store->dump() + " subheaps " + pr.sub1->dump() + " and " + pr.sub2->dump();
      fail(nr, "invariant-precision", "invariant of '" + e.name + "' is not precise", cex);
    } else if (!pr.exhaustive) {
      nr.notes.push_back("invariant-precision: checked up to the semantic cell cap only");
    }
  }

  void check_node(const Derivation& d) {
    NodeReport nr;
    nr.index = next_index++;
    nr.rule = rule_tag_name(d.tag);
    nr.judgment = d.conclusion.str();
    nr.span = d.span.str();

    for (const auto& v : check_wellformed(d.conclusion)) fail(nr, "well-formed", v);

    if (d.premises.size() != rule_tag_arity(d.tag)) {
      fail(nr, "arity",
           std::string(rule_tag_name(d.tag)) + " expects " + std::to_string(rule_tag_arity(d.tag)) +
               " premise(s), found " + std::to_string(d.premises.size()));
      report.nodes.push_back(std::move(nr));
      report.accepted = false;
      for (const auto& p : d.premises) check_node(p);
      return;
    }

    const Judgment& j = d.conclusion;
    switch (d.tag) {
      case RuleTag::SKP: {
        if (!is_skip(j.cmd)) fail(nr, "command-shape", "SKP concludes about skip");
        require_equal_assert(nr, "pre-post-match", j.post, j.pre);
        break;
      }
      case RuleTag::SEQ: {
        const auto* sq = std::get_if<Command::Seq>(&j.cmd->node);
        if (!sq) {
          fail(nr, "command-shape", "SEQ concludes about a sequential composition");
          break;
        }
        const Judgment& p1 = d.premises[0].conclusion;
        const Judgment& p2 = d.premises[1].conclusion;
        require_equal_ctx(nr, "context-match", p1.ctx, j.ctx);
        require_equal_ctx(nr, "context-match", p2.ctx, j.ctx);
        require_equal_cmd(nr, "first-command", p1.cmd, sq->first);
        require_equal_cmd(nr, "second-command", p2.cmd, sq->second);
        require_equal_assert(nr, "precondition", p1.pre, j.pre);
        require_equal_assert(nr, "mid-assertion", p2.pre, p1.post);
        require_equal_assert(nr, "postcondition", p2.post, j.post);
        require_rely(nr, "rely-union", j.rely, set_union(p1.rely, p2.rely));
        break;
      }
      case RuleTag::BC: {
        const auto* b = std::get_if<Command::Basic>(&j.cmd->node);
        if (!b) {
          fail(nr, "command-shape", "BC concludes about a basic command");
          break;
        }
        std::set<std::string> overlap = set_inter(mod_vars(j.cmd), j.ctx.protected_all());
        if (!overlap.empty())
          fail(nr, "modifies-protected", "basic command modifies protected variables " + join_names(overlap));
        SlTripleReport tr = check_sl_triple(j.pre, b->cmd, j.post, bounds, preds);
        if (!tr.ok) fail(nr, "sl-triple", tr.detail, tr.counterexample);
        if (tr.ok && !tr.exhaustive) nr.notes.push_back("sl-triple: checked up to the semantic cell cap only");
        if (tr.alloc_exhausted > 0)
          nr.notes.push_back("sl-triple: " + std::to_string(tr.alloc_exhausted) +
                             " precondition state(s) left no free allocation run");
        break;
      }
      case RuleTag::FRA: {
        if (!d.frame) {
          fail(nr, "rule-data", "FRA carries a frame assertion");
          break;
        }
        const AssertPtr& r = *d.frame;
        const Judgment& p = d.premises[0].conclusion;
        require_equal_ctx(nr, "context-match", p.ctx, j.ctx);
        require_equal_cmd(nr, "command-match", p.cmd, j.cmd);
        require_equal_assert(nr, "framed-pre", j.pre, asep(p.pre, r));
        require_equal_assert(nr, "framed-post", j.post, asep(p.post, r));
        require_rely(nr, "rely-extends", j.rely, set_union(p.rely, free_vars(r)));
        std::set<std::string> overlap = set_inter(mod_vars(j.cmd), free_vars(r));
        if (!overlap.empty())
          fail(nr, "frame-side-condition", "command modifies frame variables " + join_names(overlap));
        break;
      }
      case RuleTag::LP: {
        const auto* wl = std::get_if<Command::While>(&j.cmd->node);
        if (!wl) {
          fail(nr, "command-shape", "LP concludes about a while loop");
          break;
        }
        const Judgment& p = d.premises[0].conclusion;
        require_equal_ctx(nr, "context-match", p.ctx, j.ctx);
        require_equal_cmd(nr, "body-command", p.cmd, wl->body);
        require_equal_assert(nr, "loop-invariant-pre", p.pre, aand(j.pre, alift(wl->cond)));
        require_equal_assert(nr, "loop-invariant-post", p.post, j.pre);
        require_equal_assert(nr, "negated-guard-post", j.post, aand(j.pre, anot(alift(wl->cond))));
        require_rely(nr, "rely-match", p.rely, j.rely);
        break;
      }
      case RuleTag::CONJ: {
        const Judgment& p1 = d.premises[0].conclusion;
        const Judgment& p2 = d.premises[1].conclusion;
        require_equal_ctx(nr, "context-match", p1.ctx, j.ctx);
        require_equal_ctx(nr, "context-match", p2.ctx, j.ctx);
        require_equal_cmd(nr, "command-match", p1.cmd, j.cmd);
        require_equal_cmd(nr, "command-match", p2.cmd, j.cmd);
        require_equal_assert(nr, "conjoined-pre", j.pre, aand(p1.pre, p2.pre));
        require_equal_assert(nr, "conjoined-post", j.post, aand(p1.post, p2.post));
        require_rely(nr, "rely-union", j.rely, set_union(p1.rely, p2.rely));
        break;
      }
      case RuleTag::IF: {
        const auto* br = std::get_if<Command::If>(&j.cmd->node);
        if (!br) {
          fail(nr, "command-shape", "IF concludes about a conditional");
          break;
        }
        const Judgment& p1 = d.premises[0].conclusion;
        const Judgment& p2 = d.premises[1].conclusion;
        require_equal_ctx(nr, "context-match", p1.ctx, j.ctx);
        require_equal_ctx(nr, "context-match", p2.ctx, j.ctx);
        require_equal_cmd(nr, "then-command", p1.cmd, br->then_branch);
        require_equal_cmd(nr, "else-command", p2.cmd, br->else_branch);
        require_equal_assert(nr, "then-pre", p1.pre, aand(j.pre, alift(br->cond)));
        require_equal_assert(nr, "else-pre", p2.pre, aand(j.pre, anot(alift(br->cond))));
        require_equal_assert(nr, "then-post", p1.post, j.post);
        require_equal_assert(nr, "else-post", p2.post, j.post);
        require_rely(nr, "rely-union", j.rely, set_union(p1.rely, p2.rely));
        break;
      }
      case RuleTag::CONS: {
        const Judgment& p = d.premises[0].conclusion;
        require_equal_ctx(nr, "context-match", p.ctx, j.ctx);
        require_equal_cmd(nr, "command-match", p.cmd, j.cmd);
        check_entails(nr, "pre-entailment", j.pre, p.pre);
        check_entails(nr, "post-entailment", p.post, j.post);
        std::set<std::string> missing = set_minus(p.rely, j.rely);
        if (!missing.empty())
          fail(nr, "rely-grows", "premise rely exceeds conclusion rely by " + join_names(missing));
        break;
      }
      case RuleTag::AUX: {
        if (!d.aux) {
          fail(nr, "rule-data", "AUX carries the auxiliary variable set");
          break;
        }
        const std::set<std::string>& xs = *d.aux;
        const Judgment& p = d.premises[0].conclusion;
        require_equal_ctx(nr, "context-match", p.ctx, j.ctx);
        std::set<std::string> fvpq = set_union(free_vars(j.pre), free_vars(j.post));
        if (!set_inter(xs, fvpq).empty())
          fail(nr, "aux-free-variables", "auxiliary variables occur in pre/post: " + join_names(set_inter(xs, fvpq)));
        if (!set_inter(xs, j.ctx.protected_all()).empty())
          fail(nr, "aux-protected", "auxiliary variables are protected: " +
                                        join_names(set_inter(xs, j.ctx.protected_all())));
        if (!is_aux_set(p.cmd, xs))
          fail(nr, "aux-occurrences", join_names(xs) + " is not auxiliary for the premise command");
        else
          require_equal_cmd(nr, "erased-command", j.cmd, erase_aux(p.cmd, xs));
        require_equal_assert(nr, "precondition", p.pre, j.pre);
        require_equal_assert(nr, "postcondition", p.post, j.post);
        require_rely(nr, "rely-shrinks", p.rely, set_union(j.rely, xs));
        break;
      }
      case RuleTag::REN: {
        if (!d.rename) {
          fail(nr, "rule-data", "REN carries the renamed resource pair");
          break;
        }
        auto [r, r2] = *d.rename;
        const Judgment& p = d.premises[0].conclusion;
        bool fresh = true;
        if (res_names(j.cmd).count(r2)) {
          fail(nr, "fresh-in-command", "'" + r2 + "' already occurs in the command");
          fresh = false;
        }
        if (j.ctx.names().count(r2)) {
          fail(nr, "fresh-in-context", "'" + r2 + "' already occurs in the context");
          fresh = false;
        }
        if (fresh) {
          require_equal_ctx(nr, "renamed-context", p.ctx, j.ctx.renamed(r, r2));
          require_equal_cmd(nr, "renamed-command", p.cmd, rename_resource(j.cmd, r, r2));
        }
        require_equal_assert(nr, "precondition", p.pre, j.pre);
        require_equal_assert(nr, "postcondition", p.post, j.post);
        require_rely(nr, "rely-match", p.rely, j.rely);
        break;
      }
      case RuleTag::PAR: {
        const auto* pr = std::get_if<Command::Par>(&j.cmd->node);
        if (!pr) {
          fail(nr, "command-shape", "PAR concludes about a parallel composition");
          break;
        }
        const Judgment& p1 = d.premises[0].conclusion;
        const Judgment& p2 = d.premises[1].conclusion;
        require_equal_ctx(nr, "context-match", p1.ctx, j.ctx);
        require_equal_ctx(nr, "context-match", p2.ctx, j.ctx);
        require_equal_cmd(nr, "left-command", p1.cmd, pr->left);
        require_equal_cmd(nr, "right-command", p2.cmd, pr->right);
        require_equal_assert(nr, "split-pre", j.pre, asep(p1.pre, p2.pre));
        require_equal_assert(nr, "split-post", j.post, asep(p1.post, p2.post));
        require_rely(nr, "rely-union", j.rely, set_union(p1.rely, p2.rely));
        if (mode == ProofMode::CSL) {
          std::set<std::string> o1 = set_inter(mod_vars(pr->left), p2.rely);
          std::set<std::string> o2 = set_inter(mod_vars(pr->right), p1.rely);
          if (!o1.empty() || !o2.empty())
            fail(nr, "par-side-condition-csl",
                 "mod(left) meets the right rely set on " + join_names(o1) + "; mod(right) meets the left rely set on " +
                     join_names(o2));
        } else {
          std::set<std::string> fv1 = set_union(set_union(free_vars(p1.pre), free_vars(p1.cmd)), free_vars(p1.post));
          std::set<std::string> fv2 = set_union(set_union(free_vars(p2.pre), free_vars(p2.cmd)), free_vars(p2.post));
          std::set<std::string> o1 = set_inter(mod_vars(pr->left), fv2);
          std::set<std::string> o2 = set_inter(mod_vars(pr->right), fv1);
          if (!o1.empty() || !o2.empty())
            fail(nr, "par-side-condition-dcsl",
                 "mod(left) meets the right triple on " + join_names(o1) + "; mod(right) meets the left triple on " +
                     join_names(o2));
        }
        break;
      }
      case RuleTag::CR: {
        const auto* wc = std::get_if<Command::With>(&j.cmd->node);
        if (!wc) {
          fail(nr, "command-shape", "CR concludes about a conditional critical region");
          break;
        }
        if (j.ctx.entries.empty() || j.ctx.entries.back().name != wc->res) {
          fail(nr, "context-shape", "the context ends with an entry for '" + wc->res + "'");
          break;
        }
        ResourceEntry entry = j.ctx.entries.back();
        ResourceContext gamma = j.ctx;
        gamma.entries.pop_back();
        const Judgment& p = d.premises[0].conclusion;
        require_equal_ctx(nr, "context-shrinks", p.ctx, gamma);
        require_equal_cmd(nr, "body-command", p.cmd, wc->body);
        require_equal_assert(nr, "region-pre", p.pre, asep(aand(j.pre, alift(wc->cond)), entry.invariant));
        require_equal_assert(nr, "region-post", p.post, asep(j.post, entry.invariant));
        require_rely(nr, "rely-extends", p.rely, set_union(j.rely, entry.protected_vars));
        check_precision(nr, entry);
        break;
      }
      case RuleTag::RES: {
        const auto* rc = std::get_if<Command::Res>(&j.cmd->node);
        if (!rc) {
          fail(nr, "command-shape", "RES concludes about a local resource");
          break;
        }
        const Judgment& p = d.premises[0].conclusion;
        if (p.ctx.entries.empty() || p.ctx.entries.back().name != rc->res) {
          fail(nr, "context-shape", "the premise context ends with an entry for '" + rc->res + "'");
          break;
        }
        ResourceEntry entry = p.ctx.entries.back();
        ResourceContext gamma = p.ctx;
        gamma.entries.pop_back();
        require_equal_ctx(nr, "context-grows", gamma, j.ctx);
        require_equal_cmd(nr, "body-command", p.cmd, rc->body);
        require_equal_assert(nr, "scoped-pre", j.pre, asep(p.pre, entry.invariant));
        require_equal_assert(nr, "scoped-post", j.post, asep(p.post, entry.invariant));
        require_rely(nr, "rely-extends", j.rely, set_union(p.rely, entry.protected_vars));
        check_precision(nr, entry);
        break;
      }
    }

    if (!nr.ok) report.accepted = false;
    report.nodes.push_back(std::move(nr));
    for (const auto& p : d.premises) check_node(p);
  }
};

}  // namespace detail

// Validates every rule instance of a derivation tree: structural equalities,
// side conditions, well-formedness, and the semantic obligations (entailments,
// basic triples, precision of introduced invariants). All nodes are checked;
// nothing is inferred.
inline CheckReport check_derivation(const Derivation& d, ProofMode mode, const DomainBounds& bounds,
                                    const PredicateTable& preds) {
  detail::ProofChecker pc{mode, bounds, preds, {}, 0};
  pc.check_node(d);
  return std::move(pc.report);
}

}  // namespace csl
