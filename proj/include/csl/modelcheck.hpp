#pragma once

#include <algorithm>
#include <deque>
#include <future>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "csl/assertions.hpp"
#include "csl/ast.hpp"
#include "csl/pretty.hpp"
#include "csl/proof.hpp"
#include "csl/sos.hpp"

namespace csl {

// ---------------------------------------------------------------------------
// Bounded exhaustive verification of {P} C {Q} under a resource context
// ---------------------------------------------------------------------------

struct ExploreOptions {
  int max_depth = 64;
  size_t init_cells = SIZE_MAX;  // cap on the size of enumerated initial heaps
  std::map<std::string, std::vector<Value>> var_domains;  // initial-store hints
  std::set<std::string> declared_vars;  // store domain; relevant variables if empty
  std::vector<AssertPtr> always;        // assertions checked at every reachable state
  int jobs = 1;
};

struct ExploreReport {
  enum class Verdict { Valid, AbortFound, PostViolated, BoundExhausted };
  Verdict verdict = Verdict::Valid;
  long long states_visited = 0;
  int depth_reached = 0;
  long long initial_states = 0;
  bool init_exhaustive = true;
  std::vector<std::string> counterexample;
  long long prop3_checked = 0;
  long long prop3_violations = 0;
  long long always_checked = 0;
  long long blocked_states = 0;
  long long deadlock_states = 0;
  long long exhaustion_events = 0;
  std::string note;
  std::string bounds_str;

  static const char* verdict_name(Verdict v) {
    switch (v) {
      case Verdict::Valid: return "valid";
      case Verdict::AbortFound: return "abort-found";
      case Verdict::PostViolated: return "postcondition-violated";
      case Verdict::BoundExhausted: return "bound-exhausted";
    }
    return "?";
  }
};

inline bool contains_within(const CmdPtr& c) {
  if (std::holds_alternative<Command::Within>(c->node)) return true;
  if (const auto* s = std::get_if<Command::Seq>(&c->node))
    return contains_within(s->first) || contains_within(s->second);
  if (const auto* i = std::get_if<Command::If>(&c->node))
    return contains_within(i->then_branch) || contains_within(i->else_branch);
  if (const auto* w = std::get_if<Command::While>(&c->node)) return contains_within(w->body);
  if (const auto* r = std::get_if<Command::Res>(&c->node)) return contains_within(r->body);
  if (const auto* w = std::get_if<Command::With>(&c->node)) return contains_within(w->body);
  if (const auto* p = std::get_if<Command::Par>(&c->node))
    return contains_within(p->left) || contains_within(p->right);
  return false;
}

namespace detail {

struct SearchNode {
  CmdPtr cmd;
  MachineState state;
};

struct ParentLink {
  std::string parent;  // empty for initial states
  Rule rule = Rule::E;
  std::string cmd_str;
  std::string state_str;
};

inline std::string state_key(const CmdPtr& c, const MachineState& st) { return pp(c) + " @ " + st.dump(); }

inline std::vector<std::string> rebuild_trace(const std::map<std::string, ParentLink>& parents,
                                              const std::string& leaf_key, const std::string& last_line) {
  std::vector<std::string> lines;
  std::string k = leaf_key;
  while (!k.empty()) {
    auto it = parents.find(k);
    if (it == parents.end()) break;
    const ParentLink& pl = it->second;
    std::string rule = pl.parent.empty() ? "-" : rule_name(pl.rule);
    lines.push_back(rule + " " + pl.cmd_str + " " + pl.state_str);
    k = pl.parent;
  }
  std::reverse(lines.begin(), lines.end());
  for (size_t i = 0; i < lines.size(); ++i) lines[i] = std::to_string(i) + " " + lines[i];
  if (!last_line.empty()) lines.push_back(last_line);
  return lines;
}

}  // namespace detail

// Enumerates every initial state satisfying P * inv(ctx), then explores the
// program-transition closure breadth first. Verdicts: an abort transition
// anywhere, a terminal state violating Q * inv(ctx) (or an `always` clause
// violated anywhere), a still-growing frontier at the depth bound, or valid.
inline ExploreReport check_valid(const ResourceContext& ctx, const AssertPtr& pre, const CmdPtr& prog,
                                 const AssertPtr& post, const DomainBounds& bounds, const PredicateTable& preds,
                                 const ExploreOptions& opts = {}) {
  AssertionEval ev(bounds, preds);
  ExploreReport rep;
  rep.bounds_str = bounds.str();

  AssertPtr init_assert = asep(pre, inv_all(ctx));
  AssertPtr final_assert = asep(post, inv_all(ctx));

  std::set<std::string> relevant = free_vars(prog);
  for (const auto& x : free_vars(pre)) relevant.insert(x);
  for (const auto& x : free_vars(post)) relevant.insert(x);
  for (const auto& x : ctx.protected_all()) relevant.insert(x);
  for (const auto& al : opts.always)
    for (const auto& x : free_vars(al)) relevant.insert(x);

  std::set<std::string> domain = opts.declared_vars.empty() ? relevant : opts.declared_vars;
  std::map<std::string, Value> base;
  for (const auto& x : domain) {
    auto it = opts.var_domains.find(x);
    base[x] = (it != opts.var_domains.end() && !it->second.empty()) ? it->second.front()
                                                                    : bounds.quantifier_values.front();
  }
  std::map<std::string, std::vector<Value>> doms;
  std::vector<std::string> vary;
  for (const auto& x : relevant) {
    if (!domain.count(x)) continue;
    auto it = opts.var_domains.find(x);
    doms[x] = (it != opts.var_domains.end()) ? it->second : bounds.quantifier_values;
    vary.push_back(x);
  }

  ResourceConfig rho0({}, {}, ctx.names());
  size_t init_cap = std::min(opts.init_cells, bounds.locations.size());
  bool prop3_applicable = !contains_within(prog);
  std::set<std::string> ctx_names = ctx.names();

  std::map<std::string, detail::ParentLink> parents;
  std::set<std::string> visited;
  std::vector<detail::SearchNode> frontier;

  for (const Store& s0 : enumerate_stores(Store(base), vary, doms)) {
    std::vector<Heap> heaps;
    auto m = ev.models(s0, init_assert, init_cap);
    if (m && m->is_explicit() && !m->truncated) {
      heaps = m->heaps;
      if (m->capped && opts.init_cells > bounds.locations.size()) rep.init_exhaustive = false;
    } else {
      bool complete = true;
      for (const Heap& h : enumerate_heaps(bounds, init_cap, 200000, &complete)) {
        try {
          if (ev.sat(s0, h, init_assert)) heaps.push_back(h);
        } catch (const UnfoldError&) {
          rep.init_exhaustive = false;
        }
      }
      if (!complete) rep.init_exhaustive = false;
    }
    for (const Heap& h0 : heaps) {
      MachineState st{s0, h0, rho0};
      std::string key = detail::state_key(prog, st);
      if (visited.insert(key).second) {
        parents[key] = {"", Rule::E, pp(prog), st.dump()};
        frontier.push_back({prog, st});
        ++rep.initial_states;
      }
    }
  }

  auto fail_at = [&](ExploreReport::Verdict v, const std::string& key, const std::string& last,
                     const std::string& note) {
    rep.verdict = v;
    rep.counterexample = detail::rebuild_trace(parents, key, last);
    rep.note = note;
  };

  int depth = 0;
  while (!frontier.empty()) {
    if (depth >= opts.max_depth) {
      rep.verdict = ExploreReport::Verdict::BoundExhausted;
      rep.note = "frontier of " + std::to_string(frontier.size()) + " states at depth " + std::to_string(depth);
      rep.states_visited = (long long)visited.size();
      rep.depth_reached = depth;
      return rep;
    }

    // Expansion is pure, so frontier chunks may run on worker threads; all
    // bookkeeping happens in submission order below, keeping results
    // independent of the chunking.
    std::vector<StepResult> results(frontier.size());
    int jobs = std::max(1, opts.jobs);
    if (jobs == 1 || frontier.size() < 2) {
      for (size_t i = 0; i < frontier.size(); ++i)
        results[i] = step(frontier[i].cmd, frontier[i].state, bounds, AllocMode::All);
    } else {
      std::vector<std::future<void>> workers;
      size_t chunk = (frontier.size() + jobs - 1) / jobs;
      for (int w = 0; w < jobs; ++w) {
        size_t lo = w * chunk, hi = std::min(frontier.size(), (w + 1) * chunk);
        if (lo >= hi) break;
        workers.push_back(std::async(std::launch::async, [&, lo, hi] {
          for (size_t i = lo; i < hi; ++i)
            results[i] = step(frontier[i].cmd, frontier[i].state, bounds, AllocMode::All);
        }));
      }
      for (auto& w : workers) w.get();
    }

    std::vector<detail::SearchNode> next;
    for (size_t i = 0; i < frontier.size(); ++i) {
      const auto& node = frontier[i];
      std::string key = detail::state_key(node.cmd, node.state);

      for (const auto& al : opts.always) {
        ++rep.always_checked;
        if (!ev.sat(node.state.store, node.state.heap, al)) {
          fail_at(ExploreReport::Verdict::PostViolated, key, "", "always clause violated: " + pp(al));
          rep.states_visited = (long long)visited.size();
          rep.depth_reached = depth;
          return rep;
        }
      }

      if (is_skip(node.cmd) && node.state.config == rho0) {
        if (!ev.sat(node.state.store, node.state.heap, final_assert)) {
          fail_at(ExploreReport::Verdict::PostViolated, key, "", "terminal state violates " + pp(final_assert));
          rep.states_visited = (long long)visited.size();
          rep.depth_reached = depth;
          return rep;
        }
      }

      const StepResult& r = results[i];
      rep.exhaustion_events += (long long)r.exhaustions.size();
      if (!r.aborts.empty()) {
        const AbortInfo& a = r.aborts.front();
        fail_at(ExploreReport::Verdict::AbortFound, key,
                std::string("ABORT ") + rule_name(a.rule) + " " + a.detail, "abort reachable");
        rep.states_visited = (long long)visited.size();
        rep.depth_reached = depth;
        return rep;
      }
      if (r.successors.empty() && !is_skip(node.cmd)) {
        ++rep.blocked_states;
        if (detail::waiting_on_region(node.cmd)) ++rep.deadlock_states;
      }
      for (const auto& suc : r.successors) {
        if (prop3_applicable) {
          ++rep.prop3_checked;
          std::set<std::string> lk = locked(suc.cmd);
          std::set<std::string> expect_d;
          for (const auto& nm : ctx_names)
            if (!lk.count(nm)) expect_d.insert(nm);
          bool shape = suc.state.config.owned() == lk && suc.state.config.locked_by_others().empty() &&
                       suc.state.config.available() == expect_d;
          if (!shape) ++rep.prop3_violations;
        }
        std::string skey = detail::state_key(suc.cmd, suc.state);
        if (visited.insert(skey).second) {
          parents[skey] = {key, suc.rule, pp(suc.cmd), suc.state.dump()};
          next.push_back({suc.cmd, suc.state});
        }
      }
    }
    frontier = std::move(next);
    ++depth;
  }

  rep.states_visited = (long long)visited.size();
  rep.depth_reached = depth;
  return rep;
}

// ---------------------------------------------------------------------------
// The Safe predicate
// ---------------------------------------------------------------------------

struct SafeQuery {
  int n = 0;
  CmdPtr cmd;
  Store store;
  Heap heap;
  ResourceConfig config;
  ResourceContext ctx;
  AssertPtr post;
  std::set<std::string> rely;
};

struct SafeResult {
  bool ok = true;
  std::string failed_clause;
  std::string detail;
};

namespace detail {

class SafeChecker {
 public:
  SafeChecker(const ResourceContext& ctx, const AssertPtr& post, const std::set<std::string>& rely,
              const DomainBounds& bounds, const PredicateTable& preds)
      : ctx_(ctx), post_(post), rely_(rely), bounds_(bounds), preds_(preds), ev_(bounds, preds) {}

  SafeResult check(int n, const CmdPtr& c, const Store& s, const Heap& h, const ResourceConfig& rho) {
    if (n <= 0) return {};
    std::string key = std::to_string(n) + "|" + state_key(c, MachineState{s, h, rho});
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    SafeResult r = check_uncached(n, c, s, h, rho);
    memo_.emplace(std::move(key), r);
    return r;
  }

 private:
  const ResourceContext& ctx_;
  const AssertPtr& post_;
  const std::set<std::string>& rely_;
  const DomainBounds& bounds_;
  const PredicateTable& preds_;
  AssertionEval ev_;
  std::map<std::string, SafeResult> memo_;

  std::vector<Heap> invariant_heaps(const Store& s, const std::set<std::string>& avail, size_t cap) {
    AssertPtr inv = inv_subset_known(ctx_, avail);
    auto m = ev_.models(s, inv, cap);
    if (m && m->is_explicit() && !m->truncated) return m->heaps;
    std::vector<Heap> out;
    for (const Heap& h : enumerate_heaps(bounds_, cap, 100000)) {
      try {
        if (ev_.sat(s, h, inv)) out.push_back(h);
      } catch (const UnfoldError&) {
      }
    }
    return out;
  }

  SafeResult check_uncached(int n, const CmdPtr& c, const Store& s, const Heap& h, const ResourceConfig& rho) {
    MachineState st{s, h, rho};
    // (i) a finished program satisfies the postcondition
    if (is_skip(c) && !ev_.sat(s, h, post_))
      return {false, "(i)", "skip state does not satisfy " + pp(post_) + " at " + st.dump()};
    // (ii) the next program transition cannot abort
    StepResult sr = step(c, st, bounds_, AllocMode::All);
    if (sr.has_aborts())
      return {false, "(ii)", std::string("abort ") + rule_name(sr.aborts.front().rule) + ": " +
                                 sr.aborts.front().detail + " at " + st.dump()};
    // (iii) the next transition does not touch variables protected by
    // resources the program does not hold
    std::set<std::string> unowned_pv;
    for (const auto& r : rho.locked_by_others()) {
      auto pv = ctx_.protected_by(r);
      unowned_pv.insert(pv.begin(), pv.end());
    }
    for (const auto& r : rho.available()) {
      auto pv = ctx_.protected_by(r);
      unowned_pv.insert(pv.begin(), pv.end());
    }
    std::set<std::string> bad = set_inter(chng_vars(c), unowned_pv);
    if (!bad.empty())
      return {false, "(iii)", "next transition may write protected " + join_names(bad) + " at " + st.dump()};
    // (iv) every combined transition preserves the shared-state split
    EnvParams params{rely_, ctx_, bounds_, free_vars(post_)};
    for (const Heap& hg : invariant_heaps(s, rho.available(), bounds_.locations.size())) {
      if (!heap_disjoint(h, hg)) continue;
      CombinedResult comb = combined_step(c, st, hg, params, &ev_);
      for (const auto& suc : comb.program.successors) {
        SafeResult sub = split_and_recurse(n, suc.cmd, suc.state);
        if (!sub.ok) return sub;
      }
      for (const auto& es : comb.env) {
        // natural split: local heap kept, shared part replaced
        SafeResult sub = check(n - 1, c, es.state.store, h, es.state.config);
        if (sub.ok) continue;
        Heap total = heap_union(h, es.shared);
        SafeResult alt = split_and_recurse(n, c, MachineState{es.state.store, total, es.state.config});
        if (!alt.ok)
          return {false, "(iv)",
                  "no invariant-preserving split after an environment step to " + es.state.dump()};
      }
    }
    return {};
  }

  // Find h' u h'G = state.heap with the available invariants on h'G and the
  // remainder safe for n-1 steps.
  SafeResult split_and_recurse(int n, const CmdPtr& c, const MachineState& state) {
    AssertPtr dinv = inv_subset_known(ctx_, state.config.available());
    auto m = ev_.models(state.store, dinv, state.heap.size());
    std::vector<Heap> candidates;
    if (m && m->is_explicit() && !m->truncated) {
      candidates = m->heaps;
    } else {
      candidates = subheaps(state.heap);
      std::vector<Heap> filtered;
      for (const Heap& g : candidates) {
        try {
          if (ev_.sat(state.store, g, dinv)) filtered.push_back(g);
        } catch (const UnfoldError&) {
        }
      }
      candidates = std::move(filtered);
    }
    for (const Heap& g : candidates) {
      if (!is_subheap(g, state.heap)) continue;
      SafeResult sub = check(n - 1, c, state.store, heap_subtract(state.heap, g), state.config);
      if (sub.ok) return {};
    }
    return {false, "(iv)",
            "no invariant-preserving split of " + state.heap.dump() + " after stepping to " + pp(c)};
  }
};

}  // namespace detail

inline SafeResult check_safe(const SafeQuery& q, const DomainBounds& bounds, const PredicateTable& preds) {
  detail::SafeChecker sc(q.ctx, q.post, q.rely, bounds, preds);
  return sc.check(q.n, q.cmd, q.store, q.heap, q.config);
}

// ---------------------------------------------------------------------------
// Soundness smoke test: an accepted derivation must verify
// ---------------------------------------------------------------------------

struct SmokeReport {
  bool derivation_accepted = false;
  ExploreReport explore;
  bool red_flag = false;  // accepted by the checker yet refuted by exploration
};

inline SmokeReport soundness_smoke(const Derivation& d, const DomainBounds& bounds, const PredicateTable& preds,
                                   const ExploreOptions& opts = {}, ProofMode mode = ProofMode::CSL) {
  SmokeReport rep;
  CheckReport cr = check_derivation(d, mode, bounds, preds);
  rep.derivation_accepted = cr.accepted;
  if (!cr.accepted) return rep;
  const Judgment& j = d.conclusion;
  rep.explore = check_valid(j.ctx, j.pre, j.cmd, j.post, bounds, preds, opts);
  rep.red_flag = rep.explore.verdict == ExploreReport::Verdict::AbortFound ||
                 rep.explore.verdict == ExploreReport::Verdict::PostViolated;
  return rep;
}

}  // namespace csl
