#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "csl/assertions.hpp"
#include "csl/ast.hpp"
#include "csl/pretty.hpp"
#include "csl/state.hpp"

namespace csl {

// ---------------------------------------------------------------------------
// Transition rules
// ---------------------------------------------------------------------------

enum class Rule {
  // program transitions
  S1, S2, LP, IF1, IF2, P1, P2, P3, R0, R1, R2, W0, W1, W2, BCT,
  // abort transitions
  RA, WA, RA1, RA2, BCA, SA, WA1, WA2, PA1, PA2,
  // environment transition
  E,
};

inline const char* rule_name(Rule r) {
  switch (r) {
    case Rule::S1: return "S1";
    case Rule::S2: return "S2";
    case Rule::LP: return "LP";
    case Rule::IF1: return "IF1";
    case Rule::IF2: return "IF2";
    case Rule::P1: return "P1";
    case Rule::P2: return "P2";
    case Rule::P3: return "P3";
    case Rule::R0: return "R0";
    case Rule::R1: return "R1";
    case Rule::R2: return "R2";
    case Rule::W0: return "W0";
    case Rule::W1: return "W1";
    case Rule::W2: return "W2";
    case Rule::BCT: return "BCT";
    case Rule::RA: return "RA";
    case Rule::WA: return "WA";
    case Rule::RA1: return "RA1";
    case Rule::RA2: return "RA2";
    case Rule::BCA: return "BCA";
    case Rule::SA: return "SA";
    case Rule::WA1: return "WA1";
    case Rule::WA2: return "WA2";
    case Rule::PA1: return "PA1";
    case Rule::PA2: return "PA2";
    case Rule::E: return "E";
  }
  return "?";
}

inline bool is_abort_rule(Rule r) {
  switch (r) {
    case Rule::RA:
    case Rule::WA:
    case Rule::RA1:
    case Rule::RA2:
    case Rule::BCA:
    case Rule::SA:
    case Rule::WA1:
    case Rule::WA2:
    case Rule::PA1:
    case Rule::PA2: return true;
    default: return false;
  }
}

// ---------------------------------------------------------------------------
// Basic-command denotation [c](s,h)
// ---------------------------------------------------------------------------

// Allocation either picks the lowest free run (deterministic interpreter
// traces) or enumerates every free run (complete exploration).
enum class AllocMode { Lowest, All };

struct BasicResult {
  std::vector<std::pair<Store, Heap>> next;
  std::optional<std::string> abort;  // memory fault / failed evaluation
  bool exhausted = false;            // no free run of the requested length
};

namespace detail {
// Runs of `n` consecutive free locations inside the universe, ascending.
inline std::vector<long long> free_runs(const Heap& h, size_t n, const DomainBounds& bounds) {
  std::vector<long long> starts;
  for (long long l : bounds.locations) {
    bool ok = true;
    for (size_t i = 0; i < n; ++i) {
      long long li = l + (long long)i;
      if (!bounds.is_location(li) || h.has(li)) {
        ok = false;
        break;
      }
    }
    if (ok) starts.push_back(l);
  }
  return starts;
}
}  // namespace detail

inline BasicResult exec_basic(const BasicCmd& c, const Store& s, const Heap& h, const DomainBounds& bounds,
                              AllocMode mode = AllocMode::All) {
  BasicResult out;
  auto eval = [&](const ExprPtr& e) { return eval_expr(s, e, bounds); };
  if (const auto* a = std::get_if<BasicCmd::Assign>(&c.node)) {
    Evaluated v = eval(a->value);
    if (!v.ok()) {
      out.abort = v.error;
      return out;
    }
    out.next.push_back({s.with(a->target, *v.value), h});
    return out;
  }
  if (const auto* l = std::get_if<BasicCmd::Load>(&c.node)) {
    Evaluated addr = eval(l->addr);
    if (!addr.ok()) {
      out.abort = addr.error;
      return out;
    }
    if (addr.value->is_null() || !h.has(addr.value->as_int())) {
      out.abort = "load from unallocated address " + addr.value->str();
      return out;
    }
    out.next.push_back({s.with(l->target, h.get(addr.value->as_int())), h});
    return out;
  }
  if (const auto* w = std::get_if<BasicCmd::HeapWrite>(&c.node)) {
    Evaluated addr = eval(w->addr);
    if (!addr.ok()) {
      out.abort = addr.error;
      return out;
    }
    Evaluated v = eval(w->value);
    if (!v.ok()) {
      out.abort = v.error;
      return out;
    }
    if (addr.value->is_null() || !h.has(addr.value->as_int())) {
      out.abort = "store to unallocated address " + addr.value->str();
      return out;
    }
    out.next.push_back({s, h.with(addr.value->as_int(), *v.value)});
    return out;
  }
  if (const auto* al = std::get_if<BasicCmd::Alloc>(&c.node)) {
    std::vector<Value> vals;
    for (const auto& e : al->inits) {
      Evaluated v = eval(e);
      if (!v.ok()) {
        out.abort = v.error;
        return out;
      }
      vals.push_back(*v.value);
    }
    std::vector<long long> starts = detail::free_runs(h, vals.size(), bounds);
    if (starts.empty()) {
      out.exhausted = true;
      return out;
    }
    if (mode == AllocMode::Lowest) starts.resize(1);
    for (long long l : starts) {
      Heap h2 = h;
      for (size_t i = 0; i < vals.size(); ++i) h2 = h2.with(l + (long long)i, vals[i]);
      out.next.push_back({s.with(al->target, Value::integer(l)), h2});
    }
    return out;
  }
  const auto& d = std::get<BasicCmd::Dispose>(c.node);
  Evaluated addr = eval(d.addr);
  if (!addr.ok()) {
    out.abort = addr.error;
    return out;
  }
  if (addr.value->is_null() || !h.has(addr.value->as_int())) {
    out.abort = "dispose of unallocated address " + addr.value->str();
    return out;
  }
  out.next.push_back({s, h.without(addr.value->as_int())});
  return out;
}

// ---------------------------------------------------------------------------
// One program step
// ---------------------------------------------------------------------------

struct Successor {
  Rule rule;
  CmdPtr cmd;
  MachineState state;
};

struct AbortInfo {
  Rule rule;
  std::string detail;
};

struct StepResult {
  std::vector<Successor> successors;
  std::vector<AbortInfo> aborts;
  // Allocation exhaustion is a limit of the bounded model, not a fault of
  // the program; it is reported apart from the abort transitions.
  std::vector<std::string> exhaustions;

  bool has_aborts() const { return !aborts.empty(); }
};

namespace detail {

inline void absorb_notes(StepResult& out, const StepResult& in) {
  out.exhaustions.insert(out.exhaustions.end(), in.exhaustions.begin(), in.exhaustions.end());
}

inline void push_successor(StepResult& out, Rule rule, CmdPtr cmd, MachineState st) {
  for (const auto& s : out.successors)
    if (s.rule == rule && s.state == st && commands_equal(s.cmd, cmd)) return;
  out.successors.push_back({rule, std::move(cmd), std::move(st)});
}

}  // namespace detail

inline StepResult step(const CmdPtr& c, const MachineState& st, const DomainBounds& bounds,
                       AllocMode mode = AllocMode::All);

namespace detail {

inline std::optional<bool> guard_value(const BoolPtr& b, const MachineState& st, const DomainBounds& bounds) {
  EvaluatedBool r = eval_bool(st.store, b, bounds);
  if (!r.ok()) return std::nullopt;  // unevaluable guard: no transition
  return *r.value;
}

inline void step_res(const Command::Res& rc, const MachineState& st, const DomainBounds& bounds,
                     AllocMode mode, StepResult& out) {
  const auto& rho = st.config;
  bool member = rho.contains(rc.res);
  if (member) out.aborts.push_back({Rule::RA, "res " + rc.res + ": resource already exists"});

  bool lock_inside = locked(rc.body).count(rc.res) != 0;
  if (!member && is_skip(rc.body)) detail::push_successor(out, Rule::R0, cskip(), st);

  if (lock_inside) {
    // body runs with the resource owned
    if (!rho.locked_by_others().count(rc.res) && !rho.available().count(rc.res)) {
      MachineState inner{st.store, st.heap, rho.with_owned(rc.res)};
      StepResult sub = step(rc.body, inner, bounds, mode);
      absorb_notes(out, sub);
      for (const auto& a : sub.aborts) out.aborts.push_back({Rule::RA1, a.detail});
      if (!member)
        for (const auto& s : sub.successors)
          push_successor(out, Rule::R1, cres(rc.res, s.cmd),
                         MachineState{s.state.store, s.state.heap, s.state.config.without(rc.res)});
    }
  } else {
    // body runs with the resource available
    if (!rho.owned().count(rc.res) && !rho.locked_by_others().count(rc.res)) {
      MachineState inner{st.store, st.heap, rho.with_available(rc.res)};
      StepResult sub = step(rc.body, inner, bounds, mode);
      absorb_notes(out, sub);
      for (const auto& a : sub.aborts) out.aborts.push_back({Rule::RA2, a.detail});
      if (!member)
        for (const auto& s : sub.successors)
          push_successor(out, Rule::R2, cres(rc.res, s.cmd),
                         MachineState{s.state.store, s.state.heap, s.state.config.without(rc.res)});
    }
  }
}

inline void step_within(const Command::Within& wc, const MachineState& st,
                        const DomainBounds& bounds, AllocMode mode, StepResult& out) {
  const auto& rho = st.config;
  bool owned = rho.owned().count(wc.res) != 0;
  if (!owned) out.aborts.push_back({Rule::WA2, "within " + wc.res + ": resource not owned"});

  // Inner behavior at the configuration with the resource removed; used by
  // both the step rule and the inner-abort rule.
  MachineState inner{st.store, st.heap, rho.without(wc.res)};
  StepResult sub = step(wc.body, inner, bounds, mode);
  absorb_notes(out, sub);
  for (const auto& a : sub.aborts) out.aborts.push_back({Rule::WA1, a.detail});

  if (owned) {
    if (is_skip(wc.body)) push_successor(out, Rule::W2, cskip(), MachineState{st.store, st.heap, rho.with_available(wc.res)});
    for (const auto& s : sub.successors)
      push_successor(out, Rule::W1, cwithin(wc.res, s.cmd),
                     MachineState{s.state.store, s.state.heap, s.state.config.with_owned(wc.res)});
  }
}

}  // namespace detail

// The complete successor and abort set of one program transition.
inline StepResult step(const CmdPtr& c, const MachineState& st, const DomainBounds& bounds, AllocMode mode) {
  StepResult out;
  if (std::holds_alternative<Command::Skip>(c->node)) return out;

  if (const auto* b = std::get_if<Command::Basic>(&c->node)) {
    BasicResult r = exec_basic(b->cmd, st.store, st.heap, bounds, mode);
    if (r.abort) out.aborts.push_back({Rule::BCA, *r.abort});
    if (r.exhausted) out.exhaustions.push_back("allocation exhausted: " + pp(b->cmd));
    for (auto& [s2, h2] : r.next)
      detail::push_successor(out, Rule::BCT, cskip(), MachineState{s2, h2, st.config});
    return out;
  }

  if (const auto* sq = std::get_if<Command::Seq>(&c->node)) {
    if (is_skip(sq->first)) detail::push_successor(out, Rule::S1, sq->second, st);
    StepResult sub = step(sq->first, st, bounds, mode);
    detail::absorb_notes(out, sub);
    for (const auto& a : sub.aborts) out.aborts.push_back({Rule::SA, a.detail});
    for (const auto& s : sub.successors)
      detail::push_successor(out, Rule::S2, cseq(s.cmd, sq->second), s.state);
    return out;
  }

  if (const auto* wl = std::get_if<Command::While>(&c->node)) {
    detail::push_successor(out, Rule::LP, cif(wl->cond, cseq(wl->body, c), cskip()), st);
    return out;
  }

  if (const auto* br = std::get_if<Command::If>(&c->node)) {
    auto g = detail::guard_value(br->cond, st, bounds);
    if (g == true) detail::push_successor(out, Rule::IF1, br->then_branch, st);
    if (g == false) detail::push_successor(out, Rule::IF2, br->else_branch, st);
    return out;
  }

  if (const auto* pr = std::get_if<Command::Par>(&c->node)) {
    if (is_skip(pr->left) && is_skip(pr->right)) detail::push_successor(out, Rule::P3, cskip(), st);
    StepResult l = step(pr->left, st, bounds, mode);
    detail::absorb_notes(out, l);
    for (const auto& a : l.aborts) out.aborts.push_back({Rule::PA1, a.detail});
    for (const auto& s : l.successors) detail::push_successor(out, Rule::P1, cpar(s.cmd, pr->right), s.state);
    StepResult r = step(pr->right, st, bounds, mode);
    detail::absorb_notes(out, r);
    for (const auto& a : r.aborts) out.aborts.push_back({Rule::PA2, a.detail});
    for (const auto& s : r.successors) detail::push_successor(out, Rule::P2, cpar(pr->left, s.cmd), s.state);
    return out;
  }

  if (const auto* rc = std::get_if<Command::Res>(&c->node)) {
    detail::step_res(*rc, st, bounds, mode, out);
    return out;
  }

  if (const auto* wc = std::get_if<Command::With>(&c->node)) {
    if (!st.config.contains(wc->res)) {
      out.aborts.push_back({Rule::WA, "with " + wc->res + ": undeclared resource"});
      return out;
    }
    // Blocked (no transition) when the resource is held elsewhere or the
    // guard is false or unevaluable.
    if (st.config.available().count(wc->res)) {
      auto g = detail::guard_value(wc->cond, st, bounds);
      if (g == true)
        detail::push_successor(out, Rule::W0, cwithin(wc->res, wc->body),
                               MachineState{st.store, st.heap, st.config.with_owned(wc->res)});
    }
    return out;
  }

  const auto& wn = std::get<Command::Within>(c->node);
  detail::step_within(wn, st, bounds, mode, out);
  return out;
}

// ---------------------------------------------------------------------------
// Environment transition
// ---------------------------------------------------------------------------

struct EnvParams {
  std::set<std::string> rely;  // variables the environment must preserve
  ResourceContext ctx;
  DomainBounds bounds;
  // Extra variables whose values matter downstream (e.g. free variables of
  // the goal assertion); enumeration covers them, everything else is fixed.
  std::set<std::string> extra_vars;
};

struct EnvSuccessor {
  MachineState state;  // local heap preserved
  Heap shared;         // new shared heap, disjoint from state.heap
  friend auto operator<=>(const EnvSuccessor& a, const EnvSuccessor& b) = default;
};

// All environment transitions from (C,(s,h,rho)) with shared part g:
// stores agree on the rely set extended with variables protected by held
// resources; owned resources are preserved; locked/available repartition;
// the new shared heap satisfies the invariants of the available part.
inline std::vector<EnvSuccessor> env_steps(const CmdPtr& c, const MachineState& st, const Heap& g,
                                           const EnvParams& params, AssertionEval* evshared = nullptr) {
  static const PredicateTable no_preds;
  AssertionEval local(params.bounds, no_preds);
  AssertionEval& ev = evshared ? *evshared : local;

  if (!heap_disjoint(st.heap, g)) throw StateError("environment step: shared heap overlaps the local heap");
  if (!ev.sat(st.store, g, inv_subset_known(params.ctx, st.config.available())))
    throw StateError("environment step: shared heap does not satisfy the available invariants");

  std::set<std::string> pinned = params.rely;
  for (const auto& r : locked(c)) {
    auto pv = params.ctx.protected_by(r);
    pinned.insert(pv.begin(), pv.end());
  }

  // Variables other than these cannot influence any later decision, so they
  // are held fixed to keep the branching factor down.
  std::set<std::string> relevant = free_vars(c);
  relevant.insert(params.rely.begin(), params.rely.end());
  for (const auto& v : params.ctx.protected_all()) relevant.insert(v);
  relevant.insert(params.extra_vars.begin(), params.extra_vars.end());

  std::vector<std::string> vary;
  for (const auto& x : relevant)
    if (!pinned.count(x) && st.store.has(x)) vary.push_back(x);

  std::map<std::string, std::vector<Value>> doms;
  for (const auto& x : vary) doms[x] = params.bounds.quantifier_values;

  // Partitions of L u D into new (L', D').
  std::vector<std::string> pool;
  for (const auto& r : st.config.locked_by_others()) pool.push_back(r);
  for (const auto& r : st.config.available()) pool.push_back(r);
  std::sort(pool.begin(), pool.end());

  std::vector<EnvSuccessor> out;
  for (const Store& s2 : enumerate_stores(st.store, vary, doms)) {
    for (size_t mask = 0; mask < (size_t(1) << pool.size()); ++mask) {
      std::set<std::string> newd, newl;
      for (size_t i = 0; i < pool.size(); ++i)
        (mask & (size_t(1) << i) ? newd : newl).insert(pool[i]);
      AssertPtr dinv = inv_subset_known(params.ctx, newd);
      auto m = ev.models(s2, dinv, params.bounds.locations.size());
      std::vector<Heap> shared_heaps;
      if (m && m->is_explicit() && !m->truncated) {
        shared_heaps = m->heaps;
      } else {
        // fallback: scan heaps disjoint from the local part
        for (const Heap& h2 : enumerate_heaps(params.bounds, params.bounds.locations.size(), 100000)) {
          try {
            if (ev.sat(s2, h2, dinv)) shared_heaps.push_back(h2);
          } catch (const UnfoldError&) {
          }
        }
      }
      ResourceConfig rho2(st.config.owned(), newl, newd);
      for (const Heap& g2 : shared_heaps) {
        if (!heap_disjoint(st.heap, g2)) continue;
        out.push_back({MachineState{s2, st.heap, rho2}, g2});
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Combined relation: program steps on the extended heap plus environment
// ---------------------------------------------------------------------------

struct CombinedResult {
  StepResult program;               // on (s, h u g, rho)
  std::vector<EnvSuccessor> env;    // local heap split preserved
};

inline CombinedResult combined_step(const CmdPtr& c, const MachineState& st, const Heap& g, const EnvParams& params,
                                    AssertionEval* ev = nullptr) {
  CombinedResult out;
  MachineState ext{st.store, heap_union(st.heap, g), st.config};
  out.program = step(c, ext, params.bounds, AllocMode::All);
  out.env = env_steps(c, st, g, params, ev);
  return out;
}

// ---------------------------------------------------------------------------
// Seeded interleaving driver
// ---------------------------------------------------------------------------

enum class RunStatus { Terminated, Abort, Blocked, Deadlock, Budget };

struct TraceEntry {
  int index;
  Rule rule;
  std::string cmd;
  std::string state;
};

struct Trace {
  std::vector<TraceEntry> entries;
  RunStatus status = RunStatus::Terminated;
  std::string abort_rule;
  std::string note;

  std::string status_line() const {
    switch (status) {
      case RunStatus::Terminated: return "STATUS terminated";
      case RunStatus::Abort: return "STATUS abort:" + abort_rule;
      case RunStatus::Blocked: return "STATUS blocked";
      case RunStatus::Deadlock: return "STATUS deadlock";
      case RunStatus::Budget: return "STATUS budget";
    }
    return "STATUS ?";
  }
};

namespace detail {
// True when some control position ready to act is a critical-region entry;
// a stuck state of that shape is a deadlock rather than a plain stall.
inline bool waiting_on_region(const CmdPtr& c) {
  if (std::holds_alternative<Command::With>(c->node)) return true;
  if (const auto* s = std::get_if<Command::Seq>(&c->node)) return waiting_on_region(s->first);
  if (const auto* p = std::get_if<Command::Par>(&c->node))
    return waiting_on_region(p->left) || waiting_on_region(p->right);
  if (const auto* r = std::get_if<Command::Res>(&c->node)) return waiting_on_region(r->body);
  if (const auto* w = std::get_if<Command::Within>(&c->node)) return waiting_on_region(w->body);
  return false;
}
}  // namespace detail

// Random interleaving with a fixed seed; deterministic by construction.
// Interpreter-mode allocation keeps traces reproducible.
inline Trace run_scheduled(const CmdPtr& c0, const MachineState& st0, uint64_t seed, int max_steps,
                           const DomainBounds& bounds) {
  Trace tr;
  std::mt19937_64 rng(seed);
  CmdPtr c = c0;
  MachineState st = st0;
  for (int n = 0; n < max_steps; ++n) {
    if (is_skip(c)) {
      tr.status = RunStatus::Terminated;
      return tr;
    }
    StepResult r = step(c, st, bounds, AllocMode::Lowest);
    size_t total = r.successors.size() + r.aborts.size();
    if (total == 0) {
      if (!r.exhaustions.empty()) tr.note = r.exhaustions.front();
      tr.status = detail::waiting_on_region(c) ? RunStatus::Deadlock : RunStatus::Blocked;
      return tr;
    }
    size_t pick = rng() % total;  // plain modulo: identical across platforms
    if (pick >= r.successors.size()) {
      const AbortInfo& a = r.aborts[pick - r.successors.size()];
      tr.entries.push_back({n + 1, a.rule, pp(c), a.detail});
      tr.status = RunStatus::Abort;
      tr.abort_rule = rule_name(a.rule);
      return tr;
    }
    const Successor& s = r.successors[pick];
    c = s.cmd;
    st = s.state;
    tr.entries.push_back({n + 1, s.rule, pp(c), st.dump()});
  }
  tr.status = is_skip(c) ? RunStatus::Terminated : RunStatus::Budget;
  return tr;
}

inline std::string trace_lines(const Trace& tr) {
  std::string out;
  for (const auto& e : tr.entries)
    out += std::to_string(e.index) + " " + rule_name(e.rule) + " " + e.cmd + " " + e.state + "\n";
  out += tr.status_line() + "\n";
  return out;
}

}  // namespace csl
