#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "csl/ast.hpp"
#include "csl/core.hpp"
#include "csl/state.hpp"

namespace csl {

struct UnfoldError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnknownResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Predicate definitions
// ---------------------------------------------------------------------------

struct PredDef {
  std::vector<std::string> params;
  AssertPtr body;  // free variables contained in params
};

struct PredicateTable {
  std::map<std::string, PredDef> defs;

  bool has(const std::string& name) const { return defs.count(name) != 0; }
  const PredDef& get(const std::string& name) const {
    auto it = defs.find(name);
    if (it == defs.end()) throw std::runtime_error("unknown predicate '" + name + "'");
    return it->second;
  }
};

// ---------------------------------------------------------------------------
// Satisfying-heap sets
// ---------------------------------------------------------------------------
//
// models() computes, per store, the set of heaps satisfying an assertion.
// Pure assertions satisfy every heap and negations satisfy all but finitely
// many, so the representation carries three shapes. Two completeness flags
// qualify Explicit sets:
//   capped     - heaps above the requested cell cap were dropped; the set is
//                still complete for heaps of at most `cap` cells.
//   truncated  - the unfolding budget was hit; models below the cap may be
//                missing, so only positive reuse of the set is allowed.

struct ModelSet {
  enum class Kind { Explicit, All, Complement };
  Kind kind = Kind::Explicit;
  std::vector<Heap> heaps;  // sorted, deduplicated
  bool capped = false;
  bool truncated = false;

  static ModelSet none() { return ModelSet{}; }
  static ModelSet all() { return ModelSet{Kind::All, {}, false, false}; }
  static ModelSet explicit_set(std::vector<Heap> hs, bool capped_ = false, bool truncated_ = false) {
    std::sort(hs.begin(), hs.end());
    hs.erase(std::unique(hs.begin(), hs.end()), hs.end());
    return ModelSet{Kind::Explicit, std::move(hs), capped_, truncated_};
  }
  static ModelSet complement(std::vector<Heap> hs) {
    std::sort(hs.begin(), hs.end());
    hs.erase(std::unique(hs.begin(), hs.end()), hs.end());
    return ModelSet{Kind::Complement, std::move(hs), false, false};
  }

  bool is_explicit() const { return kind == Kind::Explicit; }
  bool contains(const Heap& h) const {
    bool listed = std::binary_search(heaps.begin(), heaps.end(), h);
    switch (kind) {
      case Kind::Explicit: return listed;
      case Kind::All: return true;
      case Kind::Complement: return !listed;
    }
    return false;
  }
};

namespace detail {

inline std::optional<ModelSet> ms_intersect(const ModelSet& a, const ModelSet& b) {
  using K = ModelSet::Kind;
  if (a.kind == K::All) return b;
  if (b.kind == K::All) return a;
  if (a.kind == K::Explicit && b.kind == K::Explicit) {
    std::vector<Heap> out;
    std::set_intersection(a.heaps.begin(), a.heaps.end(), b.heaps.begin(), b.heaps.end(), std::back_inserter(out));
    return ModelSet::explicit_set(std::move(out), a.capped || b.capped, a.truncated || b.truncated);
  }
  if (a.kind == K::Explicit || b.kind == K::Explicit) {
    const ModelSet& e = a.kind == K::Explicit ? a : b;
    const ModelSet& c = a.kind == K::Explicit ? b : a;
    std::vector<Heap> out;
    for (const auto& h : e.heaps)
      if (!std::binary_search(c.heaps.begin(), c.heaps.end(), h)) out.push_back(h);
    return ModelSet::explicit_set(std::move(out), e.capped, e.truncated);
  }
  std::vector<Heap> out;
  std::set_union(a.heaps.begin(), a.heaps.end(), b.heaps.begin(), b.heaps.end(), std::back_inserter(out));
  return ModelSet::complement(std::move(out));
}

inline std::optional<ModelSet> ms_union(const ModelSet& a, const ModelSet& b) {
  using K = ModelSet::Kind;
  if (a.kind == K::All || b.kind == K::All) return ModelSet::all();
  if (a.kind == K::Explicit && b.kind == K::Explicit) {
    std::vector<Heap> out;
    std::set_union(a.heaps.begin(), a.heaps.end(), b.heaps.begin(), b.heaps.end(), std::back_inserter(out));
    return ModelSet::explicit_set(std::move(out), a.capped || b.capped, a.truncated || b.truncated);
  }
  if (a.kind == K::Explicit || b.kind == K::Explicit) {
    const ModelSet& e = a.kind == K::Explicit ? a : b;
    const ModelSet& c = a.kind == K::Explicit ? b : a;
    if (e.capped || e.truncated) return std::nullopt;
    std::vector<Heap> out;
    for (const auto& h : c.heaps)
      if (!std::binary_search(e.heaps.begin(), e.heaps.end(), h)) out.push_back(h);
    return ModelSet::complement(std::move(out));
  }
  std::vector<Heap> out;
  std::set_intersection(a.heaps.begin(), a.heaps.end(), b.heaps.begin(), b.heaps.end(), std::back_inserter(out));
  return ModelSet::complement(std::move(out));
}

inline std::optional<ModelSet> ms_complement(const ModelSet& a) {
  using K = ModelSet::Kind;
  if (a.kind == K::All) return ModelSet::none();
  if (a.kind == K::Complement) return ModelSet::explicit_set(std::vector<Heap>(a.heaps));
  if (a.capped || a.truncated) return std::nullopt;
  return ModelSet::complement(std::vector<Heap>(a.heaps));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Evaluator
// ---------------------------------------------------------------------------
//
// Bundles bounds, the predicate table and memo tables. Predicate results are
// store-independent once arguments are evaluated, which makes the two caches
// effective across the large store products the checkers enumerate.

class AssertionEval {
 public:
  AssertionEval(const DomainBounds& bounds, const PredicateTable& preds) : bounds_(bounds), preds_(preds) {}

  const DomainBounds& bounds() const { return bounds_; }
  const PredicateTable& preds() const { return preds_; }

  // --- satisfaction -------------------------------------------------------

  bool sat(const Store& s, const Heap& h, const AssertPtr& a) { return sat_rec(s, Env{}, h, a, -1); }
  bool sat(const Store& s, const Env& env, const Heap& h, const AssertPtr& a) { return sat_rec(s, env, h, a, -1); }

  // --- model enumeration ---------------------------------------------------

  // The set of heaps h over the location universe with s,h |= a, complete for
  // heaps of at most `cap` cells. nullopt when the assertion falls outside
  // the enumerable fragment.
  std::optional<ModelSet> models(const Store& s, const AssertPtr& a, size_t cap) {
    return models_rec(s, Env{}, a, cap, int(bounds_.locations.size()) + 1);
  }
  std::optional<ModelSet> models(const Store& s, const Env& env, const AssertPtr& a, size_t cap) {
    return models_rec(s, env, a, cap, int(bounds_.locations.size()) + 1);
  }

 private:
  const DomainBounds& bounds_;
  const PredicateTable& preds_;

  using PredSatKey = std::tuple<std::string, std::vector<Value>, std::map<long long, Value>>;
  std::map<PredSatKey, bool> pred_sat_cache_;
  using PredModelsKey = std::tuple<std::string, std::vector<Value>, size_t>;
  std::map<PredModelsKey, std::optional<ModelSet>> pred_models_cache_;
  std::set<PredModelsKey> pred_in_flight_;

  bool sat_lift(const Store& s, const Env& env, const BoolPtr& b) {
    EvaluatedBool r = eval_bool(s, env, b, bounds_);
    return r.ok() && *r.value;  // an unevaluable atom is unsatisfied
  }

  // Points-to chain: the heap must be exactly the cells base..base+n-1.
  bool sat_pointsto(const Store& s, const Env& env, const Heap& h, const Assertion::PointsTo& p) {
    Evaluated base = eval_expr(s, env, p.base, bounds_);
    if (!base.ok() || base.value->is_null()) return false;
    long long l = base.value->as_int();
    if (h.size() != p.cells.size()) return false;
    for (size_t i = 0; i < p.cells.size(); ++i) {
      Evaluated v = eval_expr(s, env, p.cells[i], bounds_);
      if (!v.ok()) return false;
      long long loc = l + (long long)i;
      if (!h.has(loc) || !(h.get(loc) == *v.value)) return false;
    }
    return true;
  }

  bool sat_rec(const Store& s, const Env& env, const Heap& h, const AssertPtr& a, int budget) {
    if (const auto* l = std::get_if<Assertion::Lift>(&a->node)) return sat_lift(s, env, l->cond);
    if (const auto* n = std::get_if<Assertion::Not>(&a->node)) return !sat_rec(s, env, h, n->arg, budget);
    if (const auto* c = std::get_if<Assertion::And>(&a->node))
      return sat_rec(s, env, h, c->lhs, budget) && sat_rec(s, env, h, c->rhs, budget);
    if (const auto* f = std::get_if<Assertion::Forall>(&a->node)) {
      for (const Value& v : bounds_.quantifier_values) {
        Env env2 = env;
        env2[f->var] = v;
        if (!sat_rec(s, env2, h, f->body, budget)) return false;
      }
      return true;
    }
    if (std::holds_alternative<Assertion::Emp>(a->node)) return h.empty();
    if (const auto* p = std::get_if<Assertion::PointsTo>(&a->node)) return sat_pointsto(s, env, h, *p);
    if (const auto* sp = std::get_if<Assertion::Sep>(&a->node)) return sat_sep(s, env, h, sp->lhs, sp->rhs, budget);
    const auto& q = std::get<Assertion::PredApp>(a->node);
    return sat_pred(s, env, h, q, budget);
  }

  bool sat_sep(const Store& s, const Env& env, const Heap& h, const AssertPtr& p, const AssertPtr& q, int budget) {
    // Direct the split search with the model set of whichever side is
    // explicitly enumerable; candidates above |dom(h)| cells are irrelevant.
    auto mp = models_rec(s, env, p, h.size(), int(bounds_.locations.size()) + 1);
    if (mp && mp->is_explicit() && !mp->truncated) {
      for (const Heap& m : mp->heaps)
        if (is_subheap(m, h) && sat_rec(s, env, heap_subtract(h, m), q, budget)) return true;
      return false;
    }
    auto mq = models_rec(s, env, q, h.size(), int(bounds_.locations.size()) + 1);
    if (mq && mq->is_explicit() && !mq->truncated) {
      for (const Heap& m : mq->heaps)
        if (is_subheap(m, h) && sat_rec(s, env, heap_subtract(h, m), p, budget)) return true;
      return false;
    }
    for (const Heap& h1 : subheaps(h)) {
      if (sat_rec(s, env, h1, p, budget) && sat_rec(s, env, heap_subtract(h, h1), q, budget)) return true;
    }
    return false;
  }

  bool sat_pred(const Store& s, const Env& env, const Heap& h, const Assertion::PredApp& q, int budget) {
    const PredDef& def = preds_.get(q.name);
    if (def.params.size() != q.args.size())
      throw std::runtime_error("predicate '" + q.name + "' applied to wrong number of arguments");
    std::vector<Value> vals;
    for (const auto& e : q.args) {
      Evaluated r = eval_expr(s, env, e, bounds_);
      if (!r.ok()) return false;
      vals.push_back(*r.value);
    }
    PredSatKey key{q.name, vals, h.map()};
    auto it = pred_sat_cache_.find(key);
    if (it != pred_sat_cache_.end()) return it->second;
    // A satisfying unfolding of a well-founded definition consumes heap
    // cells, so deeper recursion than |dom(h)|+1 cannot succeed.
    int next = (budget < 0 ? int(h.size()) + 1 : std::min(budget, int(h.size()) + 1)) - 1;
    if (next < 0)
      throw UnfoldError("unfolding-budget-exceeded: predicate '" + q.name + "' at heap " + h.dump());
    Env benv;
    for (size_t i = 0; i < vals.size(); ++i) benv[def.params[i]] = vals[i];
    bool r = sat_rec(s, benv, h, def.body, next);
    pred_sat_cache_.emplace(std::move(key), r);
    return r;
  }

  std::optional<ModelSet> models_rec(const Store& s, const Env& env, const AssertPtr& a, size_t cap, int budget) {
    if (auto orp = match_or(a)) {
      auto l = models_rec(s, env, orp->first, cap, budget);
      if (!l) return std::nullopt;
      auto r = models_rec(s, env, orp->second, cap, budget);
      if (!r) return std::nullopt;
      return detail::ms_union(*l, *r);
    }
    if (auto ex = match_exists(a)) {
      ModelSet acc = ModelSet::none();
      for (const Value& v : bounds_.quantifier_values) {
        Env env2 = env;
        env2[ex->first] = v;
        auto m = models_rec(s, env2, ex->second, cap, budget);
        if (!m) return std::nullopt;
        auto u = detail::ms_union(acc, *m);
        if (!u) return std::nullopt;
        acc = std::move(*u);
      }
      return acc;
    }
    if (const auto* l = std::get_if<Assertion::Lift>(&a->node))
      return sat_lift(s, env, l->cond) ? ModelSet::all() : ModelSet::none();
    if (const auto* n = std::get_if<Assertion::Not>(&a->node)) {
      auto m = models_rec(s, env, n->arg, cap, budget);
      if (!m) return std::nullopt;
      return detail::ms_complement(*m);
    }
    if (const auto* c = std::get_if<Assertion::And>(&a->node)) {
      auto l2 = models_rec(s, env, c->lhs, cap, budget);
      if (!l2) return std::nullopt;
      if (l2->is_explicit() && l2->heaps.empty())
        return ModelSet::explicit_set({}, l2->capped, l2->truncated);
      auto r = models_rec(s, env, c->rhs, cap, budget);
      if (!r) return std::nullopt;
      return detail::ms_intersect(*l2, *r);
    }
    if (const auto* f = std::get_if<Assertion::Forall>(&a->node)) {
      ModelSet acc = ModelSet::all();
      for (const Value& v : bounds_.quantifier_values) {
        Env env2 = env;
        env2[f->var] = v;
        auto m = models_rec(s, env2, f->body, cap, budget);
        if (!m) return std::nullopt;
        auto r = detail::ms_intersect(acc, *m);
        if (!r) return std::nullopt;
        acc = std::move(*r);
        if (acc.is_explicit() && acc.heaps.empty()) break;
      }
      return acc;
    }
    if (std::holds_alternative<Assertion::Emp>(a->node)) return ModelSet::explicit_set({Heap{}});
    if (const auto* p = std::get_if<Assertion::PointsTo>(&a->node)) {
      Evaluated base = eval_expr(s, env, p->base, bounds_);
      if (!base.ok() || base.value->is_null()) return ModelSet::none();
      long long l3 = base.value->as_int();
      std::map<long long, Value> cells;
      for (size_t i = 0; i < p->cells.size(); ++i) {
        long long loc = l3 + (long long)i;
        if (!bounds_.is_location(loc)) return ModelSet::none();
        Evaluated v = eval_expr(s, env, p->cells[i], bounds_);
        if (!v.ok()) return ModelSet::none();
        cells[loc] = *v.value;
      }
      if (cells.size() != p->cells.size()) return ModelSet::none();  // overlapping chain
      if (cells.size() > cap) return ModelSet::explicit_set({}, true, false);
      return ModelSet::explicit_set({Heap(std::move(cells))});
    }
    if (const auto* sp = std::get_if<Assertion::Sep>(&a->node)) {
      auto l4 = models_rec(s, env, sp->lhs, cap, budget);
      if (!l4) return std::nullopt;
      if (l4->is_explicit() && l4->heaps.empty()) return ModelSet::explicit_set({}, l4->capped, l4->truncated);
      // Capacity left for the right factor shrinks by the smallest left
      // model; this is what terminates generation for recursive predicates
      // whose unfolding consumes cells.
      size_t min_left = 0;
      if (l4->is_explicit()) {
        min_left = SIZE_MAX;
        for (const Heap& m : l4->heaps) min_left = std::min(min_left, m.size());
      }
      if (min_left > cap) return ModelSet::explicit_set({}, true, l4->truncated);
      auto r = models_rec(s, env, sp->rhs, cap - min_left, budget);
      if (!r) return std::nullopt;
      if (r->is_explicit() && r->heaps.empty()) return ModelSet::explicit_set({}, r->capped, r->truncated);
      return sep_models(*l4, *r, cap);
    }
    const auto& q = std::get<Assertion::PredApp>(a->node);
    return pred_models(s, env, q, cap, budget);
  }

  std::optional<ModelSet> sep_models(const ModelSet& a, const ModelSet& b, size_t cap) {
    using K = ModelSet::Kind;
    if (a.kind == K::All && b.kind == K::All) return ModelSet::all();
    if (a.kind == K::Complement || b.kind == K::Complement) return std::nullopt;
    if (a.kind == K::All || b.kind == K::All) {
      // Upward closure of the explicit side within the cap.
      const ModelSet& e = a.kind == K::All ? b : a;
      if (e.truncated) return std::nullopt;
      std::vector<Heap> out;
      size_t produced = 0;
      for (const Heap& m : e.heaps) {
        auto ext = extend_heaps(m, cap, 200000 - produced);
        if (!ext) return std::nullopt;
        produced += ext->size();
        out.insert(out.end(), ext->begin(), ext->end());
      }
      return ModelSet::explicit_set(std::move(out), true, false);
    }
    bool dropped = false;
    std::vector<Heap> out;
    for (const Heap& x : a.heaps) {
      for (const Heap& y : b.heaps) {
        if (x.size() + y.size() > cap) {
          dropped = true;
          continue;
        }
        if (!heap_disjoint(x, y)) continue;
        out.push_back(heap_union(x, y));
      }
    }
    return ModelSet::explicit_set(std::move(out), a.capped || b.capped || dropped, a.truncated || b.truncated);
  }

  // All heaps extending m with extra cells (values from quantifier_values)
  // up to `cap` total cells. nullopt when the closure exceeds the limit.
  // Each heap gains cells at strictly ascending free locations, so none is
  // produced twice.
  std::optional<std::vector<Heap>> extend_heaps(const Heap& m, size_t cap, size_t limit) {
    if (m.size() > cap) return std::vector<Heap>{};
    std::vector<long long> free_locs;
    for (long long l : bounds_.locations)
      if (!m.has(l)) free_locs.push_back(l);
    std::vector<Heap> out;
    std::vector<std::pair<Heap, size_t>> work{{m, 0}};
    while (!work.empty()) {
      auto [h, start] = work.back();
      work.pop_back();
      out.push_back(h);
      if (out.size() > limit) return std::nullopt;
      if (h.size() >= cap) continue;
      for (size_t i = start; i < free_locs.size(); ++i)
        for (const Value& v : bounds_.quantifier_values) work.push_back({h.with(free_locs[i], v), i + 1});
    }
    return out;
  }

  std::optional<ModelSet> pred_models(const Store& s, const Env& env, const Assertion::PredApp& q, size_t cap,
                                      int budget) {
    const PredDef& def = preds_.get(q.name);
    if (def.params.size() != q.args.size())
      throw std::runtime_error("predicate '" + q.name + "' applied to wrong number of arguments");
    std::vector<Value> vals;
    for (const auto& e : q.args) {
      Evaluated r = eval_expr(s, env, e, bounds_);
      if (!r.ok()) return ModelSet::none();
      vals.push_back(*r.value);
    }
    PredModelsKey key{q.name, vals, cap};
    auto it = pred_models_cache_.find(key);
    if (it != pred_models_cache_.end()) return it->second;
    if (budget <= 0) return ModelSet::explicit_set({}, false, true);
    // A self-dependent occurrence at unchanged capacity contributes nothing
    // to the least fixed point; report it as truncated.
    if (pred_in_flight_.count(key)) return ModelSet::explicit_set({}, false, true);
    pred_in_flight_.insert(key);
    Env benv;
    for (size_t i = 0; i < vals.size(); ++i) benv[def.params[i]] = vals[i];
    auto r = models_rec(s, benv, def.body, cap, budget - 1);
    pred_in_flight_.erase(key);
    // Truncated results depend on the remaining budget; cache only the rest.
    if (!r || !(r->is_explicit() && r->truncated)) pred_models_cache_.emplace(std::move(key), r);
    return r;
  }
};

// ---------------------------------------------------------------------------
// One-shot wrappers
// ---------------------------------------------------------------------------

inline bool sat(const Store& s, const Heap& h, const AssertPtr& a, const DomainBounds& bounds,
                const PredicateTable& preds) {
  AssertionEval ev(bounds, preds);
  return ev.sat(s, h, a);
}

// Test oracle: satisfaction only depends on the store's values at free
// variables. Returns whether both stores agree on the verdict.
inline bool sat_store_insensitive_check(const AssertPtr& p, const Store& s, const Store& s2, const Heap& h,
                                        const DomainBounds& bounds, const PredicateTable& preds) {
  if (!s.agrees_with(s2, free_vars(p)))
    throw std::invalid_argument("stores disagree on a free variable of the assertion");
  AssertionEval ev(bounds, preds);
  return ev.sat(s, h, p) == ev.sat(s2, h, p);
}

// ---------------------------------------------------------------------------
// Store and heap enumeration
// ---------------------------------------------------------------------------

// Product of the given per-variable domains over `vars`, applied on top of
// `base`. Deterministic: variables ascend alphabetically, values in order.
inline std::vector<Store> enumerate_stores(const Store& base, const std::vector<std::string>& vars,
                                           const std::map<std::string, std::vector<Value>>& domains) {
  std::vector<std::string> sorted_vars(vars.begin(), vars.end());
  std::sort(sorted_vars.begin(), sorted_vars.end());
  sorted_vars.erase(std::unique(sorted_vars.begin(), sorted_vars.end()), sorted_vars.end());
  std::vector<Store> out{base};
  for (const auto& x : sorted_vars) {
    auto it = domains.find(x);
    if (it == domains.end() || it->second.empty()) continue;
    std::vector<Store> next;
    next.reserve(out.size() * it->second.size());
    for (const Store& s : out)
      for (const Value& v : it->second) next.push_back(s.with(x, v));
    out = std::move(next);
  }
  return out;
}

// All heaps with domain inside the location universe and at most `max_cells`
// cells, values drawn from quantifier_values. `complete` reports whether the
// limit cut the enumeration short.
inline std::vector<Heap> enumerate_heaps(const DomainBounds& bounds, size_t max_cells, size_t limit,
                                         bool* complete = nullptr) {
  std::vector<long long> locs(bounds.locations.begin(), bounds.locations.end());
  std::vector<Heap> out;
  bool full = true;
  std::vector<std::pair<Heap, size_t>> work{{Heap{}, 0}};
  while (!work.empty()) {
    auto [h, start] = work.back();
    work.pop_back();
    if (out.size() >= limit) {
      full = false;
      break;
    }
    out.push_back(h);
    if (h.size() >= max_cells) continue;
    for (size_t i = start; i < locs.size(); ++i)
      for (const Value& v : bounds.quantifier_values) work.push_back({h.with(locs[i], v), i + 1});
  }
  std::sort(out.begin(), out.end());
  if (complete) *complete = full;
  return out;
}

// ---------------------------------------------------------------------------
// Precision
// ---------------------------------------------------------------------------

struct PrecisionReport {
  bool precise = true;
  bool exhaustive = true;  // false when a fallback enumeration was capped
  std::optional<Store> store;
  std::optional<Heap> heap;   // containing heap with two satisfying subheaps
  std::optional<Heap> sub1;
  std::optional<Heap> sub2;
};

namespace detail {

// Distinct heaps that agree on their common domain can live inside one heap.
inline bool heaps_compatible(const Heap& a, const Heap& b) {
  for (const auto& [k, v] : a.map()) {
    if (b.has(k) && !(b.get(k) == v)) return false;
  }
  return true;
}

inline std::optional<std::pair<Heap, Heap>> find_compatible_pair(const std::vector<Heap>& hs) {
  for (size_t i = 0; i < hs.size(); ++i)
    for (size_t j = i + 1; j < hs.size(); ++j)
      if (heaps_compatible(hs[i], hs[j])) return std::make_pair(hs[i], hs[j]);
  return std::nullopt;
}

}  // namespace detail

// Semantic checks that enumerate satisfying heaps cap the heap size; models
// above the cap would mostly be recursive-predicate chains whose count grows
// with |values|^cells. The `capped` flag on the resulting set tells apart an
// exact answer from one complete only up to the cap.
inline size_t default_semantic_cap(const DomainBounds& bounds) {
  return std::min<size_t>(bounds.locations.size(), 4);
}

// An assertion is precise when, for every store and heap, at most one subheap
// satisfies it. Checked per store by inspecting the satisfying-heap set: two
// distinct compatible satisfying heaps embed in a common heap and refute
// precision.
inline PrecisionReport check_precise(const AssertPtr& r, const DomainBounds& bounds, const PredicateTable& preds,
                                     size_t max_cells = SIZE_MAX) {
  AssertionEval ev(bounds, preds);
  PrecisionReport rep;
  std::set<std::string> fv = free_vars(r);
  std::map<std::string, Value> base;
  for (const auto& x : fv) base[x] = bounds.quantifier_values.front();
  std::map<std::string, std::vector<Value>> doms;
  for (const auto& x : fv) doms[x] = bounds.quantifier_values;
  size_t ful = max_cells == SIZE_MAX ? default_semantic_cap(bounds) : max_cells;
  for (const Store& s : enumerate_stores(Store(base), {fv.begin(), fv.end()}, doms)) {
    std::vector<Heap> sats;
    auto m = ev.models(s, r, ful);
    if (m && m->is_explicit() && !m->truncated) {
      sats = m->heaps;
      rep.exhaustive = rep.exhaustive && !m->capped;
      if (sats.size() > 30000) {
        sats.resize(30000);
        rep.exhaustive = false;
      }
    } else if (m && m->kind == ModelSet::Kind::All) {
      Heap one = Heap{}.with(*bounds.locations.begin(), bounds.quantifier_values.front());
      rep.precise = false;
      rep.store = s;
      rep.heap = one;
      rep.sub1 = Heap{};
      rep.sub2 = one;
      return rep;
    } else if (m && m->kind == ModelSet::Kind::Complement) {
      // Cofinite satisfying set: scan small heaps for two compatible members.
      bool complete = true;
      for (const Heap& h : enumerate_heaps(bounds, 2, 100000, &complete)) {
        if (m->contains(h)) sats.push_back(h);
        if (sats.size() > 64) break;
      }
      rep.exhaustive = rep.exhaustive && complete && sats.size() <= 64;
    } else {
      bool complete = true;
      for (const Heap& h : enumerate_heaps(bounds, ful, 200000, &complete)) {
        try {
          if (ev.sat(s, h, r)) sats.push_back(h);
        } catch (const UnfoldError&) {
          rep.exhaustive = false;
        }
      }
      rep.exhaustive = rep.exhaustive && complete && ful >= bounds.locations.size();
    }
    if (auto pair = detail::find_compatible_pair(sats)) {
      rep.precise = false;
      rep.store = s;
      rep.sub1 = pair->first;
      rep.sub2 = pair->second;
      std::map<long long, Value> u = pair->first.map();
      for (const auto& [k, v] : pair->second.map()) u.emplace(k, v);
      rep.heap = Heap(std::move(u));
      return rep;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Entailment
// ---------------------------------------------------------------------------

struct EntailmentReport {
  bool holds = true;
  bool exhaustive = true;
  std::optional<Store> store;
  std::optional<Heap> heap;
};

// Bounded semantic entailment: every (s,h) over the bounds satisfying P also
// satisfies Q. Sound for refutation; `exhaustive` records whether the heap
// side was covered completely.
inline EntailmentReport entails(const AssertPtr& p, const AssertPtr& q, const DomainBounds& bounds,
                                const PredicateTable& preds, size_t max_cells = SIZE_MAX) {
  AssertionEval ev(bounds, preds);
  EntailmentReport rep;
  std::set<std::string> fv = free_vars(p);
  for (const auto& x : free_vars(q)) fv.insert(x);
  std::map<std::string, Value> base;
  for (const auto& x : fv) base[x] = bounds.quantifier_values.front();
  std::map<std::string, std::vector<Value>> doms;
  for (const auto& x : fv) doms[x] = bounds.quantifier_values;
  size_t ful = max_cells == SIZE_MAX ? default_semantic_cap(bounds) : max_cells;
  auto fail = [&](const Store& s, const Heap& h) {
    rep.holds = false;
    rep.store = s;
    rep.heap = h;
  };
  for (const Store& s : enumerate_stores(Store(base), {fv.begin(), fv.end()}, doms)) {
    auto mp = ev.models(s, p, ful);
    if (mp && mp->is_explicit() && !mp->truncated) {
      rep.exhaustive = rep.exhaustive && !mp->capped;
      for (const Heap& h : mp->heaps) {
        if (!ev.sat(s, h, q)) {
          fail(s, h);
          return rep;
        }
      }
      continue;
    }
    // Non-enumerable premise: scan heaps, smallest first.
    bool complete = true;
    for (const Heap& h : enumerate_heaps(bounds, ful, 200000, &complete)) {
      bool ph = false, qh = false;
      try {
        ph = ev.sat(s, h, p);
        qh = ph ? ev.sat(s, h, q) : true;
      } catch (const UnfoldError&) {
        rep.exhaustive = false;
        continue;
      }
      if (ph && !qh) {
        fail(s, h);
        return rep;
      }
    }
    rep.exhaustive = rep.exhaustive && complete && ful >= bounds.locations.size();
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Resource-invariant composition
// ---------------------------------------------------------------------------

// Separating conjunction of the invariants of the resources in `which`, in
// declaration order; emp for the empty set.
inline AssertPtr inv_subset(const ResourceContext& g, const std::set<std::string>& which) {
  for (const auto& r : which)
    if (!g.find(r)) throw UnknownResourceError("resource '" + r + "' not declared in the context");
  std::vector<AssertPtr> parts;
  for (const auto& e : g.entries)
    if (which.count(e.name)) parts.push_back(e.invariant);
  if (parts.empty()) return aemp();
  AssertPtr acc = parts.back();
  for (size_t i = parts.size() - 1; i-- > 0;) acc = asep(parts[i], acc);
  return acc;
}

inline AssertPtr inv_all(const ResourceContext& g) { return inv_subset(g, g.names()); }

// As inv_subset, but resources without a context entry contribute emp
// instead of raising. Configurations may mention resources the context does
// not govern (locally bound names, generated instances).
inline AssertPtr inv_subset_known(const ResourceContext& g, const std::set<std::string>& which) {
  std::set<std::string> known;
  for (const auto& r : which)
    if (g.find(r)) known.insert(r);
  return inv_subset(g, known);
}

}  // namespace csl
