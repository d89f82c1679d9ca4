#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "csl/ast.hpp"
#include "csl/core.hpp"

namespace csl {

struct HeapError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct StateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Store: total map over the declared variable set
// ---------------------------------------------------------------------------

class Store {
 public:
  Store() = default;
  explicit Store(std::map<std::string, Value> m) : m_(std::move(m)) {}

  bool has(const std::string& x) const { return m_.count(x) != 0; }
  const Value& get(const std::string& x) const {
    auto it = m_.find(x);
    if (it == m_.end()) throw StateError("undeclared variable '" + x + "'");
    return it->second;
  }
  Store with(const std::string& x, Value v) const {
    Store s = *this;
    auto it = s.m_.find(x);
    if (it == s.m_.end()) throw StateError("undeclared variable '" + x + "'");
    it->second = v;
    return s;
  }
  const std::map<std::string, Value>& map() const { return m_; }
  std::set<std::string> domain() const {
    std::set<std::string> d;
    for (const auto& [k, v] : m_) d.insert(k);
    return d;
  }
  bool agrees_with(const Store& o, const std::set<std::string>& vars) const {
    for (const auto& x : vars) {
      auto a = m_.find(x);
      auto b = o.m_.find(x);
      if (a == m_.end() || b == o.m_.end()) {
        if (a != b) return false;
        continue;
      }
      if (a->second != b->second) return false;
    }
    return true;
  }

  friend auto operator<=>(const Store& a, const Store& b) = default;

  std::string dump() const {
    std::string s = "s{";
    bool first = true;
    for (const auto& [k, v] : m_) {
      if (!first) s += ",";
      s += k + "=" + v.str();
      first = false;
    }
    return s + "}";
  }

 private:
  std::map<std::string, Value> m_;
};

// ---------------------------------------------------------------------------
// Heap: finite partial map from locations to values
// ---------------------------------------------------------------------------

class Heap {
 public:
  Heap() = default;
  explicit Heap(std::map<long long, Value> m) : m_(std::move(m)) {}

  bool has(long long loc) const { return m_.count(loc) != 0; }
  const Value& get(long long loc) const {
    auto it = m_.find(loc);
    if (it == m_.end()) throw HeapError("unallocated location " + std::to_string(loc));
    return it->second;
  }
  Heap with(long long loc, Value v) const {
    Heap h = *this;
    h.m_[loc] = v;
    return h;
  }
  Heap without(long long loc) const {
    Heap h = *this;
    h.m_.erase(loc);
    return h;
  }
  size_t size() const { return m_.size(); }
  bool empty() const { return m_.empty(); }
  const std::map<long long, Value>& map() const { return m_; }
  std::set<long long> domain() const {
    std::set<long long> d;
    for (const auto& [k, v] : m_) d.insert(k);
    return d;
  }

  friend auto operator<=>(const Heap& a, const Heap& b) = default;

  std::string dump() const {
    std::string s = "h{";
    bool first = true;
    for (const auto& [k, v] : m_) {
      if (!first) s += ",";
      s += std::to_string(k) + ":" + v.str();
      first = false;
    }
    return s + "}";
  }

 private:
  std::map<long long, Value> m_;
};

inline bool heap_disjoint(const Heap& a, const Heap& b) {
  // Walk the smaller map.
  const Heap& small = a.size() <= b.size() ? a : b;
  const Heap& big = a.size() <= b.size() ? b : a;
  for (const auto& [k, v] : small.map())
    if (big.has(k)) return false;
  return true;
}

inline Heap heap_union(const Heap& a, const Heap& b) {
  if (!heap_disjoint(a, b)) throw HeapError("heap union of overlapping heaps");
  std::map<long long, Value> m = a.map();
  m.insert(b.map().begin(), b.map().end());
  return Heap(std::move(m));
}

// True when g's cells all occur in h with the same values.
inline bool is_subheap(const Heap& g, const Heap& h) {
  for (const auto& [k, v] : g.map()) {
    if (!h.has(k) || !(h.get(k) == v)) return false;
  }
  return true;
}

inline Heap heap_subtract(const Heap& h, const Heap& g) {
  if (!is_subheap(g, h)) throw HeapError("heap subtraction of a non-subheap");
  std::map<long long, Value> m;
  for (const auto& [k, v] : h.map())
    if (!g.has(k)) m.emplace(k, v);
  return Heap(std::move(m));
}

// All 2^|dom(h)| restrictions of h, ordered by bitmask over the sorted domain
// (the empty heap first). The order is part of the contract: split searches
// and counterexamples are reproducible.
inline std::vector<Heap> subheaps(const Heap& h) {
  std::vector<std::pair<long long, Value>> cells(h.map().begin(), h.map().end());
  size_t n = cells.size();
  if (n > 20) throw HeapError("subheap enumeration over more than 20 cells");
  std::vector<Heap> out;
  out.reserve(size_t(1) << n);
  for (size_t mask = 0; mask < (size_t(1) << n); ++mask) {
    std::map<long long, Value> m;
    for (size_t i = 0; i < n; ++i)
      if (mask & (size_t(1) << i)) m.emplace(cells[i].first, cells[i].second);
    out.push_back(Heap(std::move(m)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Resource configuration rho = (O, L, D)
// ---------------------------------------------------------------------------

class ResourceConfig {
 public:
  ResourceConfig() = default;
  ResourceConfig(std::set<std::string> owned, std::set<std::string> locked_by_others,
                 std::set<std::string> available)
      : o_(std::move(owned)), l_(std::move(locked_by_others)), d_(std::move(available)) {
    for (const auto& r : o_)
      if (l_.count(r) || d_.count(r)) throw StateError("resource configuration sets overlap on '" + r + "'");
    for (const auto& r : l_)
      if (d_.count(r)) throw StateError("resource configuration sets overlap on '" + r + "'");
  }

  const std::set<std::string>& owned() const { return o_; }
  const std::set<std::string>& locked_by_others() const { return l_; }
  const std::set<std::string>& available() const { return d_; }

  bool contains(const std::string& r) const { return o_.count(r) || l_.count(r) || d_.count(r); }

  ResourceConfig without(const std::string& r) const {
    ResourceConfig c = *this;
    c.o_.erase(r);
    c.l_.erase(r);
    c.d_.erase(r);
    return c;
  }
  ResourceConfig with_owned(const std::string& r) const {
    ResourceConfig c = *this;
    c.o_.erase(r);  // keep disjointness when moving r between sets
    c.l_.erase(r);
    c.d_.erase(r);
    c.o_.insert(r);
    return c;
  }
  ResourceConfig with_available(const std::string& r) const {
    ResourceConfig c = *this;
    c.o_.erase(r);
    c.l_.erase(r);
    c.d_.erase(r);
    c.d_.insert(r);
    return c;
  }
  ResourceConfig renamed(const std::string& r, const std::string& r2) const {
    auto ren = [&](std::set<std::string> s) {
      if (s.erase(r)) s.insert(r2);
      return s;
    };
    return ResourceConfig(ren(o_), ren(l_), ren(d_));
  }

  friend auto operator<=>(const ResourceConfig& a, const ResourceConfig& b) = default;

  std::string dump() const {
    auto one = [](const char* tag, const std::set<std::string>& s) {
      std::string t = std::string(tag) + "{";
      bool first = true;
      for (const auto& r : s) {
        if (!first) t += ",";
        t += r;
        first = false;
      }
      return t + "}";
    };
    return one("O", o_) + " " + one("L", l_) + " " + one("D", d_);
  }

 private:
  std::set<std::string> o_, l_, d_;
};

// ---------------------------------------------------------------------------
// Machine state
// ---------------------------------------------------------------------------

struct MachineState {
  Store store;
  Heap heap;
  ResourceConfig config;

  friend auto operator<=>(const MachineState& a, const MachineState& b) = default;

  std::string dump() const { return store.dump() + " " + heap.dump() + " " + config.dump(); }
};

// ---------------------------------------------------------------------------
// Expression evaluation
// ---------------------------------------------------------------------------
//
// Evaluation is total with an explicit failure: a null operand to arithmetic
// or a result outside int_range and the location universe reports an error
// string. How a failure surfaces (abort, false guard, unsatisfied atom)
// is decided by the caller.

using Env = std::map<std::string, Value>;  // overlay for bound variables

struct Evaluated {
  std::optional<Value> value;
  std::string error;
  bool ok() const { return value.has_value(); }
};

inline Evaluated eval_expr(const Store& s, const Env& env, const ExprPtr& e, const DomainBounds& bounds) {
  if (const auto* v = std::get_if<Expr::Var>(&e->node)) {
    auto it = env.find(v->name);
    if (it != env.end()) return {it->second, ""};
    if (!s.has(v->name)) return {std::nullopt, "undeclared variable '" + v->name + "'"};
    return {s.get(v->name), ""};
  }
  if (const auto* l = std::get_if<Expr::Lit>(&e->node)) {
    if (l->value.is_int() && !bounds.legal_int(l->value.as_int()))
      return {std::nullopt, "literal " + l->value.str() + " outside bounds"};
    return {l->value, ""};
  }
  const auto& b = std::get<Expr::Bin>(e->node);
  Evaluated lhs = eval_expr(s, env, b.lhs, bounds);
  if (!lhs.ok()) return lhs;
  Evaluated rhs = eval_expr(s, env, b.rhs, bounds);
  if (!rhs.ok()) return rhs;
  if (lhs.value->is_null() || rhs.value->is_null())
    return {std::nullopt, "null operand in arithmetic"};
  long long x = lhs.value->as_int(), y = rhs.value->as_int();
  long long r = b.op == BinOp::Add ? x + y : b.op == BinOp::Sub ? x - y : x * y;
  if (!bounds.legal_int(r)) return {std::nullopt, "overflow: " + std::to_string(r) + " outside bounds"};
  return {Value::integer(r), ""};
}

inline Evaluated eval_expr(const Store& s, const ExprPtr& e, const DomainBounds& bounds) {
  return eval_expr(s, Env{}, e, bounds);
}

struct EvaluatedBool {
  std::optional<bool> value;
  std::string error;
  bool ok() const { return value.has_value(); }
};

inline EvaluatedBool eval_bool(const Store& s, const Env& env, const BoolPtr& b, const DomainBounds& bounds) {
  if (const auto* l = std::get_if<BoolExpr::Lit>(&b->node)) return {l->value, ""};
  if (const auto* c = std::get_if<BoolExpr::Cmp>(&b->node)) {
    Evaluated lhs = eval_expr(s, env, c->lhs, bounds);
    if (!lhs.ok()) return {std::nullopt, lhs.error};
    Evaluated rhs = eval_expr(s, env, c->rhs, bounds);
    if (!rhs.ok()) return {std::nullopt, rhs.error};
    if (c->op == CmpOp::Eq) return {*lhs.value == *rhs.value, ""};
    if (lhs.value->is_null() || rhs.value->is_null()) return {std::nullopt, "null operand in comparison"};
    return {lhs.value->as_int() < rhs.value->as_int(), ""};
  }
  if (const auto* a = std::get_if<BoolExpr::And>(&b->node)) {
    EvaluatedBool lhs = eval_bool(s, env, a->lhs, bounds);
    if (!lhs.ok()) return lhs;
    EvaluatedBool rhs = eval_bool(s, env, a->rhs, bounds);
    if (!rhs.ok()) return rhs;
    return {*lhs.value && *rhs.value, ""};
  }
  EvaluatedBool arg = eval_bool(s, env, std::get<BoolExpr::Not>(b->node).arg, bounds);
  if (!arg.ok()) return arg;
  return {!*arg.value, ""};
}

inline EvaluatedBool eval_bool(const Store& s, const BoolPtr& b, const DomainBounds& bounds) {
  return eval_bool(s, Env{}, b, bounds);
}

}  // namespace csl
