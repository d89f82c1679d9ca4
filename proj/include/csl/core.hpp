#pragma once

#include <compare>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace csl {

// A program value: an integer or the distinguished null pointer.
class Value {
 public:
  Value() : null_(true), n_(0) {}
  static Value null() { return Value(); }
  static Value integer(long long n) {
    Value v;
    v.null_ = false;
    v.n_ = n;
    return v;
  }

  bool is_null() const { return null_; }
  bool is_int() const { return !null_; }
  long long as_int() const {
    if (null_) throw std::logic_error("null value used as integer");
    return n_;
  }

  // null sorts before every integer; gives canonical orderings everywhere.
  friend auto operator<=>(const Value& a, const Value& b) {
    if (a.null_ != b.null_) return a.null_ ? std::strong_ordering::less : std::strong_ordering::greater;
    return a.n_ <=> b.n_;
  }
  friend bool operator==(const Value& a, const Value& b) = default;

  std::string str() const { return null_ ? "null" : std::to_string(n_); }

 private:
  bool null_;
  long long n_;
};

// Finite domains that make quantification, heap enumeration and state
// exploration decidable. Every report derived from these bounds states them.
struct DomainBounds {
  long long int_min = -2;
  long long int_max = 2;
  std::set<long long> locations;        // the location universe
  std::vector<Value> quantifier_values; // sorted, deduplicated

  bool int_in_range(long long n) const { return int_min <= n && n <= int_max; }
  bool is_location(long long n) const { return locations.count(n) != 0; }
  // Legal result of expression evaluation: plain integers stay inside the
  // integer range, addresses stay inside the location universe.
  bool legal_int(long long n) const { return int_in_range(n) || is_location(n); }

  void derive_quantifier_values() {
    std::set<Value> qs;
    qs.insert(Value::null());
    for (long long n = int_min; n <= int_max; ++n) qs.insert(Value::integer(n));
    for (long long l : locations) qs.insert(Value::integer(l));
    quantifier_values.assign(qs.begin(), qs.end());
  }

  static DomainBounds make(long long lo, long long hi, long long loc_base, int loc_count) {
    DomainBounds b;
    b.int_min = lo;
    b.int_max = hi;
    for (int i = 0; i < loc_count; ++i) b.locations.insert(loc_base + i);
    b.derive_quantifier_values();
    return b;
  }

  // Corpus defaults: ints [-2,2], eight locations starting at 10.
  static DomainBounds defaults() { return make(-2, 2, 10, 8); }
  // Small enough for brute-force metatheory suites.
  static DomainBounds tiny() { return make(0, 1, 10, 2); }

  std::string str() const {
    std::string s = "int[" + std::to_string(int_min) + "," + std::to_string(int_max) + "] loc{";
    bool first = true;
    for (long long l : locations) {
      if (!first) s += ",";
      s += std::to_string(l);
      first = false;
    }
    return s + "}";
  }
};

}  // namespace csl
