#include <doctest.h>

#include "csl/properties.hpp"
#include "csl/state.hpp"

using namespace csl;

namespace {
Heap H(std::initializer_list<std::pair<long long, long long>> cells) {
  Heap h;
  for (auto [l, v] : cells) h = h.with(l, Value::integer(v));
  return h;
}
}  // namespace

TEST_CASE("heap disjointness and union") {
  CHECK(heap_disjoint(H({{10, 1}}), H({{11, 2}})));
  CHECK_FALSE(heap_disjoint(H({{10, 1}}), H({{10, 2}})));
  CHECK(heap_disjoint(H({{10, 1}}), Heap{}));
  CHECK(heap_union(H({{10, 1}}), H({{11, 2}})) == H({{10, 1}, {11, 2}}));
  CHECK(heap_union(H({{10, 1}}), Heap{}) == H({{10, 1}}));
  CHECK_THROWS_AS(heap_union(H({{10, 1}}), H({{10, 2}})), HeapError);
}

TEST_CASE("heap subtraction") {
  CHECK(heap_subtract(H({{10, 1}, {11, 2}}), H({{11, 2}})) == H({{10, 1}}));
  CHECK(heap_subtract(H({{10, 1}}), Heap{}) == H({{10, 1}}));
  CHECK(heap_subtract(H({{10, 1}}), H({{10, 1}})) == Heap{});
  CHECK_THROWS_AS(heap_subtract(H({{10, 1}}), H({{11, 2}})), HeapError);
  CHECK_THROWS_AS(heap_subtract(H({{10, 1}}), H({{10, 2}})), HeapError);  // value mismatch
}

TEST_CASE("subheap enumeration") {
  CHECK(subheaps(Heap{}).size() == 1);
  auto one = subheaps(H({{10, 1}}));
  REQUIRE(one.size() == 2);
  CHECK(one[0] == Heap{});
  CHECK(one[1] == H({{10, 1}}));
  gen::Rng rng(5);
  gen::GenConfig cfg;
  cfg.bounds = DomainBounds::defaults();
  for (int i = 0; i < 50; ++i) {
    Heap h = gen::gen_heap(rng, cfg, 5);
    CHECK(subheaps(h).size() == (size_t(1) << h.size()));
  }
}

TEST_CASE("heap union is commutative and associative with unit empty") {
  gen::Rng rng(6);
  gen::GenConfig cfg;
  cfg.bounds = DomainBounds::defaults();
  for (int i = 0; i < 200; ++i) {
    Heap a = gen::gen_heap(rng, cfg, 2);
    Heap b = gen::gen_heap(rng, cfg, 2, a);
    Heap c = gen::gen_heap(rng, cfg, 2, heap_union(a, b));
    CHECK(heap_union(a, b) == heap_union(b, a));
    CHECK(heap_union(heap_union(a, b), c) == heap_union(a, heap_union(b, c)));
    CHECK(heap_union(a, Heap{}) == a);
    CHECK(heap_subtract(heap_union(a, b), b) == a);
  }
}

TEST_CASE("resource configurations") {
  ResourceConfig rc({"r"}, {}, {});
  CHECK(rc.contains("r"));
  CHECK(rc.without("r") == ResourceConfig{});
  ResourceConfig rc2({}, {}, {"r"});
  CHECK(rc2.contains("r"));
  CHECK_FALSE(ResourceConfig{}.contains("r"));
  ResourceConfig rc3({}, {"s"}, {});
  CHECK(rc3.without("r") == rc3);
}

TEST_CASE("configuration constructor rejects overlapping sets") {
  std::vector<std::string> pool = {"a", "b", "c"};
  gen::Rng rng(7);
  for (int i = 0; i < 300; ++i) {
    std::set<std::string> o, l, d;
    for (const auto& r : pool) {
      if (rng.chance(50)) o.insert(r);
      if (rng.chance(50)) l.insert(r);
      if (rng.chance(50)) d.insert(r);
    }
    bool overlap = false;
    for (const auto& r : pool) {
      int n = (int)o.count(r) + (int)l.count(r) + (int)d.count(r);
      overlap = overlap || n > 1;
    }
    if (overlap) {
      CHECK_THROWS_AS(ResourceConfig(o, l, d), StateError);
    } else {
      ResourceConfig rc(o, l, d);
      CHECK(rc.owned() == o);
    }
  }
}

TEST_CASE("canonical state dump") {
  Store s(std::map<std::string, Value>{{"q", Value::integer(0)}, {"p", Value::integer(1)}});
  Heap h = Heap{}.with(11, Value::null()).with(10, Value::integer(5));
  MachineState st{s, h, ResourceConfig({"se"}, {}, {})};
  CHECK(st.dump() == "s{p=1,q=0} h{10:5,11:null} O{se} L{} D{}");
}

TEST_CASE("expression evaluation") {
  DomainBounds bounds = DomainBounds::defaults();
  Store s2(std::map<std::string, Value>{{"x", Value::integer(1)}, {"p", Value::integer(0)}});
  CHECK(eval_expr(s2, eadd(evar("x"), elit(1)), bounds).value == Value::integer(2));
  CHECK(eval_expr(s2, elit(7), bounds).ok() == false);  // 7 is neither in range nor a location
  CHECK(eval_expr(s2, evar("p"), bounds).value == Value::integer(0));
  CHECK_FALSE(eval_expr(s2, eadd(evar("x"), enull()), bounds).ok());
  CHECK_FALSE(eval_expr(s2, emul(elit(2), elit(2)), bounds).ok());  // 4 overflows
  CHECK(eval_expr(s2, eadd(elit(10), elit(1)), bounds).value == Value::integer(11));  // location arithmetic

  CHECK(eval_bool(s2, beq(enull(), enull()), bounds).value == true);
  CHECK(eval_bool(s2, beq(evar("x"), enull()), bounds).value == false);
  CHECK_FALSE(eval_bool(s2, blt(enull(), elit(0)), bounds).ok());
  CHECK(eval_bool(s2, band(btrue(), bnot(bfalse())), bounds).value == true);
}

TEST_CASE("stores are total over their domain") {
  Store s(std::map<std::string, Value>{{"x", Value::integer(0)}});
  CHECK_THROWS_AS(s.get("nope"), StateError);
  CHECK_THROWS_AS(s.with("nope", Value::integer(1)), StateError);
  CHECK(s.with("x", Value::null()).get("x").is_null());
}
