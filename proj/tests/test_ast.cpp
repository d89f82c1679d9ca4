#include <doctest.h>

#include "csl/parser.hpp"
#include "csl/pretty.hpp"
#include "csl/properties.hpp"
#include "csl/sos.hpp"

using namespace csl;

namespace {

CmdPtr P(const std::string& text) { return parse_program(text); }
AssertPtr A(const std::string& text) { return parse_assertion(text); }

const char* kSemInvariant = "((p = 0 /\\ q = 0) \\/ (p = 1 /\\ q = 0) \\/ (p = 0 /\\ q = 1)) /\\ emp";
const char* kPop = "with st when ~(z = null) do (y := z; x1 := y; z := [y + 1]; dispose(y + 1))";
const char* kPush = "with st when true do (y := cons(x2, z); z := y)";

}  // namespace

TEST_CASE("free variables of expressions and assertions") {
  CHECK(free_vars(eadd(evar("x"), elit(2))) == std::set<std::string>{"x"});
  CHECK(free_vars(aforall("x", alift(beq(evar("x"), evar("y"))))) == std::set<std::string>{"y"});
  CHECK(free_vars(A(kSemInvariant)) == std::set<std::string>{"p", "q"});
  CHECK(free_vars(A("exists a. exists b. z |-> a, b * stack(b)")) == std::set<std::string>{"z"});
}

TEST_CASE("modified variables") {
  CHECK(mod_vars(cskip()).empty());
  CHECK(mod_vars(P(std::string(kPop) + "; dispose(x1)")) == std::set<std::string>{"x1", "y", "z"});
  CHECK(mod_vars(P(kPush)) == std::set<std::string>{"y", "z"});
}

TEST_CASE("resource names") {
  CHECK(res_names(cskip()).empty());
  CHECK(res_names(P("with se when q = 0 do p := 1")) == std::set<std::string>{"se"});
  CHECK(res_names(P("res r. within r do skip")) == std::set<std::string>{"r"});
  CHECK(free_res_names(P("res r. within r do skip")).empty());
  CHECK(free_res_names(P("within r do skip")) == std::set<std::string>{"r"});
}

TEST_CASE("locked resources") {
  CHECK(locked(P("within r do skip")) == std::set<std::string>{"r"});
  CHECK(locked(P("res r. within r do skip")).empty());
  CHECK(locked(P("within r do skip || within r' do skip")) == std::set<std::string>{"r", "r'"});
  CHECK(locked(P("(within r do skip); within r' do skip")) == std::set<std::string>{"r"});
  CHECK(locked(P("with r when true do skip")).empty());
}

TEST_CASE("next-transition write set") {
  CHECK(chng_vars(P("x := 1")) == std::set<std::string>{"x"});
  CHECK(chng_vars(P("x := 1; y := 2")) == std::set<std::string>{"x"});
  CHECK(chng_vars(cskip()).empty());
  CHECK(chng_vars(P("if x = 0 then y := 1 else z := 2")).empty());
  CHECK(chng_vars(P("while true do x := 1")).empty());
  CHECK(chng_vars(P("with r when true do x := 1")).empty());
  CHECK(chng_vars(P("within r do x := 1")) == std::set<std::string>{"x"});
  CHECK(chng_vars(P("res r. x := 1")) == std::set<std::string>{"x"});
  CHECK(chng_vars(P("x := 1 || y := [2]")) == std::set<std::string>{"x", "y"});
}

TEST_CASE("chng is a subset of mod, and one-step writes land inside chng") {
  gen::Rng rng(2024);
  gen::GenConfig cfg;
  for (int i = 0; i < 400; ++i) {
    CmdPtr c = gen::gen_cmd(rng, cfg, 3);
    std::set<std::string> chng = chng_vars(c);
    std::set<std::string> mod = mod_vars(c);
    for (const auto& x : chng) CHECK(mod.count(x));
    // oracle: diff the store across every single transition
    MachineState st{gen::gen_store(rng, cfg), gen::gen_heap(rng, cfg, 1), gen::gen_rconfig(rng, cfg)};
    for (const auto& suc : step(c, st, cfg.bounds, AllocMode::All).successors) {
      for (const auto& [x, v] : suc.state.store.map()) {
        if (!(st.store.get(x) == v)) CHECK(chng.count(x));
      }
    }
  }
}

TEST_CASE("resource renaming") {
  CmdPtr c = P("with r when x = 0 do within r do skip");
  CmdPtr renamed = rename_resource(c, "r", "s2");
  CHECK(commands_equal(renamed, P("with s2 when x = 0 do within s2 do skip")));
  CHECK(commands_equal(rename_resource(cskip(), "r", "s2"), cskip()));
  CHECK_THROWS_AS(rename_resource(P("res r. within q1 do skip"), "r", "q1"), RenameError);
}

TEST_CASE("renaming round trip") {
  gen::Rng rng(9);
  gen::GenConfig cfg;
  for (int i = 0; i < 300; ++i) {
    CmdPtr c = gen::gen_cmd(rng, cfg, 3);
    if (res_names(c).count("fresh")) continue;
    for (const auto& r : res_names(c)) {
      CmdPtr there = rename_resource(c, r, "fresh");
      CHECK(commands_equal(rename_resource(there, "fresh", r), c));
    }
  }
}

TEST_CASE("auxiliary variable sets") {
  CHECK(is_aux_set(P("a := a + 1; x := 1"), {"a"}));
  CHECK_FALSE(is_aux_set(P("x := a"), {"a"}));
  CHECK(is_aux_set(P("x := a"), {}));
  CHECK_FALSE(is_aux_set(P("if a = 0 then skip else skip"), {"a"}));
  CHECK_FALSE(is_aux_set(P("[a] := 1"), {"a"}));
  CHECK(is_aux_set(P("a := cons(a, 2)"), {"a"}));
}

TEST_CASE("auxiliary erasure") {
  CHECK(commands_equal(erase_aux(P("a := 1; x := 2"), {"a"}), P("skip; x := 2")));
  CmdPtr c = P("while x < 2 do (a := a + 1; x := x + 1)");
  CHECK(commands_equal(erase_aux(c, {}), c));
  CHECK_THROWS_AS(erase_aux(P("x := a"), {"a"}), AuxError);
}

namespace {
int count_skips(const CmdPtr& c) {
  int n = 0;
  auto rec = [&](auto&& self, const CmdPtr& k) -> void {
    if (is_skip(k)) {
      ++n;
      return;
    }
    if (const auto* x = std::get_if<Command::Seq>(&k->node)) {
      self(self, x->first);
      self(self, x->second);
    } else if (const auto* x = std::get_if<Command::If>(&k->node)) {
      self(self, x->then_branch);
      self(self, x->else_branch);
    } else if (const auto* x = std::get_if<Command::While>(&k->node)) {
      self(self, x->body);
    } else if (const auto* x = std::get_if<Command::Res>(&k->node)) {
      self(self, x->body);
    } else if (const auto* x = std::get_if<Command::With>(&k->node)) {
      self(self, x->body);
    } else if (const auto* x = std::get_if<Command::Within>(&k->node)) {
      self(self, x->body);
    } else if (const auto* x = std::get_if<Command::Par>(&k->node)) {
      self(self, x->left);
      self(self, x->right);
    }
  };
  rec(rec, c);
  return n;
}
}  // namespace

TEST_CASE("erasure replaces exactly the auxiliary assignments with skip") {
  gen::Rng rng(77);
  gen::GenConfig cfg;
  cfg.vars = {"x"};
  cfg.heap_cmds = false;
  for (int i = 0; i < 200; ++i) {
    CmdPtr c = detail::gen_aux_cmd(rng, cfg, "a", 1 + (int)rng.below(3));
    std::set<std::string> xs{"a"};
    REQUIRE(is_aux_set(c, xs));
    CmdPtr erased = erase_aux(c, xs);
    CHECK(count_skips(erased) - count_skips(c) == count_aux_assignments(c, xs));
    CHECK(locked(erased) == locked(c));
    CHECK(count_aux_assignments(erased, xs) == 0);
  }
}

TEST_CASE("alpha-aware assertion equality") {
  CHECK(assertions_equal(A("forall x. x = y"), A("forall v. v = y")));
  CHECK_FALSE(assertions_equal(A("forall x. x = y"), A("forall y. y = y")));
  CHECK_FALSE(assertions_equal(A("forall x. x = x"), A("forall y. y = x")));
  CHECK(assertions_equal(A("exists a. exists b. z |-> a, b * stack(b)"),
                         A("exists u. exists v. z |-> u, v * stack(v)")));
  CHECK_FALSE(assertions_equal(A("emp * true"), A("true * emp")));
}

TEST_CASE("lifting distributes boolean structure") {
  AssertPtr lifted = alift(band(beq(evar("x"), elit(0)), bnot(beq(evar("y"), elit(1)))));
  CHECK(assertions_equal(lifted, A("x = 0 /\\ ~(y = 1)")));
}
