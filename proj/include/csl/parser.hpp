#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "csl/ast.hpp"
#include "csl/proof.hpp"

// Concrete syntax. ASCII operators throughout: `|->` points-to, `*` both
// separating conjunction (in assertions) and multiplication (in expressions;
// parenthesize products inside assertions), `/\ \/ ~` connectives, `||`
// parallel composition, `forall x.` / `exists x.` quantifiers. Comments run
// from `//` to end of line.

namespace csl {

struct ParseError : std::runtime_error {
  SourceSpan span;
  std::set<std::string> expected;
  ParseError(std::string msg, SourceSpan sp, std::set<std::string> exp = {})
      : std::runtime_error(std::move(msg)), span(std::move(sp)), expected(std::move(exp)) {}
};

// ---------------------------------------------------------------------------
// File contents
// ---------------------------------------------------------------------------

struct VarDecl {
  std::string name;
  std::optional<std::vector<Value>> domain;  // initial-domain hint
  SourceSpan span;
};

struct SpecBlock {
  std::string name;
  std::set<std::string> rely;
  AssertPtr pre;
  CmdPtr prog;
  AssertPtr post;
  std::vector<AssertPtr> always;     // must hold in every reachable state
  std::optional<int> init_cells;     // cap on initial-heap enumeration
  SourceSpan span;
};

struct SpecFile {
  std::vector<VarDecl> vars;
  PredicateTable preds;
  ResourceContext ctx;
  std::vector<SpecBlock> specs;

  std::set<std::string> var_names() const {
    std::set<std::string> s;
    for (const auto& v : vars) s.insert(v.name);
    return s;
  }
  const SpecBlock* find_spec(const std::string& name) const {
    for (const auto& sp : specs)
      if (sp.name == name) return &sp;
    return nullptr;
  }
  bool empty() const { return vars.empty() && preds.defs.empty() && ctx.entries.empty() && specs.empty(); }
};

struct DerivFile {
  std::vector<VarDecl> vars;
  PredicateTable preds;
  std::vector<std::pair<std::string, Derivation>> derivations;

  const Derivation* find(const std::string& name) const {
    for (const auto& [n, d] : derivations)
      if (n == name) return &d;
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

namespace detail {

struct Token {
  enum class Kind { Ident, Int, Sym, End };
  Kind kind = Kind::End;
  std::string text;
  long long num = 0;
  SourceSpan span;
};

inline const std::set<std::string>& reserved_words() {
  static const std::set<std::string> words = {
      "skip", "if", "then", "else", "while", "do", "res", "with", "when", "within", "dispose", "cons",
      "null", "true", "false", "emp", "forall", "exists", "vars", "predicate", "resource", "spec",
      "rely", "pre", "post", "prog", "always", "initcells", "in", "derivation", "judgment", "ctx",
      "frame", "aux", "rename"};
  return words;
}

class Lexer {
 public:
  Lexer(std::string_view text, std::string file) : text_(text), file_(std::move(file)) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_ws();
      if (pos_ >= text_.size()) break;
      out.push_back(next());
    }
    Token end;
    end.kind = Token::Kind::End;
    end.span = here(0);
    out.push_back(end);
    return out;
  }

 private:
  std::string_view text_;
  std::string file_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;

  SourceSpan here(size_t len) const {
    SourceSpan sp;
    sp.file = file_;
    sp.line0 = sp.line1 = line_;
    sp.col0 = col_;
    sp.col1 = col_ + int(len);
    return sp;
  }

  void advance(size_t n) {
    for (size_t i = 0; i < n && pos_ < text_.size(); ++i, ++pos_) {
      if (text_[pos_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
    }
  }

  void skip_ws() {
    for (;;) {
      while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\r' ||
                                     text_[pos_] == '\n'))
        advance(1);
      if (pos_ + 1 < text_.size() && text_[pos_] == '/' && text_[pos_ + 1] == '/') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance(1);
        continue;
      }
      break;
    }
  }

  bool starts_with(const char* s) const {
    size_t n = std::char_traits<char>::length(s);
    return text_.compare(pos_, n, s) == 0;
  }

  Token next() {
    char c = text_[pos_];
    if (isalpha((unsigned char)c) || c == '_') {
      size_t start = pos_;
      while (pos_ < text_.size() &&
             (isalnum((unsigned char)text_[pos_]) || text_[pos_] == '_' || text_[pos_] == '\'')) {
        ++pos_;
        ++col_;
      }
      Token t;
      t.kind = Token::Kind::Ident;
      t.text = std::string(text_.substr(start, pos_ - start));
      t.span = here(0);
      t.span.col0 -= int(t.text.size());
      return t;
    }
    if (isdigit((unsigned char)c)) {
      size_t start = pos_;
      while (pos_ < text_.size() && isdigit((unsigned char)text_[pos_])) ++pos_, ++col_;
      Token t;
      t.kind = Token::Kind::Int;
      t.text = std::string(text_.substr(start, pos_ - start));
      t.num = std::stoll(t.text);
      t.span = here(0);
      t.span.col0 -= int(t.text.size());
      return t;
    }
    static const char* multi[] = {":=", "|->", "||", "|-", "/\\", "\\/", "->"};
    for (const char* m : multi) {
      if (starts_with(m)) {
        Token t;
        t.kind = Token::Kind::Sym;
        t.text = m;
        t.span = here(std::char_traits<char>::length(m));
        advance(std::char_traits<char>::length(m));
        return t;
      }
    }
    static const std::string singles = "()[]{},;.:=<+-*~";
    if (singles.find(c) != std::string::npos) {
      Token t;
      t.kind = Token::Kind::Sym;
      t.text = std::string(1, c);
      t.span = here(1);
      advance(1);
      return t;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", here(1));
  }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace detail {

class Parser {
 public:
  Parser(std::string_view text, std::string file) : toks_(Lexer(text, file).run()) {}

  // --- public entry points --------------------------------------------------

  CmdPtr command() {
    CmdPtr c = parse_cmd();
    expect_end();
    return c;
  }
  AssertPtr assertion() {
    AssertPtr a = parse_assert();
    expect_end();
    return a;
  }
  SpecFile spec_file() {
    SpecFile f;
    while (!at_end()) parse_spec_item(f);
    validate_spec(f);
    return f;
  }
  DerivFile deriv_file() {
    DerivFile f;
    SpecFile decls;
    while (!at_end()) {
      if (at_ident("vars")) {
        parse_vardecl(decls);
      } else if (at_ident("predicate")) {
        parse_preddecl(decls);
      } else if (at_ident("derivation")) {
        expect_ident("derivation");
        Token name = expect_plain_ident("derivation name");
        expect_sym("=");
        f.derivations.push_back({name.text, parse_deriv_node()});
        expect_sym(";");
      } else {
        throw err("expected 'vars', 'predicate' or 'derivation'", {"vars", "predicate", "derivation"});
      }
    }
    f.vars = decls.vars;
    f.preds = decls.preds;
    validate_deriv(f);
    return f;
  }

 private:
  std::vector<Token> toks_;
  size_t pos_ = 0;

  // --- token plumbing -------------------------------------------------------

  const Token& peek(size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  const Token& take() { return toks_[std::min(pos_++, toks_.size() - 1)]; }
  bool at_end() const { return peek().kind == Token::Kind::End; }
  bool at_sym(const char* s) const { return peek().kind == Token::Kind::Sym && peek().text == s; }
  bool at_ident(const char* s) const { return peek().kind == Token::Kind::Ident && peek().text == s; }
  bool eat_sym(const char* s) {
    if (!at_sym(s)) return false;
    ++pos_;
    return true;
  }
  bool eat_ident(const char* s) {
    if (!at_ident(s)) return false;
    ++pos_;
    return true;
  }
  ParseError err(std::string msg, std::set<std::string> expected = {}) const {
    return ParseError(std::move(msg) + " at '" + (peek().kind == Token::Kind::End ? "<end>" : peek().text) + "'",
                      peek().span, std::move(expected));
  }
  void expect_sym(const char* s) {
    if (!eat_sym(s)) throw err(std::string("expected '") + s + "'", {s});
  }
  void expect_ident(const char* s) {
    if (!eat_ident(s)) throw err(std::string("expected '") + s + "'", {s});
  }
  void expect_end() {
    if (!at_end()) throw err("expected end of input", {"<end>"});
  }
  Token expect_plain_ident(const char* what) {
    if (peek().kind != Token::Kind::Ident) throw err(std::string("expected ") + what, {"identifier"});
    if (reserved_words().count(peek().text))
      throw err("reserved word '" + peek().text + "' cannot be used as " + what);
    return take();
  }
  size_t save() const { return pos_; }
  void restore(size_t p) { pos_ = p; }

  // --- expressions -----------------------------------------------------------

  ExprPtr parse_expr_atom() {
    if (eat_ident("null")) return enull();
    if (peek().kind == Token::Kind::Int) return elit(take().num);
    if (at_sym("-") && peek(1).kind == Token::Kind::Int) {
      take();
      return elit(-take().num);
    }
    if (eat_sym("(")) {
      ExprPtr e = parse_expr(false);
      expect_sym(")");
      return e;
    }
    if (peek().kind == Token::Kind::Ident && !reserved_words().count(peek().text)) return evar(take().text);
    throw err("expected an expression", {"integer", "null", "identifier", "("});
  }

  ExprPtr parse_expr_mul() {
    ExprPtr e = parse_expr_atom();
    while (at_sym("*")) {
      take();
      e = emul(e, parse_expr_atom());
    }
    return e;
  }

  // In assertion position a bare `*` means separating conjunction, so
  // multiplication needs parentheses there.
  ExprPtr parse_expr(bool no_mul) {
    ExprPtr e = no_mul ? parse_expr_atom() : parse_expr_mul();
    for (;;) {
      if (at_sym("+")) {
        take();
        e = eadd(e, no_mul ? parse_expr_atom() : parse_expr_mul());
      } else if (at_sym("-")) {
        take();
        e = esub(e, no_mul ? parse_expr_atom() : parse_expr_mul());
      } else {
        return e;
      }
    }
  }

  // --- boolean expressions ----------------------------------------------------

  BoolPtr parse_bexp() {
    BoolPtr b = parse_bexp_unit();
    while (at_sym("/\\")) {
      take();
      b = band(b, parse_bexp_unit());
    }
    return b;
  }

  BoolPtr parse_bexp_unit() {
    if (eat_sym("~")) return bnot(parse_bexp_unit());
    if (eat_ident("true")) return btrue();
    if (eat_ident("false")) return bfalse();
    if (at_sym("(")) {
      size_t mark = save();
      try {
        return parse_comparison();
      } catch (const ParseError&) {
        restore(mark);
      }
      expect_sym("(");
      BoolPtr b = parse_bexp();
      expect_sym(")");
      return b;
    }
    return parse_comparison();
  }

  BoolPtr parse_comparison() {
    ExprPtr lhs = parse_expr(false);
    if (eat_sym("=")) return beq(lhs, parse_expr(false));
    if (eat_sym("<")) return blt(lhs, parse_expr(false));
    throw err("expected '=' or '<'", {"=", "<"});
  }

  // --- assertions ---------------------------------------------------------------

  bool at_quantifier() const { return at_ident("forall") || at_ident("exists"); }

  // A quantifier binds lowest and swallows the rest of the enclosing
  // formula, so it may also appear as the last operand of a connective.
  AssertPtr parse_assert() {
    if (eat_ident("forall")) {
      Token x = expect_plain_ident("a quantified variable");
      expect_sym(".");
      return aforall(x.text, parse_assert());
    }
    if (eat_ident("exists")) {
      Token x = expect_plain_ident("a quantified variable");
      expect_sym(".");
      return aexists(x.text, parse_assert());
    }
    AssertPtr a = parse_assert_and();
    while (at_sym("\\/")) {
      take();
      if (at_quantifier()) return aor(a, parse_assert());
      a = aor(a, parse_assert_and());
    }
    return a;
  }

  AssertPtr parse_assert_and() {
    AssertPtr a = parse_assert_sep();
    while (at_sym("/\\")) {
      take();
      if (at_quantifier()) return aand(a, parse_assert());
      a = aand(a, parse_assert_sep());
    }
    return a;
  }

  AssertPtr parse_assert_sep() {
    AssertPtr a = parse_assert_unit();
    while (at_sym("*")) {
      take();
      if (at_quantifier()) return asep(a, parse_assert());
      a = asep(a, parse_assert_unit());
    }
    return a;
  }

  AssertPtr parse_assert_unit() {
    if (eat_sym("~")) {
      if (at_quantifier()) return anot(parse_assert());
      return anot(parse_assert_unit());
    }
    return parse_assert_atom();
  }

  AssertPtr parse_assert_atom() {
    if (eat_ident("emp")) return aemp();
    if (eat_ident("true")) return alift(btrue());
    if (eat_ident("false")) return alift(bfalse());
    if (peek().kind == Token::Kind::Ident && !reserved_words().count(peek().text) && peek(1).kind == Token::Kind::Sym &&
        peek(1).text == "(") {
      Token name = take();
      take();  // (
      std::vector<ExprPtr> args;
      if (!at_sym(")")) {
        args.push_back(parse_expr(false));
        while (eat_sym(",")) args.push_back(parse_expr(false));
      }
      expect_sym(")");
      return apred(name.text, std::move(args));
    }
    if (at_sym("(")) {
      size_t mark = save();
      try {
        return parse_assert_exprled();
      } catch (const ParseError&) {
        restore(mark);
      }
      expect_sym("(");
      AssertPtr a = parse_assert();
      expect_sym(")");
      return a;
    }
    return parse_assert_exprled();
  }

  AssertPtr parse_assert_exprled() {
    ExprPtr lhs = parse_expr(true);
    if (eat_sym("=")) return alift(beq(lhs, parse_expr(true)));
    if (eat_sym("<")) return alift(blt(lhs, parse_expr(true)));
    if (eat_sym("|->")) {
      std::vector<ExprPtr> cells;
      cells.push_back(parse_expr(true));
      while (eat_sym(",")) cells.push_back(parse_expr(true));
      return apointsto(lhs, std::move(cells));
    }
    throw err("expected '=', '<' or '|->'", {"=", "<", "|->"});
  }

  // --- commands ---------------------------------------------------------------

  CmdPtr parse_cmd() {
    CmdPtr c = parse_cmd_seq();
    while (at_sym("||")) {
      take();
      c = cpar(c, parse_cmd_seq());
    }
    return c;
  }

  CmdPtr parse_cmd_seq() {
    CmdPtr c = parse_cmd_prefix();
    if (eat_sym(";")) return cseq(c, parse_cmd_seq());
    return c;
  }

  CmdPtr parse_cmd_prefix() {
    if (eat_ident("if")) {
      BoolPtr b = parse_bexp();
      expect_ident("then");
      CmdPtr t = parse_cmd_prefix();
      expect_ident("else");
      return cif(b, t, parse_cmd_prefix());
    }
    if (eat_ident("while")) {
      BoolPtr b = parse_bexp();
      expect_ident("do");
      return cwhile(b, parse_cmd_prefix());
    }
    if (eat_ident("res")) {
      Token r = expect_plain_ident("a resource name");
      expect_sym(".");
      return cres(r.text, parse_cmd_prefix());
    }
    if (eat_ident("with")) {
      Token r = expect_plain_ident("a resource name");
      expect_ident("when");
      BoolPtr b = parse_bexp();
      expect_ident("do");
      return cwith(r.text, b, parse_cmd_prefix());
    }
    if (eat_ident("within")) {
      Token r = expect_plain_ident("a resource name");
      expect_ident("do");
      return cwithin(r.text, parse_cmd_prefix());
    }
    return parse_cmd_atom();
  }

  CmdPtr parse_cmd_atom() {
    if (eat_ident("skip")) return cskip();
    if (eat_ident("dispose")) {
      expect_sym("(");
      ExprPtr e = parse_expr(false);
      expect_sym(")");
      return cdispose(e);
    }
    if (eat_sym("[")) {
      ExprPtr addr = parse_expr(false);
      expect_sym("]");
      expect_sym(":=");
      return cstore(addr, parse_expr(false));
    }
    if (eat_sym("(")) {
      CmdPtr c = parse_cmd();
      expect_sym(")");
      return c;
    }
    Token x = expect_plain_ident("a variable");
    expect_sym(":=");
    if (eat_sym("[")) {
      ExprPtr addr = parse_expr(false);
      expect_sym("]");
      return cload(x.text, addr);
    }
    if (eat_ident("cons")) {
      expect_sym("(");
      std::vector<ExprPtr> inits;
      inits.push_back(parse_expr(false));
      while (eat_sym(",")) inits.push_back(parse_expr(false));
      expect_sym(")");
      return calloc(x.text, std::move(inits));
    }
    return cassign(x.text, parse_expr(false));
  }

  // --- spec files ----------------------------------------------------------------

  Value parse_value() {
    if (eat_ident("null")) return Value::null();
    if (at_sym("-") && peek(1).kind == Token::Kind::Int) {
      take();
      return Value::integer(-take().num);
    }
    if (peek().kind == Token::Kind::Int) return Value::integer(take().num);
    throw err("expected a value", {"integer", "null"});
  }

  void parse_vardecl(SpecFile& f) {
    expect_ident("vars");
    for (;;) {
      Token name = expect_plain_ident("a variable name");
      VarDecl vd;
      vd.name = name.text;
      vd.span = name.span;
      if (eat_ident("in")) {
        expect_sym("{");
        std::vector<Value> dom;
        dom.push_back(parse_value());
        while (eat_sym(",")) dom.push_back(parse_value());
        expect_sym("}");
        vd.domain = std::move(dom);
      }
      f.vars.push_back(std::move(vd));
      if (!eat_sym(",")) break;
    }
    expect_sym(";");
  }

  void parse_preddecl(SpecFile& f) {
    expect_ident("predicate");
    Token name = expect_plain_ident("a predicate name");
    expect_sym("(");
    std::vector<std::string> params;
    if (!at_sym(")")) {
      params.push_back(expect_plain_ident("a parameter").text);
      while (eat_sym(",")) params.push_back(expect_plain_ident("a parameter").text);
    }
    expect_sym(")");
    expect_sym("=");
    AssertPtr body = parse_assert();
    expect_sym(";");
    if (f.preds.has(name.text)) throw ParseError("duplicate predicate '" + name.text + "'", name.span);
    f.preds.defs[name.text] = PredDef{std::move(params), std::move(body)};
  }

  void parse_spec_item(SpecFile& f) {
    if (at_ident("vars")) {
      parse_vardecl(f);
      return;
    }
    if (at_ident("predicate")) {
      parse_preddecl(f);
      return;
    }
    if (at_ident("resource")) {
      expect_ident("resource");
      Token name = expect_plain_ident("a resource name");
      expect_sym("(");
      std::set<std::string> pv;
      if (!at_sym(")")) {
        pv.insert(expect_plain_ident("a protected variable").text);
        while (eat_sym(",")) pv.insert(expect_plain_ident("a protected variable").text);
      }
      expect_sym(")");
      expect_sym(":");
      AssertPtr inv = parse_assert();
      expect_sym(";");
      if (f.ctx.find(name.text)) throw ParseError("duplicate resource '" + name.text + "'", name.span);
      f.ctx.entries.push_back({name.text, std::move(pv), std::move(inv)});
      return;
    }
    if (at_ident("spec")) {
      expect_ident("spec");
      Token name = expect_plain_ident("a spec name");
      expect_sym("{");
      SpecBlock sb;
      sb.name = name.text;
      sb.span = name.span;
      bool have_pre = false, have_post = false, have_prog = false, have_rely = false;
      while (!eat_sym("}")) {
        if (eat_ident("rely")) {
          expect_sym("{");
          if (!at_sym("}")) {
            sb.rely.insert(expect_plain_ident("a rely variable").text);
            while (eat_sym(",")) sb.rely.insert(expect_plain_ident("a rely variable").text);
          }
          expect_sym("}");
          expect_sym(";");
          have_rely = true;
        } else if (eat_ident("pre")) {
          expect_sym("{");
          sb.pre = parse_assert();
          expect_sym("}");
          expect_sym(";");
          have_pre = true;
        } else if (eat_ident("post")) {
          expect_sym("{");
          sb.post = parse_assert();
          expect_sym("}");
          expect_sym(";");
          have_post = true;
        } else if (eat_ident("prog")) {
          expect_sym("{");
          sb.prog = parse_cmd();
          expect_sym("}");
          expect_sym(";");
          have_prog = true;
        } else if (eat_ident("always")) {
          expect_sym("{");
          sb.always.push_back(parse_assert());
          expect_sym("}");
          expect_sym(";");
        } else if (eat_ident("initcells")) {
          if (peek().kind != Token::Kind::Int) throw err("expected a cell count", {"integer"});
          sb.init_cells = int(take().num);
          expect_sym(";");
        } else {
          throw err("expected a spec clause", {"rely", "pre", "post", "prog", "always", "initcells", "}"});
        }
      }
      if (!have_pre || !have_post || !have_prog || !have_rely)
        throw ParseError("spec '" + sb.name + "' needs rely, pre, prog and post clauses", sb.span);
      for (const auto& other : f.specs)
        if (other.name == sb.name) throw ParseError("duplicate spec '" + sb.name + "'", sb.span);
      f.specs.push_back(std::move(sb));
      return;
    }
    throw err("expected a declaration", {"vars", "predicate", "resource", "spec"});
  }

  // --- derivation files -------------------------------------------------------

  Judgment parse_judgment() {
    expect_sym("(");
    expect_ident("judgment");
    Judgment j;
    expect_ident("ctx");
    expect_sym("{");
    if (!at_sym("}")) {
      for (;;) {
        Token r = expect_plain_ident("a resource name");
        expect_sym("(");
        std::set<std::string> pv;
        if (!at_sym(")")) {
          pv.insert(expect_plain_ident("a protected variable").text);
          while (eat_sym(",")) pv.insert(expect_plain_ident("a protected variable").text);
        }
        expect_sym(")");
        expect_sym(":");
        AssertPtr inv = parse_assert();
        j.ctx.entries.push_back({r.text, std::move(pv), std::move(inv)});
        if (!eat_sym(",")) break;
      }
    }
    expect_sym("}");
    expect_ident("rely");
    expect_sym("{");
    if (!at_sym("}")) {
      j.rely.insert(expect_plain_ident("a rely variable").text);
      while (eat_sym(",")) j.rely.insert(expect_plain_ident("a rely variable").text);
    }
    expect_sym("}");
    expect_ident("pre");
    expect_sym("{");
    j.pre = parse_assert();
    expect_sym("}");
    expect_ident("prog");
    expect_sym("{");
    j.cmd = parse_cmd();
    expect_sym("}");
    expect_ident("post");
    expect_sym("{");
    j.post = parse_assert();
    expect_sym("}");
    expect_sym(")");
    return j;
  }

  Derivation parse_deriv_node() {
    SourceSpan start = peek().span;
    expect_sym("(");
    if (peek().kind != Token::Kind::Ident) throw err("expected a rule tag", {"rule tag"});
    Token tag = take();
    auto rt = rule_tag_from(tag.text);
    if (!rt) throw ParseError("unknown rule tag '" + tag.text + "'", tag.span);
    Derivation d;
    d.tag = *rt;
    d.span = tag.span;
    d.conclusion = parse_judgment();
    // optional rule data
    while (at_sym("(") && peek(1).kind == Token::Kind::Ident &&
           (peek(1).text == "frame" || peek(1).text == "aux" || peek(1).text == "rename")) {
      take();  // (
      Token what = take();
      if (what.text == "frame") {
        d.frame = parse_assert();
      } else if (what.text == "aux") {
        std::set<std::string> xs;
        if (!at_sym(")")) {
          xs.insert(expect_plain_ident("an auxiliary variable").text);
          while (eat_sym(",")) xs.insert(expect_plain_ident("an auxiliary variable").text);
        }
        d.aux = std::move(xs);
      } else {
        Token from = expect_plain_ident("a resource name");
        Token to = expect_plain_ident("a resource name");
        d.rename = std::make_pair(from.text, to.text);
      }
      expect_sym(")");
    }
    while (at_sym("(")) d.premises.push_back(parse_deriv_node());
    expect_sym(")");
    d.span.line1 = peek(0).span.line1;
    (void)start;
    return d;
  }

  // --- name validation -----------------------------------------------------------

  void collect_pred_calls(const AssertPtr& a, std::vector<std::pair<std::string, size_t>>& out) {
    if (const auto* n = std::get_if<Assertion::Not>(&a->node)) return collect_pred_calls(n->arg, out);
    if (const auto* c = std::get_if<Assertion::And>(&a->node)) {
      collect_pred_calls(c->lhs, out);
      collect_pred_calls(c->rhs, out);
      return;
    }
    if (const auto* f = std::get_if<Assertion::Forall>(&a->node)) return collect_pred_calls(f->body, out);
    if (const auto* s = std::get_if<Assertion::Sep>(&a->node)) {
      collect_pred_calls(s->lhs, out);
      collect_pred_calls(s->rhs, out);
      return;
    }
    if (const auto* q = std::get_if<Assertion::PredApp>(&a->node)) out.push_back({q->name, q->args.size()});
  }

  void check_pred_calls(const SpecFile& f, const AssertPtr& a, const SourceSpan& sp) {
    std::vector<std::pair<std::string, size_t>> calls;
    collect_pred_calls(a, calls);
    for (const auto& [name, arity] : calls) {
      if (!f.preds.has(name)) throw ParseError("unbound predicate '" + name + "'", sp);
      if (f.preds.get(name).params.size() != arity)
        throw ParseError("predicate '" + name + "' expects " + std::to_string(f.preds.get(name).params.size()) +
                             " argument(s)",
                         sp);
    }
  }

  void check_vars_declared(const std::set<std::string>& declared, const std::set<std::string>& used,
                           const char* what, const SourceSpan& sp) {
    for (const auto& x : used)
      if (!declared.count(x)) throw ParseError(std::string("unbound variable '") + x + "' in " + what, sp);
  }

  void validate_spec(SpecFile& f) {
    std::set<std::string> declared;
    for (const auto& v : f.vars) {
      if (!declared.insert(v.name).second) throw ParseError("duplicate variable '" + v.name + "'", v.span);
    }
    for (const auto& [name, def] : f.preds.defs) {
      std::set<std::string> params(def.params.begin(), def.params.end());
      if (params.size() != def.params.size())
        throw ParseError("duplicate parameter in predicate '" + name + "'", SourceSpan{});
      std::set<std::string> fv = free_vars(def.body);
      for (const auto& x : fv)
        if (!params.count(x))
          throw ParseError("predicate '" + name + "' body mentions non-parameter '" + x + "'", SourceSpan{});
      check_pred_calls(f, def.body, SourceSpan{});
    }
    for (const auto& e : f.ctx.entries) {
      check_vars_declared(declared, e.protected_vars, "a resource declaration", SourceSpan{});
      check_vars_declared(declared, free_vars(e.invariant), "a resource invariant", SourceSpan{});
      for (const auto& x : free_vars(e.invariant))
        if (!e.protected_vars.count(x))
          throw ParseError("invariant of '" + e.name + "' mentions unprotected variable '" + x + "'", SourceSpan{});
      check_pred_calls(f, e.invariant, SourceSpan{});
    }
    std::set<std::string> resources = f.ctx.names();
    for (const auto& sb : f.specs) {
      check_vars_declared(declared, sb.rely, "a rely set", sb.span);
      check_vars_declared(declared, free_vars(sb.pre), "a precondition", sb.span);
      check_vars_declared(declared, free_vars(sb.post), "a postcondition", sb.span);
      check_vars_declared(declared, free_vars(sb.prog), "a program", sb.span);
      for (const auto& al : sb.always) check_vars_declared(declared, free_vars(al), "an always clause", sb.span);
      check_pred_calls(f, sb.pre, sb.span);
      check_pred_calls(f, sb.post, sb.span);
      for (const auto& al : sb.always) check_pred_calls(f, al, sb.span);
      for (const auto& r : free_res_names(sb.prog))
        if (!resources.count(r)) throw ParseError("unbound resource '" + r + "' in spec '" + sb.name + "'", sb.span);
    }
  }

  void validate_deriv(DerivFile& f) {
    SpecFile shim;
    shim.vars = f.vars;
    shim.preds = f.preds;
    for (auto& [name, def] : f.preds.defs) check_pred_calls(shim, def.body, SourceSpan{});
    for (auto& [name, d] : f.derivations) validate_deriv_node(shim, d);
  }

  void validate_deriv_node(const SpecFile& shim, const Derivation& d) {
    check_pred_calls(shim, d.conclusion.pre, d.span);
    check_pred_calls(shim, d.conclusion.post, d.span);
    for (const auto& e : d.conclusion.ctx.entries) check_pred_calls(shim, e.invariant, d.span);
    if (d.frame) check_pred_calls(shim, *d.frame, d.span);
    for (const auto& p : d.premises) validate_deriv_node(shim, p);
  }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Entry points
// ---------------------------------------------------------------------------

inline CmdPtr parse_program(std::string_view text, std::string file = "<input>") {
  return detail::Parser(text, std::move(file)).command();
}

inline AssertPtr parse_assertion(std::string_view text, std::string file = "<input>") {
  return detail::Parser(text, std::move(file)).assertion();
}

inline SpecFile parse_spec_file(std::string_view text, std::string file = "<input>") {
  return detail::Parser(text, std::move(file)).spec_file();
}

inline DerivFile parse_derivation_file(std::string_view text, std::string file = "<input>") {
  return detail::Parser(text, std::move(file)).deriv_file();
}

}  // namespace csl
