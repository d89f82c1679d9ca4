#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "csl/core.hpp"

namespace csl {

// ---------------------------------------------------------------------------
// Arithmetic expressions
// ---------------------------------------------------------------------------

enum class BinOp { Add, Sub, Mul };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  struct Var {
    std::string name;
  };
  struct Lit {
    Value value;
  };
  struct Bin {
    BinOp op;
    ExprPtr lhs;
    ExprPtr rhs;
  };
  std::variant<Var, Lit, Bin> node;
};

inline ExprPtr evar(std::string name) { return std::make_shared<Expr>(Expr{Expr::Var{std::move(name)}}); }
inline ExprPtr elit(Value v) { return std::make_shared<Expr>(Expr{Expr::Lit{v}}); }
inline ExprPtr elit(long long n) { return elit(Value::integer(n)); }
inline ExprPtr enull() { return elit(Value::null()); }
inline ExprPtr ebin(BinOp op, ExprPtr a, ExprPtr b) {
  return std::make_shared<Expr>(Expr{Expr::Bin{op, std::move(a), std::move(b)}});
}
inline ExprPtr eadd(ExprPtr a, ExprPtr b) { return ebin(BinOp::Add, std::move(a), std::move(b)); }
inline ExprPtr esub(ExprPtr a, ExprPtr b) { return ebin(BinOp::Sub, std::move(a), std::move(b)); }
inline ExprPtr emul(ExprPtr a, ExprPtr b) { return ebin(BinOp::Mul, std::move(a), std::move(b)); }

// ---------------------------------------------------------------------------
// Boolean expressions
// ---------------------------------------------------------------------------

enum class CmpOp { Eq, Lt };

struct BoolExpr;
using BoolPtr = std::shared_ptr<const BoolExpr>;

struct BoolExpr {
  struct Lit {
    bool value;
  };
  struct Cmp {
    CmpOp op;
    ExprPtr lhs;
    ExprPtr rhs;
  };
  struct And {
    BoolPtr lhs;
    BoolPtr rhs;
  };
  struct Not {
    BoolPtr arg;
  };
  std::variant<Lit, Cmp, And, Not> node;
};

inline BoolPtr btrue() { return std::make_shared<BoolExpr>(BoolExpr{BoolExpr::Lit{true}}); }
inline BoolPtr bfalse() { return std::make_shared<BoolExpr>(BoolExpr{BoolExpr::Lit{false}}); }
inline BoolPtr bcmp(CmpOp op, ExprPtr a, ExprPtr b) {
  return std::make_shared<BoolExpr>(BoolExpr{BoolExpr::Cmp{op, std::move(a), std::move(b)}});
}
inline BoolPtr beq(ExprPtr a, ExprPtr b) { return bcmp(CmpOp::Eq, std::move(a), std::move(b)); }
inline BoolPtr blt(ExprPtr a, ExprPtr b) { return bcmp(CmpOp::Lt, std::move(a), std::move(b)); }
inline BoolPtr band(BoolPtr a, BoolPtr b) {
  return std::make_shared<BoolExpr>(BoolExpr{BoolExpr::And{std::move(a), std::move(b)}});
}
inline BoolPtr bnot(BoolPtr a) { return std::make_shared<BoolExpr>(BoolExpr{BoolExpr::Not{std::move(a)}}); }

// ---------------------------------------------------------------------------
// Assertions
// ---------------------------------------------------------------------------
//
// Core connectives only. Disjunction and existential quantification are
// surface sugar: P \/ Q is ~(~P /\ ~Q) and exists x. P is ~forall x. ~P.
// The builders below produce those encodings and the matchers recognize them,
// so structure-directed algorithms (model enumeration, printing) can treat
// them as first class without extending the core grammar.

struct Assertion;
using AssertPtr = std::shared_ptr<const Assertion>;

struct Assertion {
  struct Lift {
    BoolPtr cond;
  };
  struct Not {
    AssertPtr arg;
  };
  struct And {
    AssertPtr lhs;
    AssertPtr rhs;
  };
  struct Forall {
    std::string var;
    AssertPtr body;
  };
  struct Emp {};
  struct PointsTo {
    ExprPtr base;
    std::vector<ExprPtr> cells;  // nonempty; k-th cell lives at base+k
  };
  struct Sep {
    AssertPtr lhs;
    AssertPtr rhs;
  };
  struct PredApp {
    std::string name;
    std::vector<ExprPtr> args;
  };
  std::variant<Lift, Not, And, Forall, Emp, PointsTo, Sep, PredApp> node;
};

// Lifting a boolean expression distributes /\ and ~ into assertion
// connectives so that semantically equal guards compare equal syntactically.
inline AssertPtr alift(const BoolPtr& b);

inline AssertPtr anot(AssertPtr a) { return std::make_shared<Assertion>(Assertion{Assertion::Not{std::move(a)}}); }
inline AssertPtr aand(AssertPtr a, AssertPtr b) {
  return std::make_shared<Assertion>(Assertion{Assertion::And{std::move(a), std::move(b)}});
}
inline AssertPtr aforall(std::string x, AssertPtr body) {
  return std::make_shared<Assertion>(Assertion{Assertion::Forall{std::move(x), std::move(body)}});
}
inline AssertPtr aemp() { return std::make_shared<Assertion>(Assertion{Assertion::Emp{}}); }
inline AssertPtr apointsto(ExprPtr base, std::vector<ExprPtr> cells) {
  return std::make_shared<Assertion>(Assertion{Assertion::PointsTo{std::move(base), std::move(cells)}});
}
inline AssertPtr asep(AssertPtr a, AssertPtr b) {
  return std::make_shared<Assertion>(Assertion{Assertion::Sep{std::move(a), std::move(b)}});
}
inline AssertPtr apred(std::string name, std::vector<ExprPtr> args) {
  return std::make_shared<Assertion>(Assertion{Assertion::PredApp{std::move(name), std::move(args)}});
}

inline AssertPtr alift(const BoolPtr& b) {
  if (const auto* a = std::get_if<BoolExpr::And>(&b->node)) return aand(alift(a->lhs), alift(a->rhs));
  if (const auto* n = std::get_if<BoolExpr::Not>(&b->node)) return anot(alift(n->arg));
  return std::make_shared<Assertion>(Assertion{Assertion::Lift{b}});
}

inline AssertPtr aor(AssertPtr a, AssertPtr b) { return anot(aand(anot(std::move(a)), anot(std::move(b)))); }
inline AssertPtr aexists(std::string x, AssertPtr body) {
  return anot(aforall(std::move(x), anot(std::move(body))));
}

// Recognize the disjunction encoding ~(~P /\ ~Q).
inline std::optional<std::pair<AssertPtr, AssertPtr>> match_or(const AssertPtr& a) {
  const auto* n = std::get_if<Assertion::Not>(&a->node);
  if (!n) return std::nullopt;
  const auto* c = std::get_if<Assertion::And>(&n->arg->node);
  if (!c) return std::nullopt;
  const auto* nl = std::get_if<Assertion::Not>(&c->lhs->node);
  const auto* nr = std::get_if<Assertion::Not>(&c->rhs->node);
  if (!nl || !nr) return std::nullopt;
  return std::make_pair(nl->arg, nr->arg);
}

// Recognize the existential encoding ~forall x. ~P.
inline std::optional<std::pair<std::string, AssertPtr>> match_exists(const AssertPtr& a) {
  const auto* n = std::get_if<Assertion::Not>(&a->node);
  if (!n) return std::nullopt;
  const auto* f = std::get_if<Assertion::Forall>(&n->arg->node);
  if (!f) return std::nullopt;
  const auto* nb = std::get_if<Assertion::Not>(&f->body->node);
  if (!nb) return std::nullopt;
  return std::make_pair(f->var, nb->arg);
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct BasicCmd {
  struct Assign {
    std::string target;
    ExprPtr value;
  };
  struct Load {
    std::string target;
    ExprPtr addr;
  };
  struct HeapWrite {
    ExprPtr addr;
    ExprPtr value;
  };
  struct Alloc {
    std::string target;
    std::vector<ExprPtr> inits;  // nonempty
  };
  struct Dispose {
    ExprPtr addr;
  };
  std::variant<Assign, Load, HeapWrite, Alloc, Dispose> node;
};

struct Command;
using CmdPtr = std::shared_ptr<const Command>;

struct Command {
  struct Skip {};
  struct Basic {
    BasicCmd cmd;
  };
  struct Seq {
    CmdPtr first;
    CmdPtr second;
  };
  struct If {
    BoolPtr cond;
    CmdPtr then_branch;
    CmdPtr else_branch;
  };
  struct While {
    BoolPtr cond;
    CmdPtr body;
  };
  struct Res {
    std::string res;
    CmdPtr body;
  };
  struct With {
    std::string res;
    BoolPtr cond;
    CmdPtr body;
  };
  struct Within {
    std::string res;
    CmdPtr body;
  };
  struct Par {
    CmdPtr left;
    CmdPtr right;
  };
  std::variant<Skip, Basic, Seq, If, While, Res, With, Within, Par> node;
};

inline CmdPtr cskip() { return std::make_shared<Command>(Command{Command::Skip{}}); }
inline CmdPtr cbasic(BasicCmd c) { return std::make_shared<Command>(Command{Command::Basic{std::move(c)}}); }
inline CmdPtr cassign(std::string x, ExprPtr e) {
  return cbasic(BasicCmd{BasicCmd::Assign{std::move(x), std::move(e)}});
}
inline CmdPtr cload(std::string x, ExprPtr addr) {
  return cbasic(BasicCmd{BasicCmd::Load{std::move(x), std::move(addr)}});
}
inline CmdPtr cstore(ExprPtr addr, ExprPtr v) {
  return cbasic(BasicCmd{BasicCmd::HeapWrite{std::move(addr), std::move(v)}});
}
inline CmdPtr calloc(std::string x, std::vector<ExprPtr> inits) {
  return cbasic(BasicCmd{BasicCmd::Alloc{std::move(x), std::move(inits)}});
}
inline CmdPtr cdispose(ExprPtr addr) { return cbasic(BasicCmd{BasicCmd::Dispose{std::move(addr)}}); }
inline CmdPtr cseq(CmdPtr a, CmdPtr b) {
  return std::make_shared<Command>(Command{Command::Seq{std::move(a), std::move(b)}});
}
inline CmdPtr cif(BoolPtr b, CmdPtr t, CmdPtr e) {
  return std::make_shared<Command>(Command{Command::If{std::move(b), std::move(t), std::move(e)}});
}
inline CmdPtr cwhile(BoolPtr b, CmdPtr body) {
  return std::make_shared<Command>(Command{Command::While{std::move(b), std::move(body)}});
}
inline CmdPtr cres(std::string r, CmdPtr body) {
  return std::make_shared<Command>(Command{Command::Res{std::move(r), std::move(body)}});
}
inline CmdPtr cwith(std::string r, BoolPtr b, CmdPtr body) {
  return std::make_shared<Command>(Command{Command::With{std::move(r), std::move(b), std::move(body)}});
}
inline CmdPtr cwithin(std::string r, CmdPtr body) {
  return std::make_shared<Command>(Command{Command::Within{std::move(r), std::move(body)}});
}
inline CmdPtr cpar(CmdPtr a, CmdPtr b) {
  return std::make_shared<Command>(Command{Command::Par{std::move(a), std::move(b)}});
}

inline bool is_skip(const CmdPtr& c) { return std::holds_alternative<Command::Skip>(c->node); }

// ---------------------------------------------------------------------------
// Resource contexts
// ---------------------------------------------------------------------------

bool assertions_equal(const AssertPtr& a, const AssertPtr& b);

struct ResourceEntry {
  std::string name;
  std::set<std::string> protected_vars;
  AssertPtr invariant;
};

struct ResourceContext {
  std::vector<ResourceEntry> entries;

  std::set<std::string> names() const {
    std::set<std::string> s;
    for (const auto& e : entries) s.insert(e.name);
    return s;
  }
  std::set<std::string> protected_all() const {
    std::set<std::string> s;
    for (const auto& e : entries) s.insert(e.protected_vars.begin(), e.protected_vars.end());
    return s;
  }
  const ResourceEntry* find(const std::string& r) const {
    for (const auto& e : entries)
      if (e.name == r) return &e;
    return nullptr;
  }
  std::set<std::string> protected_by(const std::string& r) const {
    const ResourceEntry* e = find(r);
    return e ? e->protected_vars : std::set<std::string>{};
  }
  ResourceContext appended(ResourceEntry e) const {
    ResourceContext g = *this;
    g.entries.push_back(std::move(e));
    return g;
  }
  ResourceContext renamed(const std::string& r, const std::string& r2) const {
    ResourceContext g = *this;
    for (auto& e : g.entries)
      if (e.name == r) e.name = r2;
    return g;
  }
};

// ---------------------------------------------------------------------------
// Structural equality (alpha-aware for quantifiers)
// ---------------------------------------------------------------------------

// Renaming context for comparisons under quantifiers: maps left-side bound
// names to right-side bound names, and remembers which right-side names are
// bound (a free left variable must not collide with one of those).
struct AlphaCtx {
  std::map<std::string, std::string> a2b;
  std::set<std::string> bound_b;
};

inline bool exprs_equal(const ExprPtr& a, const ExprPtr& b, const AlphaCtx* alpha = nullptr) {
  if (a->node.index() != b->node.index()) return false;
  if (const auto* va = std::get_if<Expr::Var>(&a->node)) {
    const auto& vb = std::get<Expr::Var>(b->node);
    if (alpha) {
      auto it = alpha->a2b.find(va->name);
      if (it != alpha->a2b.end()) return it->second == vb.name;
      return va->name == vb.name && !alpha->bound_b.count(vb.name);
    }
    return va->name == vb.name;
  }
  if (const auto* la = std::get_if<Expr::Lit>(&a->node)) return la->value == std::get<Expr::Lit>(b->node).value;
  const auto& ba = std::get<Expr::Bin>(a->node);
  const auto& bb = std::get<Expr::Bin>(b->node);
  return ba.op == bb.op && exprs_equal(ba.lhs, bb.lhs, alpha) && exprs_equal(ba.rhs, bb.rhs, alpha);
}

inline bool bools_equal(const BoolPtr& a, const BoolPtr& b, const AlphaCtx* alpha = nullptr) {
  if (a->node.index() != b->node.index()) return false;
  if (const auto* la = std::get_if<BoolExpr::Lit>(&a->node)) return la->value == std::get<BoolExpr::Lit>(b->node).value;
  if (const auto* ca = std::get_if<BoolExpr::Cmp>(&a->node)) {
    const auto& cb = std::get<BoolExpr::Cmp>(b->node);
    return ca->op == cb.op && exprs_equal(ca->lhs, cb.lhs, alpha) && exprs_equal(ca->rhs, cb.rhs, alpha);
  }
  if (const auto* aa = std::get_if<BoolExpr::And>(&a->node)) {
    const auto& ab = std::get<BoolExpr::And>(b->node);
    return bools_equal(aa->lhs, ab.lhs, alpha) && bools_equal(aa->rhs, ab.rhs, alpha);
  }
  return bools_equal(std::get<BoolExpr::Not>(a->node).arg, std::get<BoolExpr::Not>(b->node).arg, alpha);
}

namespace detail {
inline bool assertions_equal_rec(const AssertPtr& a, const AssertPtr& b, const AlphaCtx& alpha) {
  if (a->node.index() != b->node.index()) return false;
  if (const auto* la = std::get_if<Assertion::Lift>(&a->node))
    return bools_equal(la->cond, std::get<Assertion::Lift>(b->node).cond, &alpha);
  if (const auto* na = std::get_if<Assertion::Not>(&a->node))
    return assertions_equal_rec(na->arg, std::get<Assertion::Not>(b->node).arg, alpha);
  if (const auto* ca = std::get_if<Assertion::And>(&a->node)) {
    const auto& cb = std::get<Assertion::And>(b->node);
    return assertions_equal_rec(ca->lhs, cb.lhs, alpha) && assertions_equal_rec(ca->rhs, cb.rhs, alpha);
  }
  if (const auto* fa = std::get_if<Assertion::Forall>(&a->node)) {
    const auto& fb = std::get<Assertion::Forall>(b->node);
    AlphaCtx inner = alpha;
    inner.a2b[fa->var] = fb.var;
    inner.bound_b.insert(fb.var);
    return assertions_equal_rec(fa->body, fb.body, inner);
  }
  if (std::holds_alternative<Assertion::Emp>(a->node)) return true;
  if (const auto* pa = std::get_if<Assertion::PointsTo>(&a->node)) {
    const auto& pb = std::get<Assertion::PointsTo>(b->node);
    if (pa->cells.size() != pb.cells.size()) return false;
    if (!exprs_equal(pa->base, pb.base, &alpha)) return false;
    for (size_t i = 0; i < pa->cells.size(); ++i)
      if (!exprs_equal(pa->cells[i], pb.cells[i], &alpha)) return false;
    return true;
  }
  if (const auto* sa = std::get_if<Assertion::Sep>(&a->node)) {
    const auto& sb = std::get<Assertion::Sep>(b->node);
    return assertions_equal_rec(sa->lhs, sb.lhs, alpha) && assertions_equal_rec(sa->rhs, sb.rhs, alpha);
  }
  const auto& qa = std::get<Assertion::PredApp>(a->node);
  const auto& qb = std::get<Assertion::PredApp>(b->node);
  if (qa.name != qb.name || qa.args.size() != qb.args.size()) return false;
  for (size_t i = 0; i < qa.args.size(); ++i)
    if (!exprs_equal(qa.args[i], qb.args[i], &alpha)) return false;
  return true;
}
}  // namespace detail

// Structural equality up to renaming of quantifier-bound variables.
inline bool assertions_equal(const AssertPtr& a, const AssertPtr& b) {
  return detail::assertions_equal_rec(a, b, AlphaCtx{});
}

inline bool basic_equal(const BasicCmd& a, const BasicCmd& b) {
  if (a.node.index() != b.node.index()) return false;
  if (const auto* x = std::get_if<BasicCmd::Assign>(&a.node)) {
    const auto& y = std::get<BasicCmd::Assign>(b.node);
    return x->target == y.target && exprs_equal(x->value, y.value);
  }
  if (const auto* x = std::get_if<BasicCmd::Load>(&a.node)) {
    const auto& y = std::get<BasicCmd::Load>(b.node);
    return x->target == y.target && exprs_equal(x->addr, y.addr);
  }
  if (const auto* x = std::get_if<BasicCmd::HeapWrite>(&a.node)) {
    const auto& y = std::get<BasicCmd::HeapWrite>(b.node);
    return exprs_equal(x->addr, y.addr) && exprs_equal(x->value, y.value);
  }
  if (const auto* x = std::get_if<BasicCmd::Alloc>(&a.node)) {
    const auto& y = std::get<BasicCmd::Alloc>(b.node);
    if (x->target != y.target || x->inits.size() != y.inits.size()) return false;
    for (size_t i = 0; i < x->inits.size(); ++i)
      if (!exprs_equal(x->inits[i], y.inits[i])) return false;
    return true;
  }
  const auto& x = std::get<BasicCmd::Dispose>(a.node);
  const auto& y = std::get<BasicCmd::Dispose>(b.node);
  return exprs_equal(x.addr, y.addr);
}

inline bool commands_equal(const CmdPtr& a, const CmdPtr& b) {
  if (a->node.index() != b->node.index()) return false;
  if (std::holds_alternative<Command::Skip>(a->node)) return true;
  if (const auto* x = std::get_if<Command::Basic>(&a->node))
    return basic_equal(x->cmd, std::get<Command::Basic>(b->node).cmd);
  if (const auto* x = std::get_if<Command::Seq>(&a->node)) {
    const auto& y = std::get<Command::Seq>(b->node);
    return commands_equal(x->first, y.first) && commands_equal(x->second, y.second);
  }
  if (const auto* x = std::get_if<Command::If>(&a->node)) {
    const auto& y = std::get<Command::If>(b->node);
    return bools_equal(x->cond, y.cond) && commands_equal(x->then_branch, y.then_branch) &&
           commands_equal(x->else_branch, y.else_branch);
  }
  if (const auto* x = std::get_if<Command::While>(&a->node)) {
    const auto& y = std::get<Command::While>(b->node);
    return bools_equal(x->cond, y.cond) && commands_equal(x->body, y.body);
  }
  if (const auto* x = std::get_if<Command::Res>(&a->node)) {
    const auto& y = std::get<Command::Res>(b->node);
    return x->res == y.res && commands_equal(x->body, y.body);
  }
  if (const auto* x = std::get_if<Command::With>(&a->node)) {
    const auto& y = std::get<Command::With>(b->node);
    return x->res == y.res && bools_equal(x->cond, y.cond) && commands_equal(x->body, y.body);
  }
  if (const auto* x = std::get_if<Command::Within>(&a->node)) {
    const auto& y = std::get<Command::Within>(b->node);
    return x->res == y.res && commands_equal(x->body, y.body);
  }
  const auto& x = std::get<Command::Par>(a->node);
  const auto& y = std::get<Command::Par>(b->node);
  return commands_equal(x.left, y.left) && commands_equal(x.right, y.right);
}

inline bool contexts_equal(const ResourceContext& a, const ResourceContext& b) {
  if (a.entries.size() != b.entries.size()) return false;
  for (size_t i = 0; i < a.entries.size(); ++i) {
    if (a.entries[i].name != b.entries[i].name) return false;
    if (a.entries[i].protected_vars != b.entries[i].protected_vars) return false;
    if (!assertions_equal(a.entries[i].invariant, b.entries[i].invariant)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Free variables
// ---------------------------------------------------------------------------

inline void collect_free_vars(const ExprPtr& e, std::set<std::string>& out) {
  if (const auto* v = std::get_if<Expr::Var>(&e->node)) {
    out.insert(v->name);
  } else if (const auto* b = std::get_if<Expr::Bin>(&e->node)) {
    collect_free_vars(b->lhs, out);
    collect_free_vars(b->rhs, out);
  }
}

inline void collect_free_vars(const BoolPtr& b, std::set<std::string>& out) {
  if (const auto* c = std::get_if<BoolExpr::Cmp>(&b->node)) {
    collect_free_vars(c->lhs, out);
    collect_free_vars(c->rhs, out);
  } else if (const auto* a = std::get_if<BoolExpr::And>(&b->node)) {
    collect_free_vars(a->lhs, out);
    collect_free_vars(a->rhs, out);
  } else if (const auto* n = std::get_if<BoolExpr::Not>(&b->node)) {
    collect_free_vars(n->arg, out);
  }
}

namespace detail {
inline void collect_free_vars_assert(const AssertPtr& a, std::set<std::string>& bound, std::set<std::string>& out) {
  auto add_expr = [&](const ExprPtr& e) {
    std::set<std::string> vs;
    collect_free_vars(e, vs);
    for (const auto& v : vs)
      if (!bound.count(v)) out.insert(v);
  };
  if (const auto* l = std::get_if<Assertion::Lift>(&a->node)) {
    std::set<std::string> vs;
    collect_free_vars(l->cond, vs);
    for (const auto& v : vs)
      if (!bound.count(v)) out.insert(v);
  } else if (const auto* n = std::get_if<Assertion::Not>(&a->node)) {
    collect_free_vars_assert(n->arg, bound, out);
  } else if (const auto* c = std::get_if<Assertion::And>(&a->node)) {
    collect_free_vars_assert(c->lhs, bound, out);
    collect_free_vars_assert(c->rhs, bound, out);
  } else if (const auto* f = std::get_if<Assertion::Forall>(&a->node)) {
    bool was_bound = bound.count(f->var) != 0;
    bound.insert(f->var);
    collect_free_vars_assert(f->body, bound, out);
    if (!was_bound) bound.erase(f->var);
  } else if (const auto* p = std::get_if<Assertion::PointsTo>(&a->node)) {
    add_expr(p->base);
    for (const auto& c2 : p->cells) add_expr(c2);
  } else if (const auto* s = std::get_if<Assertion::Sep>(&a->node)) {
    collect_free_vars_assert(s->lhs, bound, out);
    collect_free_vars_assert(s->rhs, bound, out);
  } else if (const auto* q = std::get_if<Assertion::PredApp>(&a->node)) {
    for (const auto& e : q->args) add_expr(e);
  }
}
}  // namespace detail

inline std::set<std::string> free_vars(const ExprPtr& e) {
  std::set<std::string> out;
  collect_free_vars(e, out);
  return out;
}
inline std::set<std::string> free_vars(const BoolPtr& b) {
  std::set<std::string> out;
  collect_free_vars(b, out);
  return out;
}
inline std::set<std::string> free_vars(const AssertPtr& a) {
  std::set<std::string> out, bound;
  detail::collect_free_vars_assert(a, bound, out);
  return out;
}

inline void collect_free_vars(const BasicCmd& c, std::set<std::string>& out) {
  if (const auto* x = std::get_if<BasicCmd::Assign>(&c.node)) {
    out.insert(x->target);
    collect_free_vars(x->value, out);
  } else if (const auto* x = std::get_if<BasicCmd::Load>(&c.node)) {
    out.insert(x->target);
    collect_free_vars(x->addr, out);
  } else if (const auto* x = std::get_if<BasicCmd::HeapWrite>(&c.node)) {
    collect_free_vars(x->addr, out);
    collect_free_vars(x->value, out);
  } else if (const auto* x = std::get_if<BasicCmd::Alloc>(&c.node)) {
    out.insert(x->target);
    for (const auto& e : x->inits) collect_free_vars(e, out);
  } else {
    collect_free_vars(std::get<BasicCmd::Dispose>(c.node).addr, out);
  }
}

inline void collect_free_vars(const CmdPtr& c, std::set<std::string>& out) {
  if (const auto* x = std::get_if<Command::Basic>(&c->node)) {
    collect_free_vars(x->cmd, out);
  } else if (const auto* x = std::get_if<Command::Seq>(&c->node)) {
    collect_free_vars(x->first, out);
    collect_free_vars(x->second, out);
  } else if (const auto* x = std::get_if<Command::If>(&c->node)) {
    collect_free_vars(x->cond, out);
    collect_free_vars(x->then_branch, out);
    collect_free_vars(x->else_branch, out);
  } else if (const auto* x = std::get_if<Command::While>(&c->node)) {
    collect_free_vars(x->cond, out);
    collect_free_vars(x->body, out);
  } else if (const auto* x = std::get_if<Command::Res>(&c->node)) {
    collect_free_vars(x->body, out);
  } else if (const auto* x = std::get_if<Command::With>(&c->node)) {
    collect_free_vars(x->cond, out);
    collect_free_vars(x->body, out);
  } else if (const auto* x = std::get_if<Command::Within>(&c->node)) {
    collect_free_vars(x->body, out);
  } else if (const auto* x = std::get_if<Command::Par>(&c->node)) {
    collect_free_vars(x->left, out);
    collect_free_vars(x->right, out);
  }
}

inline std::set<std::string> free_vars(const CmdPtr& c) {
  std::set<std::string> out;
  collect_free_vars(c, out);
  return out;
}

// ---------------------------------------------------------------------------
// mod / res / locked / chng
// ---------------------------------------------------------------------------

// Variables assigned, loaded into or used as allocation targets anywhere.
inline std::set<std::string> mod_vars(const CmdPtr& c) {
  std::set<std::string> out;
  auto rec = [&](auto&& self, const CmdPtr& k) -> void {
    if (const auto* x = std::get_if<Command::Basic>(&k->node)) {
      if (const auto* a = std::get_if<BasicCmd::Assign>(&x->cmd.node)) out.insert(a->target);
      if (const auto* l = std::get_if<BasicCmd::Load>(&x->cmd.node)) out.insert(l->target);
      if (const auto* al = std::get_if<BasicCmd::Alloc>(&x->cmd.node)) out.insert(al->target);
    } else if (const auto* x = std::get_if<Command::Seq>(&k->node)) {
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
  return out;
}

// All resource names appearing in res, with or within forms.
inline std::set<std::string> res_names(const CmdPtr& c) {
  std::set<std::string> out;
  auto rec = [&](auto&& self, const CmdPtr& k) -> void {
    if (const auto* x = std::get_if<Command::Seq>(&k->node)) {
      self(self, x->first);
      self(self, x->second);
    } else if (const auto* x = std::get_if<Command::If>(&k->node)) {
      self(self, x->then_branch);
      self(self, x->else_branch);
    } else if (const auto* x = std::get_if<Command::While>(&k->node)) {
      self(self, x->body);
    } else if (const auto* x = std::get_if<Command::Res>(&k->node)) {
      out.insert(x->res);
      self(self, x->body);
    } else if (const auto* x = std::get_if<Command::With>(&k->node)) {
      out.insert(x->res);
      self(self, x->body);
    } else if (const auto* x = std::get_if<Command::Within>(&k->node)) {
      out.insert(x->res);
      self(self, x->body);
    } else if (const auto* x = std::get_if<Command::Par>(&k->node)) {
      self(self, x->left);
      self(self, x->right);
    }
  };
  rec(rec, c);
  return out;
}

// Resource names occurring free, i.e. not under a matching res binder.
inline std::set<std::string> free_res_names(const CmdPtr& c) {
  std::set<std::string> out;
  auto rec = [&](auto&& self, const CmdPtr& k, std::set<std::string>& bound) -> void {
    if (const auto* x = std::get_if<Command::Seq>(&k->node)) {
      self(self, x->first, bound);
      self(self, x->second, bound);
    } else if (const auto* x = std::get_if<Command::If>(&k->node)) {
      self(self, x->then_branch, bound);
      self(self, x->else_branch, bound);
    } else if (const auto* x = std::get_if<Command::While>(&k->node)) {
      self(self, x->body, bound);
    } else if (const auto* x = std::get_if<Command::Res>(&k->node)) {
      bool was = bound.count(x->res) != 0;
      bound.insert(x->res);
      self(self, x->body, bound);
      if (!was) bound.erase(x->res);
    } else if (const auto* x = std::get_if<Command::With>(&k->node)) {
      if (!bound.count(x->res)) out.insert(x->res);
      self(self, x->body, bound);
    } else if (const auto* x = std::get_if<Command::Within>(&k->node)) {
      if (!bound.count(x->res)) out.insert(x->res);
      self(self, x->body, bound);
    } else if (const auto* x = std::get_if<Command::Par>(&k->node)) {
      self(self, x->left, bound);
      self(self, x->right, bound);
    }
  };
  std::set<std::string> bound;
  rec(rec, c, bound);
  return out;
}

// Resources currently held by the (extended) command.
inline std::set<std::string> locked(const CmdPtr& c) {
  if (const auto* x = std::get_if<Command::Seq>(&c->node)) return locked(x->first);
  if (const auto* x = std::get_if<Command::Par>(&c->node)) {
    std::set<std::string> s = locked(x->left);
    auto r = locked(x->right);
    s.insert(r.begin(), r.end());
    return s;
  }
  if (const auto* x = std::get_if<Command::Res>(&c->node)) {
    std::set<std::string> s = locked(x->body);
    s.erase(x->res);
    return s;
  }
  if (const auto* x = std::get_if<Command::Within>(&c->node)) {
    std::set<std::string> s = locked(x->body);
    s.insert(x->res);
    return s;
  }
  return {};
}

// Variables the very next transition may write. Control transitions
// (loop unfolding, branch selection, region entry) write nothing, so
// if/while/with contribute the empty set; sequencing exposes only its head.
inline std::set<std::string> chng_vars(const CmdPtr& c) {
  if (const auto* x = std::get_if<Command::Basic>(&c->node)) {
    if (const auto* a = std::get_if<BasicCmd::Assign>(&x->cmd.node)) return {a->target};
    if (const auto* l = std::get_if<BasicCmd::Load>(&x->cmd.node)) return {l->target};
    if (const auto* al = std::get_if<BasicCmd::Alloc>(&x->cmd.node)) return {al->target};
    return {};
  }
  if (const auto* x = std::get_if<Command::Seq>(&c->node)) return chng_vars(x->first);
  if (const auto* x = std::get_if<Command::Par>(&c->node)) {
    std::set<std::string> s = chng_vars(x->left);
    auto r = chng_vars(x->right);
    s.insert(r.begin(), r.end());
    return s;
  }
  if (const auto* x = std::get_if<Command::Res>(&c->node)) return chng_vars(x->body);
  if (const auto* x = std::get_if<Command::Within>(&c->node)) return chng_vars(x->body);
  return {};
}

// ---------------------------------------------------------------------------
// Resource renaming C[r'/r]
// ---------------------------------------------------------------------------

struct RenameError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {
inline CmdPtr rename_res_rec(const CmdPtr& c, const std::string& from, const std::string& to) {
  if (std::holds_alternative<Command::Skip>(c->node) || std::holds_alternative<Command::Basic>(c->node)) return c;
  if (const auto* x = std::get_if<Command::Seq>(&c->node))
    return cseq(rename_res_rec(x->first, from, to), rename_res_rec(x->second, from, to));
  if (const auto* x = std::get_if<Command::If>(&c->node))
    return cif(x->cond, rename_res_rec(x->then_branch, from, to), rename_res_rec(x->else_branch, from, to));
  if (const auto* x = std::get_if<Command::While>(&c->node)) return cwhile(x->cond, rename_res_rec(x->body, from, to));
  if (const auto* x = std::get_if<Command::Res>(&c->node))
    return cres(x->res == from ? to : x->res, rename_res_rec(x->body, from, to));
  if (const auto* x = std::get_if<Command::With>(&c->node))
    return cwith(x->res == from ? to : x->res, x->cond, rename_res_rec(x->body, from, to));
  if (const auto* x = std::get_if<Command::Within>(&c->node))
    return cwithin(x->res == from ? to : x->res, rename_res_rec(x->body, from, to));
  const auto& x = std::get<Command::Par>(c->node);
  return cpar(rename_res_rec(x.left, from, to), rename_res_rec(x.right, from, to));
}
}  // namespace detail

// Substitution of resource name r by r'; r' must not occur in C.
inline CmdPtr rename_resource(const CmdPtr& c, const std::string& r, const std::string& r2) {
  if (r == r2) return c;
  if (res_names(c).count(r2))
    throw RenameError("invalid-rename: resource '" + r2 + "' already occurs in the command");
  return detail::rename_res_rec(c, r, r2);
}

// ---------------------------------------------------------------------------
// Auxiliary variables
// ---------------------------------------------------------------------------

struct AuxError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {
inline bool expr_avoids(const ExprPtr& e, const std::set<std::string>& xs) {
  std::set<std::string> vs;
  collect_free_vars(e, vs);
  for (const auto& v : vs)
    if (xs.count(v)) return false;
  return true;
}
inline bool bool_avoids(const BoolPtr& b, const std::set<std::string>& xs) {
  std::set<std::string> vs;
  collect_free_vars(b, vs);
  for (const auto& v : vs)
    if (xs.count(v)) return false;
  return true;
}
}  // namespace detail

// X is auxiliary for C when every occurrence of a variable of X sits inside
// an assignment whose target is itself in X.
inline bool is_aux_set(const CmdPtr& c, const std::set<std::string>& xs) {
  using detail::bool_avoids;
  using detail::expr_avoids;
  if (std::holds_alternative<Command::Skip>(c->node)) return true;
  if (const auto* b = std::get_if<Command::Basic>(&c->node)) {
    if (const auto* a = std::get_if<BasicCmd::Assign>(&b->cmd.node))
      return xs.count(a->target) ? true : expr_avoids(a->value, xs);
    if (const auto* l = std::get_if<BasicCmd::Load>(&b->cmd.node))
      return xs.count(l->target) ? true : expr_avoids(l->addr, xs);
    if (const auto* w = std::get_if<BasicCmd::HeapWrite>(&b->cmd.node))
      return expr_avoids(w->addr, xs) && expr_avoids(w->value, xs);
    if (const auto* al = std::get_if<BasicCmd::Alloc>(&b->cmd.node)) {
      if (xs.count(al->target)) return true;
      for (const auto& e : al->inits)
        if (!expr_avoids(e, xs)) return false;
      return true;
    }
    return expr_avoids(std::get<BasicCmd::Dispose>(b->cmd.node).addr, xs);
  }
  if (const auto* x = std::get_if<Command::Seq>(&c->node))
    return is_aux_set(x->first, xs) && is_aux_set(x->second, xs);
  if (const auto* x = std::get_if<Command::If>(&c->node))
    return bool_avoids(x->cond, xs) && is_aux_set(x->then_branch, xs) && is_aux_set(x->else_branch, xs);
  if (const auto* x = std::get_if<Command::While>(&c->node)) return bool_avoids(x->cond, xs) && is_aux_set(x->body, xs);
  if (const auto* x = std::get_if<Command::Res>(&c->node)) return is_aux_set(x->body, xs);
  if (const auto* x = std::get_if<Command::With>(&c->node)) return bool_avoids(x->cond, xs) && is_aux_set(x->body, xs);
  if (const auto* x = std::get_if<Command::Within>(&c->node)) return is_aux_set(x->body, xs);
  const auto& x = std::get<Command::Par>(c->node);
  return is_aux_set(x.left, xs) && is_aux_set(x.right, xs);
}

inline bool basic_targets_aux(const BasicCmd& c, const std::set<std::string>& xs) {
  if (const auto* a = std::get_if<BasicCmd::Assign>(&c.node)) return xs.count(a->target) != 0;
  if (const auto* l = std::get_if<BasicCmd::Load>(&c.node)) return xs.count(l->target) != 0;
  if (const auto* al = std::get_if<BasicCmd::Alloc>(&c.node)) return xs.count(al->target) != 0;
  return false;
}

// Number of assignments to variables of X in C.
inline int count_aux_assignments(const CmdPtr& c, const std::set<std::string>& xs) {
  if (const auto* b = std::get_if<Command::Basic>(&c->node)) return basic_targets_aux(b->cmd, xs) ? 1 : 0;
  if (const auto* x = std::get_if<Command::Seq>(&c->node))
    return count_aux_assignments(x->first, xs) + count_aux_assignments(x->second, xs);
  if (const auto* x = std::get_if<Command::If>(&c->node))
    return count_aux_assignments(x->then_branch, xs) + count_aux_assignments(x->else_branch, xs);
  if (const auto* x = std::get_if<Command::While>(&c->node)) return count_aux_assignments(x->body, xs);
  if (const auto* x = std::get_if<Command::Res>(&c->node)) return count_aux_assignments(x->body, xs);
  if (const auto* x = std::get_if<Command::With>(&c->node)) return count_aux_assignments(x->body, xs);
  if (const auto* x = std::get_if<Command::Within>(&c->node)) return count_aux_assignments(x->body, xs);
  if (const auto* x = std::get_if<Command::Par>(&c->node))
    return count_aux_assignments(x->left, xs) + count_aux_assignments(x->right, xs);
  return 0;
}

// C \ X: every assignment to a variable of X becomes skip.
inline CmdPtr erase_aux(const CmdPtr& c, const std::set<std::string>& xs) {
  if (!is_aux_set(c, xs)) throw AuxError("not-auxiliary: the given set is not auxiliary for the command");
  auto rec = [&](auto&& self, const CmdPtr& k) -> CmdPtr {
    if (const auto* b = std::get_if<Command::Basic>(&k->node))
      return basic_targets_aux(b->cmd, xs) ? cskip() : k;
    if (const auto* x = std::get_if<Command::Seq>(&k->node)) return cseq(self(self, x->first), self(self, x->second));
    if (const auto* x = std::get_if<Command::If>(&k->node))
      return cif(x->cond, self(self, x->then_branch), self(self, x->else_branch));
    if (const auto* x = std::get_if<Command::While>(&k->node)) return cwhile(x->cond, self(self, x->body));
    if (const auto* x = std::get_if<Command::Res>(&k->node)) return cres(x->res, self(self, x->body));
    if (const auto* x = std::get_if<Command::With>(&k->node)) return cwith(x->res, x->cond, self(self, x->body));
    if (const auto* x = std::get_if<Command::Within>(&k->node)) return cwithin(x->res, self(self, x->body));
    if (const auto* x = std::get_if<Command::Par>(&k->node)) return cpar(self(self, x->left), self(self, x->right));
    return k;
  };
  return rec(rec, c);
}

}  // namespace csl
