#pragma once

#include <memory>
#include <string>
#include <vector>

#include "rpz/error.hpp"
#include "rpz/types.hpp"
#include "rpz/value.hpp"

namespace rpz {

struct Op;

// Binding pattern: a name, a wildcard, unit, or a tuple of patterns.
struct Pattern {
  enum class Tag { Name, Wild, Unit, Tuple };
  Tag tag = Tag::Wild;
  std::string name;
  std::vector<Pattern> items;

  static Pattern named(std::string n) { return Pattern{Tag::Name, std::move(n), {}}; }
  static Pattern wild() { return Pattern{Tag::Wild, {}, {}}; }
  static Pattern unit() { return Pattern{Tag::Unit, {}, {}}; }
  static Pattern tuple(std::vector<Pattern> ps) { return Pattern{Tag::Tuple, {}, std::move(ps)}; }

  void names(std::vector<std::string>& out) const;
  std::string str() const;
};

struct KernelExpr;
using KPtr = std::shared_ptr<KernelExpr>;

struct Init {
  std::string name;
  KPtr value;
  SrcLoc loc;
};

struct Equation {
  Pattern lhs;  // a single Name after desugaring
  KPtr rhs;
  SrcLoc loc;
  const std::string& name() const { return lhs.name; }
};

struct KernelExpr {
  enum class Tag {
    Const,
    Var,
    Pair,
    OpApp,
    Call,
    Last,
    WhereRec,
    Present,
    Reset,
    Sample,
    Observe,
    Factor,
    Infer,
    // Surface sugar removed by desugar().
    Pre,
    Arrow,
    If,
    // Unresolved application `f e` produced by the parser; resolved to OpApp or Call.
    Apply,
  };

  Tag tag;
  SrcLoc loc;
  Value literal;          // Const
  std::string name;       // Var, Last, OpApp/Call/Apply target
  const Op* op = nullptr;  // OpApp
  std::vector<KPtr> kids;  // operands in source order
  std::vector<Init> inits;     // WhereRec
  std::vector<Equation> eqs;   // WhereRec
  long particles = 0;          // Infer; 0 means runtime default

  // Filled by kind_check.
  Kind kind = Kind::D;
  TypePtr type;

  static KPtr make(Tag t, SrcLoc loc) {
    auto e = std::make_shared<KernelExpr>();
    e->tag = t;
    e->loc = loc;
    return e;
  }
};

KPtr clone_expr(const KPtr& e);

struct Decl {
  bool proba = false;
  std::string name;
  Pattern param;
  KPtr body;
  SrcLoc loc;
  TypePtr param_type;
  TypePtr result_type;
};

struct KernelProgram {
  std::vector<Decl> decls;
  const Decl* find(const std::string& name) const;
};

KernelProgram clone_program(const KernelProgram& p);

// Stable textual form of kernel expressions, used by golden tests.
std::string show(const KernelExpr& e);
std::string show(const KernelProgram& p);

}  // namespace rpz
