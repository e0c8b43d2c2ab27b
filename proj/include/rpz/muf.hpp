#pragma once

#include <memory>
#include <string>
#include <vector>

#include "rpz/ops.hpp"
#include "rpz/value.hpp"

namespace rpz {

// Interned variable names; ids are process-wide and stable for a run.
int intern(const std::string& name);
const std::string& symbol_name(int id);

struct MPattern {
  enum class Tag { Name, Wild, Tuple };
  Tag tag = Tag::Wild;
  int sym = -1;
  std::vector<MPattern> items;

  static MPattern named(const std::string& n) { return MPattern{Tag::Name, intern(n), {}}; }
  static MPattern wild() { return MPattern{Tag::Wild, -1, {}}; }
  static MPattern tuple(std::vector<MPattern> ps) { return MPattern{Tag::Tuple, -1, std::move(ps)}; }
  std::string str() const;
};

struct MufTerm;
using MPtr = std::shared_ptr<const MufTerm>;

struct MufTerm {
  enum class Tag {
    Const,
    Var,
    Tuple,
    Op,      // op(kids[0])
    App,     // kids[0] applied to kids[1]; kids[0] is a Fun or a Global
    Global,  // step function of a declaration
    If,      // lazy conditional
    Let,     // let pat = kids[0] in kids[1]
    Fun,     // fun pat -> kids[0]
    Sample,
    Observe,
    Factor,
    Infer,   // infer(kids[0] : Fun, kids[1] : state)
    Copy,    // fresh copy of a state tree (mutable leaves duplicated)
  };
  Tag tag = Tag::Const;
  Value literal;
  int sym = -1;            // Var, Global (declaration index)
  const Op* op = nullptr;  // Op
  MPattern pat;            // Let, Fun
  long particles = 0;      // Infer
  std::vector<MPtr> kids;
};

MPtr m_const(Value v);
MPtr m_var(const std::string& n);
MPtr m_var(int sym);
MPtr m_tuple(std::vector<MPtr> items);
MPtr m_op(const Op* op, MPtr arg);
MPtr m_app(MPtr fn, MPtr arg);
MPtr m_global(int decl_index);
MPtr m_if(MPtr c, MPtr t, MPtr e);
MPtr m_let(MPattern p, MPtr bound, MPtr body);
MPtr m_fun(MPattern p, MPtr body);
MPtr m_sample(MPtr d);
MPtr m_observe(MPtr d, MPtr v);
MPtr m_factor(MPtr w);
MPtr m_infer(long particles, MPtr fn, MPtr state);
MPtr m_copy(MPtr s);

// Stable textual form for golden tests; `globals` names Global references.
std::string print(const MPtr& t, const std::vector<std::string>& globals = {});

// Number of term nodes.
std::size_t term_size(const MPtr& t);

}  // namespace rpz
