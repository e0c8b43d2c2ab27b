#pragma once

#include <string>
#include <vector>

#include "rpz/ast.hpp"
#include "rpz/muf.hpp"

namespace rpz {

struct CompiledDecl {
  std::string name;
  bool proba = false;
  MPattern param;
  Value init;   // f_init: allocated state of the body
  MPtr step;    // f_step: fun (s, param) -> (value, state)
};

struct CompiledProgram {
  std::vector<CompiledDecl> decls;
  KernelProgram source;

  int index(const std::string& name) const;
  const CompiledDecl& at(const std::string& name) const;
  std::vector<std::string> names() const;
};

// Initial state of an expression. Calls read f_init of earlier declarations.
Value allocate(const KernelExpr& e, const CompiledProgram& prog);

// Transition function `fun s -> (value, state')` of an expression, before
// static reduction.
MPtr compile_expr(const KernelExpr& e, const CompiledProgram& prog);

// Turns applied `fun`s into `let`s, flattens nested lets, splits tuple lets
// and propagates variable copies.
MPtr static_reduce(const MPtr& t);

// Compiles a kind-checked, scheduled program.
CompiledProgram compile_program(const KernelProgram& prog, bool reduce = true);

// Parses, checks and compiles source text.
CompiledProgram compile_source(const std::string& source, bool reduce = true);

}  // namespace rpz
