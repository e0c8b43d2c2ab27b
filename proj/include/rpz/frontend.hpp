#pragma once

#include <set>
#include <string>
#include <vector>

#include "rpz/ast.hpp"

namespace rpz {

struct Token {
  enum class Type { Int, Float, Ident, Keyword, Symbol, End };
  Type type = Type::End;
  std::string text;
  SrcLoc loc;
};

std::vector<Token> lex(const std::string& source);

// Parses and resolves names: applications become Call or OpApp, unbound
// variables and duplicate definitions are rejected. Surface sugar is kept.
KernelProgram parse(const std::string& source);

// Removes `pre`, `->`, `if`, tuple and wildcard left-hand sides, and
// non-constant `init`, producing the kernel form.
KernelProgram desugar(const KernelProgram& prog);

// Annotates every expression with its kind and type; rejects probabilistic
// constructs outside `proba` bodies and `infer`, type mismatches, and
// `observe` on distributions without a density. Replaces placeholder inits of
// scalar type by typed zeros.
void kind_check(KernelProgram& prog);

struct ScheduledBlock {
  std::vector<Init> inits;
  std::vector<Equation> eqs;
  KPtr result;
};

// Free names read outside `last` by an expression.
std::set<std::string> direct_reads(const KernelExpr& e);

// Orders the equations of a WhereRec so that direct reads follow writes.
ScheduledBlock schedule(const KernelExpr& where);
// Schedules every block of a program in place.
void schedule_program(KernelProgram& prog);

// parse, desugar, kind_check, schedule_program.
KernelProgram load_program(const std::string& source);

}  // namespace rpz
