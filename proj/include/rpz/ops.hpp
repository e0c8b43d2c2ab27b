#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rpz/types.hpp"
#include "rpz/value.hpp"

namespace rpz {

class Unifier {
 public:
  virtual ~Unifier() = default;
  virtual void unify(const TypePtr& expected, const TypePtr& actual) = 0;
  // Records that a distribution type must carry a density.
  virtual void require_density(const TypePtr& dist_type) = 0;
};

// How an operator behaves when an argument is symbolic under delayed sampling.
enum class SymMode {
  Lazy,        // builds a symbolic application
  Linear,      // builds an affine term when one operand is constant, else Lazy
  Structural,  // inspects only tuple structure; symbolic leaves pass through
  DistCtor,    // builds a symbolic distribution
  Force,       // forces every symbolic leaf first
};

struct Op {
  std::string name;
  // Number of packed arguments; 1 means the operand itself.
  int arity = 1;
  SymMode sym_mode = SymMode::Lazy;
  // Semantics on a concrete (or structurally symbolic) operand.
  std::function<Value(const Value&)> apply;
  // Result type from argument types.
  std::function<TypePtr(Unifier&, const std::vector<TypePtr>&)> type;
};

const Op* find_op(const std::string& name);
// Adds or replaces an operator; used by benchmark modules for model-specific builtins.
void register_op(Op op);

// Applies an operator with nil absorption for non-structural operators.
Value apply_op(const Op& op, const Value& arg);

// Operand list of a packed argument.
std::vector<Value> unpack(const Op& op, const Value& arg);

}  // namespace rpz
