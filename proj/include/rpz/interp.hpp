#pragma once

#include <string>
#include <vector>

#include "rpz/ast.hpp"

namespace rpz {

// Direct interpreter of the co-iterative semantics over the kernel AST,
// independent of compilation. Deterministic programs only.
class CoiterInterp {
 public:
  explicit CoiterInterp(const KernelProgram& prog) : prog_(prog) {}

  // Initial state of a declaration's body.
  Value init(const std::string& node) const;
  // One reaction; updates `state`.
  Value step(const std::string& node, Value& state, const Value& input) const;

 private:
  const KernelProgram& prog_;
};

// Output stream of `node` on `inputs`; the final state is stored if requested.
std::vector<Value> interp_coiter(const KernelProgram& prog, const std::string& node, const std::vector<Value>& inputs,
                                 Value* final_state = nullptr);

}  // namespace rpz
