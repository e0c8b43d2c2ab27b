#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "rpz/muf.hpp"
#include "rpz/value.hpp"

namespace rpz {

struct CompiledProgram;

// Variable environment: a flat binding stack with an optional read-only
// parent, so particles can share the enclosing environment of an `infer`.
class Env {
 public:
  Env() = default;
  explicit Env(const Env* parent) : parent_(parent) {}

  const Value& lookup(int sym) const;
  void push(int sym, Value v) { vars_.emplace_back(sym, std::move(v)); }
  std::size_t mark() const { return vars_.size(); }
  void reset(std::size_t m) { vars_.resize(m); }
  const Env* parent() const { return parent_; }

 private:
  std::vector<std::pair<int, Value>> vars_;
  const Env* parent_ = nullptr;
};

// Inference method and its parameters, shared by nested `infer` sites.
struct EngineConfig {
  std::string method = "pf";  // is | pf | ds | bds | sds
  long default_particles = 100;
  long particles_override = 0;  // when positive, replaces every particle count
  std::uint64_t key = 0;
  bool ess_resampling = false;
  int threads = 1;
};

class Effects;

// Per-site inference engine holding the particle cloud.
class InferState {
 public:
  virtual ~InferState() = default;
  // Advances every particle by one step and returns the result distribution.
  virtual Value step(const MufTerm& fn, const Env& env, const CompiledProgram& prog) = 0;
  virtual std::unique_ptr<InferState> clone() const = 0;
  // Log-evidence increment of the last step.
  virtual double log_evidence() const { return 0.0; }
  // Live delayed-sampling nodes across particles, or a state-size proxy.
  virtual std::size_t live_nodes() const { return 0; }
};

// Runtime state of an `infer` site: the allocated model state and, once the
// first step has run, the engine.
class InferCell {
 public:
  InferCell(Value init, long particles, int site) : init_(std::move(init)), particles_(particles), site_(site) {}

  const Value& init() const { return init_; }
  long particles() const { return particles_; }
  int site() const { return site_; }
  InferState* engine() const { return engine_.get(); }
  void set_engine(std::unique_ptr<InferState> e) { engine_ = std::move(e); }
  std::shared_ptr<InferCell> clone() const;

 private:
  Value init_;
  long particles_;
  int site_;
  std::unique_ptr<InferState> engine_;
};

std::unique_ptr<InferState> make_engine(const EngineConfig& cfg, const Value& init, long particles);

// Handler for the effectful constructs of the IR.
class Effects {
 public:
  explicit Effects(EngineConfig cfg = {}) : cfg_(std::move(cfg)) {}
  virtual ~Effects() = default;

  // The deterministic evaluator never reaches these; a kind-checked program
  // only runs them under an inference engine.
  virtual Value sample(const Value& dist);
  virtual void observe(const Value& dist, const Value& v);
  virtual void factor(const Value& w);
  virtual Value apply(const Op& op, const Value& arg) { return apply_op(op, arg); }
  // Concrete truth value of a branch condition.
  virtual bool truth(const Value& c);
  virtual Value infer(const MufTerm& term, InferCell& cell, const Env& env, const CompiledProgram& prog);
  // Fresh copy of a state tree: engines and graph nodes are duplicated.
  virtual Value copy_state(const Value& s);

  const EngineConfig& config() const { return cfg_; }

  // Accumulated over top-level infer sites during a step.
  double step_log_evidence = 0.0;
  std::size_t step_live_nodes = 0;

 protected:
  EngineConfig cfg_;
};

// Evaluates a term; Fun terms are only reduced when applied.
Value eval(const MufTerm& t, Env& env, Effects& fx, const CompiledProgram& prog);

// Binds a pattern; a nil value binds nil to every name.
void bind_pattern(const MPattern& p, const Value& v, Env& env);

// Copies a state tree, cloning infer cells; immutable subtrees are shared.
Value copy_cells(const Value& s);

// One reaction of declaration `decl`: returns the output and updates `state`.
Value step_node(const CompiledProgram& prog, int decl, Value& state, const Value& input, Effects& fx);

}  // namespace rpz
