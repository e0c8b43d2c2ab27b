#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "rpz/distribution.hpp"
#include "rpz/eval.hpp"
#include "rpz/rng.hpp"

namespace rpz {

struct Particle {
  Value state;
  double log_weight = 0.0;
};

// Importance-sampling handler: sample draws, observe and factor add to the
// log-weight.
class ImportanceEffects : public Effects {
 public:
  ImportanceEffects(EngineConfig cfg, Rng& rng) : Effects(std::move(cfg)), rng_(rng) {}

  Value sample(const Value& dist) override;
  void observe(const Value& dist, const Value& v) override;
  void factor(const Value& w) override;

  double log_weight = 0.0;

 private:
  Rng& rng_;
};

// Applies a model step function `fun s -> (v, s')` to `state` under the
// importance-sampling handler. Returns v, replaces state with s' and adds the
// step's score to log_weight.
Value eval_importance(const MufTerm& fn, Value& state, const Env& env, double& log_weight, Rng& rng,
                      const EngineConfig& cfg, const CompiledProgram& prog);

// Normalized weights from log-weights.
std::vector<double> normalized_weights(const std::vector<double>& log_weights);
double effective_sample_size(const std::vector<double>& log_weights);

// Systematic resampling: N ancestor indices in nondecreasing order. Throws a
// Degenerate error when every weight is -inf.
std::vector<std::size_t> systematic_resample(const std::vector<double>& log_weights, double u);

// Rebuilds a cloud from ancestor indices; a singly selected particle is moved
// and every further copy goes through `dup`.
template <class P, class Dup>
std::vector<P> select_particles(std::vector<P>& cloud, const std::vector<std::size_t>& ancestors, Dup dup) {
  std::vector<std::size_t> count(cloud.size(), 0);
  for (auto a : ancestors) ++count[a];
  std::vector<P> out;
  out.reserve(ancestors.size());
  for (std::size_t j = 0; j < cloud.size(); ++j) {
    if (count[j] == 0) continue;
    for (std::size_t k = 1; k < count[j]; ++k) out.push_back(dup(cloud[j]));
    out.push_back(std::move(cloud[j]));
  }
  return out;
}

// Runs f(i) for i in [0, n), on `threads` workers when above one.
void parallel_for_particles(int threads, std::size_t n, const std::function<void(std::size_t)>& f);

// Stream keys: one per (step, particle), one per step for resampling.
std::uint64_t particle_key(std::uint64_t key, long step, std::size_t particle);
std::uint64_t resample_key(std::uint64_t key, long step);

// One particle-filter step over `cloud`: returns the weighted Categorical over
// per-particle results. When `resample` is set the cloud is resampled with
// weights reset to zero (always, or only below N/2 effective particles when
// cfg.ess_resampling is on). `log_evidence` receives the step increment.
Value pf_infer_step(const MufTerm& fn, std::vector<Particle>& cloud, const Env& env, const CompiledProgram& prog,
                    const EngineConfig& cfg, long step, bool resample, double& log_evidence);

std::unique_ptr<InferState> make_particle_engine(const EngineConfig& cfg, const Value& init, long particles,
                                                 bool resample);
std::unique_ptr<InferState> make_ds_engine(const EngineConfig& cfg, const Value& init, long particles,
                                           bool streaming, bool bounded);

// Exact per-step result distributions of a model with finitely supported
// sample sites, by enumerating execution paths. `inputs` feeds the model one
// value per step.
std::vector<DistPtr> exhaustive_enum(const CompiledProgram& prog, const std::string& model,
                                     const std::vector<Value>& inputs, std::size_t path_budget = 100000);

}  // namespace rpz
