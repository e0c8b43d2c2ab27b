#include "rpz/inference.hpp"

#include <tbb/global_control.h>
#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

#include <cmath>
#include <limits>

#include "rpz/compile.hpp"
#include "rpz/error.hpp"

namespace rpz {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

Value ImportanceEffects::sample(const Value& dist) {
  if (dist.is_nil()) return Value::nil();
  return draw(*dist.as_dist(), rng_);
}

void ImportanceEffects::observe(const Value& dist, const Value& v) {
  if (dist.is_nil() || v.is_nil()) return;
  const Distribution& d = *dist.as_dist();
  if (!has_density(d)) throw Error(ErrorKind::Density, "observe on a distribution without density: " + describe(d));
  log_weight += log_pdf(d, v);
}

void ImportanceEffects::factor(const Value& w) {
  if (w.is_nil()) return;
  log_weight += w.as_float();
}

Value eval_importance(const MufTerm& fn, Value& state, const Env& env, double& log_weight, Rng& rng,
                      const EngineConfig& cfg, const CompiledProgram& prog) {
  if (fn.tag != MufTerm::Tag::Fun) throw Error(ErrorKind::Eval, "infer expects a step function");
  ImportanceEffects fx(cfg, rng);
  Env local(&env);
  bind_pattern(fn.pat, state, local);
  Value r = eval(*fn.kids[0], local, fx, prog);
  state = r.at(1);
  log_weight += fx.log_weight;
  return r.at(0);
}

std::vector<double> normalized_weights(const std::vector<double>& lw) {
  double z = log_sum_exp(lw);
  std::vector<double> w(lw.size());
  for (std::size_t i = 0; i < lw.size(); ++i) w[i] = std::exp(lw[i] - z);
  return w;
}

double effective_sample_size(const std::vector<double>& lw) {
  double s = 0.0;
  for (double w : normalized_weights(lw)) s += w * w;
  return 1.0 / s;
}

std::vector<std::size_t> systematic_resample(const std::vector<double>& lw, double u) {
  if (lw.empty() || log_sum_exp(lw) == kNegInf)
    throw Error(ErrorKind::Degenerate, "every particle has zero weight");
  std::vector<double> w = normalized_weights(lw);
  std::size_t n = w.size();
  std::vector<std::size_t> out;
  out.reserve(n);
  double cum = w[0];
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double pos = (static_cast<double>(i) + u) / static_cast<double>(n);
    while (pos > cum && j + 1 < n) cum += w[++j];
    // Rounding can leave the tail on a zero-weight particle.
    std::size_t k = j;
    while (w[k] == 0.0 && k > 0) --k;
    out.push_back(k);
  }
  return out;
}

void parallel_for_particles(int threads, std::size_t n, const std::function<void(std::size_t)>& f) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  // The default worker limit follows the core count; a requested thread
  // count above it is honored.
  tbb::global_control limit(tbb::global_control::max_allowed_parallelism, static_cast<std::size_t>(threads));
  tbb::task_arena arena(threads);
  arena.execute([&] { tbb::parallel_for(std::size_t{0}, n, [&](std::size_t i) { f(i); }); });
}

std::uint64_t particle_key(std::uint64_t key, long step, std::size_t particle) {
  return mix_key(key, static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(particle));
}

std::uint64_t resample_key(std::uint64_t key, long step) {
  return mix_key(mix_key(key, 0x72657361ULL), static_cast<std::uint64_t>(step));
}

Value pf_infer_step(const MufTerm& fn, std::vector<Particle>& cloud, const Env& env, const CompiledProgram& prog,
                    const EngineConfig& cfg, long step, bool resample, double& log_evidence) {
  std::size_t n = cloud.size();
  std::vector<double> before(n);
  for (std::size_t i = 0; i < n; ++i) before[i] = cloud[i].log_weight;
  std::vector<Value> results(n);
  parallel_for_particles(cfg.threads, n, [&](std::size_t i) {
    Rng rng(particle_key(cfg.key, step, i));
    EngineConfig sub = cfg;
    sub.key = rng.key();
    sub.threads = 1;
    results[i] = eval_importance(fn, cloud[i].state, env, cloud[i].log_weight, rng, sub, prog);
  });
  std::vector<double> lw(n);
  for (std::size_t i = 0; i < n; ++i) lw[i] = cloud[i].log_weight;
  log_evidence = log_sum_exp(lw) - log_sum_exp(before);

  DistPtr d;
  if (n == 1) {
    d = make_dirac(results[0]);
  } else {
    if (log_sum_exp(lw) == kNegInf) throw Error(ErrorKind::Degenerate, "every particle has zero weight");
    std::vector<double> w = normalized_weights(lw);
    std::vector<std::pair<Value, double>> items;
    items.reserve(n);
    for (std::size_t i = 0; i < n; ++i) items.emplace_back(results[i], w[i]);
    d = make_categorical(std::move(items));
  }

  if (resample && (!cfg.ess_resampling || effective_sample_size(lw) < 0.5 * static_cast<double>(n))) {
    Rng r(resample_key(cfg.key, step));
    auto anc = systematic_resample(lw, r.uniform());
    cloud = select_particles(cloud, anc, [](const Particle& p) { return Particle{copy_cells(p.state), 0.0}; });
    for (auto& p : cloud) p.log_weight = 0.0;
  }
  return Value::dist(d);
}

namespace {

class ParticleEngine : public InferState {
 public:
  ParticleEngine(const EngineConfig& cfg, const Value& init, long n, bool resample) : cfg_(cfg), resample_(resample) {
    if (n < 1) throw Error(ErrorKind::Config, "particle count must be positive");
    cloud_.reserve(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) cloud_.push_back(Particle{copy_cells(init), 0.0});
  }

  Value step(const MufTerm& fn, const Env& env, const CompiledProgram& prog) override {
    return pf_infer_step(fn, cloud_, env, prog, cfg_, step_++, resample_, evidence_);
  }

  std::unique_ptr<InferState> clone() const override {
    auto c = std::unique_ptr<ParticleEngine>(new ParticleEngine(*this));
    for (auto& p : c->cloud_) p.state = copy_cells(p.state);
    return c;
  }

  double log_evidence() const override { return evidence_; }

  std::size_t live_nodes() const override {
    std::size_t s = 0;
    for (const auto& p : cloud_) s += tree_size(p.state);
    return s;
  }

 private:
  ParticleEngine(const ParticleEngine&) = default;

  EngineConfig cfg_;
  bool resample_;
  std::vector<Particle> cloud_;
  long step_ = 0;
  double evidence_ = 0.0;
};

}  // namespace

std::unique_ptr<InferState> make_particle_engine(const EngineConfig& cfg, const Value& init, long particles,
                                                 bool resample) {
  return std::make_unique<ParticleEngine>(cfg, init, particles, resample);
}

}  // namespace rpz
