#include <cmath>
#include <limits>

#include "rpz/compile.hpp"
#include "rpz/ds.hpp"
#include "rpz/error.hpp"
#include "rpz/inference.hpp"
#include "rpz/ops.hpp"

namespace rpz {

namespace {

const SymExpr* sym_of(const Value& v) { return v.is_sym() ? v.as_sym().get() : nullptr; }

// Scalar symbolic operand usable in an affine term.
bool scalar_sym(const Value& v) {
  const SymExpr* s = sym_of(v);
  if (!s) return false;
  switch (s->tag) {
    case SymExpr::Tag::RVar: return s->node->family == 'g' || s->node->family == 'v';
    case SymExpr::Tag::Affine: return true;
    case SymExpr::Tag::AffineVec: return s->scalar_out;
    default: return false;
  }
}

bool vector_sym(const Value& v) {
  const SymExpr* s = sym_of(v);
  if (!s) return false;
  if (s->tag == SymExpr::Tag::RVar) return s->node->family == 'm';
  return s->tag == SymExpr::Tag::AffineVec && !s->scalar_out;
}

long vector_dim(const SymExpr& s) {
  if (s.tag == SymExpr::Tag::AffineVec) return s.A.rows();
  const ds::Node& n = *s.node;
  if (n.status == ds::Status::Realized && n.value.is_vector()) return n.value.as_vector().size();
  if (n.marginal)
    if (auto g = n.marginal->get<Distribution::MvGaussian>()) return g->mean.size();
  if (auto c = std::get_if<ds::MvGaussianOfAffine>(&n.cond)) return c->A.rows();
  return -1;
}

Value affine(double a, const Value& e, double b) { return Value::sym(sym_affine(a, e.as_sym(), b)); }

Value affine_vec(Eigen::MatrixXd A, const Value& e, Eigen::VectorXd b, bool scalar_out) {
  return Value::sym(sym_affine_vec(std::move(A), e.as_sym(), std::move(b), scalar_out));
}

// Affine term for a linear operator with one constant operand, or nil.
Value linear(const Op& op, const Value& arg) {
  const std::string& n = op.name;
  if (n == "~-" || n == "~-.") return scalar_sym(arg) ? affine(-1.0, arg, 0.0) : Value::nil();
  if (!arg.is_tuple() || arg.arity() != 2) return Value::nil();
  const Value& x = arg.at(0);
  const Value& y = arg.at(1);
  char c = n.empty() ? 0 : n[0];
  bool dotted = n.size() == 2 && n[1] == '.';
  if (n.size() == 1 || dotted) {
    if (scalar_sym(x) && y.is_float()) {
      double k = y.as_float();
      switch (c) {
        case '+': return affine(1.0, x, k);
        case '-': return affine(1.0, x, -k);
        case '*': return affine(k, x, 0.0);
        case '/': return affine(1.0 / k, x, 0.0);
      }
    }
    if (x.is_float() && scalar_sym(y)) {
      double k = x.as_float();
      switch (c) {
        case '+': return affine(1.0, y, k);
        case '-': return affine(-1.0, y, k);
        case '*': return affine(k, y, 0.0);
      }
    }
    return Value::nil();
  }
  if (n == "+@" || n == "-@") {
    double sign = n == "+@" ? 1.0 : -1.0;
    if (vector_sym(x) && y.is_vector()) {
      long d = vector_dim(*x.as_sym());
      if (d != y.as_vector().size()) return Value::nil();
      return affine_vec(Eigen::MatrixXd::Identity(d, d), x, sign * y.as_vector(), false);
    }
    if (x.is_vector() && vector_sym(y)) {
      long d = vector_dim(*y.as_sym());
      if (d != x.as_vector().size()) return Value::nil();
      return affine_vec(sign * Eigen::MatrixXd::Identity(d, d), y, x.as_vector(), false);
    }
    return Value::nil();
  }
  if (n == "*@") {
    if (x.is_matrix() && vector_sym(y)) {
      const auto& m = x.as_matrix();
      if (m.cols() != vector_dim(*y.as_sym())) return Value::nil();
      return affine_vec(m, y, Eigen::VectorXd::Zero(m.rows()), false);
    }
    return Value::nil();
  }
  if (n == "vec_get") {
    if (vector_sym(x) && y.is_int()) {
      long d = vector_dim(*x.as_sym());
      std::int64_t i = y.as_int();
      if (d < 0 || i < 0 || i >= d) return Value::nil();
      Eigen::MatrixXd row = Eigen::MatrixXd::Zero(1, d);
      row(0, i) = 1.0;
      return affine_vec(std::move(row), x, Eigen::VectorXd::Zero(1), true);
    }
    return Value::nil();
  }
  return Value::nil();
}

}  // namespace

Value DsEffects::sample(const Value& dist) {
  if (dist.is_nil()) return Value::nil();
  return Value::sym(sym_rvar(g_.assume(dist, rng_)));
}

void DsEffects::observe(const Value& dist, const Value& v) {
  if (dist.is_nil() || v.is_nil()) return;
  log_weight += g_.observe(dist, g_.value(v, rng_), rng_);
}

void DsEffects::factor(const Value& w) {
  if (w.is_nil()) return;
  log_weight += g_.value(w, rng_).as_float();
}

bool DsEffects::truth(const Value& c) { return Effects::truth(g_.value(c, rng_)); }

Value DsEffects::copy_state(const Value& s) { return copy_cells(s); }

Value DsEffects::apply(const Op& op, const Value& arg) {
  if (op.sym_mode != SymMode::Structural && contains_nil(arg)) return Value::nil();
  if (!contains_sym(arg)) return apply_op(op, arg);
  switch (op.sym_mode) {
    case SymMode::Force: return apply_op(op, g_.value(arg, rng_));
    case SymMode::Structural: {
      if (op.name == "if") return truth(arg.at(0)) ? arg.at(1) : arg.at(2);
      if (op.name == "get") return apply_op(op, Value::pair(arg.at(0), g_.value(arg.at(1), rng_)));
      if (arg.is_tuple()) return apply_op(op, arg);
      return apply_op(op, g_.value(arg, rng_));
    }
    case SymMode::Linear: {
      Value r = linear(op, arg);
      if (!r.is_nil()) return r;
      return Value::sym(sym_app(&op, arg));
    }
    case SymMode::DistCtor:
    case SymMode::Lazy: return Value::sym(sym_app(&op, arg));
  }
  return Value::sym(sym_app(&op, arg));
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct DsParticle {
  Value state;
  std::unique_ptr<ds::Graph> graph;
  double log_weight = 0.0;
};

class DsEngine : public InferState {
 public:
  DsEngine(const EngineConfig& cfg, const Value& init, long n, bool streaming, bool bounded)
      : cfg_(cfg), streaming_(streaming), bounded_(bounded), live_(std::make_shared<std::atomic<long>>(0)) {
    if (n < 1) throw Error(ErrorKind::Config, "particle count must be positive");
    for (long i = 0; i < n; ++i)
      cloud_.push_back(DsParticle{copy_cells(init), std::make_unique<ds::Graph>(streaming_, live_), 0.0});
  }

  Value step(const MufTerm& fn, const Env& env, const CompiledProgram& prog) override {
    if (fn.tag != MufTerm::Tag::Fun) throw Error(ErrorKind::Eval, "infer expects a step function");
    std::size_t n = cloud_.size();
    std::vector<double> before(n);
    for (std::size_t i = 0; i < n; ++i) before[i] = cloud_[i].log_weight;
    std::vector<DistPtr> dists(n);
    std::vector<long> fallbacks(n, 0);
    long step = step_++;
    parallel_for_particles(cfg_.threads, n, [&](std::size_t i) {
      DsParticle& p = cloud_[i];
      Rng rng(particle_key(cfg_.key, step, i));
      EngineConfig sub = cfg_;
      sub.key = rng.key();
      sub.threads = 1;
      DsEffects fx(sub, *p.graph, rng);
      Env local(&env);
      bind_pattern(fn.pat, p.state, local);
      Value r = eval(*fn.kids[0], local, fx, prog);
      p.log_weight += fx.log_weight;
      Value result = r.at(0);
      p.state = r.at(1);
      DistPtr d = p.graph->distribution_of(result);
      if (!d) {
        d = make_dirac(p.graph->value(result, rng));
        fallbacks[i] = 1;
      }
      dists[i] = d;
      if (bounded_) {
        // The graph does not outlive the step.
        p.state = p.graph->value(p.state, rng);
        p.graph = std::make_unique<ds::Graph>(streaming_, live_);
      }
    });
    for (long f : fallbacks) fallback_count_ += f;

    std::vector<double> lw(n);
    for (std::size_t i = 0; i < n; ++i) lw[i] = cloud_[i].log_weight;
    double z = log_sum_exp(lw);
    evidence_ = z - log_sum_exp(before);
    if (z == kNegInf) throw Error(ErrorKind::Degenerate, "every particle has zero weight");

    DistPtr result;
    if (n == 1) {
      result = dists[0];
    } else {
      std::vector<double> w = normalized_weights(lw);
      std::vector<std::pair<DistPtr, double>> comps;
      comps.reserve(n);
      for (std::size_t i = 0; i < n; ++i) comps.emplace_back(dists[i], w[i]);
      result = mixture(std::move(comps));
    }

    if (!cfg_.ess_resampling || effective_sample_size(lw) < 0.5 * static_cast<double>(n)) {
      Rng r(resample_key(cfg_.key, step));
      auto anc = systematic_resample(lw, r.uniform());
      cloud_ = select_particles(cloud_, anc, [](const DsParticle& p) { return duplicate(p); });
      for (auto& p : cloud_) p.log_weight = 0.0;
    }
    return Value::dist(result);
  }

  std::unique_ptr<InferState> clone() const override {
    auto c = std::unique_ptr<DsEngine>(new DsEngine(cfg_, streaming_, bounded_, live_));
    for (const auto& p : cloud_) c->cloud_.push_back(duplicate(p));
    c->step_ = step_;
    c->evidence_ = evidence_;
    return c;
  }

  double log_evidence() const override { return evidence_; }
  std::size_t live_nodes() const override {
    long v = live_->load();
    return v > 0 ? static_cast<std::size_t>(v) : 0;
  }

 private:
  DsEngine(const EngineConfig& cfg, bool streaming, bool bounded, std::shared_ptr<std::atomic<long>> live)
      : cfg_(cfg), streaming_(streaming), bounded_(bounded), live_(std::move(live)) {}

  static DsParticle duplicate(const DsParticle& p) {
    DsParticle c;
    c.graph = p.graph->deep_copy(p.state, c.state);
    c.log_weight = p.log_weight;
    return c;
  }

  EngineConfig cfg_;
  bool streaming_, bounded_;
  std::shared_ptr<std::atomic<long>> live_;
  std::vector<DsParticle> cloud_;
  long step_ = 0;
  double evidence_ = 0.0;
  long fallback_count_ = 0;
};

}  // namespace

std::unique_ptr<InferState> make_ds_engine(const EngineConfig& cfg, const Value& init, long particles, bool streaming,
                                           bool bounded) {
  return std::make_unique<DsEngine>(cfg, init, particles, streaming, bounded);
}

}  // namespace rpz
