#include <cmath>
#include <mutex>
#include <sstream>

#include "rpz/bench.hpp"
#include "rpz/distribution.hpp"
#include "rpz/error.hpp"
#include "rpz/ops.hpp"
#include "rpz/rng.hpp"

namespace rpz {

namespace {

constexpr std::uint64_t kTruthTag = 0x7472757468ULL;

double param(const Params& p, const std::string& k) {
  auto it = p.find(k);
  if (it == p.end()) throw Error(ErrorKind::Config, "missing benchmark parameter " + k);
  try {
    std::size_t used = 0;
    double d = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(k);
    return d;
  } catch (const std::exception&) {
    throw Error(ErrorKind::Config, "parameter " + k + " is not a number: " + it->second);
  }
}

Eigen::VectorXd param_vec(const Params& p, const std::string& k) {
  auto it = p.find(k);
  if (it == p.end()) throw Error(ErrorKind::Config, "missing benchmark parameter " + k);
  std::vector<double> xs;
  std::stringstream ss(it->second);
  std::string item;
  while (std::getline(ss, item, ',')) xs.push_back(std::stod(item));
  return Eigen::Map<Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

double gauss(Rng& r, double mean, double var) { return draw(*make_gaussian(mean, var), r).as_float(); }
bool flip(Rng& r, double p) { return r.uniform() < p; }

std::vector<double> summary_mean(const Value& out) {
  if (out.is_dist()) return mean_flat(*out.as_dist());
  return flatten(out);
}

double sq(double x) { return x * x; }

// Sources. Each defines a `main` node fed one input per step.

const char* kCoin = R"((* coin bias from a stream of tosses *)
let proba coin (yobs) = xt where
  rec init xt = sample (beta (1., 1.))
  and () = observe (bernoulli xt, yobs)

let node main (yobs) = infer 100 coin (yobs)
)";

const char* kGaussian = R"((* mean and variance of a Gaussian *)
let proba gaussian_model (o) = (mu, sigma) where
  rec init mu = sample (gaussian (0., 10.))
  and init sqrt_sigma = sample (gaussian (0., 1.))
  and sigma = sqrt_sigma *. sqrt_sigma
  and () = observe (gaussian (mu, sigma), o)

let node main (o) = infer 100 gaussian_model (o)
)";

const char* kKalman = R"((* position from noisy readings *)
let proba delay_kalman (yobs) = xt where
  rec xt = sample (gaussian ((0., 2500.) -> (pre xt, 1.)))
  and () = observe (gaussian (xt, 1.), yobs)

let node main (yobs) = infer 100 delay_kalman (yobs)
)";

const char* kOutlier = R"((* position from a sensor with invalid readings *)
let proba outlier (yobs) = (is_outlier, xt) where
  rec xt = sample (gaussian ((0., 2500.) -> (pre xt, 1.)))
  and init outlier_prob = sample (beta (100., 1000.))
  and is_outlier = sample (bernoulli outlier_prob)
  and () = present is_outlier -> observe (gaussian (0., 10000.), yobs)
           else observe (gaussian (xt, 1.), yobs)

let node main (yobs) = infer 100 outlier (yobs)
)";

const char* kRobot = R"((* state estimate feeding an LQR controller *)
let proba kalman (xo, u, acc, gps_on, gps) = x where
  rec mu = xo -> (robot_a () *@ pre x) +@ (robot_b () *@ u)
  and x = sample (mv_gaussian (mu, robot_noise ()))
  and () = observe (gaussian (vec_get (x, 2), 1.0), acc)
  and () = present gps_on -> observe (gaussian (vec_get (x, 0), 0.01), gps)
           else ()

let node robot (xo, uo, acc, gps_on, gps) = (u, x_dist) where
  rec x_dist = infer 1000 kalman (xo, u, acc, gps_on, gps)
  and u = uo -> lqr (robot_a ()) (robot_b ()) (mean (pre x_dist))

let node main (xo, uo, acc, gps_on, gps) = robot (xo, uo, acc, gps_on, gps)
)";

std::string slam_source(int cells, double sensor_noise) {
  std::ostringstream os;
  os << "(* map and position of a robot on a line of cells *)\n";
  os << "let max_pos = " << cells - 1 << "\n";
  os << "let sensor_noise = " << format_double(sensor_noise) << "\n\n";
  os << R"(let proba move (x0, right) = x where
  rec slip = sample (bernoulli 0.1)
  and xp = x0 -> pre x
  and x = if right then min (max_pos, if slip then xp else xp + 1)
          else max (0, if slip then xp else xp - 1)

let proba slam (obs, right) = (map, x) where
  rec init map = ()";
  for (int i = 0; i < cells; ++i) os << (i ? ", " : "") << "sample (bernoulli 0.5)";
  os << R"()
  and x = move (0, right)
  and o = get (map, x)
  and p = if o then 1. -. sensor_noise else sensor_noise
  and () = observe (bernoulli p, obs)

let node main (obs, right) = infer 100 slam (obs, right)
)";
  return os.str();
}

class CoinScenario : public Scenario {
 public:
  CoinScenario(std::uint64_t seed, const Params& p) : rng_(mix_key(seed, kTruthTag)) {
    double fixed = param(p, "p");
    p_ = fixed >= 0.0 ? fixed : draw(*make_beta(1.0, 1.0), rng_).as_float();
  }
  Value input(long) override { return Value::boolean(flip(rng_, p_)); }
  double step_error(long, const Value& out) override { return sq(summary_mean(out).at(0) - p_); }

  Value truth() const override { return Value::real(p_); }

 private:
  Rng rng_;
  double p_;
};

class GaussianScenario : public Scenario {
 public:
  GaussianScenario(std::uint64_t seed, const Params&) : rng_(mix_key(seed, kTruthTag)) {
    mu_ = gauss(rng_, 0.0, 10.0);
    double s = gauss(rng_, 0.0, 1.0);
    sigma_ = s * s;
  }
  Value input(long) override { return Value::real(gauss(rng_, mu_, sigma_)); }
  double step_error(long, const Value& out) override {
    auto m = summary_mean(out);
    return sq(m.at(0) - mu_) + sq(m.at(1) - sigma_);
  }

  Value truth() const override { return Value::pair(Value::real(mu_), Value::real(sigma_)); }

 private:
  Rng rng_;
  double mu_, sigma_;
};

class KalmanScenario : public Scenario {
 public:
  KalmanScenario(std::uint64_t seed, const Params&) : rng_(mix_key(seed, kTruthTag)) {}
  Value input(long t) override {
    x_ = t == 0 ? gauss(rng_, 0.0, 2500.0) : gauss(rng_, x_, 1.0);
    return Value::real(gauss(rng_, x_, 1.0));
  }
  double step_error(long, const Value& out) override { return sq(summary_mean(out).at(0) - x_); }

  Value truth() const override { return Value::real(x_); }

 private:
  Rng rng_;
  double x_ = 0.0;
};

class OutlierScenario : public Scenario {
 public:
  OutlierScenario(std::uint64_t seed, const Params&) : rng_(mix_key(seed, kTruthTag)) {
    prob_ = draw(*make_beta(100.0, 1000.0), rng_).as_float();
  }
  Value input(long t) override {
    x_ = t == 0 ? gauss(rng_, 0.0, 2500.0) : gauss(rng_, x_, 1.0);
    outlier_ = flip(rng_, prob_);
    return Value::real(outlier_ ? gauss(rng_, 0.0, 10000.0) : gauss(rng_, x_, 1.0));
  }
  double step_error(long, const Value& out) override { return sq(summary_mean(out).at(1) - x_); }

  Value truth() const override { return Value::pair(Value::boolean(outlier_), Value::real(x_)); }

 private:
  Rng rng_;
  double prob_;
  double x_ = 0.0;
  bool outlier_ = false;
};

class RobotScenario : public Scenario {
 public:
  RobotScenario(std::uint64_t seed, const Params& p)
      : rng_(mix_key(seed, kTruthTag)), sys_(robot_system(p)), xo_(param_vec(p, "x0")),
        gps_period_(static_cast<long>(param(p, "gps_period"))) {
    gain_ = lqr_gain(sys_.A, sys_.B, sys_.Q, sys_.R);
    chol_ = cholesky_jittered(sys_.noise);
  }

  Value input(long t) override {
    // The command of step t only reads the previous estimate, so the
    // simulator can compute it before the robot moves.
    u_ = t == 0 ? Eigen::VectorXd::Zero(sys_.B.cols()) : Eigen::VectorXd(-gain_.K * prev_mean_);
    Eigen::VectorXd w(xo_.size());
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = gauss(rng_, 0.0, 1.0);
    x_ = (t == 0 ? xo_ : Eigen::VectorXd(sys_.A * x_ + sys_.B * u_)) + chol_ * w;
    double acc = gauss(rng_, x_[2], 1.0);
    double gps = gauss(rng_, x_[0], 0.01);
    bool on = gps_period_ > 0 && t % gps_period_ == 0;
    return Value::tuple({Value::vector(xo_), Value::vector(Eigen::VectorXd::Zero(sys_.B.cols())), Value::real(acc),
                         Value::boolean(on), Value::real(gps)});
  }

  double step_error(long, const Value& out) override {
    const Eigen::VectorXd& u = out.at(0).as_vector();
    prev_mean_ = Eigen::Map<const Eigen::VectorXd>(summary_mean(out.at(1)).data(), x_.size());
    return x_.dot(sys_.Q * x_) + u.dot(sys_.R * u);
  }
  bool cumulative() const override { return true; }

  Value truth() const override { return Value::vector(x_); }

 private:
  Rng rng_;
  RobotSystem sys_;
  Eigen::VectorXd xo_;
  long gps_period_;
  LqrGain gain_;
  Eigen::MatrixXd chol_;
  Eigen::VectorXd x_, u_, prev_mean_;
};

class SlamScenario : public Scenario {
 public:
  SlamScenario(std::uint64_t seed, const Params& p)
      : rng_(mix_key(seed, kTruthTag)), cells_(static_cast<int>(param(p, "cells"))), noise_(param(p, "sensor_noise")) {
    for (int i = 0; i < cells_; ++i) map_.push_back(flip(rng_, 0.5));
  }

  Value input(long) override {
    bool slip = flip(rng_, 0.1);
    if (right_) x_ = std::min(cells_ - 1, slip ? x_ : x_ + 1);
    else x_ = std::max(0, slip ? x_ : x_ - 1);
    bool obs = map_[static_cast<std::size_t>(x_)] != flip(rng_, noise_);
    return Value::pair(Value::boolean(obs), Value::boolean(right_));
  }

  double step_error(long, const Value& out) override {
    auto m = summary_mean(out);
    double e = 0.0;
    for (int i = 0; i < cells_; ++i) e += sq(m.at(static_cast<std::size_t>(i)) - (map_[static_cast<std::size_t>(i)] ? 1.0 : 0.0));
    double pos = m.at(static_cast<std::size_t>(cells_));
    // Sweep right then left, turning on the estimated position.
    if (pos >= cells_ - 1.5) right_ = false;
    else if (pos <= 0.5) right_ = true;
    return e / cells_ + sq(pos - x_);
  }

  Value truth() const override {
    Tuple cells;
    for (bool c : map_) cells.push_back(Value::boolean(c));
    return Value::pair(Value::tuple(std::move(cells)), Value::integer(x_));
  }

 private:
  Rng rng_;
  int cells_;
  double noise_;
  std::vector<bool> map_;
  int x_ = 0;
  bool right_ = true;
};

std::mutex g_lqr_mu;

Value lqr_op(const Value& v) {
  const Eigen::MatrixXd& a = v.at(0).as_matrix();
  const Eigen::MatrixXd& b = v.at(1).as_matrix();
  const Eigen::VectorXd& m = v.at(2).as_vector();
  static Eigen::MatrixXd last_a, last_b, last_k;
  Eigen::MatrixXd k;
  {
    std::lock_guard<std::mutex> lock(g_lqr_mu);
    if (last_a.size() == 0 || last_a.rows() != a.rows() || last_b.cols() != b.cols() || last_a != a || last_b != b) {
      last_k = lqr_gain(a, b, Eigen::MatrixXd::Identity(a.rows(), a.rows()), Eigen::MatrixXd::Identity(b.cols(), b.cols())).K;
      last_a = a;
      last_b = b;
    }
    k = last_k;
  }
  return Value::vector(-k * m);
}

Op const_op(const std::string& name, Value v, TypePtr (*ty)()) {
  return Op{name, 1, SymMode::Lazy, [v](const Value&) { return v; },
            [ty](Unifier& u, const std::vector<TypePtr>& a) {
              u.unify(type_unit(), a[0]);
              return ty();
            }};
}

}  // namespace

RobotSystem robot_system(const Params& p) {
  double dt = param(p, "dt");
  double q = param(p, "proc_noise");
  RobotSystem s;
  s.A = Eigen::MatrixXd::Identity(3, 3);
  s.A(0, 1) = dt;
  s.A(0, 2) = 0.5 * dt * dt;
  s.A(1, 2) = dt;
  s.B = Eigen::MatrixXd::Zero(3, 1);
  s.B(2, 0) = 1.0;
  s.noise = q * Eigen::MatrixXd::Identity(3, 3);
  s.Q = Eigen::MatrixXd::Identity(3, 3);
  s.R = Eigen::MatrixXd::Identity(1, 1);
  return s;
}

void register_robot_ops(const RobotSystem& s) {
  // Re-registering only on change keeps concurrent runs race-free.
  static std::mutex mu;
  static Eigen::MatrixXd cur_a, cur_b, cur_noise;
  std::lock_guard<std::mutex> lock(mu);
  if (cur_a.size() && cur_a == s.A && cur_b == s.B && cur_noise == s.noise) return;
  cur_a = s.A;
  cur_b = s.B;
  cur_noise = s.noise;
  register_op(const_op("robot_a", Value::matrix(s.A), type_matrix));
  register_op(const_op("robot_b", Value::matrix(s.B), type_matrix));
  register_op(const_op("robot_noise", Value::matrix(s.noise), type_matrix));
}

void register_bench_ops() {
  static std::once_flag once;
  std::call_once(once, [] {
    register_op(Op{"lqr", 3, SymMode::Force, lqr_op, [](Unifier& u, const std::vector<TypePtr>& a) {
                     u.unify(type_matrix(), a[0]);
                     u.unify(type_matrix(), a[1]);
                     u.unify(type_vector(), a[2]);
                     return type_vector();
                   }});
    register_robot_ops(robot_system({{"dt", "0.1"}, {"proc_noise", "0.01"}}));
  });
}

std::vector<std::string> benchmark_names() {
  return {"beta-bernoulli", "gaussian-gaussian", "kalman-1d", "outlier", "robot", "slam"};
}

BenchmarkSpec build_benchmark(const std::string& name, const Params& overrides) {
  register_bench_ops();
  BenchmarkSpec b;
  b.name = name;
  b.metric = "mse";
  if (name == "beta-bernoulli") {
    b.source = kCoin;
    b.params = {{"p", "-1"}};
    b.make = [](std::uint64_t s, const Params& p) { return std::make_unique<CoinScenario>(s, p); };
  } else if (name == "gaussian-gaussian") {
    b.source = kGaussian;
    b.make = [](std::uint64_t s, const Params& p) { return std::make_unique<GaussianScenario>(s, p); };
  } else if (name == "kalman-1d") {
    b.source = kKalman;
    b.make = [](std::uint64_t s, const Params& p) { return std::make_unique<KalmanScenario>(s, p); };
  } else if (name == "outlier") {
    b.source = kOutlier;
    b.make = [](std::uint64_t s, const Params& p) { return std::make_unique<OutlierScenario>(s, p); };
  } else if (name == "robot") {
    b.source = kRobot;
    b.metric = "lqr";
    b.params = {{"dt", "0.1"}, {"proc_noise", "0.01"}, {"x0", "5,0,0"}, {"gps_period", "10"}};
    b.make = [](std::uint64_t s, const Params& p) { return std::make_unique<RobotScenario>(s, p); };
  } else if (name == "slam") {
    b.params = {{"cells", "11"}, {"sensor_noise", "0.1"}};
    b.make = [](std::uint64_t s, const Params& p) { return std::make_unique<SlamScenario>(s, p); };
  } else {
    throw Error(ErrorKind::Config, "unknown benchmark " + name);
  }
  for (const auto& [k, v] : overrides) {
    if (!b.params.count(k)) throw Error(ErrorKind::Config, "benchmark " + name + " has no parameter " + k);
    b.params[k] = v;
  }
  if (name == "slam") {
    int cells = static_cast<int>(param(b.params, "cells"));
    if (cells < 2) throw Error(ErrorKind::Config, "slam needs at least two cells");
    b.source = slam_source(cells, param(b.params, "sensor_noise"));
  }
  if (name == "robot") register_robot_ops(robot_system(b.params));
  return b;
}

std::string chain_model_source(const std::string& name) {
  if (name == "p1")
    return R"(let proba p1 (xo, obs) = (i, x) where
  rec init i = sample (gaussian (xo, 1.))
  and x = sample (gaussian (i -> pre x, 1.))
  and () = observe (gaussian (x, 1.), obs)

let node main (xo, obs) = infer 1 p1 (xo, obs)
)";
  if (name == "p2")
    return R"(let proba p2 (xo) = x where
  rec x = sample (gaussian (xo -> pre x, 1.))

let node main (xo) = infer 1 p2 (xo)
)";
  if (name == "p2'")
    return R"(let proba p2' (xo) = x where
  rec x = sample (gaussian (xo -> pre x, 1.))
  and _ = eval (xo -> pre x)

let node main (xo) = infer 1 p2' (xo)
)";
  throw Error(ErrorKind::Config, "unknown chain model " + name);
}

}  // namespace rpz
