#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "rpz/value.hpp"

namespace rpz {

// Discrete-time LQR: command = -K * state.
struct LqrGain {
  Eigen::MatrixXd K, P;
  Eigen::MatrixXd A, B, Q, R;
  int iterations = 0;
  double residual = 0.0;
};

// Fixed-point iteration of the discrete algebraic Riccati equation.
LqrGain lqr_gain(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& Q,
                 const Eigen::MatrixXd& R, double tol = 1e-10, int max_iter = 10000);
double riccati_residual(const Eigen::MatrixXd& P, const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                        const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R);

// Loss metrics.
double mse_loss(const std::vector<std::vector<double>>& estimates, const std::vector<std::vector<double>>& truth);
double lqr_loss(const std::vector<Eigen::VectorXd>& states, const std::vector<Eigen::VectorXd>& commands,
                const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R);

struct Gaussian1 {
  double mean, var;
};
// Scalar Kalman filter: x0 ~ N(m0, v0), x_t ~ N(x_{t-1}, q), y_t ~ N(x_t, r).
std::vector<Gaussian1> kalman_oracle(double m0, double v0, double q, double r, const std::vector<double>& obs);

// Nearest-rank quantile, p in (0, 1].
double quantile(std::vector<double> xs, double p);

// Key-value parameters of a benchmark, serializable as `key=value` lines.
using Params = std::map<std::string, std::string>;
std::string params_text(const Params& p);
Params parse_params(const std::string& text);

// A benchmark instance: produces the input of each step, possibly from the
// previous outputs, and scores each output against the hidden truth.
class Scenario {
 public:
  virtual ~Scenario() = default;
  virtual Value input(long step) = 0;
  // Per-step error of the output of `main`.
  virtual double step_error(long step, const Value& output) = 0;
  // Cumulative metrics (LQR cost) sum step errors; MSE metrics average them.
  virtual bool cumulative() const { return false; }
  // Hidden state behind the last input, for tests and diagnostics.
  virtual Value truth() const { return Value::unit(); }
};

struct BenchmarkSpec {
  std::string name;
  std::string source;  // defines `main`
  std::string metric;  // "mse" or "lqr"
  long default_steps = 100;
  Params params;
  std::function<std::unique_ptr<Scenario>(std::uint64_t seed, const Params&)> make;
};

// One of beta-bernoulli, gaussian-gaussian, kalman-1d, outlier, robot, slam.
// Parameter overrides replace defaults in `params`.
BenchmarkSpec build_benchmark(const std::string& name, const Params& overrides = {});
std::vector<std::string> benchmark_names();

// Registers the model-specific builtins (robot matrices, lqr); idempotent.
void register_bench_ops();

// Models with unbounded or bounded delayed-sampling chains: p1, p2, p2'.
std::string chain_model_source(const std::string& name);

// Robot system matrices.
struct RobotSystem {
  Eigen::MatrixXd A, B, noise, Q, R;
};
RobotSystem robot_system(const Params& p);

}  // namespace rpz
