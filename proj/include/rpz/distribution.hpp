#pragma once

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rpz/rng.hpp"
#include "rpz/value.hpp"

namespace rpz {

class Distribution {
 public:
  struct Dirac { Value value; };
  struct Bernoulli { double p; };
  struct Beta { double a, b; };
  // Second parameter is the variance.
  struct Gaussian { double mean, var; };
  struct MvGaussian { Eigen::VectorXd mean; Eigen::MatrixXd cov; };
  struct Poisson { double rate; };
  struct Categorical { std::vector<std::pair<Value, double>> items; };
  struct Mixture { std::vector<std::pair<DistPtr, double>> items; };
  // Independent product over tuple values; the marginal summary of a pair of
  // random quantities.
  struct Joint { std::vector<DistPtr> parts; };

  using Repr = std::variant<Dirac, Bernoulli, Beta, Gaussian, MvGaussian, Poisson, Categorical, Mixture, Joint>;

  explicit Distribution(Repr r) : repr_(std::move(r)) {}

  const Repr& repr() const { return repr_; }
  template <class T>
  const T* get() const { return std::get_if<T>(&repr_); }

 private:
  Repr repr_;
};

DistPtr make_dirac(Value v);
DistPtr make_bernoulli(double p);
DistPtr make_beta(double a, double b);
DistPtr make_gaussian(double mean, double var);
DistPtr make_mv_gaussian(Eigen::VectorXd mean, Eigen::MatrixXd cov);
DistPtr make_poisson(double rate);
// Weights are normalized; equal values are merged.
DistPtr make_categorical(std::vector<std::pair<Value, double>> items);
// Weights need not be normalized; a single component collapses to itself.
DistPtr mixture(std::vector<std::pair<DistPtr, double>> components);
DistPtr make_joint(std::vector<DistPtr> parts);

Value draw(const Distribution& d, Rng& rng);
double log_pdf(const Distribution& d, const Value& v);
bool has_density(const Distribution& d);
Value mean(const Distribution& d);
Value variance(const Distribution& d);

// Componentwise mean and marginal variance over the flattened support.
std::vector<double> mean_flat(const Distribution& d);
std::vector<double> var_flat(const Distribution& d);

// Finite support with probabilities, or nullopt-equivalent empty result plus false.
bool finite_support(const Distribution& d, std::vector<std::pair<Value, double>>& out);

std::string describe(const Distribution& d);

// log(sum(exp(xs))), stable; -inf for an empty or all -inf input.
double log_sum_exp(const std::vector<double>& xs);

// Cholesky factor of a covariance with diagonal jitter for semi-definite input.
Eigen::MatrixXd cholesky_jittered(const Eigen::MatrixXd& cov);

}  // namespace rpz
