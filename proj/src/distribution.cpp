#include "rpz/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace rpz {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

DistPtr wrap(Distribution::Repr r) { return std::make_shared<const Distribution>(std::move(r)); }

bool discrete_value(const Value& v) {
  switch (v.kind()) {
    case Value::Kind::Unit:
    case Value::Kind::Bool:
    case Value::Kind::Int: return true;
    case Value::Kind::Tuple:
      for (const auto& x : v.as_tuple())
        if (!discrete_value(x)) return false;
      return true;
    default: return false;
  }
}

double logsumexp(const std::vector<double>& xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

double xlogy(double x, double y) { return x == 0.0 ? 0.0 : x * std::log(y); }

double log_beta_fn(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

double gamma_draw(double shape, Rng& rng) { return std::gamma_distribution<double>(shape, 1.0)(rng); }

// Distribution of the i-th component of a tuple-valued distribution.
DistPtr project(const Distribution& d, std::size_t i) {
  if (auto j = d.get<Distribution::Joint>()) return j->parts.at(i);
  if (auto x = d.get<Distribution::Dirac>()) return make_dirac(x->value.at(i));
  if (auto c = d.get<Distribution::Categorical>()) {
    std::vector<std::pair<Value, double>> items;
    items.reserve(c->items.size());
    for (const auto& [v, w] : c->items) items.emplace_back(v.at(i), w);
    return make_categorical(std::move(items));
  }
  if (auto m = d.get<Distribution::Mixture>()) {
    std::vector<std::pair<DistPtr, double>> items;
    for (const auto& [c, w] : m->items) items.emplace_back(project(*c, i), w);
    return mixture(std::move(items));
  }
  throw Error(ErrorKind::Eval, "projection of a non-tuple distribution");
}

}  // namespace

double log_sum_exp(const std::vector<double>& xs) { return logsumexp(xs); }

DistPtr make_dirac(Value v) { return wrap(Distribution::Dirac{std::move(v)}); }

DistPtr make_bernoulli(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::Eval, "bernoulli parameter outside [0,1]: " + format_double(p));
  return wrap(Distribution::Bernoulli{p});
}

DistPtr make_beta(double a, double b) {
  if (!(a > 0.0 && b > 0.0)) throw Error(ErrorKind::Eval, "beta parameters must be positive");
  return wrap(Distribution::Beta{a, b});
}

DistPtr make_gaussian(double mean, double var) {
  if (!(var > 0.0)) throw Error(ErrorKind::Eval, "gaussian variance must be positive: " + format_double(var));
  return wrap(Distribution::Gaussian{mean, var});
}

DistPtr make_mv_gaussian(Eigen::VectorXd mean, Eigen::MatrixXd cov) {
  if (cov.rows() != mean.size() || cov.cols() != mean.size())
    throw Error(ErrorKind::Eval, "mv_gaussian covariance dimension mismatch");
  return wrap(Distribution::MvGaussian{std::move(mean), std::move(cov)});
}

DistPtr make_poisson(double rate) {
  if (!(rate > 0.0)) throw Error(ErrorKind::Eval, "poisson rate must be positive");
  return wrap(Distribution::Poisson{rate});
}

DistPtr make_categorical(std::vector<std::pair<Value, double>> items) {
  std::stable_sort(items.begin(), items.end(), [](const auto& x, const auto& y) { return value_less(x.first, y.first); });
  std::vector<std::pair<Value, double>> merged;
  double total = 0.0;
  for (auto& [v, w] : items) {
    if (w < 0.0 || std::isnan(w)) throw Error(ErrorKind::Eval, "negative categorical weight");
    total += w;
    if (!merged.empty() && value_equal(merged.back().first, v))
      merged.back().second += w;
    else
      merged.emplace_back(std::move(v), w);
  }
  if (!(total > 0.0)) throw Error(ErrorKind::Eval, "categorical weights sum to zero");
  for (auto& item : merged) item.second /= total;
  return wrap(Distribution::Categorical{std::move(merged)});
}

DistPtr mixture(std::vector<std::pair<DistPtr, double>> components) {
  double total = 0.0;
  for (const auto& [d, w] : components) {
    if (w < 0.0 || std::isnan(w)) throw Error(ErrorKind::Eval, "negative mixture weight");
    total += w;
  }
  if (!(total > 0.0)) throw Error(ErrorKind::Eval, "mixture weights are all zero");
  std::vector<std::pair<DistPtr, double>> kept;
  for (auto& [d, w] : components)
    if (w > 0.0) kept.emplace_back(std::move(d), w / total);
  if (kept.size() == 1) return kept.front().first;
  return wrap(Distribution::Mixture{std::move(kept)});
}

DistPtr make_joint(std::vector<DistPtr> parts) { return wrap(Distribution::Joint{std::move(parts)}); }

Eigen::MatrixXd cholesky_jittered(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  const Eigen::Index n = cov.rows();
  double jitter = 1e-12;
  for (int attempt = 0; attempt < 12; ++attempt, jitter *= 10.0) {
    Eigen::MatrixXd c = cov + jitter * Eigen::MatrixXd::Identity(n, n);
    Eigen::LLT<Eigen::MatrixXd> j(c);
    if (j.info() == Eigen::Success) return j.matrixL();
  }
  throw Error(ErrorKind::Eval, "covariance is not positive semi-definite");
}

Value draw(const Distribution& d, Rng& rng) {
  return std::visit(
      [&](const auto& x) -> Value {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Distribution::Dirac>) {
          return x.value;
        } else if constexpr (std::is_same_v<T, Distribution::Bernoulli>) {
          return Value::boolean(rng.uniform() < x.p);
        } else if constexpr (std::is_same_v<T, Distribution::Beta>) {
          double g1 = gamma_draw(x.a, rng);
          double g2 = gamma_draw(x.b, rng);
          return Value::real(g1 / (g1 + g2));
        } else if constexpr (std::is_same_v<T, Distribution::Gaussian>) {
          return Value::real(std::normal_distribution<double>(x.mean, std::sqrt(x.var))(rng));
        } else if constexpr (std::is_same_v<T, Distribution::MvGaussian>) {
          Eigen::MatrixXd l = cholesky_jittered(x.cov);
          Eigen::VectorXd z(x.mean.size());
          std::normal_distribution<double> n01(0.0, 1.0);
          for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = n01(rng);
          return Value::vector(x.mean + l * z);
        } else if constexpr (std::is_same_v<T, Distribution::Poisson>) {
          return Value::integer(std::poisson_distribution<std::int64_t>(x.rate)(rng));
        } else if constexpr (std::is_same_v<T, Distribution::Categorical>) {
          double u = rng.uniform();
          double acc = 0.0;
          for (const auto& [v, w] : x.items) {
            acc += w;
            if (u < acc) return v;
          }
          return x.items.back().first;
        } else if constexpr (std::is_same_v<T, Distribution::Mixture>) {
          double u = rng.uniform();
          double acc = 0.0;
          for (const auto& [c, w] : x.items) {
            acc += w;
            if (u < acc) return draw(*c, rng);
          }
          return draw(*x.items.back().first, rng);
        } else {
          Tuple t;
          for (const auto& p : x.parts) t.push_back(draw(*p, rng));
          return Value::tuple(std::move(t));
        }
      },
      d.repr());
}

bool has_density(const Distribution& d) {
  if (auto x = d.get<Distribution::Dirac>()) return discrete_value(x->value);
  if (auto m = d.get<Distribution::Mixture>()) {
    for (const auto& [c, w] : m->items)
      if (!has_density(*c)) return false;
    return true;
  }
  if (auto j = d.get<Distribution::Joint>()) {
    for (const auto& p : j->parts)
      if (!has_density(*p)) return false;
    return true;
  }
  return true;
}

double log_pdf(const Distribution& d, const Value& v) {
  if (!has_density(d)) throw Error(ErrorKind::Density, "no density for " + describe(d));
  return std::visit(
      [&](const auto& x) -> double {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Distribution::Dirac>) {
          return value_equal(x.value, v) ? 0.0 : kNegInf;
        } else if constexpr (std::is_same_v<T, Distribution::Bernoulli>) {
          bool b = v.is_bool() ? v.as_bool() : v.as_float() != 0.0;
          return std::log(b ? x.p : 1.0 - x.p);
        } else if constexpr (std::is_same_v<T, Distribution::Beta>) {
          double y = v.as_float();
          if (y < 0.0 || y > 1.0) return kNegInf;
          return xlogy(x.a - 1.0, y) + xlogy(x.b - 1.0, 1.0 - y) - log_beta_fn(x.a, x.b);
        } else if constexpr (std::is_same_v<T, Distribution::Gaussian>) {
          double z = v.as_float() - x.mean;
          return -0.5 * (kLog2Pi + std::log(x.var)) - z * z / (2.0 * x.var);
        } else if constexpr (std::is_same_v<T, Distribution::MvGaussian>) {
          Eigen::VectorXd y = v.is_vector() ? v.as_vector() : Eigen::VectorXd::Constant(1, v.as_float());
          if (y.size() != x.mean.size()) throw Error(ErrorKind::Eval, "mv_gaussian observation dimension mismatch");
          Eigen::MatrixXd l = cholesky_jittered(x.cov);
          Eigen::VectorXd z = l.triangularView<Eigen::Lower>().solve(y - x.mean);
          double logdet = 2.0 * l.diagonal().array().log().sum();
          return -0.5 * (static_cast<double>(y.size()) * kLog2Pi + logdet + z.squaredNorm());
        } else if constexpr (std::is_same_v<T, Distribution::Poisson>) {
          double k = v.as_float();
          if (k < 0.0 || std::nearbyint(k) != k) return kNegInf;
          return k * std::log(x.rate) - x.rate - std::lgamma(k + 1.0);
        } else if constexpr (std::is_same_v<T, Distribution::Categorical>) {
          double p = 0.0;
          for (const auto& [u, w] : x.items)
            if (value_equal(u, v)) p += w;
          return std::log(p);
        } else if constexpr (std::is_same_v<T, Distribution::Mixture>) {
          std::vector<double> terms;
          for (const auto& [c, w] : x.items) terms.push_back(std::log(w) + log_pdf(*c, v));
          return logsumexp(terms);
        } else {
          const auto& t = v.as_tuple();
          if (t.size() != x.parts.size()) throw Error(ErrorKind::Eval, "joint observation arity mismatch");
          double s = 0.0;
          for (std::size_t i = 0; i < t.size(); ++i) s += log_pdf(*x.parts[i], t[i]);
          return s;
        }
      },
      d.repr());
}

namespace {

Value numeric_like(const Value& v) {
  std::vector<double> flat = flatten(v);
  const double* it = flat.data();
  return unflatten_like(v, it);
}

Value weighted_mean(const std::vector<std::pair<Value, double>>& items) {
  std::vector<double> acc;
  for (const auto& [v, w] : items) {
    std::vector<double> f = flatten(v);
    if (acc.empty()) acc.assign(f.size(), 0.0);
    if (f.size() != acc.size()) throw Error(ErrorKind::Eval, "mean over values of different shapes");
    for (std::size_t i = 0; i < f.size(); ++i) acc[i] += w * f[i];
  }
  const double* it = acc.data();
  return unflatten_like(items.front().first, it);
}

// Second moment E[x x^T] (vector) or E[x^2] (scalar) from mean and variance.
Value variance_of_points(const std::vector<std::pair<Value, double>>& items) {
  const Value& shape = items.front().first;
  if (shape.is_tuple()) {
    Tuple parts;
    for (std::size_t i = 0; i < shape.arity(); ++i) {
      std::vector<std::pair<Value, double>> proj;
      for (const auto& [v, w] : items) proj.emplace_back(v.at(i), w);
      parts.push_back(variance_of_points(proj));
    }
    return Value::tuple(std::move(parts));
  }
  if (shape.is_vector()) {
    const Eigen::Index n = shape.as_vector().size();
    Eigen::VectorXd m = Eigen::VectorXd::Zero(n);
    for (const auto& [v, w] : items) m += w * v.as_vector();
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [v, w] : items) {
      Eigen::VectorXd dlt = v.as_vector() - m;
      c += w * dlt * dlt.transpose();
    }
    return Value::matrix(std::move(c));
  }
  if (shape.is_unit()) return Value::unit();
  if (shape.is_matrix()) throw Error(ErrorKind::Eval, "variance of a matrix-valued distribution is unsupported");
  double m = 0.0;
  for (const auto& [v, w] : items) m += w * v.as_float();
  double s = 0.0;
  for (const auto& [v, w] : items) s += w * (v.as_float() - m) * (v.as_float() - m);
  return Value::real(s);
}

}  // namespace

Value mean(const Distribution& d) {
  return std::visit(
      [&](const auto& x) -> Value {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Distribution::Dirac>) {
          return numeric_like(x.value);
        } else if constexpr (std::is_same_v<T, Distribution::Bernoulli>) {
          return Value::real(x.p);
        } else if constexpr (std::is_same_v<T, Distribution::Beta>) {
          return Value::real(x.a / (x.a + x.b));
        } else if constexpr (std::is_same_v<T, Distribution::Gaussian>) {
          return Value::real(x.mean);
        } else if constexpr (std::is_same_v<T, Distribution::MvGaussian>) {
          return Value::vector(x.mean);
        } else if constexpr (std::is_same_v<T, Distribution::Poisson>) {
          return Value::real(x.rate);
        } else if constexpr (std::is_same_v<T, Distribution::Categorical>) {
          return weighted_mean(x.items);
        } else if constexpr (std::is_same_v<T, Distribution::Mixture>) {
          std::vector<std::pair<Value, double>> means;
          for (const auto& [c, w] : x.items) means.emplace_back(mean(*c), w);
          return weighted_mean(means);
        } else {
          Tuple t;
          for (const auto& p : x.parts) t.push_back(mean(*p));
          return Value::tuple(std::move(t));
        }
      },
      d.repr());
}

Value variance(const Distribution& d) {
  return std::visit(
      [&](const auto& x) -> Value {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Distribution::Dirac>) {
          return variance_of_points({{x.value, 1.0}});
        } else if constexpr (std::is_same_v<T, Distribution::Bernoulli>) {
          return Value::real(x.p * (1.0 - x.p));
        } else if constexpr (std::is_same_v<T, Distribution::Beta>) {
          double s = x.a + x.b;
          return Value::real(x.a * x.b / (s * s * (s + 1.0)));
        } else if constexpr (std::is_same_v<T, Distribution::Gaussian>) {
          return Value::real(x.var);
        } else if constexpr (std::is_same_v<T, Distribution::MvGaussian>) {
          return Value::matrix(x.cov);
        } else if constexpr (std::is_same_v<T, Distribution::Poisson>) {
          return Value::real(x.rate);
        } else if constexpr (std::is_same_v<T, Distribution::Categorical>) {
          return variance_of_points(x.items);
        } else if constexpr (std::is_same_v<T, Distribution::Mixture>) {
          Value shape = mean(d);
          if (shape.is_tuple()) {
            Tuple parts;
            for (std::size_t i = 0; i < shape.arity(); ++i) parts.push_back(variance(*project(d, i)));
            return Value::tuple(std::move(parts));
          }
          if (shape.is_vector()) {
            const Eigen::VectorXd& m = shape.as_vector();
            Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(m.size(), m.size());
            for (const auto& [c, w] : x.items) {
              Eigen::VectorXd mi = mean(*c).as_vector();
              acc += w * (variance(*c).as_matrix() + mi * mi.transpose());
            }
            return Value::matrix(acc - m * m.transpose());
          }
          if (shape.is_matrix()) throw Error(ErrorKind::Eval, "variance of a matrix-valued distribution is unsupported");
          // Law of total variance.
          double m = shape.as_float();
          double acc = 0.0;
          for (const auto& [c, w] : x.items) {
            double mi = mean(*c).as_float();
            acc += w * (variance(*c).as_float() + (mi - m) * (mi - m));
          }
          return Value::real(acc);
        } else {
          Tuple t;
          for (const auto& p : x.parts) t.push_back(variance(*p));
          return Value::tuple(std::move(t));
        }
      },
      d.repr());
}

std::vector<double> mean_flat(const Distribution& d) { return flatten(mean(d)); }

namespace {

void marginal_vars(const Value& var, std::vector<double>& out) {
  switch (var.kind()) {
    case Value::Kind::Unit: return;
    case Value::Kind::Matrix: {
      const auto& m = var.as_matrix();
      for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(m(i, i));
      return;
    }
    case Value::Kind::Tuple:
      for (const auto& x : var.as_tuple()) marginal_vars(x, out);
      return;
    default: out.push_back(var.as_float());
  }
}

}  // namespace

std::vector<double> var_flat(const Distribution& d) {
  std::vector<double> out;
  marginal_vars(variance(d), out);
  return out;
}

bool finite_support(const Distribution& d, std::vector<std::pair<Value, double>>& out) {
  out.clear();
  if (auto x = d.get<Distribution::Dirac>()) {
    out.emplace_back(x->value, 1.0);
    return true;
  }
  if (auto x = d.get<Distribution::Bernoulli>()) {
    out.emplace_back(Value::boolean(true), x->p);
    out.emplace_back(Value::boolean(false), 1.0 - x->p);
    return true;
  }
  if (auto x = d.get<Distribution::Categorical>()) {
    out = x->items;
    return true;
  }
  if (auto x = d.get<Distribution::Mixture>()) {
    std::vector<std::pair<Value, double>> part;
    for (const auto& [c, w] : x->items) {
      if (!finite_support(*c, part)) return false;
      for (auto& [v, p] : part) out.emplace_back(v, w * p);
    }
    return true;
  }
  if (auto x = d.get<Distribution::Joint>()) {
    std::vector<std::pair<Tuple, double>> acc{{Tuple{}, 1.0}};
    std::vector<std::pair<Value, double>> part;
    for (const auto& p : x->parts) {
      if (!finite_support(*p, part)) return false;
      std::vector<std::pair<Tuple, double>> next;
      for (const auto& [t, w] : acc)
        for (const auto& [v, q] : part) {
          Tuple t2 = t;
          t2.push_back(v);
          next.emplace_back(std::move(t2), w * q);
        }
      acc = std::move(next);
    }
    for (auto& [t, w] : acc) out.emplace_back(Value::tuple(std::move(t)), w);
    return true;
  }
  return false;
}

std::string describe(const Distribution& d) {
  return std::visit(
      [&](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Distribution::Dirac>) {
          return "dirac(" + to_string(x.value) + ")";
        } else if constexpr (std::is_same_v<T, Distribution::Bernoulli>) {
          return "bernoulli(" + format_double(x.p) + ")";
        } else if constexpr (std::is_same_v<T, Distribution::Beta>) {
          return "beta(" + format_double(x.a) + ", " + format_double(x.b) + ")";
        } else if constexpr (std::is_same_v<T, Distribution::Gaussian>) {
          return "gaussian(" + format_double(x.mean) + ", " + format_double(x.var) + ")";
        } else if constexpr (std::is_same_v<T, Distribution::MvGaussian>) {
          return "mv_gaussian(" + to_string(Value::vector(x.mean)) + ", " + to_string(Value::matrix(x.cov)) + ")";
        } else if constexpr (std::is_same_v<T, Distribution::Poisson>) {
          return "poisson(" + format_double(x.rate) + ")";
        } else if constexpr (std::is_same_v<T, Distribution::Categorical>) {
          std::string s = "categorical[";
          for (std::size_t i = 0; i < x.items.size(); ++i)
            s += (i ? ", " : "") + to_string(x.items[i].first) + ":" + format_double(x.items[i].second);
          return s + "]";
        } else if constexpr (std::is_same_v<T, Distribution::Mixture>) {
          std::string s = "mixture[";
          for (std::size_t i = 0; i < x.items.size(); ++i)
            s += (i ? ", " : "") + describe(*x.items[i].first) + ":" + format_double(x.items[i].second);
          return s + "]";
        } else {
          std::string s = "joint(";
          for (std::size_t i = 0; i < x.parts.size(); ++i) s += (i ? ", " : "") + describe(*x.parts[i]);
          return s + ")";
        }
      },
      d.repr());
}

}  // namespace rpz
