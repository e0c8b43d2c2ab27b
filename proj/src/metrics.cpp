#include <algorithm>
#include <cmath>
#include <sstream>

#include "rpz/bench.hpp"
#include "rpz/error.hpp"

namespace rpz {

double mse_loss(const std::vector<std::vector<double>>& est, const std::vector<std::vector<double>>& truth) {
  if (est.size() != truth.size()) throw Error(ErrorKind::Config, "mse: stream lengths differ");
  if (est.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t t = 0; t < est.size(); ++t) {
    if (est[t].size() != truth[t].size() || est[t].empty())
      throw Error(ErrorKind::Config, "mse: component counts differ at step " + std::to_string(t));
    double s = 0.0;
    for (std::size_t i = 0; i < est[t].size(); ++i) s += (est[t][i] - truth[t][i]) * (est[t][i] - truth[t][i]);
    total += s / static_cast<double>(est[t].size());
  }
  return total / static_cast<double>(est.size());
}

double lqr_loss(const std::vector<Eigen::VectorXd>& xs, const std::vector<Eigen::VectorXd>& us,
                const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R) {
  if (xs.size() != us.size()) throw Error(ErrorKind::Config, "lqr loss: stream lengths differ");
  double s = 0.0;
  for (std::size_t t = 0; t < xs.size(); ++t) s += xs[t].dot(Q * xs[t]) + us[t].dot(R * us[t]);
  return s;
}

std::vector<Gaussian1> kalman_oracle(double m0, double v0, double q, double r, const std::vector<double>& obs) {
  std::vector<Gaussian1> out;
  out.reserve(obs.size());
  double m = m0, v = v0;
  for (std::size_t t = 0; t < obs.size(); ++t) {
    if (t > 0) v += q;
    double k = v / (v + r);
    m = m + k * (obs[t] - m);
    v = (1.0 - k) * v;
    out.push_back({m, v});
  }
  return out;
}

double quantile(std::vector<double> xs, double p) {
  if (xs.empty()) throw Error(ErrorKind::Config, "quantile of an empty sample");
  std::sort(xs.begin(), xs.end());
  auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(xs.size())));
  rank = std::clamp<std::size_t>(rank, 1, xs.size());
  return xs[rank - 1];
}

std::string params_text(const Params& p) {
  std::string s;
  for (const auto& [k, v] : p) s += k + "=" + v + "\n";
  return s;
}

Params parse_params(const std::string& text) {
  Params p;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::Config, "expected key=value, got: " + line);
    p[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return p;
}

}  // namespace rpz
