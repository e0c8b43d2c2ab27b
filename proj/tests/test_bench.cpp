#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>

#include "rpz/bench.hpp"
#include "rpz/compile.hpp"
#include "rpz/error.hpp"
#include "rpz/eval.hpp"
#include "rpz/rng.hpp"
#include "rpz/runner.hpp"

using namespace rpz;

namespace {

Eigen::MatrixXd scalar(double x) { return Eigen::MatrixXd::Constant(1, 1, x); }

// Filtering moments of the scalar random walk on a grid, by direct
// convolution and pointwise multiplication of densities.
std::vector<Gaussian1> grid_filter(double m0, double v0, double q, double r, const std::vector<double>& obs) {
  const double lo = -30.0, hi = 30.0;
  const int n = 3001;
  const double h = (hi - lo) / (n - 1);
  auto npdf = [](double x, double m, double v) { return std::exp(-0.5 * (x - m) * (x - m) / v) / std::sqrt(2 * M_PI * v); };
  std::vector<double> xs(n), w(n);
  for (int i = 0; i < n; ++i) {
    xs[i] = lo + i * h;
    w[i] = npdf(xs[i], m0, v0);
  }
  std::vector<Gaussian1> out;
  for (std::size_t t = 0; t < obs.size(); ++t) {
    if (t > 0) {
      std::vector<double> pred(n, 0.0);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) pred[i] += w[j] * npdf(xs[i], xs[j], q) * h;
      w = pred;
    }
    double z = 0.0, m = 0.0, s = 0.0;
    for (int i = 0; i < n; ++i) {
      w[i] *= npdf(obs[t], xs[i], r);
      z += w[i];
    }
    for (int i = 0; i < n; ++i) {
      w[i] /= z * h;
      m += xs[i] * w[i] * h;
    }
    for (int i = 0; i < n; ++i) s += (xs[i] - m) * (xs[i] - m) * w[i] * h;
    out.push_back({m, s});
  }
  return out;
}

}  // namespace

TEST_SUITE("bench") {
  TEST_CASE("lqr gain of a scalar system") {
    auto g = lqr_gain(scalar(1), scalar(1), scalar(1), scalar(1));
    double phi = (1 + std::sqrt(5.0)) / 2;
    CHECK(g.P(0, 0) == doctest::Approx(phi).epsilon(1e-10));
    CHECK(g.K(0, 0) == doctest::Approx(1 / phi).epsilon(1e-10));
    CHECK(g.residual < 1e-10);
  }

  TEST_CASE("lqr gain with a zero dynamics matrix") {
    Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(2, 2) * 3.0;
    auto g = lqr_gain(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Identity(2, 2), Q, Eigen::MatrixXd::Identity(2, 2));
    CHECK((g.P - Q).norm() < 1e-12);
    CHECK(g.K.norm() < 1e-12);
  }

  TEST_CASE("lqr gain stabilizes random systems") {
    Rng rng(17);
    for (int trial = 0; trial < 5; ++trial) {
      Eigen::MatrixXd A(3, 3), B(3, 1);
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) A(i, j) = rng.uniform() * 2 - 1;
        B(i, 0) = rng.uniform() * 2 - 1;
      }
      auto g = lqr_gain(A, B, Eigen::MatrixXd::Identity(3, 3), scalar(1));
      CHECK(riccati_residual(g.P, A, B, g.Q, g.R) < 1e-10);
      Eigen::MatrixXd closed = A - B * g.K;
      CHECK(closed.eigenvalues().cwiseAbs().maxCoeff() < 1.0);
    }
  }

  TEST_CASE("lqr gain reports non-convergence and bad shapes") {
    CHECK_THROWS_AS(lqr_gain(scalar(1), scalar(1), scalar(1), scalar(1), 1e-10, 1), Error);
    CHECK_THROWS_AS(lqr_gain(Eigen::MatrixXd::Identity(2, 2), scalar(1), scalar(1), scalar(1)), Error);
  }

  TEST_CASE("mse loss") {
    std::vector<std::vector<double>> a{{1.0, 2.0}, {3.0, 4.0}};
    CHECK(mse_loss(a, a) == 0.0);
    auto b = a;
    for (auto& row : b)
      for (auto& x : row) x += 2.0;
    CHECK(mse_loss(a, b) == 4.0);
    CHECK_THROWS_AS(mse_loss(a, {{1.0, 2.0}}), Error);
  }

  TEST_CASE("lqr loss") {
    Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(3, 3), R = scalar(1);
    std::vector<Eigen::VectorXd> xs(4, Eigen::VectorXd::Zero(3)), us(4, Eigen::VectorXd::Zero(1));
    CHECK(lqr_loss(xs, us, Q, R) == 0.0);
    std::vector<Eigen::VectorXd> one{Eigen::Vector3d(1, 0, 0)}, none{Eigen::VectorXd::Zero(1)};
    CHECK(lqr_loss(one, none, Q, R) == 1.0);
  }

  TEST_CASE("kalman oracle limits") {
    std::vector<double> obs{5.0, -3.0, 8.0, 1.0};
    auto vague = kalman_oracle(0.0, 1.0, 0.5, 1e12, obs);
    for (std::size_t t = 1; t < obs.size(); ++t) CHECK(vague[t].var - vague[t - 1].var == doctest::Approx(0.5).epsilon(1e-6));
    auto sharp = kalman_oracle(0.0, 1.0, 0.5, 1e-12, obs);
    for (std::size_t t = 0; t < obs.size(); ++t) CHECK(sharp[t].mean == doctest::Approx(obs[t]).epsilon(1e-9));
  }

  TEST_CASE("kalman oracle matches grid quadrature") {
    std::vector<double> obs{1.0, -0.5, 2.0};
    auto k = kalman_oracle(0.0, 4.0, 1.0, 2.0, obs);
    auto g = grid_filter(0.0, 4.0, 1.0, 2.0, obs);
    for (std::size_t t = 0; t < obs.size(); ++t) {
      CHECK(std::abs(k[t].mean - g[t].mean) < 1e-6);
      CHECK(std::abs(k[t].var - g[t].var) < 1e-6);
    }
  }

  TEST_CASE("nearest-rank quantile") {
    std::vector<double> xs;
    for (int i = 100; i >= 1; --i) xs.push_back(i);
    CHECK(quantile(xs, 0.1) == 10.0);
    CHECK(quantile(xs, 0.5) == 50.0);
    CHECK(quantile(xs, 0.9) == 90.0);
    CHECK(quantile({3.0}, 0.5) == 3.0);
    CHECK_THROWS_AS(quantile({}, 0.5), Error);
  }

  TEST_CASE("params round trip") {
    Params p{{"x0", "5,0,0"}, {"dt", "0.1"}, {"gps_period", "10"}};
    CHECK(parse_params(params_text(p)) == p);
    CHECK(parse_params("# comment\na=1\n") == Params{{"a", "1"}});
    CHECK_THROWS_AS(parse_params("novalue\n"), Error);
  }

  TEST_CASE("benchmark registry") {
    CHECK_THROWS_AS(build_benchmark("nope"), Error);
    CHECK_THROWS_AS(build_benchmark("kalman-1d", {{"p", "1"}}), Error);
    for (const auto& name : benchmark_names()) {
      CAPTURE(name);
      auto b = build_benchmark(name);
      CHECK(b.source.find("let node main") != std::string::npos);
      CHECK_NOTHROW(compile_source(b.source));
      CHECK(b.metric == (name == "robot" ? "lqr" : "mse"));
    }
  }

  TEST_CASE("scenarios are seed-deterministic") {
    for (const auto& name : benchmark_names()) {
      if (name == "robot" || name == "slam") continue;  // inputs depend on outputs
      CAPTURE(name);
      auto b = build_benchmark(name);
      auto s1 = b.make(3, b.params), s2 = b.make(3, b.params), s3 = b.make(4, b.params);
      bool differs = false;
      for (long t = 0; t < 20; ++t) {
        Value a = s1->input(t), c = s3->input(t);
        CHECK(value_equal(a, s2->input(t)));
        differs = differs || !value_equal(a, c);
      }
      CHECK(differs);
    }
  }

  TEST_CASE("fixed coin bias") {
    auto b = build_benchmark("beta-bernoulli", {{"p", "1"}});
    auto s = b.make(9, b.params);
    for (long t = 0; t < 50; ++t) CHECK(s->input(t).as_bool());
    CHECK(s->truth().as_float() == 1.0);
  }

  TEST_CASE("outlier clutter rate") {
    auto b = build_benchmark("outlier");
    double total = 0.0;
    const int seeds = 20, steps = 10000;
    for (int seed = 0; seed < seeds; ++seed) {
      auto s = b.make(static_cast<std::uint64_t>(seed), b.params);
      long hits = 0;
      for (long t = 0; t < steps; ++t) {
        s->input(t);
        hits += s->truth().at(0).as_bool();
      }
      total += static_cast<double>(hits) / steps;
    }
    CHECK(std::abs(total / seeds - 100.0 / 1100.0) < 0.01);
  }

  TEST_CASE("one-particle streaming delayed sampling is the exact Kalman filter") {
    RunConfig cfg;
    cfg.model = "kalman-1d";
    cfg.inference = "sds";
    cfg.particles = 1;
    cfg.steps = 200;
    cfg.seed = 7;
    auto res = run(cfg);
    auto b = build_benchmark("kalman-1d");
    auto s = b.make(7, b.params);
    std::vector<double> obs, truth;
    for (long t = 0; t < cfg.steps; ++t) {
      obs.push_back(s->input(t).as_float());
      truth.push_back(s->truth().as_float());
    }
    auto k = kalman_oracle(0.0, 2500.0, 1.0, 1.0, obs);
    double total = 0.0;
    for (std::size_t t = 0; t < obs.size(); ++t) {
      total += (k[t].mean - truth[t]) * (k[t].mean - truth[t]);
      CHECK(res.rows[t].mean[0] == doctest::Approx(k[t].mean).epsilon(1e-9));
      CHECK(res.rows[t].var[0] == doctest::Approx(k[t].var).epsilon(1e-9));
      CHECK(res.rows[t].loss == doctest::Approx(total / static_cast<double>(t + 1)).epsilon(1e-9));
    }
  }

  TEST_CASE("robot loss is a cumulative LQR cost") {
    RunConfig cfg;
    cfg.model = "robot";
    cfg.inference = "sds";
    cfg.particles = 1;
    cfg.steps = 30;
    cfg.seed = 2;
    auto res = run(cfg);
    for (std::size_t t = 1; t < res.rows.size(); ++t) CHECK(res.rows[t].loss >= res.rows[t - 1].loss);
    // Output is (u, x_dist): one command component then three state means.
    CHECK(res.rows[0].mean.size() == 4);
    CHECK(res.rows[0].mean[0] == 0.0);
  }

  TEST_CASE("robot command follows the LQR law on the estimate") {
    auto sys = robot_system({{"dt", "0.1"}, {"proc_noise", "0.01"}});
    auto g = lqr_gain(sys.A, sys.B, sys.Q, sys.R);
    CHECK((sys.A - sys.B * g.K).eigenvalues().cwiseAbs().maxCoeff() < 1.0);
    RunConfig cfg;
    cfg.model = "robot";
    cfg.inference = "sds";
    cfg.particles = 1;
    cfg.steps = 10;
    cfg.seed = 4;
    auto res = run(cfg);
    for (std::size_t t = 1; t < res.rows.size(); ++t) {
      Eigen::Vector3d m(res.rows[t - 1].mean[1], res.rows[t - 1].mean[2], res.rows[t - 1].mean[3]);
      CHECK(res.rows[t].mean[0] == doctest::Approx((-g.K * m)(0)).epsilon(1e-9));
    }
  }

  TEST_CASE("slam runs and scores every method") {
    for (const char* m : {"pf", "bds", "sds"}) {
      RunConfig cfg;
      cfg.model = "slam";
      cfg.inference = m;
      cfg.particles = 50;
      cfg.steps = 20;
      cfg.seed = 1;
      auto res = run(cfg);
      CHECK(res.rows.size() == 20);
      CHECK(std::isfinite(res.final_loss));
    }
  }
}
