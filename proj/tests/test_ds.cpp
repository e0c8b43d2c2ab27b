#include <doctest.h>

#include <cmath>
#include <functional>
#include <numbers>

#include "rpz/compile.hpp"
#include "rpz/distribution.hpp"
#include "rpz/ds.hpp"
#include "rpz/error.hpp"
#include "rpz/eval.hpp"
#include "rpz/ops.hpp"
#include "rpz/runner.hpp"

using namespace rpz;
using ds::Graph;
using ds::NodePtr;
using ds::Status;

namespace {

std::shared_ptr<std::atomic<long>> counter() { return std::make_shared<std::atomic<long>>(0); }

Value rvar(const NodePtr& n) { return Value::sym(sym_rvar(n)); }

Value dist_app(const std::string& op, Value arg) { return Value::sym(sym_app(find_op(op), std::move(arg))); }

Value gauss(Value mean, double var) { return dist_app("gaussian", Value::pair(std::move(mean), Value::real(var))); }

const Distribution::Gaussian& as_gaussian(const DistPtr& d) {
  REQUIRE(d);
  auto* g = d->get<Distribution::Gaussian>();
  REQUIRE(g != nullptr);
  return *g;
}

const Distribution::Beta& as_beta(const DistPtr& d) {
  REQUIRE(d);
  auto* b = d->get<Distribution::Beta>();
  REQUIRE(b != nullptr);
  return *b;
}

double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  double h = (b - a) / n, s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// Posterior mean and variance of a scalar parameter by quadrature.
std::pair<double, double> quadrature_posterior(const std::function<double(double)>& unnorm, double lo, double hi) {
  double z = simpson(unnorm, lo, hi, 200000);
  double m = simpson([&](double x) { return x * unnorm(x); }, lo, hi, 200000) / z;
  double v = simpson([&](double x) { return (x - m) * (x - m) * unnorm(x); }, lo, hi, 200000) / z;
  return {m, v};
}

double npdf(double x, double m, double v) { return std::exp(-0.5 * (x - m) * (x - m) / v) / std::sqrt(2 * std::numbers::pi * v); }

// Posterior mean of the first output component at the last step.
std::pair<double, double> final_moments(const std::string& src, const std::vector<Value>& ins, const std::string& method,
                                        long particles, std::uint64_t key) {
  CompiledProgram prog = compile_source(src);
  int idx = prog.index("main");
  Value st = copy_cells(prog.decls[static_cast<std::size_t>(idx)].init);
  EngineConfig cfg;
  cfg.method = method;
  cfg.particles_override = particles;
  cfg.key = key;
  Effects fx(cfg);
  Value out;
  for (const auto& x : ins) out = step_node(prog, idx, st, x, fx);
  return {mean_flat(*out.as_dist())[0], var_flat(*out.as_dist())[0]};
}

}  // namespace

TEST_SUITE("delayed_sampling") {
  TEST_CASE("assume a constant distribution adds a marginalized root") {
    Graph g(true, counter());
    Rng rng(1);
    auto x = g.assume(Value::dist(make_gaussian(0, 2500)), rng);
    CHECK(x->status == Status::Marginalized);
    CHECK(!x->parent);
    CHECK(as_gaussian(x->marginal).var == 2500.0);
    auto y = g.assume(gauss(Value::real(1.0), 2.0), rng);
    CHECK(y->status == Status::Marginalized);
    CHECK(as_gaussian(y->marginal).mean == 1.0);
  }

  TEST_CASE("assume a Bernoulli of a Beta node initializes a child") {
    Graph g(true, counter());
    Rng rng(1);
    auto y = g.assume(dist_app("beta", Value::pair(Value::real(1), Value::real(1))), rng);
    auto x = g.assume(dist_app("bernoulli", rvar(y)), rng);
    CHECK(x->status == Status::Initialized);
    CHECK(x->parent == y);
    CHECK(std::holds_alternative<ds::BernoulliOfBeta>(x->cond));
  }

  TEST_CASE("assume over a non-affine term realizes its dependencies") {
    Graph g(true, counter());
    Rng rng(1);
    auto y = g.assume(gauss(Value::real(0), 1), rng);
    auto x = g.assume(gauss(dist_app("exp", rvar(y)), 1), rng);
    CHECK(y->status == Status::Realized);
    CHECK(x->status == Status::Marginalized);
    CHECK(!x->parent);
    CHECK(as_gaussian(x->marginal).mean == doctest::Approx(std::exp(y->value.as_float())).epsilon(1e-15));
  }

  TEST_CASE("a forced dependency leaves the posterior unchanged") {
    std::string src =
        "let proba m (y) = x where\n"
        "  rec init x = sample (gaussian (0., 1.))\n"
        "  and z = sample (gaussian (exp (x), 1.))\n"
        "  and () = observe (gaussian (z, 1.), y)\n"
        "let node main (y) = infer 1 m (y)\n";
    std::vector<Value> ins{Value::real(2.0)};
    auto [mp, vp] = final_moments(src, ins, "pf", 20000, 3);
    auto [ms, vs] = final_moments(src, ins, "sds", 20000, 4);
    // ESS of this likelihood stays above half the cloud.
    CHECK(std::abs(mp - ms) <= 4 * std::sqrt(vp / 10000.0 + vs / 10000.0));
  }

  TEST_CASE("initialize builds parent links") {
    Graph g(true, counter());
    auto y = g.add_root(make_gaussian(0, 1));
    auto x = g.initialize(ds::GaussianOfAffine{1, 0, 1}, y);
    CHECK(x->status == Status::Initialized);
    CHECK(x->parent == y);
    auto z = g.initialize(ds::GaussianOfAffine{1, 0, 1}, x);
    CHECK(z->parent->parent == y);
    auto b = g.add_root(make_beta(2, 3));
    auto c = g.initialize(ds::BernoulliOfBeta{}, b);
    CHECK(c->status == Status::Initialized);
  }

  TEST_CASE("marginalize applies the conjugate rules") {
    Graph g(true, counter());
    Rng rng(1);
    auto y = g.add_root(make_gaussian(0, 1));
    auto x = g.initialize(ds::GaussianOfAffine{2, 1, 0.5}, y);
    g.marginalize(x, rng);
    CHECK(x->status == Status::Marginalized);
    CHECK(as_gaussian(x->marginal).mean == doctest::Approx(1.0));
    CHECK(as_gaussian(x->marginal).var == doctest::Approx(4.5));
    // Streaming pointer flip.
    CHECK(!x->parent);
    CHECK(y->mchild == x);
    // Monte Carlo cross-check of the closed form.
    Rng mc(2);
    double s = 0, s2 = 0;
    const int n = 1000000;
    auto prior = make_gaussian(0, 1), noise = make_gaussian(0, 0.5);
    for (int i = 0; i < n; ++i) {
      double v = 2 * draw(*prior, mc).as_float() + 1 + draw(*noise, mc).as_float();
      s += v;
      s2 += v * v;
    }
    CHECK(std::abs(s / n - 1.0) < 4 * std::sqrt(4.5 / n));
    CHECK(std::abs(s2 / n - (s / n) * (s / n) - 4.5) < 0.05);

    auto b = g.add_root(make_beta(1, 1));
    auto c = g.initialize(ds::BernoulliOfBeta{}, b);
    g.marginalize(c, rng);
    REQUIRE(c->marginal->get<Distribution::Bernoulli>());
    CHECK(c->marginal->get<Distribution::Bernoulli>()->p == 0.5);
  }

  TEST_CASE("marginalize against a realized parent folds its value") {
    Graph g(true, counter());
    Rng rng(1);
    auto y = g.add_root(make_gaussian(0, 1));
    auto x = g.initialize(ds::GaussianOfAffine{1, 0, 1}, y);
    g.realize(y, Value::real(3.0));
    g.marginalize(x, rng);
    CHECK(as_gaussian(x->marginal).mean == 3.0);
    CHECK(as_gaussian(x->marginal).var == 1.0);
  }

  TEST_CASE("realize a root") {
    Graph g(true, counter());
    auto y = g.add_root(make_gaussian(0, 1));
    g.realize(y, Value::real(0.7));
    CHECK(y->status == Status::Realized);
    CHECK(y->value.as_float() == 0.7);
    CHECK(!y->parent);
    CHECK(!y->mchild);
  }

  TEST_CASE("realizing a Bernoulli child conditions its Beta parent") {
    for (bool streaming : {true, false}) {
      Graph g(streaming, counter());
      Rng rng(1);
      auto b = g.add_root(make_beta(1, 1));
      auto c = g.initialize(ds::BernoulliOfBeta{}, b);
      g.marginalize(c, rng);
      g.realize(c, Value::boolean(true));
      auto post = g.distribution_of(rvar(b));
      CHECK(as_beta(post).a == 2.0);
      CHECK(as_beta(post).b == 1.0);
      // The naive graph conditions eagerly on realization.
      if (streaming) g.condition(b);
      CHECK(as_beta(b->marginal).a == 2.0);
      CHECK(!b->mchild);
    }
  }

  TEST_CASE("Gaussian conditioning matches quadrature") {
    Graph g(true, counter());
    Rng rng(1);
    auto y = g.add_root(make_gaussian(0, 1));
    auto x = g.initialize(ds::GaussianOfAffine{1, 0, 1}, y);
    g.marginalize(x, rng);
    g.realize(x, Value::real(0.0));
    g.condition(y);
    CHECK(as_gaussian(y->marginal).mean == doctest::Approx(0.0));
    CHECK(as_gaussian(y->marginal).var == doctest::Approx(0.5).epsilon(1e-12));
    auto [qm, qv] = quadrature_posterior([](double t) { return npdf(t, 0, 1) * npdf(0, t, 1); }, -10, 10);
    CHECK(qv == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(std::abs(qm) < 1e-9);
  }

  TEST_CASE("affine conditioning matches quadrature") {
    Graph g(true, counter());
    Rng rng(1);
    auto y = g.add_root(make_gaussian(0, 1));
    auto x = g.initialize(ds::GaussianOfAffine{2, 1, 0.5}, y);
    g.marginalize(x, rng);
    g.realize(x, Value::real(1.0));
    g.condition(y);
    auto [qm, qv] = quadrature_posterior([](double t) { return npdf(t, 0, 1) * npdf(1.0, 2 * t + 1, 0.5); }, -10, 10);
    CHECK(as_gaussian(y->marginal).mean == doctest::Approx(qm).epsilon(1e-9));
    CHECK(as_gaussian(y->marginal).var == doctest::Approx(qv).epsilon(1e-9));
    CHECK(qv == doctest::Approx(1.0 / 9.0).epsilon(1e-9));
  }

  TEST_CASE("Beta conditioning on a false outcome") {
    auto post = ds::cond_posterior(ds::BernoulliOfBeta{}, *make_beta(2, 5), Value::boolean(false));
    CHECK(as_beta(post).a == 2.0);
    CHECK(as_beta(post).b == 6.0);
    // Enumeration over a fine grid of the parent value.
    auto [qm, qv] = quadrature_posterior(
        [](double p) { return p <= 0 || p >= 1 ? 0.0 : p * std::pow(1 - p, 4) * (1 - p); }, 0.0, 1.0);
    CHECK(mean(*post).as_float() == doctest::Approx(qm).epsilon(1e-9));
    CHECK(variance(*post).as_float() == doctest::Approx(qv).epsilon(1e-8));
  }

  TEST_CASE("value forces symbolic terms") {
    Graph g(true, counter());
    Rng rng(1);
    CHECK(g.value(Value::real(2.5), rng).as_float() == 2.5);
    auto y = g.add_root(make_gaussian(0, 1));
    g.realize(y, Value::real(4.0));
    CHECK(g.value(rvar(y), rng).as_float() == 4.0);
    auto x = g.add_root(make_gaussian(2, 1e-30));
    Value e = dist_app("+", Value::pair(Value::real(1.0), rvar(x)));
    CHECK(g.value(e, rng).as_float() == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(x->status == Status::Realized);
  }

  TEST_CASE("value marginalizes down a chain before sampling") {
    Graph g(true, counter());
    Rng rng(1);
    auto a = g.add_root(make_gaussian(0, 1));
    auto b = g.initialize(ds::GaussianOfAffine{1, 0, 1}, a);
    auto c = g.initialize(ds::GaussianOfAffine{1, 0, 1}, b);
    g.value(rvar(c), rng);
    CHECK(c->status == Status::Realized);
    CHECK(b->status != Status::Initialized);
  }

  TEST_CASE("observe on Beta-Bernoulli") {
    Graph g(true, counter());
    Rng rng(1);
    auto p = g.add_root(make_beta(1, 1));
    double w1 = g.observe(dist_app("bernoulli", rvar(p)), Value::boolean(true), rng);
    CHECK(w1 == doctest::Approx(std::log(0.5)).epsilon(1e-15));
    CHECK(as_beta(g.distribution_of(rvar(p))).a == 2.0);
    double w2 = g.observe(dist_app("bernoulli", rvar(p)), Value::boolean(true), rng);
    CHECK(w2 == doctest::Approx(std::log(2.0 / 3.0)).epsilon(1e-15));
    auto post = g.distribution_of(rvar(p));
    CHECK(as_beta(post).a == 3.0);
    CHECK(as_beta(post).b == 1.0);
  }

  TEST_CASE("observe on a Kalman step") {
    Graph g(true, counter());
    Rng rng(1);
    auto x = g.add_root(make_gaussian(0, 2500));
    double w = g.observe(gauss(rvar(x), 1.0), Value::real(5.0), rng);
    CHECK(w == doctest::Approx(std::log(npdf(5.0, 0, 2501))).epsilon(1e-12));
    auto post = as_gaussian(g.distribution_of(rvar(x)));
    CHECK(post.mean == doctest::Approx(5.0 * 2500.0 / 2501.0).epsilon(1e-14));
    CHECK(post.var == doctest::Approx(2500.0 / 2501.0).epsilon(1e-14));
  }

  TEST_CASE("distribution_of does not mutate the graph") {
    Graph g(true, counter());
    auto n = g.add_root(make_gaussian(3, 2));
    auto before = g.serialize(rvar(n));
    auto d = as_gaussian(g.distribution_of(rvar(n)));
    CHECK(d.mean == 3.0);
    CHECK(d.var == 2.0);
    CHECK(g.serialize(rvar(n)) == before);

    auto y = g.add_root(make_gaussian(0, 1));
    auto x = g.initialize(ds::GaussianOfAffine{1, 0, 1}, y);
    Value roots = Value::pair(rvar(x), rvar(y));
    auto snap = g.serialize(roots);
    auto dx = as_gaussian(g.distribution_of(rvar(x)));
    CHECK(g.serialize(roots) == snap);
    CHECK(x->status == Status::Initialized);
    CHECK(dx.mean == 0.0);
    CHECK(dx.var == 2.0);
    Rng rng(1);
    g.marginalize(x, rng);
    CHECK(as_gaussian(x->marginal).var == dx.var);

    auto c = g.distribution_of(Value::real(7.0));
    REQUIRE(c->get<Distribution::Dirac>());
    CHECK(c->get<Distribution::Dirac>()->value.as_float() == 7.0);
    auto z = g.add_root(make_gaussian(0, 1));
    CHECK(g.distribution_of(dist_app("exp", rvar(z))) == nullptr);
  }

  TEST_CASE("random operation sequences keep the graph invariants") {
    for (bool streaming : {true, false}) {
      for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        CAPTURE(streaming);
        CAPTURE(seed);
        Graph g(streaming, counter());
        Rng rng(seed), pick(seed * 7919);
        std::vector<NodePtr> nodes;
        for (int op = 0; op < 60; ++op) {
          double u = pick.uniform();
          std::vector<NodePtr> open;
          for (const auto& n : nodes)
            if (n->status != Status::Realized) open.push_back(n);
          if (open.empty() || u < 0.15) {
            nodes.push_back(g.assume(Value::dist(make_gaussian(pick.uniform(), 1.0 + pick.uniform())), rng));
          } else {
            const NodePtr& p = open[static_cast<std::size_t>(pick.uniform() * static_cast<double>(open.size()))];
            Value mu = gauss(Value::sym(sym_affine(0.5 + pick.uniform(), sym_rvar(p), pick.uniform())), 0.5);
            if (u < 0.6) {
              nodes.push_back(g.assume(mu, rng));
            } else if (u < 0.85) {
              g.observe(mu, Value::real(pick.uniform() * 4 - 2), rng);
            } else {
              g.value(rvar(p), rng);
            }
          }
          Tuple refs;
          for (const auto& n : nodes) refs.push_back(rvar(n));
          Value roots = Value::tuple(refs);
          // distribution_of is pure.
          auto snap = g.serialize(roots);
          for (const auto& n : nodes) g.distribution_of(rvar(n));
          REQUIRE(g.serialize(roots) == snap);
          for (const auto& n : nodes) {
            // Realized nodes hold no graph links in the streaming variant.
            if (streaming && n->status == Status::Realized) CHECK(!n->parent);
            if (streaming && n->status == Status::Initialized) CHECK(n->parent);
            if (streaming && n->status == Status::Marginalized) CHECK(!n->parent);
            // At most one marginalized child.
            int mc = 0;
            for (const auto& m : nodes)
              if (m != n && m->status == Status::Marginalized) {
                bool child = streaming ? n->mchild == m : std::find(n->children.begin(), n->children.end(), m.get()) != n->children.end();
                if (child) ++mc;
              }
            CHECK(mc <= 1);
            // Forward pointers form a simple chain.
            std::size_t len = 0;
            for (ds::Node* c = n->mchild.get(); c && len <= nodes.size(); c = c->mchild.get()) ++len;
            CHECK(len <= nodes.size());
          }
        }
      }
    }
  }

  TEST_CASE("deep copy isolates particles") {
    Graph g(true, counter());
    Rng rng(1);
    auto y = g.add_root(make_gaussian(0, 1));
    auto x = g.initialize(ds::GaussianOfAffine{1, 0, 1}, y);
    Value state = Value::pair(rvar(x), Value::real(1.0)), copy;
    auto h = g.deep_copy(state, copy);
    CHECK(h->serialize(copy) == g.serialize(state));
    auto cx = copy.at(0).as_sym()->node;
    CHECK(cx != x);
    h->value(copy.at(0), rng);
    CHECK(x->status == Status::Initialized);
    CHECK(cx->status == Status::Realized);
  }

  TEST_CASE("live counter tracks creation and reclamation") {
    auto live = counter();
    {
      Graph g(true, live);
      CHECK(live->load() == 0);
      auto a = g.add_root(make_gaussian(0, 1));
      CHECK(live->load() == 1);
    }
    CHECK(live->load() == 0);
  }

  TEST_CASE("live node goldens on Kalman") {
    RunConfig c;
    c.model = "kalman-1d";
    c.inference = "sds";
    c.particles = 1;
    c.steps = 50;
    c.mem_stats = true;
    auto r = run(c);
    CHECK(r.rows[0].live_nodes == 2);
    for (const auto& row : r.rows) CHECK(row.live_nodes == 2);
    c.inference = "ds";
    auto n = run(c);
    for (const auto& row : n.rows) CHECK(row.live_nodes >= row.step + 1);
    c.inference = "bds";
    auto b = run(c);
    for (const auto& row : b.rows) CHECK(row.live_nodes == 0);
  }

  TEST_CASE("exact posteriors with one particle") {
    RunConfig c;
    c.model = "beta-bernoulli";
    c.inference = "sds";
    c.particles = 1;
    c.steps = 5;
    c.params["p"] = "1";
    auto r = run(c);
    for (const auto& row : r.rows) {
      double t = static_cast<double>(row.step) + 1;
      CHECK(row.mean[0] == doctest::Approx((1 + t) / (2 + t)).epsilon(1e-12));
    }
  }

  TEST_CASE("schedule independence under SDS") {
    // The two blocks differ only in equation order; both are valid schedules.
    std::string a =
        "let proba m (y, c) = (x, p) where\n"
        "  rec x = sample (gaussian ((0., 100.) -> (pre x, 1.)))\n"
        "  and () = observe (gaussian (x, 1.), y)\n"
        "  and init p = sample (beta (1., 1.))\n"
        "  and () = observe (bernoulli p, c)\n"
        "let node main (y, c) = infer 1 m (y, c)\n";
    std::string b =
        "let proba m (y, c) = (x, p) where\n"
        "  rec init p = sample (beta (1., 1.))\n"
        "  and () = observe (bernoulli p, c)\n"
        "  and x = sample (gaussian ((0., 100.) -> (pre x, 1.)))\n"
        "  and () = observe (gaussian (x, 1.), y)\n"
        "let node main (y, c) = infer 1 m (y, c)\n";
    auto pa = compile_source(a), pb = compile_source(b);
    EngineConfig cfg;
    cfg.method = "sds";
    cfg.key = 3;
    Effects fa(cfg), fb(cfg);
    Value sa = copy_cells(pa.at("main").init), sb = copy_cells(pb.at("main").init);
    Rng in(4);
    for (int t = 0; t < 20; ++t) {
      Value x = Value::pair(Value::real(in.uniform() * 10), Value::boolean(in.uniform() < 0.3));
      Value oa = step_node(pa, pa.index("main"), sa, x, fa);
      Value ob = step_node(pb, pb.index("main"), sb, x, fb);
      CHECK(describe(*oa.as_dist()) == describe(*ob.as_dist()));
    }
  }

  TEST_CASE("eval realizes a delayed value") {
    std::string src =
        "let proba m () = (x, v) where\n"
        "  rec x = sample (gaussian (0., 1.))\n"
        "  and v = eval (x)\n"
        "let node main () = infer 1 m ()\n";
    RunConfig c;
    c.inference = "sds";
    c.particles = 1;
    c.steps = 3;
    auto r = run_source_text(src, c);
    for (const auto& row : r.rows) {
      REQUIRE(row.mean.size() == 2);
      CHECK(row.var[0] == 0.0);
      CHECK(row.mean[0] == row.mean[1]);
    }
  }

  TEST_CASE("fallback agrees with the particle filter") {
    std::string src =
        "let proba m (y) = x where\n"
        "  rec init x = sample (gaussian (0., 1.))\n"
        "  and z = sample (gaussian (x *. x, 1.))\n"
        "  and () = observe (gaussian (z, 4.), y)\n"
        "let node main (y) = infer 1 m (y)\n";
    std::vector<Value> ins{Value::real(0.5), Value::real(1.5)};
    auto [mp, vp] = final_moments(src, ins, "pf", 10000, 11);
    for (const char* method : {"sds", "bds"}) {
      auto [m, v] = final_moments(src, ins, method, 10000, 12);
      CHECK(std::abs(mp - m) <= 4 * std::sqrt(2 * vp / 10000.0 + 2 * v / 10000.0));
    }
  }
}
