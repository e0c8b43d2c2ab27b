#include <doctest.h>

#include <cmath>
#include <limits>
#include <map>

#include "rpz/compile.hpp"
#include "rpz/distribution.hpp"
#include "rpz/error.hpp"
#include "rpz/eval.hpp"
#include "rpz/inference.hpp"
#include "rpz/ops.hpp"
#include "rpz/runner.hpp"

using namespace rpz;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// `fun s -> (body, s)`
MPtr model_fn(MPtr body) { return m_fun(MPattern::named("s"), m_tuple({std::move(body), m_var("s")})); }

double run_importance(const MPtr& fn, Value state = Value::unit()) {
  CompiledProgram prog;
  Env env;
  Rng rng(1);
  double lw = 0.0;
  eval_importance(*fn, state, env, lw, rng, EngineConfig{}, prog);
  return lw;
}

// Outputs of `main` over inputs, under the given engine.
std::vector<Value> run_main(const std::string& src, const std::vector<Value>& inputs, EngineConfig cfg) {
  CompiledProgram prog = compile_source(src);
  int idx = prog.index("main");
  Value st = copy_cells(prog.decls[static_cast<std::size_t>(idx)].init);
  Effects fx(cfg);
  std::vector<Value> out;
  for (const auto& x : inputs) out.push_back(step_node(prog, idx, st, x, fx));
  return out;
}

double prob_of(const Distribution& d, const Value& v) {
  std::vector<std::pair<Value, double>> sup;
  REQUIRE(finite_support(d, sup));
  for (const auto& [x, p] : sup)
    if (value_equal(x, v)) return p;
  return 0.0;
}

const char* kSensor =
    "let proba sensor () = x where\n"
    "  rec x = sample (bernoulli 0.5)\n"
    "  and () = observe (bernoulli (if x then 0.9 else 0.1), true)\n";

const char* kHmm =
    "let proba hmm (y) = x where\n"
    "  rec x = sample (bernoulli (0.5 -> (if pre x then 0.8 else 0.3)))\n"
    "  and () = observe (bernoulli (if x then 0.9 else 0.2), y)\n";

}  // namespace

TEST_SUITE("inference") {
  TEST_CASE("importance weights") {
    auto obs = m_observe(m_const(Value::dist(make_bernoulli(0.5))), m_const(Value::boolean(true)));
    CHECK(run_importance(model_fn(obs)) == doctest::Approx(std::log(0.5)));
    CHECK(run_importance(model_fn(m_factor(m_const(Value::real(-1.0))))) == -1.0);
    CHECK(run_importance(model_fn(m_op(find_op("+"), m_tuple({m_const(Value::real(1)), m_const(Value::real(2))})))) ==
          0.0);
    // Sampling leaves the weight unchanged.
    CHECK(run_importance(model_fn(m_sample(m_const(Value::dist(make_gaussian(0, 1)))))) == 0.0);
  }

  TEST_CASE("weights add along let") {
    auto d1 = m_observe(m_const(Value::dist(make_gaussian(0, 1))), m_const(Value::real(0.5)));
    auto d2 = m_factor(m_const(Value::real(-0.25)));
    auto let = m_let(MPattern::wild(), d1, d2);
    double w = run_importance(model_fn(let));
    CHECK(w == doctest::Approx(log_pdf(*make_gaussian(0, 1), Value::real(0.5)) - 0.25).epsilon(1e-15));
  }

  TEST_CASE("observe on a density-less distribution fails") {
    auto obs = m_observe(m_const(Value::dist(make_dirac(Value::real(1.0)))), m_const(Value::real(1.0)));
    CHECK_THROWS_AS(run_importance(model_fn(obs)), Error);
  }

  TEST_CASE("systematic resampling examples") {
    std::vector<double> eq(5, 0.0);
    auto a = systematic_resample(eq, 0.37);
    CHECK(a == std::vector<std::size_t>{0, 1, 2, 3, 4});
    auto b = systematic_resample({kNegInf, 0.0}, 0.5);
    CHECK(b == std::vector<std::size_t>{1, 1});
    CHECK_THROWS_AS(systematic_resample({kNegInf, kNegInf}, 0.5), Error);
    auto c = systematic_resample({std::log(1.0), std::log(3.0)}, 0.1);
    CHECK(c == std::vector<std::size_t>{0, 1});
    auto d = systematic_resample({std::log(1.0), std::log(3.0)}, 0.6);
    CHECK(d == std::vector<std::size_t>{1, 1});
  }

  TEST_CASE("resampling copies states and resets weights") {
    std::vector<Particle> cloud{{Value::real(1), 0.0}, {Value::real(2), 0.0}, {Value::real(3), 0.0}};
    int dups = 0;
    auto out = select_particles(cloud, {0, 2, 2}, [&](const Particle& p) {
      ++dups;
      return p;
    });
    REQUIRE(out.size() == 3);
    CHECK(dups == 1);
    CHECK(out[0].state.as_float() == 1);
    CHECK(out[1].state.as_float() == 3);
    CHECK(out[2].state.as_float() == 3);
  }

  TEST_CASE("resampling preserves weighted means") {
    // Weighted mean of x_i under weights w_i, against the mean after
    // resampling, over 1000 repetitions.
    std::vector<double> xs, lw;
    Rng g(3);
    for (int i = 0; i < 50; ++i) {
      xs.push_back(g.uniform() * 10);
      lw.push_back(std::log(g.uniform() + 0.01));
    }
    auto w = normalized_weights(lw);
    double target = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) target += w[i] * xs[i];
    std::vector<double> means;
    Rng u(4);
    for (int r = 0; r < 1000; ++r) {
      double m = 0.0;
      for (auto a : systematic_resample(lw, u.uniform())) m += xs[a];
      means.push_back(m / static_cast<double>(xs.size()));
    }
    double mm = 0.0, vv = 0.0;
    for (double m : means) mm += m;
    mm /= 1000.0;
    for (double m : means) vv += (m - mm) * (m - mm);
    double se = std::sqrt(vv / 999.0 / 1000.0);
    CHECK(std::abs(mm - target) <= 4 * se + 1e-12);
  }

  TEST_CASE("normalized weights and ESS") {
    auto w = normalized_weights({0.0, std::log(3.0)});
    CHECK(w[0] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(w[0] + w[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(effective_sample_size({0.0, 0.0, 0.0, 0.0}) == doctest::Approx(4.0));
    CHECK(effective_sample_size({0.0, kNegInf, kNegInf}) == doctest::Approx(1.0));
  }

  TEST_CASE("pf step with one particle returns a Dirac") {
    auto fn = m_fun(MPattern::named("s"), m_tuple({m_sample(m_const(Value::dist(make_gaussian(0, 1)))), m_var("s")}));
    std::vector<Particle> cloud{{Value::unit(), 0.0}};
    CompiledProgram prog;
    Env env;
    double ev = 0.0;
    Value r = pf_infer_step(*fn, cloud, env, prog, EngineConfig{}, 0, true, ev);
    REQUIRE(r.is_dist());
    CHECK(r.as_dist()->get<Distribution::Dirac>() != nullptr);
  }

  TEST_CASE("pf step weights results before resampling") {
    // Each particle factors by its own state value and returns it.
    auto fn = m_fun(MPattern::named("s"), m_let(MPattern::wild(), m_factor(m_var("s")), m_tuple({m_var("s"), m_var("s")})));
    std::vector<Particle> cloud{{Value::real(0.0), 0.0}, {Value::real(std::log(3.0)), 0.0}};
    CompiledProgram prog;
    Env env;
    double ev = 0.0;
    Value r = pf_infer_step(*fn, cloud, env, prog, EngineConfig{}, 0, false, ev);
    CHECK(prob_of(*r.as_dist(), Value::real(0.0)) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(prob_of(*r.as_dist(), Value::real(std::log(3.0))) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(ev == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }

  TEST_CASE("pf on Beta-Bernoulli after two true observations") {
    std::string src =
        "let proba coin (yobs) = xt where\n"
        "  rec init xt = sample (beta (1., 1.))\n"
        "  and () = observe (bernoulli xt, yobs)\n"
        "let node main (y) = infer 10000 coin (y)\n";
    EngineConfig cfg;
    cfg.key = 17;
    auto out = run_main(src, {Value::boolean(true), Value::boolean(true)}, cfg);
    CHECK(std::abs(mean(*out[1].as_dist()).as_float() - 0.75) <= 0.02);
  }

  TEST_CASE("enumeration of a two-path model") {
    auto prog = compile_source(kSensor);
    auto d = exhaustive_enum(prog, "sensor", {Value::unit()});
    CHECK(prob_of(*d[0], Value::boolean(true)) == doctest::Approx(0.9).epsilon(1e-15));
  }

  TEST_CASE("enumeration of a deterministic model is a Dirac") {
    auto prog = compile_source("let proba m (x) = x + 1\n");
    auto d = exhaustive_enum(prog, "m", {Value::integer(1), Value::integer(5)});
    CHECK(d[1]->get<Distribution::Dirac>() != nullptr);
    CHECK(mean(*d[1]).as_float() == 6.0);
  }

  TEST_CASE("enumeration matches the forward algorithm") {
    auto prog = compile_source(kHmm);
    std::vector<bool> ys{true, false, true};
    std::vector<Value> ins;
    for (bool y : ys) ins.push_back(Value::boolean(y));
    auto d = exhaustive_enum(prog, "hmm", ins);
    // Forward recursion over the two hidden states.
    auto lik = [](bool x, bool y) { return y ? (x ? 0.9 : 0.2) : (x ? 0.1 : 0.8); };
    double alpha_t = 0.5 * lik(true, ys[0]), alpha_f = 0.5 * lik(false, ys[0]);
    for (std::size_t t = 0;; ++t) {
      double z = alpha_t + alpha_f;
      CHECK(prob_of(*d[t], Value::boolean(true)) == doctest::Approx(alpha_t / z).epsilon(1e-12));
      if (t + 1 == ys.size()) break;
      double pt = (alpha_t * 0.8 + alpha_f * 0.3) / z;
      alpha_t = pt * lik(true, ys[t + 1]);
      alpha_f = (1 - pt) * lik(false, ys[t + 1]);
    }
  }

  TEST_CASE("enumeration errors") {
    auto cont = compile_source("let proba m () = sample (gaussian (0., 1.))\n");
    CHECK_THROWS_AS(exhaustive_enum(cont, "m", {Value::unit()}), Error);
    auto prog = compile_source(kHmm);
    try {
      exhaustive_enum(prog, "hmm", std::vector<Value>(4, Value::boolean(true)), 4);
      FAIL("budget not enforced");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Budget);
    }
  }

  TEST_CASE("pf matches enumeration within four standard errors") {
    auto prog = compile_source(std::string(kHmm) + "let node main (y) = infer 10000 hmm (y)\n");
    std::vector<Value> ins{Value::boolean(true), Value::boolean(false), Value::boolean(false)};
    auto exact = exhaustive_enum(prog, "hmm", ins);
    EngineConfig cfg;
    cfg.key = 99;
    auto out = run_main(std::string(kHmm) + "let node main (y) = infer 10000 hmm (y)\n", ins, cfg);
    for (std::size_t t = 0; t < ins.size(); ++t) {
      double p = prob_of(*exact[t], Value::boolean(true));
      double q = prob_of(*out[t].as_dist(), Value::boolean(true));
      CHECK(std::abs(p - q) <= 4 * std::sqrt(p * (1 - p) / 1e4));
    }
  }

  TEST_CASE("results never depend on later inputs") {
    std::string src = std::string(kHmm) + "let node main (y) = infer 200 hmm (y)\n";
    std::vector<Value> a, b;
    for (int i = 0; i < 10; ++i) {
      a.push_back(Value::boolean(i % 3 == 0));
      b.push_back(Value::boolean(i < 5 ? i % 3 == 0 : i % 2 == 0));
    }
    EngineConfig cfg;
    cfg.key = 5;
    auto ra = run_main(src, a, cfg), rb = run_main(src, b, cfg);
    for (int t = 0; t < 5; ++t) CHECK(describe(*ra[t].as_dist()) == describe(*rb[t].as_dist()));
  }

  TEST_CASE("particle parallelism is bit-reproducible") {
    for (const char* method : {"pf", "sds", "ds", "bds"}) {
      RunConfig c;
      c.model = "outlier";
      c.inference = method;
      c.particles = 64;
      c.steps = 30;
      c.seed = 3;
      auto a = to_csv(run(c), c);
      c.threads = 4;
      CHECK(to_csv(run(c), c) == a);
    }
  }

  TEST_CASE("ess mode resamples less often") {
    RunConfig c;
    c.model = "kalman-1d";
    c.particles = 100;
    c.steps = 50;
    c.seed = 2;
    auto a = run(c);
    c.ess_resampling = true;
    auto b = run(c);
    CHECK(std::isfinite(b.final_loss));
    CHECK(to_csv(a, c) != to_csv(b, c));
  }

  TEST_CASE("importance sampling never resets weights") {
    RunConfig c;
    c.model = "beta-bernoulli";
    c.inference = "is";
    c.particles = 50;
    c.steps = 30;
    c.seed = 1;
    auto r = run(c);
    CHECK(r.rows.size() == 30);
    CHECK(std::isfinite(r.final_loss));
  }
}
