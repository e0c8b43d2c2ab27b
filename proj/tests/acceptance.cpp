// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Tolerances and time budgets are pinned below.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "rpz/bench.hpp"
#include "rpz/compile.hpp"
#include "rpz/distribution.hpp"
#include "rpz/error.hpp"
#include "rpz/eval.hpp"
#include "rpz/inference.hpp"
#include "rpz/interp.hpp"
#include "rpz/runner.hpp"

using namespace rpz;

namespace {

constexpr double kCoinTol = 1e-12;
constexpr double kKalmanRelTol = 1e-9;
constexpr double kPfSlack = 1.05;
constexpr long kSdsLiveGolden = 2;
constexpr double kLinearFraction = 0.9;
constexpr long kBoundedChainLimit = 8;
constexpr double kStdErrors = 4.0;
constexpr double kMedianGap = 0.20;
constexpr int kSeeds = 50;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

RunConfig bench_cfg(const std::string& model, const std::string& method, long particles, long steps) {
  RunConfig c;
  c.model = model;
  c.inference = method;
  c.particles = particles;
  c.steps = steps;
  return c;
}

double median_loss(const RunConfig& c) { return quantile(seed_losses(c, 0, kSeeds - 1), 0.5); }

// Live node count of each step of `main` under one-particle `method`.
std::vector<long> live_trace(const std::string& src, const std::vector<Value>& inputs, const std::string& method) {
  CompiledProgram prog = compile_source(src);
  int idx = prog.index("main");
  Value st = copy_cells(prog.decls[static_cast<std::size_t>(idx)].init);
  EngineConfig cfg;
  cfg.method = method;
  cfg.particles_override = 1;
  cfg.key = 1;
  Effects fx(cfg);
  std::vector<long> out;
  for (const auto& x : inputs) {
    fx.step_live_nodes = 0;
    step_node(prog, idx, st, x, fx);
    out.push_back(static_cast<long>(fx.step_live_nodes));
  }
  return out;
}

bool grows_linearly(const std::vector<long>& live) {
  for (std::size_t t = 0; t < live.size(); ++t)
    if (static_cast<double>(live[t]) < kLinearFraction * static_cast<double>(t + 1)) return false;
  return true;
}

Outcome criterion1() {
  RunConfig c = bench_cfg("beta-bernoulli", "sds", 1, 100);
  c.params["p"] = "1";
  auto r = run(c);
  double worst = 0.0;
  for (std::size_t t = 0; t < r.rows.size(); ++t) {
    double expect = (static_cast<double>(t) + 2) / (static_cast<double>(t) + 3);
    worst = std::max(worst, std::abs(r.rows[t].mean.at(0) - expect));
  }
  return {r.rows.size() == 100 && worst <= kCoinTol, "max abs error " + fmt(worst)};
}

Outcome criterion2() {
  RunConfig c = bench_cfg("kalman-1d", "sds", 1, 500);
  c.seed = 7;
  auto r = run(c);
  auto b = build_benchmark("kalman-1d");
  auto sc = b.make(c.seed, b.params);
  std::vector<double> obs, truth;
  for (long t = 0; t < c.steps; ++t) {
    obs.push_back(sc->input(t).as_float());
    truth.push_back(sc->truth().as_float());
  }
  auto k = kalman_oracle(0.0, 2500.0, 1.0, 1.0, obs);
  double worst = 0.0, total = 0.0;
  for (std::size_t t = 0; t < obs.size(); ++t) {
    total += (k[t].mean - truth[t]) * (k[t].mean - truth[t]);
    worst = std::max({worst, rel_err(r.rows[t].mean.at(0), k[t].mean), rel_err(r.rows[t].var.at(0), k[t].var),
                      rel_err(r.rows[t].loss, total / static_cast<double>(t + 1))});
  }
  return {worst <= kKalmanRelTol, "max relative error " + fmt(worst)};
}

Outcome criterion3() {
  double sds = median_loss(bench_cfg("kalman-1d", "sds", 100, 0));
  double bds = median_loss(bench_cfg("kalman-1d", "bds", 100, 0));
  double pf = median_loss(bench_cfg("kalman-1d", "pf", 100, 0));
  bool ok = sds <= bds && bds <= kPfSlack * pf && sds < pf;
  return {ok, "median MSE sds " + fmt(sds) + ", bds " + fmt(bds) + ", pf " + fmt(pf)};
}

Outcome criterion4() {
  std::vector<double> m;
  std::string d = "median MSE";
  for (long n : {10L, 100L, 1000L}) {
    m.push_back(median_loss(bench_cfg("kalman-1d", "pf", n, 0)));
    d += " N=" + std::to_string(n) + " " + fmt(m.back());
  }
  bool ok = m[1] <= kPfSlack * m[0] && m[2] <= kPfSlack * m[1];
  return {ok, d};
}

Outcome criterion5() {
  RunConfig c = bench_cfg("kalman-1d", "sds", 1, 5000);
  c.mem_stats = true;
  auto sds = run(c);
  c.inference = "ds";
  auto naive = run(c);
  std::vector<long> live;
  for (const auto& row : naive.rows) live.push_back(row.live_nodes);
  bool ok = sds.max_live_nodes <= kSdsLiveGolden && grows_linearly(live);
  return {ok, "sds max live " + std::to_string(sds.max_live_nodes) + ", naive final live " +
                  std::to_string(live.back()) + " after " + std::to_string(live.size()) + " steps"};
}

Outcome criterion6() {
  const std::size_t steps = 2000;
  Rng rng(3);
  std::vector<Value> p1_in, p2_in;
  for (std::size_t t = 0; t < steps; ++t) {
    p1_in.push_back(Value::pair(Value::real(0.0), Value::real(rng.uniform() * 4 - 2)));
    p2_in.push_back(Value::real(0.0));
  }
  auto p1 = live_trace(chain_model_source("p1"), p1_in, "sds");
  auto p2 = live_trace(chain_model_source("p2"), p2_in, "sds");
  auto p2b = live_trace(chain_model_source("p2'"), p2_in, "sds");
  long p2b_max = 0;
  for (long n : p2b) p2b_max = std::max(p2b_max, n);
  bool ok = grows_linearly(p1) && grows_linearly(p2) && p2b_max <= kBoundedChainLimit;
  return {ok, "final live p1 " + std::to_string(p1.back()) + ", p2 " + std::to_string(p2.back()) + "; p2' max " +
                  std::to_string(p2b_max)};
}

std::vector<Value> compiled_outputs(const CompiledProgram& p, const std::vector<Value>& ins, Value* final_state) {
  int idx = p.index("main");
  Value st = copy_cells(p.decls[static_cast<std::size_t>(idx)].init);
  Effects fx;
  std::vector<Value> out;
  for (const auto& x : ins) out.push_back(step_node(p, idx, st, x, fx));
  *final_state = st;
  return out;
}

const testing::CorpusProgram* corpus_program(const std::string& name) {
  for (const auto& p : testing::corpus())
    if (p.name == name) return &p;
  return nullptr;
}

Outcome criterion7() {
  const auto& c = testing::corpus();
  const auto* integr = corpus_program("integr");
  const auto* pvi = corpus_program("present_vs_if");
  if (c.size() < 10 || !integr || !pvi) return {false, "corpus incomplete"};
  std::size_t mismatches = 0;
  for (const auto& prog : c) {
    auto p = compile_source(prog.source);
    for (std::uint64_t key = 1; key <= 3; ++key) {
      auto ins = testing::random_inputs(prog.input, 100, key);
      Value ref_state, st;
      auto ref = interp_coiter(p.source, "main", ins, &ref_state);
      auto got = compiled_outputs(p, ins, &st);
      bool same = value_equal(ref_state, st);
      for (std::size_t i = 0; i < ins.size(); ++i) same = same && value_equal(ref[i], got[i]);
      mismatches += !same;
    }
  }
  // Printed timelines.
  std::vector<Value> iins;
  for (double d : {1.0, 2.0, 1.0, 0.0, -1.0, -1.0, 1.0}) iins.push_back(Value::pair(Value::real(0.0), Value::real(d)));
  Value st;
  auto io = compiled_outputs(compile_source(integr->source), iins, &st);
  const double iexp[] = {0.0, 0.2, 0.3, 0.3, 0.2, 0.1, 0.2};
  bool timelines = true;
  for (std::size_t i = 0; i < iins.size(); ++i) timelines = timelines && std::abs(io[i].as_float() - iexp[i]) < 1e-12;
  std::vector<Value> bins;
  for (int b : {1, 1, 0, 1, 0, 0, 1}) bins.push_back(Value::boolean(b != 0));
  auto po = compiled_outputs(compile_source(pvi->source), bins, &st);
  const long o1[] = {0, 1, 0, 2, 0, 0, 3}, o2[] = {0, 1, 0, 3, 0, 0, 6};
  for (std::size_t i = 0; i < bins.size(); ++i)
    timelines = timelines && po[i].at(0).as_int() == o1[i] && po[i].at(1).as_int() == o2[i];
  return {mismatches == 0 && timelines, std::to_string(c.size()) + " programs, " + std::to_string(mismatches) +
                                            " mismatching runs, timelines " + (timelines ? "exact" : "differ")};
}

double prob_of(const Distribution& d, const Value& v) {
  std::vector<std::pair<Value, double>> sup;
  if (!finite_support(d, sup)) return std::nan("");
  for (const auto& [x, p] : sup)
    if (value_equal(x, v)) return p;
  return 0.0;
}

struct FiniteModel {
  std::string name, source;
  std::vector<Value> inputs;
};

Outcome criterion8() {
  std::vector<FiniteModel> models = {
      {"sensor",
       "let proba sensor () = x where\n"
       "  rec x = sample (bernoulli 0.5)\n"
       "  and () = observe (bernoulli (if x then 0.9 else 0.1), true)\n",
       {Value::unit()}},
      {"hmm",
       "let proba hmm (y) = x where\n"
       "  rec x = sample (bernoulli (0.5 -> (if pre x then 0.8 else 0.3)))\n"
       "  and () = observe (bernoulli (if x then 0.9 else 0.2), y)\n",
       {Value::boolean(true), Value::boolean(false), Value::boolean(false)}},
      {"alarm",
       "let proba alarm (y) = burglary where\n"
       "  rec init burglary = sample (bernoulli 0.2)\n"
       "  and quake = sample (bernoulli 0.3)\n"
       "  and p = if burglary then 0.9 else if quake then 0.6 else 0.05\n"
       "  and () = observe (bernoulli p, y)\n",
       {Value::boolean(true), Value::boolean(true), Value::boolean(false)}},
  };
  double worst = 0.0;
  bool ok = true;
  for (const auto& m : models) {
    std::string src = m.source + "let node main (y) = infer 10000 " + m.name + " (y)\n";
    auto prog = compile_source(src);
    auto exact = exhaustive_enum(prog, m.name, m.inputs);
    int idx = prog.index("main");
    Value st = copy_cells(prog.decls[static_cast<std::size_t>(idx)].init);
    EngineConfig cfg;
    cfg.key = 2024;
    Effects fx(cfg);
    for (std::size_t t = 0; t < m.inputs.size(); ++t) {
      Value out = step_node(prog, idx, st, m.inputs[t], fx);
      double p = prob_of(*exact[t], Value::boolean(true));
      double q = prob_of(*out.as_dist(), Value::boolean(true));
      double se = std::sqrt(p * (1 - p) / 1e4);
      double z = se > 0 ? std::abs(p - q) / se : (p == q ? 0.0 : INFINITY);
      worst = std::max(worst, z);
      ok = ok && z <= kStdErrors;
    }
  }
  // Streaming delayed sampling is exact on the conjugate coin model.
  Rng rng(8);
  std::vector<Value> ys;
  for (int t = 0; t < 200; ++t) ys.push_back(Value::boolean(rng.uniform() < 0.3));
  auto coin = compile_source(build_benchmark("beta-bernoulli").source);
  int idx = coin.index("main");
  Value st = copy_cells(coin.decls[static_cast<std::size_t>(idx)].init);
  EngineConfig cfg;
  cfg.method = "sds";
  cfg.particles_override = 1;
  Effects fx(cfg);
  double a = 1, b = 1, coin_err = 0.0;
  for (const auto& y : ys) {
    Value out = step_node(coin, idx, st, y, fx);
    (y.as_bool() ? a : b) += 1;
    coin_err = std::max(coin_err, std::abs(mean_flat(*out.as_dist()).at(0) - a / (a + b)));
  }
  ok = ok && coin_err <= kCoinTol;
  return {ok, std::to_string(models.size()) + " models, worst deviation " + fmt(worst) +
                  " standard errors; sds coin error " + fmt(coin_err)};
}

Outcome criterion9() {
  double bds = median_loss(bench_cfg("beta-bernoulli", "bds", 100, 0));
  double pf = median_loss(bench_cfg("beta-bernoulli", "pf", 100, 0));
  double obds = median_loss(bench_cfg("outlier", "bds", 100, 0));
  double opf = median_loss(bench_cfg("outlier", "pf", 100, 0));
  double gap = std::abs(bds - pf) / std::max(bds, pf);
  bool ok = gap < kMedianGap && obds <= opf;
  return {ok, "coin median bds " + fmt(bds) + ", pf " + fmt(pf) + " (gap " + fmt(gap) + "); outlier bds " +
                  fmt(obds) + ", pf " + fmt(opf)};
}

std::string cli_output(const std::string& args) {
  static int counter = 0;
  auto out = std::filesystem::temp_directory_path() /
             ("rpz_acceptance_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + ".csv");
  std::string cmd = std::string("\"") + RPZ_CLI_PATH + "\" " + args + " --output \"" + out.string() + "\"";
  int raw = std::system(cmd.c_str());
  if (!WIFEXITED(raw) || WEXITSTATUS(raw) != 0) throw Error(ErrorKind::Config, "cli failed: " + args);
  std::ifstream in(out, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  std::filesystem::remove(out);
  return ss.str();
}

Outcome criterion10() {
  const std::vector<std::string> runs = {
      "--benchmark kalman-1d --inference pf --particles 200 --steps 100 --seed 5",
      "--benchmark outlier --inference sds --particles 100 --steps 100 --seed 6 --mem-stats",
      "--benchmark beta-bernoulli --inference bds --particles 100 --steps 100 --seed 7",
      "--benchmark gaussian-gaussian --inference is --particles 100 --steps 50 --seed 8",
      "--benchmark slam --inference pf --particles 100 --steps 30 --seed 9 --ess-resampling",
      "--benchmark robot --inference sds --particles 1 --steps 50 --seed 10",
      "--benchmark kalman-1d --inference pf --particles 20 --steps 30 --seeds 0..9",
  };
  int same = 0;
  for (const auto& r : runs) same += cli_output(r + " --threads 1") == cli_output(r + " --threads 8");
  return {same == static_cast<int>(runs.size()),
          std::to_string(same) + "/" + std::to_string(runs.size()) + " configurations byte-identical"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    double budget_s;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria = {
      {1, 1, criterion1},    {2, 2, criterion2},   {3, 120, criterion3}, {4, 300, criterion4},
      {5, 10, criterion5},   {6, 10, criterion6},  {7, 5, criterion7},   {8, 60, criterion8},
      {9, 300, criterion9},  {10, 30, criterion10},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool in_time = secs <= c.budget_s;
    bool pass = o.pass && in_time;
    failed += !pass;
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.id << ": " << o.detail << " [" << fmt(secs) << " s of "
              << fmt(c.budget_s) << " s" << (in_time ? "" : ", over budget") << "]" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
