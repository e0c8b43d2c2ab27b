#include "rpz/runner.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "rpz/compile.hpp"
#include "rpz/distribution.hpp"
#include "rpz/error.hpp"
#include "rpz/eval.hpp"
#include "rpz/inference.hpp"

namespace rpz {

namespace {

constexpr std::uint64_t kInferTag = 0x696e666572ULL;

void summarize(const Value& v, std::vector<double>& mean, std::vector<double>& var) {
  switch (v.kind()) {
    case Value::Kind::Dist: {
      auto m = mean_flat(*v.as_dist());
      auto s = var_flat(*v.as_dist());
      mean.insert(mean.end(), m.begin(), m.end());
      var.insert(var.end(), s.begin(), s.end());
      return;
    }
    case Value::Kind::Tuple:
      for (const auto& x : v.as_tuple()) summarize(x, mean, var);
      return;
    case Value::Kind::Bool:
    case Value::Kind::Int:
    case Value::Kind::Float:
    case Value::Kind::Vector:
    case Value::Kind::Matrix: {
      auto f = flatten(v);
      mean.insert(mean.end(), f.begin(), f.end());
      var.insert(var.end(), f.size(), 0.0);
      return;
    }
    default: return;
  }
}

EngineConfig engine_config(const RunConfig& cfg) {
  EngineConfig e;
  e.method = cfg.inference;
  e.default_particles = cfg.particles;
  e.particles_override = cfg.particles;
  e.key = mix_key(cfg.seed, kInferTag);
  e.ess_resampling = cfg.ess_resampling;
  e.threads = cfg.threads;
  return e;
}

// Drives `main` for `steps` steps; `input` and `score` come from the scenario
// in benchmark mode.
template <class In, class Score>
RunResult drive(const CompiledProgram& prog, const RunConfig& cfg, long steps, In input, Score score, bool cumulative) {
  int idx = prog.index("main");
  if (idx < 0) throw Error(ErrorKind::Name, "the program defines no main node");
  Value state = copy_cells(prog.decls[static_cast<std::size_t>(idx)].init);
  Effects fx(engine_config(cfg));
  RunResult res;
  res.rows.reserve(static_cast<std::size_t>(steps));
  double total = 0.0;
  for (long t = 0; t < steps; ++t) {
    Value in = input(t);
    fx.step_log_evidence = 0.0;
    fx.step_live_nodes = 0;
    auto t0 = std::chrono::steady_clock::now();
    Value out = step_node(prog, idx, state, in, fx);
    auto t1 = std::chrono::steady_clock::now();
    StepRow row;
    row.step = t;
    double err = score(t, out);
    if (std::isnan(err)) {
      row.loss = err;
    } else {
      total += err;
      row.loss = cumulative ? total : total / static_cast<double>(t + 1);
    }
    summarize(out, row.mean, row.var);
    row.log_evidence = fx.step_log_evidence;
    row.live_nodes = static_cast<long>(fx.step_live_nodes);
    row.latency_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();
    res.max_live_nodes = std::max(res.max_live_nodes, row.live_nodes);
    res.rows.push_back(std::move(row));
  }
  res.final_loss = res.rows.empty() ? 0.0 : res.rows.back().loss;
  return res;
}

std::string join(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ";" : "") + format_double(xs[i]);
  return s;
}

}  // namespace

void validate(const RunConfig& cfg) {
  if (cfg.mode != "benchmark" && cfg.mode != "source") throw Error(ErrorKind::Config, "unknown mode " + cfg.mode);
  static const char* methods[] = {"is", "pf", "ds", "bds", "sds"};
  bool ok = false;
  for (const char* m : methods) ok = ok || cfg.inference == m;
  if (!ok) throw Error(ErrorKind::Config, "unknown inference method " + cfg.inference);
  if (cfg.particles < 1) throw Error(ErrorKind::Config, "particles must be at least 1");
  if (cfg.steps < 0 || (cfg.mode == "source" && cfg.steps < 1)) throw Error(ErrorKind::Config, "steps must be at least 1");
  if (cfg.threads < 1) throw Error(ErrorKind::Config, "threads must be at least 1");
}

RunResult run_source_text(const std::string& source, const RunConfig& cfg) {
  validate(cfg);
  register_bench_ops();
  CompiledProgram prog = compile_source(source);
  return drive(
      prog, cfg, cfg.steps, [](long) { return Value::unit(); },
      [](long, const Value&) { return std::numeric_limits<double>::quiet_NaN(); }, false);
}

RunResult run(const RunConfig& cfg) {
  validate(cfg);
  if (cfg.mode == "source") {
    std::ifstream in(cfg.model);
    if (!in) throw Error(ErrorKind::Config, "cannot read " + cfg.model);
    std::stringstream ss;
    ss << in.rdbuf();
    return run_source_text(ss.str(), cfg);
  }
  BenchmarkSpec spec = build_benchmark(cfg.model, cfg.params);
  long steps = cfg.steps > 0 ? cfg.steps : spec.default_steps;
  CompiledProgram prog = compile_source(spec.source);
  auto sc = spec.make(cfg.seed, spec.params);
  return drive(
      prog, cfg, steps, [&](long t) { return sc->input(t); },
      [&](long t, const Value& out) { return sc->step_error(t, out); }, sc->cumulative());
}

std::string csv_header() { return "step,loss,mean,var,log_evidence,live_nodes,latency_ns\n"; }

std::string to_csv(const RunResult& r, const RunConfig& cfg) {
  std::string s = csv_header();
  for (const auto& row : r.rows) {
    s += std::to_string(row.step) + ",";
    if (!std::isnan(row.loss)) s += format_double(row.loss);
    s += "," + join(row.mean) + "," + join(row.var) + "," + format_double(row.log_evidence) + ",";
    if (cfg.mem_stats) s += std::to_string(row.live_nodes);
    s += ",";
    if (cfg.latency) s += std::to_string(row.latency_ns);
    s += "\n";
  }
  return s;
}

std::vector<double> seed_losses(RunConfig cfg, std::uint64_t s0, std::uint64_t s1, int workers) {
  if (s1 < s0) throw Error(ErrorKind::Config, "empty seed range");
  std::size_t n = static_cast<std::size_t>(s1 - s0 + 1);
  std::vector<double> out(n, std::numeric_limits<double>::quiet_NaN());
  validate(cfg);
  if (cfg.mode == "benchmark") build_benchmark(cfg.model, cfg.params);
  parallel_for_particles(workers, n, [&](std::size_t i) {
    RunConfig c = cfg;
    c.seed = s0 + i;
    if (workers > 1) c.threads = 1;
    try {
      out[i] = run(c).final_loss;
    } catch (const Error&) {
      // Reported as a failed run by the caller.
    }
  });
  return out;
}

std::vector<SweepRow> sweep(const std::vector<RunConfig>& cfgs, std::uint64_t s0, std::uint64_t s1, int workers) {
  if (cfgs.empty()) throw Error(ErrorKind::Config, "sweep needs at least one config");
  std::vector<SweepRow> rows;
  for (const auto& cfg : cfgs) {
    SweepRow r;
    r.config = cfg;
    r.seed_first = s0;
    r.seed_last = s1;
    std::vector<double> ok;
    for (double l : seed_losses(cfg, s0, s1, workers)) {
      ++r.runs;
      if (std::isnan(l)) ++r.failed;
      else ok.push_back(l);
    }
    if (ok.empty()) {
      r.median = r.p10 = r.p90 = std::numeric_limits<double>::quiet_NaN();
    } else {
      r.median = quantile(ok, 0.5);
      r.p10 = quantile(ok, 0.1);
      r.p90 = quantile(ok, 0.9);
    }
    rows.push_back(r);
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string s = "model,inference,particles,steps,seed_first,seed_last,runs,failed,median,p10,p90\n";
  for (const auto& r : rows) {
    s += r.config.model + "," + r.config.inference + "," + std::to_string(r.config.particles) + "," +
         std::to_string(r.config.steps) + "," + std::to_string(r.seed_first) + "," + std::to_string(r.seed_last) + "," +
         std::to_string(r.runs) + "," + std::to_string(r.failed) + "," + format_double(r.median) + "," +
         format_double(r.p10) + "," + format_double(r.p90) + "\n";
  }
  return s;
}

}  // namespace rpz
