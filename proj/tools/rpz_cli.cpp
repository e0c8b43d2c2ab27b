#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "rpz/error.hpp"
#include "rpz/runner.hpp"

namespace {

bool parse_seed_range(const std::string& s, std::uint64_t& a, std::uint64_t& b) {
  auto dots = s.find("..");
  if (dots == std::string::npos) return false;
  try {
    a = std::stoull(s.substr(0, dots));
    b = std::stoull(s.substr(dots + 2));
  } catch (const std::exception&) {
    return false;
  }
  return a <= b;
}

int emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return 0;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot write " << path << "\n";
    return 1;
  }
  out << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Run a streaming probabilistic model or benchmark and write per-step CSV."};
  rpz::RunConfig cfg;
  std::string benchmark, source, seeds;
  std::vector<std::string> params;
  auto* b = app.add_option("--benchmark", benchmark, "Benchmark name")
                ->check(CLI::IsMember(rpz::benchmark_names()));
  auto* s = app.add_option("--source", source, "Model source file defining a `main` node")->check(CLI::ExistingFile);
  b->excludes(s);
  app.add_option("--inference", cfg.inference, "Inference method")->check(CLI::IsMember({"is", "pf", "ds", "bds", "sds"}));
  app.add_option("--particles", cfg.particles, "Particles per infer site")->check(CLI::PositiveNumber);
  app.add_option("--steps", cfg.steps, "Number of steps (benchmark default when omitted)")->check(CLI::PositiveNumber);
  app.add_option("--seed", cfg.seed, "Run seed");
  app.add_option("--seeds", seeds, "Seed range S0..S1; writes quantiles of the final loss");
  app.add_option("--output", cfg.output, "Output CSV file (stdout when omitted)");
  app.add_option("--threads", cfg.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--param", params, "Benchmark parameter override key=value");
  app.add_flag("--mem-stats", cfg.mem_stats, "Fill the live_nodes column");
  app.add_flag("--ess-resampling", cfg.ess_resampling, "Resample only below N/2 effective particles");
  app.add_flag("--latency", cfg.latency, "Fill the latency_ns column");

  try {
    app.parse(argc, argv);
    if (benchmark.empty() && source.empty()) throw CLI::ValidationError("one of --benchmark or --source is required");
    std::uint64_t s0 = 0, s1 = 0;
    if (!seeds.empty() && !parse_seed_range(seeds, s0, s1)) throw CLI::ValidationError("--seeds expects S0..S1");
    for (const auto& p : params) {
      auto eq = p.find('=');
      if (eq == std::string::npos) throw CLI::ValidationError("--param expects key=value");
      cfg.params[p.substr(0, eq)] = p.substr(eq + 1);
    }
    cfg.mode = source.empty() ? "benchmark" : "source";
    cfg.model = source.empty() ? benchmark : source;
    if (cfg.mode == "source" && cfg.steps == 0) cfg.steps = 100;

    if (!seeds.empty()) {
      auto rows = rpz::sweep({cfg}, s0, s1, cfg.threads);
      return emit(rpz::sweep_csv(rows), cfg.output);
    }
    auto res = rpz::run(cfg);
    return emit(rpz::to_csv(res, cfg), cfg.output);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  } catch (const rpz::Error& e) {
    std::cerr << e.what() << "\n";
    return e.kind() == rpz::ErrorKind::Config ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
