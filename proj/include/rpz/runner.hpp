#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rpz/bench.hpp"

namespace rpz {

struct RunConfig {
  std::string mode = "benchmark";  // benchmark | source
  std::string model;               // benchmark name or source path
  std::string inference = "pf";    // is | pf | ds | bds | sds
  long particles = 100;
  long steps = 0;  // 0: the benchmark default
  std::uint64_t seed = 0;
  std::string output;
  bool mem_stats = false;
  bool ess_resampling = false;
  bool latency = false;
  int threads = 1;
  Params params;  // benchmark parameter overrides
};

struct StepRow {
  long step = 0;
  double loss = 0.0;  // running loss; NaN in source mode
  std::vector<double> mean, var;
  double log_evidence = 0.0;
  long live_nodes = 0;
  long latency_ns = 0;
};

struct RunResult {
  std::vector<StepRow> rows;
  double final_loss = 0.0;
  long max_live_nodes = 0;
};

// Throws rpz::Error on invalid configuration or any pipeline failure.
void validate(const RunConfig& cfg);
RunResult run(const RunConfig& cfg);
// Runs a model given as source text; `main` takes `()` each step.
RunResult run_source_text(const std::string& source, const RunConfig& cfg);

std::string csv_header();
std::string to_csv(const RunResult& r, const RunConfig& cfg);

struct SweepRow {
  RunConfig config;
  std::uint64_t seed_first = 0, seed_last = 0;
  long runs = 0, failed = 0;
  double median = 0.0, p10 = 0.0, p90 = 0.0;
};

// Each config over seeds [s0, s1]; losses aggregated by nearest rank.
std::vector<SweepRow> sweep(const std::vector<RunConfig>& cfgs, std::uint64_t s0, std::uint64_t s1, int workers = 1);
std::string sweep_csv(const std::vector<SweepRow>& rows);

// Final losses of one config over seeds [s0, s1].
std::vector<double> seed_losses(RunConfig cfg, std::uint64_t s0, std::uint64_t s1, int workers = 1);

}  // namespace rpz
