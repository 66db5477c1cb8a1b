#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hyperwave/config.hpp"
#include "hyperwave/eval.hpp"
#include "hyperwave/train.hpp"

namespace hyperwave {

struct SeedRun {
  std::uint64_t seed = 0;
  TrainResult train;
  std::vector<MetricRow> report;  // val + test rows
};

struct TrainingOutcome {
  std::vector<SeedRun> runs;
  std::vector<MetricRow> all_rows;
};

// Multi-seed training: per seed writes checkpoint_seed<S>.bin,
// history_seed<S>.csv, report_seed<S>.csv under cfg.output_dir, plus
// summary.csv (means/stds across seeds) and config.json (resolved echo).
TrainingOutcome run_training(const RunConfig& cfg);

// Applies an ablation set {hdnn, wavelet, fusion, contrastive} to a config
// copy. Unknown names and disabling both encoders raise ConfigError.
RunConfig apply_disable(RunConfig cfg, const std::vector<std::string>& disable);

std::string variant_name(const std::vector<std::string>& disable);

struct AblationRun {
  std::string variant;
  std::uint64_t seed = 0;
  std::vector<MetricRow> test_rows;
};

struct AblationOutcome {
  std::vector<AblationRun> runs;

  // Mean test-split metric over seeds for one variant; throws if absent.
  double mean_ndcg(const std::string& variant, int k) const;
};

// Trains the full model plus one jointly-ablated variant per entry of
// `variant_sets`, sharing the per-seed split/operators/bases, and writes
// ablation.csv (variant,split,k,recall,ndcg,n_users,seed) to cfg.output_dir.
AblationOutcome run_ablation(const RunConfig& cfg,
                             const std::vector<std::vector<std::string>>& variant_sets);

struct SweepPoint {
  std::string param;
  double value = 0.0;
  std::uint64_t seed = 0;
  std::vector<MetricRow> test_rows;
};

// Parses "name=a..b" (inclusive integer range) or "name=v1,v2,..." and trains
// one model per value per seed; writes sweep.csv
// (param,value,split,k,recall,ndcg,n_users,seed) to cfg.output_dir.
std::vector<SweepPoint> run_sweep(const RunConfig& cfg, const std::string& param_spec);

}  // namespace hyperwave
