#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hyperwave/config.hpp"
#include "hyperwave/data.hpp"
#include "hyperwave/eval.hpp"
#include "hyperwave/model.hpp"
#include "hyperwave/rng.hpp"

namespace hyperwave {

struct BprBatch {
  std::vector<int> users;
  std::vector<int> pos;
  std::vector<int> neg;

  int size() const { return static_cast<int>(users.size()); }
};

// Uniform sampling over train interactions with rejection-sampled negatives.
// Users interacting with every item are excluded up front (with a warning to
// stderr the first time).
class BprSampler {
 public:
  BprSampler(const InteractionGraph& train);

  BprBatch sample(int batch_size, Rng& rng) const;
  int n_positives() const { return static_cast<int>(pool_.size()); }

 private:
  int n_items_ = 0;
  std::vector<Interaction> pool_;                // usable positives
  std::vector<std::vector<int>> items_of_user_;  // ascending, for membership tests
};

// Per-tensor Adam moments, aligned with ParameterSet::for_each order.
struct AdamState {
  std::vector<std::string> names;
  std::vector<Mat> m;
  std::vector<Mat> v;
  long t = 0;
};

AdamState init_adam(const ParameterSet& params);

// Standard bias-corrected Adam. Tensors missing from `grads` are treated as
// zero-gradient (skipped entirely, moments untouched). Non-finite gradients
// raise NumericError.
void adam_step(ParameterSet& params, const std::map<std::string, Mat>& grads,
               AdamState& state, const TrainSection& cfg);

struct HistoryRow {
  int epoch = 0;
  double bpr = 0.0;
  double ssl = 0.0;
  double reg = 0.0;
  double val_ndcg20 = 0.0;
};

struct TrainResult {
  ParameterSet params;  // best-validation parameters
  int best_epoch = -1;  // -1 when training never improved / epochs == 0
  double best_val_ndcg20 = 0.0;
  std::vector<HistoryRow> history;
  ModelSpec spec;
};

// Full training loop: epochs of BPR + cross-view contrastive batches with
// Adam, validation NDCG@20 each epoch, early stopping after cfg.train.patience
// non-improving epochs. Deterministic per (cfg, seed).
TrainResult train_model(const RunConfig& cfg, const ModelSpec& spec,
                        const SplitBundle& split, const ModelResources& res,
                        std::uint64_t seed);

// Matrix-factorization comparator: same trainer, bare embeddings, no
// contrastive term.
TrainResult train_mf_bpr(const RunConfig& cfg, const SplitBundle& split,
                         std::uint64_t seed);

// Versioned binary checkpoint: named float64 matrices plus the resolved
// config document. Byte layout documented in docs/checkpoint_format.md.
void save_checkpoint(const std::string& path, const ParameterSet& params,
                     const RunConfig& cfg, std::uint64_t seed);

struct Checkpoint {
  ParameterSet params;
  RunConfig cfg;
  std::uint64_t seed = 0;
};

Checkpoint load_checkpoint(const std::string& path);

void write_history_csv(const std::string& path, const std::vector<HistoryRow>& rows);
void write_report_csv(const std::string& path, const std::vector<MetricRow>& rows);

}  // namespace hyperwave
