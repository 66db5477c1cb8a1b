#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace hyperwave {

struct DataConfig {
  std::string interactions;
  double val_ratio = 0.1;
  double test_ratio = 0.2;
};

struct ModelConfig {
  int dim = 32;
};

struct HdnnConfig {
  bool enabled = true;
  int layers = 3;
};

struct WaveletConfig {
  bool enabled = true;
  int layers = 3;
  double scale = 1.0;
  int cheb_order = 30;
  std::string combine = "add";  // add | concat
  bool shared_lambda = false;
};

struct SpectralConfig {
  int max_exact_n = 5000;
};

struct FusionConfig {
  std::string late = "mean";  // mean | learned_scalar
};

struct TextConfig {
  bool enabled = true;
  std::string path_users;
  std::string path_items;
};

struct TrainSection {
  double lr = 1e-3;
  int epochs = 100;
  int batch_size = 2048;
  int patience = 10;
  double lambda_ssl = 0.1;
  double lambda_reg = 1e-4;
  double tau = 0.2;
};

struct EvalSection {
  std::vector<int> ks = {10, 20, 40};
};

struct RunConfig {
  DataConfig data;
  ModelConfig model;
  HdnnConfig hdnn;
  WaveletConfig wavelet;
  SpectralConfig spectral;
  FusionConfig fusion;
  TextConfig text;
  TrainSection train;
  EvalSection eval;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::string output_dir = "out";

  void validate() const;  // throws ConfigError
};

// Parses a config document, rejecting unknown keys at every level and
// applying defaults for absent ones. validate() is called on the result.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

// Fully resolved echo of the configuration (every key present).
nlohmann::json config_to_json(const RunConfig& cfg);

}  // namespace hyperwave
