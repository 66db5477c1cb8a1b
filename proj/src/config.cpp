#include "hyperwave/config.hpp"

#include <fstream>
#include <set>
#include <string>

#include "hyperwave/types.hpp"

namespace hyperwave {
namespace {

using nlohmann::json;

// Rejects keys outside `allowed`, so typos fail loudly instead of silently
// falling back to defaults.
void check_keys(const json& j, const std::string& scope,
                const std::set<std::string>& allowed) {
  if (!j.is_object()) {
    throw ConfigError("config section '" + scope + "' must be an object");
  }
  for (const auto& item : j.items()) {
    if (allowed.find(item.key()) == allowed.end()) {
      throw ConfigError("unknown config key: " + scope +
                        (scope.empty() ? "" : ".") + item.key());
    }
  }
}

template <typename T>
void read_field(const json& j, const char* key, T& out, const std::string& scope) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for config key " + scope + "." + key + ": " +
                      e.what());
  }
}

}  // namespace

void RunConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw ConfigError(std::string(name) + " must be > 0");
  };
  if (model.dim < 1) throw ConfigError("model.dim must be >= 1");
  if (hdnn.layers < 1) throw ConfigError("hdnn.layers must be >= 1");
  if (wavelet.layers < 1) throw ConfigError("wavelet.layers must be >= 1");
  if (wavelet.cheb_order < 1) throw ConfigError("wavelet.cheb_order must be >= 1");
  positive(wavelet.scale, "wavelet.scale");
  if (wavelet.combine != "add" && wavelet.combine != "concat") {
    throw ConfigError("wavelet.combine must be 'add' or 'concat'");
  }
  if (spectral.max_exact_n < 1) throw ConfigError("spectral.max_exact_n must be >= 1");
  if (fusion.late != "mean" && fusion.late != "learned_scalar") {
    throw ConfigError("fusion.late must be 'mean' or 'learned_scalar'");
  }
  if (data.val_ratio < 0.0 || data.test_ratio < 0.0 ||
      data.val_ratio + data.test_ratio >= 1.0) {
    throw ConfigError("data.val_ratio/test_ratio must be >= 0 and sum below 1");
  }
  if (text.path_users.empty() != text.path_items.empty()) {
    throw ConfigError("text.path_users and text.path_items must be given together");
  }
  positive(train.lr, "train.lr");
  positive(train.tau, "train.tau");
  if (train.epochs < 0) throw ConfigError("train.epochs must be >= 0");
  if (train.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (train.patience < 1) throw ConfigError("train.patience must be >= 1");
  if (train.lambda_ssl < 0.0) throw ConfigError("train.lambda_ssl must be >= 0");
  if (train.lambda_reg < 0.0) throw ConfigError("train.lambda_reg must be >= 0");
  if (!hdnn.enabled && !wavelet.enabled) {
    throw ConfigError("at least one encoder (hdnn, wavelet) must be enabled");
  }
  if (eval.ks.empty()) throw ConfigError("eval.ks must be non-empty");
  for (int k : eval.ks) {
    if (k < 1) throw ConfigError("eval.ks entries must be >= 1");
  }
  if (seeds.empty()) throw ConfigError("seeds must be non-empty");
  if (output_dir.empty()) throw ConfigError("output_dir must be non-empty");
}

RunConfig parse_config(const json& j) {
  RunConfig cfg;
  check_keys(j, "", {"data", "model", "hdnn", "wavelet", "spectral", "fusion",
                     "text", "train", "eval", "seeds", "output_dir"});
  if (j.contains("data")) {
    const json& s = j.at("data");
    check_keys(s, "data", {"interactions", "val_ratio", "test_ratio"});
    read_field(s, "interactions", cfg.data.interactions, "data");
    read_field(s, "val_ratio", cfg.data.val_ratio, "data");
    read_field(s, "test_ratio", cfg.data.test_ratio, "data");
  }
  if (j.contains("model")) {
    const json& s = j.at("model");
    check_keys(s, "model", {"dim"});
    read_field(s, "dim", cfg.model.dim, "model");
  }
  if (j.contains("hdnn")) {
    const json& s = j.at("hdnn");
    check_keys(s, "hdnn", {"enabled", "layers"});
    read_field(s, "enabled", cfg.hdnn.enabled, "hdnn");
    read_field(s, "layers", cfg.hdnn.layers, "hdnn");
  }
  if (j.contains("wavelet")) {
    const json& s = j.at("wavelet");
    check_keys(s, "wavelet",
               {"enabled", "layers", "scale", "cheb_order", "combine",
                "shared_lambda"});
    read_field(s, "enabled", cfg.wavelet.enabled, "wavelet");
    read_field(s, "layers", cfg.wavelet.layers, "wavelet");
    read_field(s, "scale", cfg.wavelet.scale, "wavelet");
    read_field(s, "cheb_order", cfg.wavelet.cheb_order, "wavelet");
    read_field(s, "combine", cfg.wavelet.combine, "wavelet");
    read_field(s, "shared_lambda", cfg.wavelet.shared_lambda, "wavelet");
  }
  if (j.contains("spectral")) {
    const json& s = j.at("spectral");
    check_keys(s, "spectral", {"max_exact_n"});
    read_field(s, "max_exact_n", cfg.spectral.max_exact_n, "spectral");
  }
  if (j.contains("fusion")) {
    const json& s = j.at("fusion");
    check_keys(s, "fusion", {"late"});
    read_field(s, "late", cfg.fusion.late, "fusion");
  }
  if (j.contains("text")) {
    const json& s = j.at("text");
    check_keys(s, "text", {"enabled", "path_users", "path_items"});
    read_field(s, "enabled", cfg.text.enabled, "text");
    read_field(s, "path_users", cfg.text.path_users, "text");
    read_field(s, "path_items", cfg.text.path_items, "text");
  }
  if (j.contains("train")) {
    const json& s = j.at("train");
    check_keys(s, "train",
               {"lr", "epochs", "batch_size", "patience", "lambda_ssl",
                "lambda_reg", "tau"});
    read_field(s, "lr", cfg.train.lr, "train");
    read_field(s, "epochs", cfg.train.epochs, "train");
    read_field(s, "batch_size", cfg.train.batch_size, "train");
    read_field(s, "patience", cfg.train.patience, "train");
    read_field(s, "lambda_ssl", cfg.train.lambda_ssl, "train");
    read_field(s, "lambda_reg", cfg.train.lambda_reg, "train");
    read_field(s, "tau", cfg.train.tau, "train");
  }
  if (j.contains("eval")) {
    const json& s = j.at("eval");
    check_keys(s, "eval", {"ks"});
    read_field(s, "ks", cfg.eval.ks, "eval");
  }
  if (j.contains("seeds")) {
    try {
      cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("bad value for config key seeds: ") + e.what());
    }
  }
  read_field(j, "output_dir", cfg.output_dir, "");
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse config file " + path + ": " + e.what());
  }
  return parse_config(j);
}

nlohmann::json config_to_json(const RunConfig& cfg) {
  json j;
  j["data"] = {{"interactions", cfg.data.interactions},
               {"val_ratio", cfg.data.val_ratio},
               {"test_ratio", cfg.data.test_ratio}};
  j["model"] = {{"dim", cfg.model.dim}};
  j["hdnn"] = {{"enabled", cfg.hdnn.enabled}, {"layers", cfg.hdnn.layers}};
  j["wavelet"] = {{"enabled", cfg.wavelet.enabled},
                  {"layers", cfg.wavelet.layers},
                  {"scale", cfg.wavelet.scale},
                  {"cheb_order", cfg.wavelet.cheb_order},
                  {"combine", cfg.wavelet.combine},
                  {"shared_lambda", cfg.wavelet.shared_lambda}};
  j["spectral"] = {{"max_exact_n", cfg.spectral.max_exact_n}};
  j["fusion"] = {{"late", cfg.fusion.late}};
  j["text"] = {{"enabled", cfg.text.enabled},
               {"path_users", cfg.text.path_users},
               {"path_items", cfg.text.path_items}};
  j["train"] = {{"lr", cfg.train.lr},
                {"epochs", cfg.train.epochs},
                {"batch_size", cfg.train.batch_size},
                {"patience", cfg.train.patience},
                {"lambda_ssl", cfg.train.lambda_ssl},
                {"lambda_reg", cfg.train.lambda_reg},
                {"tau", cfg.train.tau}};
  j["eval"] = {{"ks", cfg.eval.ks}};
  j["seeds"] = cfg.seeds;
  j["output_dir"] = cfg.output_dir;
  return j;
}

}  // namespace hyperwave
