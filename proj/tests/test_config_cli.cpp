#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "hyperwave/config.hpp"
#include "hyperwave/data.hpp"
#include "hyperwave/harness.hpp"
#include "hyperwave/types.hpp"
#include "json.hpp"

using namespace hyperwave;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// Writes a small synthetic dataset and returns a config pointing at it.
RunConfig tiny_run_config(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("hw_cli_" + tag);
  fs::create_directories(dir);
  const auto [graph, labels] =
      generate_synthetic_heterophilic(12, 20, 2, 2, 0.3, 10, 99);
  (void)labels;
  const std::string data_path = (dir / "interactions.tsv").string();
  write_interactions(graph, data_path);

  RunConfig cfg;
  cfg.data.interactions = data_path;
  cfg.model.dim = 4;
  cfg.hdnn.layers = 1;
  cfg.wavelet.layers = 1;
  cfg.text.enabled = false;
  cfg.train.epochs = 2;
  cfg.train.batch_size = 32;
  cfg.train.lambda_ssl = 0.01;
  cfg.eval.ks = {5, 10};
  cfg.seeds = {1, 2};
  cfg.output_dir = (dir / "out").string();
  cfg.validate();
  return cfg;
}

}  // namespace

TEST_CASE("an empty config document resolves to the documented defaults") {
  const RunConfig cfg = parse_config(json::object());
  CHECK(cfg.model.dim == 32);
  CHECK(cfg.hdnn.enabled);
  CHECK(cfg.hdnn.layers == 3);
  CHECK(cfg.wavelet.enabled);
  CHECK(cfg.wavelet.layers == 3);
  CHECK(cfg.wavelet.scale == 1.0);
  CHECK(cfg.wavelet.cheb_order == 30);
  CHECK(cfg.wavelet.combine == "add");
  CHECK_FALSE(cfg.wavelet.shared_lambda);
  CHECK(cfg.spectral.max_exact_n == 5000);
  CHECK(cfg.fusion.late == "mean");
  CHECK(cfg.text.enabled);
  CHECK(cfg.data.val_ratio == 0.1);
  CHECK(cfg.data.test_ratio == 0.2);
  CHECK(cfg.train.lr == 1e-3);
  CHECK(cfg.train.epochs == 100);
  CHECK(cfg.train.batch_size == 2048);
  CHECK(cfg.train.patience == 10);
  CHECK(cfg.train.lambda_ssl == 0.1);
  CHECK(cfg.train.lambda_reg == 1e-4);
  CHECK(cfg.train.tau == 0.2);
  CHECK(cfg.eval.ks == std::vector<int>{10, 20, 40});
  CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2, 3, 4, 5});
  CHECK(cfg.output_dir == "out");
}

TEST_CASE("unknown config keys are named in the error") {
  try {
    parse_config(json{{"frobnicate", 1}});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("frobnicate") != std::string::npos);
  }
  try {
    parse_config(json{{"train", {{"learning_rate", 0.1}}}});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("train.learning_rate") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config(json{{"train", 7}}), ConfigError);
}

TEST_CASE("type mismatches are named in the error") {
  try {
    parse_config(json{{"model", {{"dim", "wide"}}}});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("model.dim") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config(json{{"seeds", "all"}}), ConfigError);
}

TEST_CASE("validation rejects out-of-range and inconsistent settings") {
  auto reject = [](json patch) {
    CHECK_THROWS_AS(parse_config(patch), ConfigError);
  };
  reject(json{{"model", {{"dim", 0}}}});
  reject(json{{"hdnn", {{"layers", 0}}}});
  reject(json{{"wavelet", {{"layers", 0}}}});
  reject(json{{"wavelet", {{"scale", 0.0}}}});
  reject(json{{"wavelet", {{"scale", -1.0}}}});
  reject(json{{"wavelet", {{"cheb_order", 0}}}});
  reject(json{{"wavelet", {{"combine", "mul"}}}});
  reject(json{{"spectral", {{"max_exact_n", 0}}}});
  reject(json{{"fusion", {{"late", "max"}}}});
  reject(json{{"text", {{"path_users", "u.tsv"}}}});  // missing the item half
  reject(json{{"data", {{"val_ratio", 0.5}, {"test_ratio", 0.5}}}});
  reject(json{{"data", {{"val_ratio", -0.1}}}});
  reject(json{{"train", {{"lr", 0.0}}}});
  reject(json{{"train", {{"tau", 0.0}}}});
  reject(json{{"train", {{"epochs", -1}}}});
  reject(json{{"train", {{"batch_size", 0}}}});
  reject(json{{"train", {{"patience", 0}}}});
  reject(json{{"train", {{"lambda_ssl", -0.5}}}});
  reject(json{{"hdnn", {{"enabled", false}}}, {"wavelet", {{"enabled", false}}}});
  reject(json{{"eval", {{"ks", json::array()}}}});
  reject(json{{"eval", {{"ks", {10, 0}}}}});
  reject(json{{"seeds", json::array()}});
  reject(json{{"output_dir", ""}});
}

TEST_CASE("the resolved echo is a parse fixpoint") {
  const json j1 = config_to_json(parse_config(json::object()));
  const json j2 = config_to_json(parse_config(j1));
  CHECK(j1.dump() == j2.dump());

  json custom = json::object();
  custom["model"] = {{"dim", 16}};
  custom["wavelet"] = {{"combine", "concat"}, {"shared_lambda", true}, {"scale", 0.5}};
  custom["fusion"] = {{"late", "learned_scalar"}};
  custom["seeds"] = {42};
  const json e1 = config_to_json(parse_config(custom));
  const json e2 = config_to_json(parse_config(e1));
  CHECK(e1.dump() == e2.dump());
  CHECK(e1.at("wavelet").at("combine") == "concat");
  CHECK(e1.at("model").at("dim") == 16);
}

TEST_CASE("config files that are missing or malformed raise ConfigError") {
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
  const auto path = (fs::temp_directory_path() / "broken.json").string();
  std::ofstream(path) << "{ not json";
  CHECK_THROWS_AS(load_config(path), ConfigError);
}

TEST_CASE("ablation switches map onto their config fields") {
  RunConfig base = parse_config(json::object());
  const RunConfig a = apply_disable(base, {"hdnn"});
  CHECK_FALSE(a.hdnn.enabled);
  CHECK(a.wavelet.enabled);

  const RunConfig b = apply_disable(base, {"wavelet"});
  CHECK_FALSE(b.wavelet.enabled);

  const RunConfig c = apply_disable(base, {"fusion"});
  CHECK_FALSE(c.text.enabled);

  const RunConfig d = apply_disable(base, {"contrastive"});
  CHECK(d.train.lambda_ssl == 0.0);

  const RunConfig e = apply_disable(base, {"contrastive", "fusion"});
  CHECK(e.train.lambda_ssl == 0.0);
  CHECK_FALSE(e.text.enabled);

  CHECK_THROWS_AS(apply_disable(base, {"hdnn", "wavelet"}), ConfigError);
  CHECK_THROWS_AS(apply_disable(base, {"dropout"}), ConfigError);
}

TEST_CASE("variant names are sorted, deduplicated, and prefixed") {
  CHECK(variant_name({}) == "full");
  CHECK(variant_name({"wavelet"}) == "wo_wavelet");
  CHECK(variant_name({"wavelet", "hdnn"}) == "wo_hdnn_wavelet");
  CHECK(variant_name({"fusion", "fusion", "contrastive"}) == "wo_contrastive_fusion");
}

TEST_CASE("sweep parameter strings fail fast on malformed input") {
  RunConfig cfg = tiny_run_config("sweep_bad");
  CHECK_THROWS_AS(run_sweep(cfg, "noequals"), ConfigError);
  CHECK_THROWS_AS(run_sweep(cfg, "=3"), ConfigError);
  CHECK_THROWS_AS(run_sweep(cfg, "train.lr="), ConfigError);
  CHECK_THROWS_AS(run_sweep(cfg, "train.lr=1,,2"), ConfigError);
  CHECK_THROWS_AS(run_sweep(cfg, "train.lr=abc"), ConfigError);
  CHECK_THROWS_AS(run_sweep(cfg, "train.epochs=5..2"), ConfigError);
  CHECK_THROWS_AS(run_sweep(cfg, "bogus.param=1..3"), ConfigError);
  CHECK_THROWS_AS(run_sweep(cfg, "hdnn.layers=1.5"), ConfigError);
  // Values that parse but validate out of range must also fail up front.
  CHECK_THROWS_AS(run_sweep(cfg, "model.dim=0..2"), ConfigError);
}

TEST_CASE("a small sweep trains per value and writes well-formed rows") {
  RunConfig cfg = tiny_run_config("sweep_ok");
  cfg.seeds = {1};
  cfg.train.epochs = 1;
  const auto points = run_sweep(cfg, "train.epochs=1,2");
  REQUIRE(points.size() == 2);
  CHECK(points[0].param == "train.epochs");
  CHECK(points[0].value == 1.0);
  CHECK(points[1].value == 2.0);
  for (const auto& p : points) {
    REQUIRE(p.test_rows.size() == cfg.eval.ks.size());
    for (const auto& r : p.test_rows) {
      CHECK(r.split == "test");
      CHECK(r.recall >= 0.0);
      CHECK(r.recall <= 1.0);
      CHECK(r.ndcg >= 0.0);
      CHECK(r.ndcg <= 1.0);
    }
  }
  const std::string csv = slurp((fs::path(cfg.output_dir) / "sweep.csv").string());
  CHECK(csv.rfind("param,value,split,k,recall,ndcg,n_users,seed\n", 0) == 0);
  CHECK(csv.find("train.epochs,1,") != std::string::npos);
  CHECK(csv.find("train.epochs,2,") != std::string::npos);
}

TEST_CASE("a small ablation run covers the full model plus each variant") {
  RunConfig cfg = tiny_run_config("ablate");
  cfg.seeds = {1};
  cfg.train.epochs = 1;
  const AblationOutcome out = run_ablation(cfg, {{"contrastive"}, {"wavelet"}});
  REQUIRE(out.runs.size() == 3);  // full + two variants, one seed
  CHECK(out.runs[0].variant == "full");
  CHECK_NOTHROW(out.mean_ndcg("full", 10));
  CHECK_NOTHROW(out.mean_ndcg("wo_contrastive", 10));
  CHECK_NOTHROW(out.mean_ndcg("wo_wavelet", 10));
  CHECK_THROWS_AS(out.mean_ndcg("wo_dropout", 10), ConfigError);
  CHECK_THROWS_AS(out.mean_ndcg("full", 999), ConfigError);

  const std::string csv = slurp((fs::path(cfg.output_dir) / "ablation.csv").string());
  CHECK(csv.rfind("variant,split,k,recall,ndcg,n_users,seed\n", 0) == 0);
  CHECK(csv.find("wo_contrastive,test,") != std::string::npos);
  CHECK(csv.find("wo_wavelet,test,") != std::string::npos);
}

TEST_CASE("the training harness writes every artifact and is run-to-run reproducible") {
  RunConfig cfg_a = tiny_run_config("train_a");
  const TrainingOutcome out = run_training(cfg_a);
  REQUIRE(out.runs.size() == 2);
  CHECK(out.all_rows.size() == out.runs[0].report.size() + out.runs[1].report.size());

  const fs::path dir(cfg_a.output_dir);
  for (const char* name :
       {"config.json", "summary.csv", "checkpoint_seed1.bin", "checkpoint_seed2.bin",
        "history_seed1.csv", "history_seed2.csv", "report_seed1.csv",
        "report_seed2.csv"}) {
    CHECK(fs::exists(dir / name));
  }
  const std::string summary = slurp((dir / "summary.csv").string());
  CHECK(summary.rfind("split,k,recall_mean,recall_std,ndcg_mean,ndcg_std,n_seeds\n",
                      0) == 0);
  CHECK(summary.find("test,10,") != std::string::npos);
  CHECK(summary.find("val,5,") != std::string::npos);

  // The echoed config must parse back to the same resolved document.
  const RunConfig echoed = load_config((dir / "config.json").string());
  CHECK(config_to_json(echoed).dump() == config_to_json(cfg_a).dump());

  // Same config into a fresh directory: every CSV byte must match.
  RunConfig cfg_b = cfg_a;
  cfg_b.output_dir = cfg_a.output_dir + "_again";
  run_training(cfg_b);
  for (const char* name :
       {"summary.csv", "history_seed1.csv", "history_seed2.csv", "report_seed1.csv",
        "report_seed2.csv"}) {
    CHECK(slurp((dir / name).string()) ==
          slurp((fs::path(cfg_b.output_dir) / name).string()));
  }
}
