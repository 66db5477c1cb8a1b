// Command-line entry point: train / eval / ablate / sweep / gradcheck / synth.
// Exit codes: 0 success, 2 usage or config error, 3 data or checkpoint error,
// 4 numeric failure.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hyperwave/config.hpp"
#include "hyperwave/data.hpp"
#include "hyperwave/eval.hpp"
#include "hyperwave/gradcheck.hpp"
#include "hyperwave/harness.hpp"
#include "hyperwave/model.hpp"
#include "hyperwave/train.hpp"
#include "hyperwave/types.hpp"

namespace {

namespace fs = std::filesystem;
using namespace hyperwave;

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
  std::vector<std::uint64_t> seeds;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    const auto comma = csv.find(',', pos);
    const std::string tok =
        csv.substr(pos, comma == std::string::npos ? csv.size() - pos : comma - pos);
    if (tok.empty()) throw ConfigError("empty entry in seed list");
    try {
      seeds.push_back(std::stoull(tok));
    } catch (const std::exception&) {
      throw ConfigError("bad seed '" + tok + "'");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (seeds.empty()) throw ConfigError("seed list is empty");
  return seeds;
}

std::vector<int> parse_k_list(const std::string& csv) {
  std::vector<int> ks;
  for (std::uint64_t s : parse_seed_list(csv)) {
    if (s == 0 || s > 1000000) throw ConfigError("k values must be in [1, 1e6]");
    ks.push_back(static_cast<int>(s));
  }
  return ks;
}

int cmd_train(const std::string& config_path, const std::string& seeds_csv) {
  RunConfig cfg = load_config(config_path);
  if (!seeds_csv.empty()) {
    cfg.seeds = parse_seed_list(seeds_csv);
    cfg.validate();
  }
  TrainingOutcome out = run_training(cfg);
  for (const auto& run : out.runs) {
    std::cout << "seed " << run.seed << ": best epoch " << run.train.best_epoch
              << ", val ndcg@20 " << run.train.best_val_ndcg20 << '\n';
  }
  std::cout << "wrote " << out.runs.size() << " checkpoint(s) to " << cfg.output_dir
            << '\n';
  return 0;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& data_path,
             const std::string& k_csv, const std::string& out_path) {
  Checkpoint ck = load_checkpoint(checkpoint_path);
  RunConfig cfg = ck.cfg;
  if (!data_path.empty()) cfg.data.interactions = data_path;
  const std::vector<int> ks = k_csv.empty() ? cfg.eval.ks : parse_k_list(k_csv);

  const InteractionGraph graph = load_interactions(cfg.data.interactions);
  SplitRatios ratios;
  ratios.val = cfg.data.val_ratio;
  ratios.test = cfg.data.test_ratio;
  ratios.train = 1.0 - ratios.val - ratios.test;
  const SplitBundle split = split_interactions(graph, ratios, ck.seed);
  const ModelResources res = build_resources(cfg, split.train);

  ModelSpec spec = ModelSpec::from_config(cfg);
  if (ck.params.hdnn_user.mlp1.w1.size() == 0) spec.use_hdnn = false;
  if (ck.params.wav_user.weight.empty()) spec.use_wavelet = false;
  if (ck.params.text_proj.size() == 0 || !res.has_text()) spec.use_text = false;

  Tape tape;
  LeafIds leaves = register_leaves(tape, ck.params);
  ForwardResult f = forward_full(tape, leaves, spec, res);

  std::vector<MetricRow> rows;
  for (const char* which : {"val", "test"}) {
    const InteractionGraph& g = std::string(which) == "val" ? split.val : split.test;
    if (g.interactions.empty()) continue;
    for (auto& r : evaluate(tape.value(f.users), tape.value(f.items), split, which,
                            ks, ck.seed)
                       .rows) {
      rows.push_back(r);
    }
  }
  if (rows.empty()) throw DataError("no val or test interactions to evaluate");

  const std::string report =
      out_path.empty() ? (fs::path(cfg.output_dir) / "eval_report.csv").string()
                       : out_path;
  std::error_code ec;
  fs::create_directories(fs::path(report).parent_path(), ec);
  write_report_csv(report, rows);
  std::cout << "split,k,recall,ndcg,n_users,seed\n";
  for (const auto& r : rows) {
    std::cout << r.split << ',' << r.k << ',' << r.recall << ',' << r.ndcg << ','
              << r.n_users << ',' << r.seed << '\n';
  }
  std::cout << "wrote " << report << '\n';
  return 0;
}

int cmd_ablate(const std::string& config_path, const std::vector<std::string>& disable) {
  RunConfig cfg = load_config(config_path);
  AblationOutcome out = run_ablation(cfg, {disable});
  std::cout << "variant,seed,k,ndcg\n";
  for (const auto& run : out.runs) {
    for (const auto& r : run.test_rows) {
      std::cout << run.variant << ',' << run.seed << ',' << r.k << ',' << r.ndcg
                << '\n';
    }
  }
  std::cout << "wrote " << (fs::path(cfg.output_dir) / "ablation.csv").string()
            << '\n';
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& param_spec) {
  RunConfig cfg = load_config(config_path);
  run_sweep(cfg, param_spec);
  std::cout << "wrote " << (fs::path(cfg.output_dir) / "sweep.csv").string() << '\n';
  return 0;
}

int cmd_gradcheck(bool inject_error) {
  const double tol = 1e-4;
  const auto cases = run_gradcheck_suite(tol, inject_error);
  bool all_pass = true;
  std::printf("%-28s %-14s %s\n", "op", "max_rel_err", "status");
  for (const auto& c : cases) {
    std::printf("%-28s %-14.3e %s\n", c.name.c_str(), c.result.max_rel_error,
                c.pass ? "PASS" : "FAIL");
    if (!c.pass) {
      std::printf("    worst leaf %s at (%d, %d)\n", c.result.worst_leaf.c_str(),
                  c.result.worst_row, c.result.worst_col);
      all_pass = false;
    }
  }
  if (!all_pass) {
    std::cerr << "gradient check failed (tolerance " << tol << ")\n";
    return 4;
  }
  std::cout << "all gradient checks passed (tolerance " << tol << ")\n";
  return 0;
}

int cmd_synth(int users, int items, int genres, int groups, double cross_rate,
              int per_user, std::uint64_t seed, const std::string& out_dir) {
  if (groups <= 0) groups = genres;
  const auto [graph, labels] = generate_synthetic_heterophilic(
      users, items, groups, genres, cross_rate, per_user, seed);

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create output directory: " + out_dir);
  const fs::path dir(out_dir);
  write_interactions(graph, (dir / "interactions.tsv").string());
  // Label-derived text embeddings so the textual modality carries signal.
  write_text_embeddings(label_text_matrix(labels.user_groups, labels.n_groups,
                                          0.1, seed ^ 0xC0FFEEULL),
                        (dir / "text_users.txt").string());
  write_text_embeddings(label_text_matrix(labels.item_genres, labels.n_genres,
                                          0.1, seed ^ 0xBEEFULL),
                        (dir / "text_items.txt").string());
  std::ofstream lab(dir / "labels.csv");
  if (!lab) throw DataError("cannot write labels.csv");
  lab << "kind,id,label\n";
  for (std::size_t i = 0; i < labels.user_groups.size(); ++i) {
    lab << "user," << i << ',' << labels.user_groups[i] << '\n';
  }
  for (std::size_t i = 0; i < labels.item_genres.size(); ++i) {
    lab << "item," << i << ',' << labels.item_genres[i] << '\n';
  }
  std::cout << "wrote " << graph.interactions.size() << " interactions for "
            << graph.n_users << " users x " << graph.n_items << " items to "
            << out_dir << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  // Optional worker-thread cap; applied before any numeric work starts.
  if (const char* th = std::getenv("HYPERWAVE_THREADS")) {
    setenv("OMP_NUM_THREADS", th, 1);
    setenv("OPENBLAS_NUM_THREADS", th, 1);
    Eigen::setNbThreads(std::max(1, std::atoi(th)));
  }

  CLI::App app{"Hypergraph wavelet-diffusion recommender"};
  app.require_subcommand(1);

  std::string config_path, seeds_csv, checkpoint_path, data_path, k_csv, out_path,
      param_spec, synth_out = "synth_out";
  std::vector<std::string> disable;
  bool inject_error = false;
  int users = 2000, items = 1000, genres = 4, groups = 0, per_user = 20;
  double cross_rate = 0.3;
  std::uint64_t seed = 1;

  auto* train = app.add_subcommand("train", "Train over the configured seeds");
  train->add_option("--config", config_path, "Config file (JSON)")->required();
  train->add_option("--seeds", seeds_csv, "Comma-separated seed override");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
  eval->add_option("--data", data_path, "Interactions file override");
  eval->add_option("--k", k_csv, "Comma-separated cutoff list");
  eval->add_option("--out", out_path, "Report CSV path");

  auto* ablate = app.add_subcommand("ablate", "Train the full model and one variant");
  ablate->add_option("--config", config_path, "Config file (JSON)")->required();
  ablate
      ->add_option("--disable", disable,
                   "Component(s) to disable jointly: hdnn, wavelet, fusion, "
                   "contrastive (repeatable)")
      ->required();

  auto* sweep = app.add_subcommand("sweep", "Train across one parameter range");
  sweep->add_option("--config", config_path, "Config file (JSON)")->required();
  sweep
      ->add_option("--param", param_spec,
                   "Sweep spec, e.g. hdnn.layers=1..5 or model.dim=8,16,32,64,128")
      ->required();

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient audit");
  gradcheck->add_flag("--inject-error", inject_error,
                      "Add a deliberately failing case (plumbing fixture)");

  auto* synth = app.add_subcommand("synth", "Generate a heterophilic benchmark");
  synth->add_option("--users", users, "User count");
  synth->add_option("--items", items, "Item count");
  synth->add_option("--genres", genres, "Item genre count");
  synth->add_option("--groups", groups, "User group count (default: genres)");
  synth->add_option("--cross-rate", cross_rate, "Cross-genre interaction rate");
  synth->add_option("--per-user", per_user, "Interactions per user");
  synth->add_option("--seed", seed, "Generator seed");
  synth->add_option("--out", synth_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage errors map to exit code 2
  }

  try {
    if (train->parsed()) return cmd_train(config_path, seeds_csv);
    if (eval->parsed()) return cmd_eval(checkpoint_path, data_path, k_csv, out_path);
    if (ablate->parsed()) return cmd_ablate(config_path, disable);
    if (sweep->parsed()) return cmd_sweep(config_path, param_spec);
    if (gradcheck->parsed()) return cmd_gradcheck(inject_error);
    if (synth->parsed()) {
      return cmd_synth(users, items, genres, groups, cross_rate, per_user, seed,
                       synth_out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
