#include "hyperwave/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

namespace hyperwave {
namespace {

namespace fs = std::filesystem;

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void ensure_output_dir(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) {
    throw DataError("cannot create output directory '" + cfg.output_dir +
                    "': " + ec.message());
  }
}

void echo_config(const RunConfig& cfg) {
  const fs::path p = fs::path(cfg.output_dir) / "config.json";
  std::ofstream out(p);
  if (!out) throw DataError("cannot write resolved config: " + p.string());
  out << config_to_json(cfg).dump(2) << '\n';
}

// Split + resources for one seed; the split ratios come from the config.
struct SeedSetup {
  SplitBundle split;
  ModelResources res;
};

SeedSetup prepare_seed(const RunConfig& cfg, const InteractionGraph& graph,
                       std::uint64_t seed) {
  SeedSetup s;
  SplitRatios ratios;
  ratios.val = cfg.data.val_ratio;
  ratios.test = cfg.data.test_ratio;
  ratios.train = 1.0 - ratios.val - ratios.test;
  s.split = split_interactions(graph, ratios, seed);
  s.res = build_resources(cfg, s.split.train);
  return s;
}

std::vector<MetricRow> eval_both_splits(const Mat& users, const Mat& items,
                                        const SplitBundle& split,
                                        const std::vector<int>& ks,
                                        std::uint64_t seed) {
  std::vector<MetricRow> rows;
  if (!split.val.interactions.empty()) {
    for (auto& r : evaluate(users, items, split, "val", ks, seed).rows) {
      rows.push_back(r);
    }
  }
  if (!split.test.interactions.empty()) {
    for (auto& r : evaluate(users, items, split, "test", ks, seed).rows) {
      rows.push_back(r);
    }
  }
  if (rows.empty()) {
    throw DataError("no val or test interactions to evaluate");
  }
  return rows;
}

std::vector<MetricRow> eval_params(const ParameterSet& params, const ModelSpec& spec,
                                   const ModelResources& res,
                                   const SplitBundle& split,
                                   const std::vector<int>& ks, std::uint64_t seed) {
  Tape tape;
  LeafIds leaves = register_leaves(tape, params);
  ForwardResult f = forward_full(tape, leaves, spec, res);
  return eval_both_splits(tape.value(f.users), tape.value(f.items), split, ks, seed);
}

}  // namespace

TrainingOutcome run_training(const RunConfig& cfg) {
  ensure_output_dir(cfg);
  echo_config(cfg);
  const InteractionGraph graph = load_interactions(cfg.data.interactions);
  const ModelSpec spec = ModelSpec::from_config(cfg);

  TrainingOutcome out;
  for (std::uint64_t seed : cfg.seeds) {
    SeedSetup setup = prepare_seed(cfg, graph, seed);
    SeedRun run;
    run.seed = seed;
    run.train = train_model(cfg, spec, setup.split, setup.res, seed);
    run.report = eval_params(run.train.params, run.train.spec, setup.res,
                             setup.split, cfg.eval.ks, seed);

    const fs::path dir(cfg.output_dir);
    save_checkpoint((dir / ("checkpoint_seed" + std::to_string(seed) + ".bin")).string(),
                    run.train.params, cfg, seed);
    write_history_csv((dir / ("history_seed" + std::to_string(seed) + ".csv")).string(),
                      run.train.history);
    write_report_csv((dir / ("report_seed" + std::to_string(seed) + ".csv")).string(),
                     run.report);
    for (const auto& r : run.report) out.all_rows.push_back(r);
    out.runs.push_back(std::move(run));
  }

  // Cross-seed summary per (split, k).
  struct Agg {
    std::vector<double> recalls, ndcgs;
  };
  std::map<std::pair<std::string, int>, Agg> agg;
  for (const auto& r : out.all_rows) {
    agg[{r.split, r.k}].recalls.push_back(r.recall);
    agg[{r.split, r.k}].ndcgs.push_back(r.ndcg);
  }
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  auto stddev = [&mean](const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
  };
  std::ofstream sum(fs::path(cfg.output_dir) / "summary.csv");
  if (!sum) throw DataError("cannot write summary.csv");
  sum << "split,k,recall_mean,recall_std,ndcg_mean,ndcg_std,n_seeds\n";
  for (const auto& [key, a] : agg) {
    sum << key.first << ',' << key.second << ',' << fmt_double(mean(a.recalls))
        << ',' << fmt_double(stddev(a.recalls)) << ',' << fmt_double(mean(a.ndcgs))
        << ',' << fmt_double(stddev(a.ndcgs)) << ',' << a.recalls.size() << '\n';
  }
  return out;
}

RunConfig apply_disable(RunConfig cfg, const std::vector<std::string>& disable) {
  const std::set<std::string> known = {"hdnn", "wavelet", "fusion", "contrastive"};
  for (const auto& name : disable) {
    if (known.find(name) == known.end()) {
      throw ConfigError("unknown ablation component '" + name +
                        "' (expected hdnn, wavelet, fusion, contrastive)");
    }
    if (name == "hdnn") cfg.hdnn.enabled = false;
    if (name == "wavelet") cfg.wavelet.enabled = false;
    if (name == "fusion") cfg.text.enabled = false;
    if (name == "contrastive") cfg.train.lambda_ssl = 0.0;
  }
  cfg.validate();  // rejects disabling both encoders
  return cfg;
}

std::string variant_name(const std::vector<std::string>& disable) {
  if (disable.empty()) return "full";
  std::vector<std::string> sorted = disable;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::string name = "wo";
  for (const auto& d : sorted) name += "_" + d;
  return name;
}

double AblationOutcome::mean_ndcg(const std::string& variant, int k) const {
  double s = 0.0;
  int n = 0;
  for (const auto& run : runs) {
    if (run.variant != variant) continue;
    for (const auto& r : run.test_rows) {
      if (r.k == k && r.split == "test") {
        s += r.ndcg;
        ++n;
      }
    }
  }
  if (n == 0) {
    throw ConfigError("ablation outcome has no rows for variant '" + variant +
                      "' at k=" + std::to_string(k));
  }
  return s / n;
}

AblationOutcome run_ablation(const RunConfig& cfg,
                             const std::vector<std::vector<std::string>>& variant_sets) {
  ensure_output_dir(cfg);
  // Validate every variant up front so a bad set fails before any training.
  std::vector<std::pair<std::string, RunConfig>> variants;
  variants.emplace_back("full", cfg);
  for (const auto& set : variant_sets) {
    if (set.empty()) continue;  // "full" is always included
    variants.emplace_back(variant_name(set), apply_disable(cfg, set));
  }

  const InteractionGraph graph = load_interactions(cfg.data.interactions);
  AblationOutcome out;
  for (std::uint64_t seed : cfg.seeds) {
    // Resources built under the full config cover every variant.
    SeedSetup setup = prepare_seed(cfg, graph, seed);
    for (const auto& [name, vcfg] : variants) {
      TrainResult tr =
          train_model(vcfg, ModelSpec::from_config(vcfg), setup.split, setup.res, seed);
      AblationRun run;
      run.variant = name;
      run.seed = seed;
      for (auto& r : eval_params(tr.params, tr.spec, setup.res, setup.split,
                                 cfg.eval.ks, seed)) {
        if (r.split == "test") run.test_rows.push_back(r);
      }
      out.runs.push_back(std::move(run));
    }
  }

  std::ofstream csv(fs::path(cfg.output_dir) / "ablation.csv");
  if (!csv) throw DataError("cannot write ablation.csv");
  csv << "variant,split,k,recall,ndcg,n_users,seed\n";
  for (const auto& run : out.runs) {
    for (const auto& r : run.test_rows) {
      csv << run.variant << ',' << r.split << ',' << r.k << ','
          << fmt_double(r.recall) << ',' << fmt_double(r.ndcg) << ',' << r.n_users
          << ',' << r.seed << '\n';
    }
  }
  return out;
}

namespace {

struct ParamSpec {
  std::string name;
  std::vector<double> values;
};

ParamSpec parse_param_spec(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 >= spec.size()) {
    throw ConfigError("sweep parameter must look like name=1..5 or name=a,b,c");
  }
  ParamSpec out;
  out.name = spec.substr(0, eq);
  const std::string rhs = spec.substr(eq + 1);
  const auto dots = rhs.find("..");
  try {
    if (dots != std::string::npos) {
      const long a = std::stol(rhs.substr(0, dots));
      const long b = std::stol(rhs.substr(dots + 2));
      if (b < a) throw ConfigError("sweep range must be ascending");
      for (long v = a; v <= b; ++v) out.values.push_back(static_cast<double>(v));
    } else {
      std::size_t pos = 0;
      while (pos <= rhs.size()) {
        const auto comma = rhs.find(',', pos);
        const std::string tok =
            rhs.substr(pos, comma == std::string::npos ? rhs.size() - pos
                                                       : comma - pos);
        if (tok.empty()) throw ConfigError("empty sweep value");
        out.values.push_back(std::stod(tok));
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("cannot parse sweep values: " + rhs);
  }
  if (out.values.empty()) throw ConfigError("sweep needs at least one value");
  return out;
}

int as_int(double v, const std::string& name) {
  const int i = static_cast<int>(std::llround(v));
  if (std::abs(v - i) > 1e-9) {
    throw ConfigError("sweep parameter " + name + " needs integer values");
  }
  return i;
}

// Applies one sweep value; returns whether spectral resources must be rebuilt.
bool apply_sweep_value(RunConfig& cfg, const std::string& name, double v) {
  if (name == "model.dim") cfg.model.dim = as_int(v, name);
  else if (name == "hdnn.layers") cfg.hdnn.layers = as_int(v, name);
  else if (name == "wavelet.layers") cfg.wavelet.layers = as_int(v, name);
  else if (name == "wavelet.scale") { cfg.wavelet.scale = v; return true; }
  else if (name == "wavelet.cheb_order") { cfg.wavelet.cheb_order = as_int(v, name); return true; }
  else if (name == "spectral.max_exact_n") { cfg.spectral.max_exact_n = as_int(v, name); return true; }
  else if (name == "train.lr") cfg.train.lr = v;
  else if (name == "train.lambda_ssl") cfg.train.lambda_ssl = v;
  else if (name == "train.lambda_reg") cfg.train.lambda_reg = v;
  else if (name == "train.tau") cfg.train.tau = v;
  else if (name == "train.epochs") cfg.train.epochs = as_int(v, name);
  else if (name == "train.batch_size") cfg.train.batch_size = as_int(v, name);
  else throw ConfigError("unknown sweep parameter '" + name + "'");
  return false;
}

}  // namespace

std::vector<SweepPoint> run_sweep(const RunConfig& cfg, const std::string& param_spec) {
  ensure_output_dir(cfg);
  const ParamSpec ps = parse_param_spec(param_spec);
  {
    // Validate every value before any training starts.
    for (double v : ps.values) {
      RunConfig probe = cfg;
      apply_sweep_value(probe, ps.name, v);
      probe.validate();
    }
  }
  const InteractionGraph graph = load_interactions(cfg.data.interactions);

  std::vector<SweepPoint> points;
  for (std::uint64_t seed : cfg.seeds) {
    SeedSetup base = prepare_seed(cfg, graph, seed);
    for (double v : ps.values) {
      RunConfig vcfg = cfg;
      const bool rebuild = apply_sweep_value(vcfg, ps.name, v);
      const ModelResources* res = &base.res;
      ModelResources rebuilt;
      if (rebuild) {
        rebuilt = build_resources(vcfg, base.split.train);
        res = &rebuilt;
      }
      TrainResult tr =
          train_model(vcfg, ModelSpec::from_config(vcfg), base.split, *res, seed);
      SweepPoint point;
      point.param = ps.name;
      point.value = v;
      point.seed = seed;
      for (auto& r :
           eval_params(tr.params, tr.spec, *res, base.split, cfg.eval.ks, seed)) {
        if (r.split == "test") point.test_rows.push_back(r);
      }
      points.push_back(std::move(point));
    }
  }

  std::ofstream csv(fs::path(cfg.output_dir) / "sweep.csv");
  if (!csv) throw DataError("cannot write sweep.csv");
  csv << "param,value,split,k,recall,ndcg,n_users,seed\n";
  for (const auto& p : points) {
    for (const auto& r : p.test_rows) {
      csv << p.param << ',' << fmt_double(p.value) << ',' << r.split << ',' << r.k
          << ',' << fmt_double(r.recall) << ',' << fmt_double(r.ndcg) << ','
          << r.n_users << ',' << r.seed << '\n';
    }
  }
  return points;
}

}  // namespace hyperwave
