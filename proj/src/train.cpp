#include "hyperwave/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>

#include "hyperwave/losses.hpp"

namespace hyperwave {
namespace {

constexpr char kMagic[4] = {'H', 'W', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

std::vector<int> unique_sorted(const std::vector<int>& ids) {
  std::vector<int> out = ids;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string csv_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

BprSampler::BprSampler(const InteractionGraph& train) : n_items_(train.n_items) {
  items_of_user_ = train.items_by_user();
  int skipped = 0;
  for (const auto& it : train.interactions) {
    if (static_cast<int>(items_of_user_[it.user].size()) >= n_items_) {
      ++skipped;
      continue;  // no negative exists for this user
    }
    pool_.push_back(it);
  }
  if (skipped > 0) {
    std::cerr << "warning: " << skipped
              << " train interactions belong to users who interact with every "
                 "item; excluded from BPR sampling\n";
  }
  if (pool_.empty()) {
    throw DataError("no trainable interactions (every user covers the catalog)");
  }
}

BprBatch BprSampler::sample(int batch_size, Rng& rng) const {
  require(batch_size >= 1, "sample: batch_size must be >= 1");
  BprBatch b;
  b.users.reserve(batch_size);
  b.pos.reserve(batch_size);
  b.neg.reserve(batch_size);
  for (int k = 0; k < batch_size; ++k) {
    const auto& it = pool_[rng.uniform_index(pool_.size())];
    const auto& owned = items_of_user_[it.user];
    int neg;
    do {
      neg = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(n_items_)));
    } while (std::binary_search(owned.begin(), owned.end(), neg));
    b.users.push_back(it.user);
    b.pos.push_back(it.item);
    b.neg.push_back(neg);
  }
  return b;
}

AdamState init_adam(const ParameterSet& params) {
  AdamState s;
  params.for_each([&s](const char* name, const Mat& m) {
    s.names.emplace_back(name);
    s.m.push_back(Mat::Zero(m.rows(), m.cols()));
    s.v.push_back(Mat::Zero(m.rows(), m.cols()));
  });
  return s;
}

void adam_step(ParameterSet& params, const std::map<std::string, Mat>& grads,
               AdamState& state, const TrainSection& cfg) {
  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double eps = 1e-8;
  state.t += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  std::size_t idx = 0;
  params.for_each([&](const char* name, Mat& p) {
    require(idx < state.names.size() && state.names[idx] == name,
            "adam_step: state misaligned with parameter set");
    auto it = grads.find(name);
    if (it != grads.end()) {
      const Mat& g = it->second;
      require(g.rows() == p.rows() && g.cols() == p.cols(),
              "adam_step: gradient shape mismatch");
      if (!g.allFinite()) {
        throw NumericError(std::string("non-finite gradient for ") + name);
      }
      Mat& m = state.m[idx];
      Mat& v = state.v[idx];
      m = beta1 * m + (1.0 - beta1) * g;
      v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
      const Mat m_hat = m / bc1;
      const Mat v_hat = v / bc2;
      p -= cfg.lr * (m_hat.array() / (v_hat.array().sqrt() + eps)).matrix();
    }
    ++idx;
  });
}

TrainResult train_model(const RunConfig& cfg, const ModelSpec& spec,
                        const SplitBundle& split, const ModelResources& res,
                        std::uint64_t seed) {
  ModelSpec eff = spec;
  if (!res.has_text()) eff.use_text = false;

  ParameterSet params =
      init_params(res.n_users, res.n_items, res.text_dim(), eff, seed);
  AdamState adam = init_adam(params);
  // Separate stream from the init draws so batch sampling does not depend on
  // the parameter count.
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  BprSampler sampler(split.train);

  bool has_val = false;
  for (const auto& it : split.val.interactions) {
    (void)it;
    has_val = true;
    break;
  }

  auto eval_val = [&](const ParameterSet& p) -> double {
    Tape tape;
    LeafIds leaves = register_leaves(tape, p);
    ForwardResult f = forward_full(tape, leaves, eff, res);
    return evaluate(tape.value(f.users), tape.value(f.items), split, "val", {20},
                    seed)
        .at(20)
        .ndcg;
  };

  TrainResult result;
  result.spec = eff;
  result.params = params;

  const int batch_size = cfg.train.batch_size;
  const int n_batches =
      std::max(1, (sampler.n_positives() + batch_size - 1) / batch_size);
  double best = -std::numeric_limits<double>::infinity();
  int since_best = 0;

  for (int epoch = 1; epoch <= cfg.train.epochs; ++epoch) {
    double sum_bpr = 0.0;
    double sum_ssl = 0.0;
    double sum_reg = 0.0;
    for (int bi = 0; bi < n_batches; ++bi) {
      const BprBatch batch = sampler.sample(batch_size, rng);
      Tape tape;
      LeafIds leaves = register_leaves(tape, params);
      ForwardResult f = forward_full(tape, leaves, eff, res);

      NodeId bu = tape.gather_rows(f.users, batch.users);
      NodeId bp = tape.gather_rows(f.items, batch.pos);
      NodeId bn = tape.gather_rows(f.items, batch.neg);
      NodeId bpr = bpr_loss(tape, tape.row_dot(bu, bp), tape.row_dot(bu, bn));

      NodeId ssl_u = -1;
      NodeId ssl_i = -1;
      if (cfg.train.lambda_ssl != 0.0 && f.has_views()) {
        ssl_u = infonce_cross_view(tape, f.hdnn_layers_user, f.wav_layers_user,
                                   unique_sorted(batch.users), cfg.train.tau);
        ssl_i = infonce_cross_view(tape, f.hdnn_layers_item, f.wav_layers_item,
                                   unique_sorted(batch.pos), cfg.train.tau);
      }
      TotalLossIds loss =
          total_loss(tape, bpr, ssl_u, ssl_i, leaves.user_embed, leaves.item_embed,
                     cfg.train.lambda_ssl, cfg.train.lambda_reg);
      const double total = tape.scalar_value(loss.total);
      if (!std::isfinite(total)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(bi));
      }
      tape.backward(loss.total);
      adam_step(params, tape.leaf_grads(), adam, cfg.train);

      sum_bpr += tape.scalar_value(bpr);
      if (ssl_u >= 0) {
        sum_ssl += tape.scalar_value(ssl_u) + tape.scalar_value(ssl_i);
      }
      sum_reg += tape.scalar_value(loss.reg);
    }

    HistoryRow row;
    row.epoch = epoch;
    row.bpr = sum_bpr / n_batches;
    row.ssl = sum_ssl / n_batches;
    row.reg = sum_reg / n_batches;
    row.val_ndcg20 = has_val ? eval_val(params) : 0.0;
    result.history.push_back(row);

    if (!has_val) {
      // No validation signal: keep the final parameters, never stop early.
      result.params = params;
      result.best_epoch = epoch;
      continue;
    }
    if (row.val_ndcg20 > best) {
      best = row.val_ndcg20;
      result.params = params;
      result.best_epoch = epoch;
      result.best_val_ndcg20 = best;
      since_best = 0;
    } else if (++since_best >= cfg.train.patience) {
      break;
    }
  }
  return result;
}

TrainResult train_mf_bpr(const RunConfig& cfg, const SplitBundle& split,
                         std::uint64_t seed) {
  RunConfig mf_cfg = cfg;
  mf_cfg.train.lambda_ssl = 0.0;
  ModelResources res;
  res.n_users = split.train.n_users;
  res.n_items = split.train.n_items;
  return train_model(mf_cfg, ModelSpec::raw_embeddings(cfg.model.dim), split, res,
                     seed);
}

namespace {

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& what) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError("checkpoint truncated while reading " + what);
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const ParameterSet& params,
                     const RunConfig& cfg, std::uint64_t seed) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open checkpoint for writing: " + path);
  out.write(kMagic, 4);
  write_pod(out, kVersion);
  write_pod(out, seed);
  const std::string cfg_json = config_to_json(cfg).dump();
  write_pod(out, static_cast<std::uint64_t>(cfg_json.size()));
  out.write(cfg_json.data(), static_cast<std::streamsize>(cfg_json.size()));

  std::uint64_t count = 0;
  params.for_each([&count](const char*, const Mat&) { ++count; });
  write_pod(out, count);
  params.for_each([&out](const char* name, const Mat& m) {
    const std::string n(name);
    write_pod(out, static_cast<std::uint64_t>(n.size()));
    out.write(n.data(), static_cast<std::streamsize>(n.size()));
    write_pod(out, static_cast<std::uint64_t>(m.rows()));
    write_pod(out, static_cast<std::uint64_t>(m.cols()));
    for (int r = 0; r < m.rows(); ++r) {
      for (int c = 0; c < m.cols(); ++c) {
        const double v = m(r, c);
        out.write(reinterpret_cast<const char*>(&v), sizeof(double));
      }
    }
  });
  if (!out) throw DataError("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != std::string(kMagic, 4)) {
    throw DataError("not a checkpoint file (bad magic): " + path);
  }
  const auto version = read_pod<std::uint32_t>(in, "version");
  if (version != kVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version) +
                    " (expected " + std::to_string(kVersion) + ")");
  }
  Checkpoint ck;
  ck.seed = read_pod<std::uint64_t>(in, "seed");
  const auto cfg_len = read_pod<std::uint64_t>(in, "config length");
  if (cfg_len > (1ULL << 24)) throw DataError("checkpoint config block oversized");
  std::string cfg_json(cfg_len, '\0');
  in.read(cfg_json.data(), static_cast<std::streamsize>(cfg_len));
  if (!in) throw DataError("checkpoint truncated while reading config");
  try {
    ck.cfg = parse_config(nlohmann::json::parse(cfg_json));
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint config invalid: ") + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint config unparsable: ") + e.what());
  }

  const auto count = read_pod<std::uint64_t>(in, "tensor count");
  if (count > (1ULL << 20)) throw DataError("checkpoint tensor count implausible");
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = read_pod<std::uint64_t>(in, "tensor name length");
    if (name_len > 4096) throw DataError("checkpoint tensor name oversized");
    std::string name(name_len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(name_len));
    if (!in) throw DataError("checkpoint truncated while reading tensor name");
    const auto rows = read_pod<std::uint64_t>(in, "tensor rows");
    const auto cols = read_pod<std::uint64_t>(in, "tensor cols");
    if (rows == 0 || cols == 0 || rows * cols > (1ULL << 32)) {
      throw DataError("checkpoint tensor '" + name + "' has implausible shape " +
                      std::to_string(rows) + "x" + std::to_string(cols));
    }
    Mat m(static_cast<int>(rows), static_cast<int>(cols));
    for (std::uint64_t r = 0; r < rows; ++r) {
      for (std::uint64_t c = 0; c < cols; ++c) {
        m(static_cast<int>(r), static_cast<int>(c)) =
            read_pod<double>(in, "tensor payload");
      }
    }
    if (!m.allFinite()) {
      throw DataError("checkpoint tensor '" + name + "' has non-finite entries");
    }
    assign_param(ck.params, name, std::move(m));
  }
  if (ck.params.user_embed.size() == 0 || ck.params.item_embed.size() == 0) {
    throw DataError("checkpoint missing embedding tensors");
  }
  return ck;
}

void write_history_csv(const std::string& path, const std::vector<HistoryRow>& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open history file for writing: " + path);
  out << "epoch,bpr,ssl,reg,val_ndcg20\n";
  for (const auto& r : rows) {
    out << r.epoch << ',' << csv_double(r.bpr) << ',' << csv_double(r.ssl) << ','
        << csv_double(r.reg) << ',' << csv_double(r.val_ndcg20) << '\n';
  }
}

void write_report_csv(const std::string& path, const std::vector<MetricRow>& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open report file for writing: " + path);
  out << "split,k,recall,ndcg,n_users,seed\n";
  for (const auto& r : rows) {
    out << r.split << ',' << r.k << ',' << csv_double(r.recall) << ','
        << csv_double(r.ndcg) << ',' << r.n_users << ',' << r.seed << '\n';
  }
}

}  // namespace hyperwave
