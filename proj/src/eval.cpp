#include "hyperwave/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace hyperwave {
namespace {

// Precomputed 1/log2(i+2) discount table grown on demand.
double discount(int position) {
  return 1.0 / std::log2(static_cast<double>(position) + 2.0);
}

const InteractionGraph& pick_split(const SplitBundle& split, const std::string& which) {
  if (which == "train") return split.train;
  if (which == "val") return split.val;
  if (which == "test") return split.test;
  throw ConfigError("unknown split name: " + which);
}

struct MetricAccumulator {
  std::vector<double> recall_sum;
  std::vector<double> ndcg_sum;
  int n_users = 0;

  explicit MetricAccumulator(std::size_t n_ks)
      : recall_sum(n_ks, 0.0), ndcg_sum(n_ks, 0.0) {}

  void add(const std::vector<int>& ranked, const std::vector<char>& relevant,
           int n_relevant, const std::vector<int>& ks) {
    for (std::size_t j = 0; j < ks.size(); ++j) {
      recall_sum[j] += recall_at_k(ranked, relevant, n_relevant, ks[j]);
      ndcg_sum[j] += ndcg_at_k(ranked, relevant, n_relevant, ks[j]);
    }
    ++n_users;
  }

  MetricReport report(const std::string& which, const std::vector<int>& ks,
                      std::uint64_t seed) const {
    if (n_users == 0) {
      throw DataError("no evaluable users in split '" + which + "'");
    }
    MetricReport rep;
    for (std::size_t j = 0; j < ks.size(); ++j) {
      MetricRow row;
      row.split = which;
      row.k = ks[j];
      row.recall = recall_sum[j] / n_users;
      row.ndcg = ndcg_sum[j] / n_users;
      row.n_users = n_users;
      row.seed = seed;
      rep.rows.push_back(row);
    }
    return rep;
  }
};

}  // namespace

const MetricRow& MetricReport::at(int k) const {
  for (const auto& row : rows) {
    if (row.k == k) return row;
  }
  throw ConfigError("metric report has no row for k=" + std::to_string(k));
}

std::vector<int> rank_items(const Vec& scores, const std::vector<char>& exclude,
                            int top_k) {
  const auto n = static_cast<int>(scores.size());
  require(static_cast<int>(exclude.size()) == n,
          "rank_items: exclude mask size mismatch");
  std::vector<int> ids;
  ids.reserve(n);
  for (int i = 0; i < n; ++i) {
    if (!exclude[i]) ids.push_back(i);
  }
  auto better = [&scores](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  if (top_k >= 0 && top_k < static_cast<int>(ids.size())) {
    std::partial_sort(ids.begin(), ids.begin() + top_k, ids.end(), better);
    ids.resize(top_k);
  } else {
    std::sort(ids.begin(), ids.end(), better);
  }
  return ids;
}

double recall_at_k(const std::vector<int>& ranked, const std::vector<char>& relevant,
                   int n_relevant, int k) {
  require(k >= 1, "recall_at_k: k must be >= 1");
  require(n_relevant >= 1, "recall_at_k: needs at least one relevant item");
  const int limit = std::min<int>(k, static_cast<int>(ranked.size()));
  int hits = 0;
  for (int i = 0; i < limit; ++i) {
    if (relevant[ranked[i]]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n_relevant);
}

double ndcg_at_k(const std::vector<int>& ranked, const std::vector<char>& relevant,
                 int n_relevant, int k) {
  require(k >= 1, "ndcg_at_k: k must be >= 1");
  require(n_relevant >= 1, "ndcg_at_k: needs at least one relevant item");
  const int limit = std::min<int>(k, static_cast<int>(ranked.size()));
  double dcg = 0.0;
  for (int i = 0; i < limit; ++i) {
    if (relevant[ranked[i]]) dcg += discount(i);
  }
  double idcg = 0.0;
  const int ideal = std::min(k, n_relevant);
  for (int i = 0; i < ideal; ++i) idcg += discount(i);
  return dcg / idcg;
}

MetricReport evaluate(const Mat& users_emb, const Mat& items_emb,
                      const SplitBundle& split, const std::string& which,
                      const std::vector<int>& ks, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  require(!ks.empty(), "evaluate: ks must be non-empty");
  const InteractionGraph& target = pick_split(split, which);
  const int n_users = split.train.n_users;
  const int n_items = split.train.n_items;
  require(users_emb.rows() == n_users && items_emb.rows() == n_items,
          "evaluate: embedding row counts do not match the id space");
  require(users_emb.cols() == items_emb.cols(), "evaluate: dim mismatch");
  for (const Mat* m : {&users_emb, &items_emb}) {
    if (!m->allFinite()) throw NumericError("evaluate: non-finite embeddings");
  }
  const int max_k = *std::max_element(ks.begin(), ks.end());

  const auto train_items = split.train.items_by_user();
  const auto target_items = target.items_by_user();

  MetricAccumulator acc(ks.size());
  std::vector<char> exclude(n_items, 0);
  std::vector<char> relevant(n_items, 0);
  for (int u = 0; u < n_users; ++u) {
    const auto& rel_items = target_items[u];
    if (rel_items.empty()) continue;  // user has nothing to predict here
    const auto& tr = train_items[u];
    if (static_cast<int>(tr.size()) >= n_items) continue;  // nothing rankable
    for (int i : tr) exclude[i] = 1;
    for (int i : rel_items) relevant[i] = 1;
    const Vec scores = items_emb * users_emb.row(u).transpose();
    const std::vector<int> ranked = rank_items(scores, exclude, max_k);
    acc.add(ranked, relevant, static_cast<int>(rel_items.size()), ks);
    for (int i : tr) exclude[i] = 0;
    for (int i : rel_items) relevant[i] = 0;
  }
  MetricReport rep = acc.report(which, ks, seed);
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

std::vector<int> popularity_ranking(const InteractionGraph& train) {
  std::vector<int> counts(train.n_items, 0);
  for (const auto& it : train.interactions) counts[it.item]++;
  std::vector<int> ids(train.n_items);
  std::iota(ids.begin(), ids.end(), 0);
  std::sort(ids.begin(), ids.end(), [&counts](int a, int b) {
    if (counts[a] != counts[b]) return counts[a] > counts[b];
    return a < b;
  });
  return ids;
}

MetricReport evaluate_popularity(const SplitBundle& split, const std::string& which,
                                 const std::vector<int>& ks, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  require(!ks.empty(), "evaluate_popularity: ks must be non-empty");
  const InteractionGraph& target = pick_split(split, which);
  const int n_items = split.train.n_items;
  const int max_k = *std::max_element(ks.begin(), ks.end());
  const std::vector<int> global = popularity_ranking(split.train);

  const auto train_items = split.train.items_by_user();
  const auto target_items = target.items_by_user();

  MetricAccumulator acc(ks.size());
  std::vector<char> exclude(n_items, 0);
  std::vector<char> relevant(n_items, 0);
  for (int u = 0; u < split.train.n_users; ++u) {
    const auto& rel_items = target_items[u];
    if (rel_items.empty()) continue;
    const auto& tr = train_items[u];
    if (static_cast<int>(tr.size()) >= n_items) continue;
    for (int i : tr) exclude[i] = 1;
    for (int i : rel_items) relevant[i] = 1;
    std::vector<int> ranked;
    ranked.reserve(max_k);
    for (int i : global) {
      if (exclude[i]) continue;
      ranked.push_back(i);
      if (static_cast<int>(ranked.size()) == max_k) break;
    }
    acc.add(ranked, relevant, static_cast<int>(rel_items.size()), ks);
    for (int i : tr) exclude[i] = 0;
    for (int i : rel_items) relevant[i] = 0;
  }
  MetricReport rep = acc.report(which, ks, seed);
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace hyperwave
