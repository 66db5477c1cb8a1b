#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hyperwave/data.hpp"
#include "hyperwave/types.hpp"

namespace hyperwave {

struct MetricRow {
  std::string split;
  int k = 0;
  double recall = 0.0;
  double ndcg = 0.0;
  int n_users = 0;
  std::uint64_t seed = 0;
};

struct MetricReport {
  std::vector<MetricRow> rows;
  double wall_seconds = 0.0;

  // Lookup by k; throws if the report has no such row.
  const MetricRow& at(int k) const;
};

// All item ids whose exclude flag is unset, ordered by score descending with
// ties broken by ascending id. top_k < 0 returns the full ordering, otherwise
// at most top_k entries.
std::vector<int> rank_items(const Vec& scores, const std::vector<char>& exclude,
                            int top_k = -1);

// relevant is an item-id mask with n_relevant set bits; both metrics use
// binary relevance. k >= 1.
double recall_at_k(const std::vector<int>& ranked, const std::vector<char>& relevant,
                   int n_relevant, int k);
double ndcg_at_k(const std::vector<int>& ranked, const std::vector<char>& relevant,
                 int n_relevant, int k);

// Full-ranking evaluation of embedding scores over one split, averaged over
// users with at least one relevant item; training items are excluded from
// every ranking. Throws DataError when no user is evaluable.
MetricReport evaluate(const Mat& users_emb, const Mat& items_emb,
                      const SplitBundle& split, const std::string& which,
                      const std::vector<int>& ks, std::uint64_t seed);

// Items by descending train interaction count, ties by ascending id.
std::vector<int> popularity_ranking(const InteractionGraph& train);

// Evaluates the popularity ranking under the same protocol as evaluate().
MetricReport evaluate_popularity(const SplitBundle& split, const std::string& which,
                                 const std::vector<int>& ks, std::uint64_t seed);

}  // namespace hyperwave
