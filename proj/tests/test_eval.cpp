#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "hyperwave/data.hpp"
#include "hyperwave/eval.hpp"
#include "hyperwave/rng.hpp"
#include "hyperwave/types.hpp"

using namespace hyperwave;

namespace {

InteractionGraph graph_from_pairs(int n_users, int n_items,
                                  const std::vector<std::pair<int, int>>& pairs) {
  InteractionGraph g;
  g.n_users = n_users;
  g.n_items = n_items;
  for (int u = 0; u < n_users; ++u) {
    g.user_names.push_back("u" + std::to_string(u));
    g.user_ids["u" + std::to_string(u)] = u;
  }
  for (int i = 0; i < n_items; ++i) {
    g.item_names.push_back("i" + std::to_string(i));
    g.item_ids["i" + std::to_string(i)] = i;
  }
  for (const auto& [u, i] : pairs) g.interactions.push_back({u, i, -1});
  g.validate();
  return g;
}

SplitBundle make_split(int n_users, int n_items,
                       const std::vector<std::pair<int, int>>& train_pairs,
                       const std::vector<std::pair<int, int>>& val_pairs,
                       const std::vector<std::pair<int, int>>& test_pairs = {}) {
  SplitBundle s;
  s.train = graph_from_pairs(n_users, n_items, train_pairs);
  s.val = graph_from_pairs(n_users, n_items, val_pairs);
  s.test = graph_from_pairs(n_users, n_items, test_pairs);
  return s;
}

// Straight-line reimplementations used as independent referees.
double ref_recall(const std::vector<int>& ranked, const std::vector<char>& relevant,
                  int n_relevant, int k) {
  int hits = 0;
  for (int i = 0; i < std::min<int>(k, ranked.size()); ++i) {
    hits += relevant[ranked[i]] ? 1 : 0;
  }
  return static_cast<double>(hits) / n_relevant;
}

double ref_ndcg(const std::vector<int>& ranked, const std::vector<char>& relevant,
                int n_relevant, int k) {
  double dcg = 0.0;
  for (int i = 0; i < std::min<int>(k, ranked.size()); ++i) {
    if (relevant[ranked[i]]) dcg += 1.0 / std::log2(i + 2.0);
  }
  double idcg = 0.0;
  for (int i = 0; i < std::min(k, n_relevant); ++i) idcg += 1.0 / std::log2(i + 2.0);
  return dcg / idcg;
}

}  // namespace

TEST_CASE("rank_items orders by score with ascending-id tie break") {
  Vec scores(5);
  scores << 0.3, 0.9, 0.3, -1.0, 0.9;
  const std::vector<char> none(5, 0);
  CHECK(rank_items(scores, none) == std::vector<int>{1, 4, 0, 2, 3});
  CHECK(rank_items(scores, none, 2) == std::vector<int>{1, 4});
  CHECK(rank_items(scores, none, 0).empty());

  std::vector<char> exclude(5, 0);
  exclude[1] = exclude[3] = 1;
  CHECK(rank_items(scores, exclude) == std::vector<int>{4, 0, 2});

  const std::vector<char> all(5, 1);
  CHECK(rank_items(scores, all).empty());
  CHECK_THROWS(rank_items(scores, std::vector<char>(4, 0)));
}

TEST_CASE("rank_items agrees with a brute-force stable sort") {
  for (std::uint64_t trial = 0; trial < 50; ++trial) {
    Rng rng(500 + trial);
    const int n = rng.uniform_int(1, 40);
    Vec scores(n);
    std::vector<char> exclude(n, 0);
    for (int i = 0; i < n; ++i) {
      // Coarse grid forces plenty of ties.
      scores[i] = rng.uniform_int(0, 4) * 0.25;
      exclude[i] = rng.uniform() < 0.3 ? 1 : 0;
    }
    std::vector<int> expected;
    for (int i = 0; i < n; ++i) {
      if (!exclude[i]) expected.push_back(i);
    }
    std::stable_sort(expected.begin(), expected.end(),
                     [&scores](int a, int b) { return scores[a] > scores[b]; });
    CHECK(rank_items(scores, exclude) == expected);
    const int k = rng.uniform_int(0, n);
    std::vector<int> head = expected;
    if (k < static_cast<int>(head.size())) head.resize(k);
    CHECK(rank_items(scores, exclude, k) == head);
  }
}

TEST_CASE("recall hand values") {
  const std::vector<int> ranked = {3, 1, 0, 2};
  std::vector<char> rel(4, 0);
  rel[3] = 1;
  CHECK(recall_at_k(ranked, rel, 1, 1) == 1.0);

  rel.assign(4, 0);
  rel[0] = rel[1] = rel[2] = 1;
  CHECK(recall_at_k(ranked, rel, 3, 2) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  rel.assign(4, 0);
  rel[2] = 1;
  CHECK(recall_at_k(ranked, rel, 1, 3) == 0.0);
  CHECK_THROWS(recall_at_k(ranked, rel, 1, 0));
  CHECK_THROWS(recall_at_k(ranked, rel, 0, 1));
}

TEST_CASE("ranking-quality hand values") {
  // Perfect single-item retrieval.
  std::vector<char> rel(3, 0);
  rel[2] = 1;
  CHECK(ndcg_at_k({2, 0, 1}, rel, 1, 2) == 1.0);

  // The relevant item at the second position discounts to 1/log2(3).
  rel.assign(3, 0);
  rel[0] = 1;
  CHECK(ndcg_at_k({1, 0, 2}, rel, 1, 2) ==
        doctest::Approx(0.6309297535714574).epsilon(1e-15));

  // Two relevant, only one retrieved at rank two: the ideal now stacks two
  // discounts.
  rel.assign(3, 0);
  rel[0] = rel[2] = 1;
  const double second = 1.0 / std::log2(3.0);
  CHECK(ndcg_at_k({1, 0, 2}, rel, 2, 2) ==
        doctest::Approx(second / (1.0 + second)).epsilon(1e-14));

  rel.assign(3, 0);
  rel[1] = 1;
  CHECK(ndcg_at_k({2, 0}, rel, 1, 2) == 0.0);
}

TEST_CASE("metrics agree with the referee across one thousand random cases") {
  for (std::uint64_t trial = 0; trial < 1000; ++trial) {
    Rng rng(1000 + trial);
    const int n = rng.uniform_int(2, 60);
    Vec scores(n);
    for (int i = 0; i < n; ++i) scores[i] = rng.uniform_int(0, 6) * 0.5;
    std::vector<char> relevant(n, 0);
    int n_relevant = 0;
    for (int i = 0; i < n; ++i) {
      if (rng.uniform() < 0.25) {
        relevant[i] = 1;
        ++n_relevant;
      }
    }
    if (n_relevant == 0) {
      relevant[rng.uniform_int(0, n - 1)] = 1;
      n_relevant = 1;
    }
    const int k = rng.uniform_int(1, n + 5);
    const std::vector<int> ranked = rank_items(scores, std::vector<char>(n, 0));
    CHECK(recall_at_k(ranked, relevant, n_relevant, k) ==
          doctest::Approx(ref_recall(ranked, relevant, n_relevant, k)).epsilon(1e-12));
    CHECK(ndcg_at_k(ranked, relevant, n_relevant, k) ==
          doctest::Approx(ref_ndcg(ranked, relevant, n_relevant, k)).epsilon(1e-12));
  }
}

TEST_CASE("recall is monotone in the cutoff") {
  Rng rng(2222);
  const int n = 40;
  Vec scores(n);
  std::vector<char> relevant(n, 0);
  for (int i = 0; i < n; ++i) {
    scores[i] = rng.gaussian();
    relevant[i] = rng.uniform() < 0.3 ? 1 : 0;
  }
  relevant[0] = 1;
  const int n_rel =
      static_cast<int>(std::count(relevant.begin(), relevant.end(), 1));
  const std::vector<int> ranked = rank_items(scores, std::vector<char>(n, 0));
  double prev = 0.0;
  for (int k = 1; k <= n; ++k) {
    const double r = recall_at_k(ranked, relevant, n_rel, k);
    CHECK(r >= prev);
    prev = r;
  }
  CHECK(prev == 1.0);
}

TEST_CASE("one-hot embeddings that index the held-out item score perfectly") {
  // User u's embedding is the indicator of item u+1, which is exactly their
  // val item; train items are distinct so the exclusion cannot mask it.
  const int n = 5;
  std::vector<std::pair<int, int>> train_pairs, val_pairs;
  for (int u = 0; u < n - 1; ++u) {
    train_pairs.emplace_back(u, 0);
    val_pairs.emplace_back(u, u + 1);
  }
  const SplitBundle split = make_split(n - 1, n, train_pairs, val_pairs);
  Mat users = Mat::Zero(n - 1, n);
  for (int u = 0; u < n - 1; ++u) users(u, u + 1) = 1.0;
  const Mat items = Mat::Identity(n, n);
  const MetricReport rep = evaluate(users, items, split, "val", {1, 5}, 9);
  CHECK(rep.at(1).recall == 1.0);
  CHECK(rep.at(1).ndcg == 1.0);
  CHECK(rep.at(5).recall == 1.0);
  CHECK(rep.at(5).n_users == n - 1);
}

TEST_CASE("training items are excluded from every ranking") {
  // Item 0 dominates every score; as a train item it must be skipped, putting
  // the val item on top.
  const SplitBundle split = make_split(1, 3, {{0, 0}}, {{0, 1}});
  Mat users(1, 3), items(3, 3);
  users << 1.0, 0.0, 0.0;
  items << 100.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.5, 0.0, 0.0;
  const MetricReport rep = evaluate(users, items, split, "val", {1}, 9);
  CHECK(rep.at(1).recall == 1.0);
  CHECK(rep.at(1).ndcg == 1.0);
}

TEST_CASE("full evaluation matches a per-user referee on random problems") {
  Rng rng(3333);
  const int n_users = 30, n_items = 50;
  std::vector<std::pair<int, int>> train_pairs, val_pairs;
  for (int u = 0; u < n_users; ++u) {
    std::vector<int> picked;
    while (static_cast<int>(picked.size()) < 6) {
      const int i = rng.uniform_int(0, n_items - 1);
      if (std::find(picked.begin(), picked.end(), i) == picked.end()) {
        picked.push_back(i);
      }
    }
    for (int j = 0; j < 4; ++j) train_pairs.emplace_back(u, picked[j]);
    if (u % 3 != 0) {  // leave a third of the users without val items
      val_pairs.emplace_back(u, picked[4]);
      val_pairs.emplace_back(u, picked[5]);
    }
  }
  const SplitBundle split = make_split(n_users, n_items, train_pairs, val_pairs);
  Mat users(n_users, 8), items(n_items, 8);
  for (int r = 0; r < n_users; ++r) {
    for (int c = 0; c < 8; ++c) users(r, c) = rng.gaussian();
  }
  for (int r = 0; r < n_items; ++r) {
    for (int c = 0; c < 8; ++c) items(r, c) = rng.gaussian();
  }

  const std::vector<int> ks = {5, 10};
  const MetricReport rep = evaluate(users, items, split, "val", ks, 1);

  const auto train_of = split.train.items_by_user();
  const auto val_of = split.val.items_by_user();
  std::vector<double> recall_sum(ks.size(), 0.0), ndcg_sum(ks.size(), 0.0);
  int counted = 0;
  for (int u = 0; u < n_users; ++u) {
    if (val_of[u].empty()) continue;
    std::vector<char> exclude(n_items, 0), relevant(n_items, 0);
    for (int i : train_of[u]) exclude[i] = 1;
    for (int i : val_of[u]) relevant[i] = 1;
    const Vec scores = items * users.row(u).transpose();
    const std::vector<int> ranked = rank_items(scores, exclude);
    for (std::size_t j = 0; j < ks.size(); ++j) {
      recall_sum[j] +=
          ref_recall(ranked, relevant, static_cast<int>(val_of[u].size()), ks[j]);
      ndcg_sum[j] +=
          ref_ndcg(ranked, relevant, static_cast<int>(val_of[u].size()), ks[j]);
    }
    ++counted;
  }
  REQUIRE(counted > 0);
  for (std::size_t j = 0; j < ks.size(); ++j) {
    CHECK(rep.at(ks[j]).recall ==
          doctest::Approx(recall_sum[j] / counted).epsilon(1e-12));
    CHECK(rep.at(ks[j]).ndcg ==
          doctest::Approx(ndcg_sum[j] / counted).epsilon(1e-12));
    CHECK(rep.at(ks[j]).n_users == counted);
  }
}

TEST_CASE("evaluation refuses splits with nothing to predict") {
  const SplitBundle split = make_split(2, 3, {{0, 0}, {1, 1}}, {});
  const Mat users = Mat::Ones(2, 2);
  const Mat items = Mat::Ones(3, 2);
  CHECK_THROWS_AS(evaluate(users, items, split, "val", {5}, 1), DataError);
  CHECK_THROWS_AS(evaluate(users, items, split, "bogus", {5}, 1), ConfigError);
  Mat bad = users;
  bad(0, 0) = std::nan("");
  const SplitBundle ok = make_split(2, 3, {{0, 0}}, {{0, 1}});
  CHECK_THROWS_AS(evaluate(bad, items, ok, "val", {5}, 1), NumericError);
}

TEST_CASE("random embeddings score at the chance rate") {
  // One relevant item per user in a 1000-item catalog: recall@10 should
  // concentrate near 10/1000 once averaged over users and seeds.
  const int n_users = 100, n_items = 1000, k = 10;
  std::vector<std::pair<int, int>> train_pairs, val_pairs;
  Rng setup(4444);
  for (int u = 0; u < n_users; ++u) {
    const int t = setup.uniform_int(0, n_items - 1);
    train_pairs.emplace_back(u, t);
    int v = setup.uniform_int(0, n_items - 1);
    while (v == t) v = setup.uniform_int(0, n_items - 1);
    val_pairs.emplace_back(u, v);
  }
  const SplitBundle split = make_split(n_users, n_items, train_pairs, val_pairs);

  double acc = 0.0;
  const int n_seeds = 40;
  for (int s = 0; s < n_seeds; ++s) {
    Rng rng(5000 + s);
    Mat users(n_users, 8), items(n_items, 8);
    for (int r = 0; r < n_users; ++r) {
      for (int c = 0; c < 8; ++c) users(r, c) = rng.gaussian();
    }
    for (int r = 0; r < n_items; ++r) {
      for (int c = 0; c < 8; ++c) items(r, c) = rng.gaussian();
    }
    acc += evaluate(users, items, split, "val", {k}, s).at(k).recall;
  }
  const double mean_recall = acc / n_seeds;
  CHECK(mean_recall == doctest::Approx(0.01).epsilon(0.5));
  CHECK(std::abs(mean_recall - 0.01) < 0.005);
}

TEST_CASE("popularity ranking sorts by count with ascending-id ties") {
  const InteractionGraph g = graph_from_pairs(
      3, 4, {{0, 2}, {1, 2}, {2, 2}, {0, 1}, {1, 1}, {0, 3}});
  CHECK(popularity_ranking(g) == std::vector<int>{2, 1, 3, 0});

  // Referee: brute-force count sort over a random graph.
  Rng rng(6666);
  std::vector<std::pair<int, int>> pairs;
  const int n_items = 12;
  for (int u = 0; u < 8; ++u) {
    std::vector<int> picked;
    while (static_cast<int>(picked.size()) < 3) {
      const int i = rng.uniform_int(0, n_items - 1);
      if (std::find(picked.begin(), picked.end(), i) == picked.end()) {
        picked.push_back(i);
        pairs.emplace_back(u, i);
      }
    }
  }
  const InteractionGraph rnd = graph_from_pairs(8, n_items, pairs);
  std::vector<int> counts(n_items, 0);
  for (const auto& it : rnd.interactions) counts[it.item]++;
  const std::vector<int> ranking = popularity_ranking(rnd);
  for (std::size_t i = 1; i < ranking.size(); ++i) {
    const bool ordered =
        counts[ranking[i - 1]] > counts[ranking[i]] ||
        (counts[ranking[i - 1]] == counts[ranking[i]] && ranking[i - 1] < ranking[i]);
    CHECK(ordered);
  }
}

TEST_CASE("popularity evaluation follows the shared protocol") {
  // Train counts rank item 0 first, but user 0 already owns it, so their
  // top slot falls to item 1 -- their val item.
  const SplitBundle split = make_split(
      3, 3, {{0, 0}, {1, 0}, {2, 0}, {1, 1}}, {{0, 1}});
  const MetricReport rep = evaluate_popularity(split, "val", {1, 2}, 3);
  CHECK(rep.at(1).recall == 1.0);
  CHECK(rep.at(1).ndcg == 1.0);
  CHECK(rep.at(1).n_users == 1);
}
