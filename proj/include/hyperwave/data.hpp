#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "hyperwave/rng.hpp"
#include "hyperwave/types.hpp"

namespace hyperwave {

struct Interaction {
  int user = 0;
  int item = 0;
  std::int64_t timestamp = -1;  // -1 when absent; kept for format compatibility, unused by the model
};

// Bipartite user-item interactions with dense ids and the external-name maps.
struct InteractionGraph {
  int n_users = 0;
  int n_items = 0;
  std::vector<Interaction> interactions;
  std::vector<std::string> user_names;  // dense id -> external string
  std::vector<std::string> item_names;
  std::unordered_map<std::string, int> user_ids;
  std::unordered_map<std::string, int> item_ids;

  // Items per user, ascending; built lazily by callers that need it.
  std::vector<std::vector<int>> items_by_user() const;
  std::vector<std::vector<int>> users_by_item() const;

  void validate() const;  // throws DataError on invariant violations
};

// Node set plus hyperedge membership in sparse form. Edge order is the
// construction order; node lists within an edge are sorted ascending.
struct Hypergraph {
  int n_nodes = 0;
  std::vector<std::vector<int>> edges;          // edge -> member nodes
  std::vector<double> edge_weights;             // positive, default 1

  int n_edges() const { return static_cast<int>(edges.size()); }
  std::size_t incidence_nnz() const;
  void validate() const;
};

struct SplitRatios {
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;
};

struct SplitBundle {
  InteractionGraph train;
  InteractionGraph val;
  InteractionGraph test;
  std::uint64_t seed = 0;
  SplitRatios ratios;
};

struct TextEmbeddings {
  Mat matrix;  // n_entities x d_text
  enum class Kind { user, item } kind = Kind::user;
};

struct SyntheticLabels {
  std::vector<int> user_groups;
  std::vector<int> item_genres;
  int n_groups = 0;
  int n_genres = 0;
};

InteractionGraph load_interactions(const std::string& path);

SplitBundle split_interactions(const InteractionGraph& g, SplitRatios ratios, std::uint64_t seed);

// One hyperedge per item that has at least one interacting user in train;
// membership is that item's user set. Singleton edges are kept.
Hypergraph build_user_hypergraph(const InteractionGraph& train);

// Mirror with roles swapped: one hyperedge per user over their item set.
Hypergraph build_item_hypergraph(const InteractionGraph& train);

// Heterophilic benchmark generator. Each draw lands in the user's home genre
// with probability (1 - cross_rate) + cross_rate / n_item_genres; the
// cross_rate mass is spread uniformly over the whole catalog. Items per user
// are distinct. Deterministic per seed.
std::pair<InteractionGraph, SyntheticLabels> generate_synthetic_heterophilic(
    int n_users, int n_items, int n_user_groups, int n_item_genres, double cross_rate,
    int interactions_per_user, std::uint64_t seed);

TextEmbeddings load_text_embeddings(const std::string& path, int expected_entities,
                                    TextEmbeddings::Kind kind);

// Config-seeded pseudo-random matrix for the `--text synth` path.
TextEmbeddings synth_text_embeddings(int n_entities, int dim, std::uint64_t seed,
                                     TextEmbeddings::Kind kind);

// Label-derived text embeddings (one-hot group/genre plus seeded noise);
// written by the synth command so the textual stream carries real signal.
Mat label_text_matrix(const std::vector<int>& labels, int n_classes, double noise,
                      std::uint64_t seed);

void write_interactions(const InteractionGraph& g, const std::string& path);
void write_text_embeddings(const Mat& m, const std::string& path);

}  // namespace hyperwave
