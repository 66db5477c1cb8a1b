#include "hyperwave/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace hyperwave {

std::vector<std::vector<int>> InteractionGraph::items_by_user() const {
  std::vector<std::vector<int>> out(n_users);
  for (const auto& it : interactions) out[it.user].push_back(it.item);
  for (auto& v : out) std::sort(v.begin(), v.end());
  return out;
}

std::vector<std::vector<int>> InteractionGraph::users_by_item() const {
  std::vector<std::vector<int>> out(n_items);
  for (const auto& it : interactions) out[it.item].push_back(it.user);
  for (auto& v : out) std::sort(v.begin(), v.end());
  return out;
}

void InteractionGraph::validate() const {
  if (!user_names.empty() && static_cast<int>(user_names.size()) != n_users)
    throw DataError("user id map cardinality does not match n_users");
  if (!item_names.empty() && static_cast<int>(item_names.size()) != n_items)
    throw DataError("item id map cardinality does not match n_items");
  std::set<std::pair<int, int>> seen;
  for (const auto& it : interactions) {
    if (it.user < 0 || it.user >= n_users) throw DataError("user id out of range");
    if (it.item < 0 || it.item >= n_items) throw DataError("item id out of range");
    if (!seen.insert({it.user, it.item}).second)
      throw DataError("duplicate (user, item) interaction");
  }
}

std::size_t Hypergraph::incidence_nnz() const {
  std::size_t nnz = 0;
  for (const auto& e : edges) nnz += e.size();
  return nnz;
}

void Hypergraph::validate() const {
  if (edge_weights.size() != edges.size()) throw DataError("edge weight count mismatch");
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (edges[e].empty()) throw DataError("empty hyperedge");
    if (edge_weights[e] <= 0.0) throw DataError("non-positive hyperedge weight");
    int prev = -1;
    for (int v : edges[e]) {
      if (v < 0 || v >= n_nodes) throw DataError("hyperedge node out of range");
      if (v <= prev) throw DataError("hyperedge nodes not sorted/unique");
      prev = v;
    }
  }
}

namespace {

bool parse_int64(std::string_view s, std::int64_t& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto res = std::from_chars(b, e, out);
  return res.ec == std::errc() && res.ptr == e;
}

}  // namespace

InteractionGraph load_interactions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open interaction file: " + path);

  InteractionGraph g;
  // (user, item) -> index into g.interactions, for duplicate collapse
  std::unordered_map<std::int64_t, std::size_t> pair_index;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    const auto t1 = line.find('\t');
    if (t1 == std::string::npos || t1 == 0)
      throw DataError("parse error at line " + std::to_string(line_no) +
                      ": expected user<TAB>item[<TAB>timestamp]");
    const auto t2 = line.find('\t', t1 + 1);
    const std::string user = line.substr(0, t1);
    const std::string item =
        t2 == std::string::npos ? line.substr(t1 + 1) : line.substr(t1 + 1, t2 - t1 - 1);
    if (item.empty())
      throw DataError("parse error at line " + std::to_string(line_no) + ": empty item field");

    std::int64_t ts = -1;
    if (t2 != std::string::npos) {
      const std::string_view tail(line.c_str() + t2 + 1, line.size() - t2 - 1);
      if (!parse_int64(tail, ts))
        throw DataError("parse error at line " + std::to_string(line_no) +
                        ": bad timestamp '" + std::string(tail) + "'");
    }

    int uid;
    if (auto it = g.user_ids.find(user); it != g.user_ids.end()) {
      uid = it->second;
    } else {
      uid = g.n_users++;
      g.user_ids.emplace(user, uid);
      g.user_names.push_back(user);
    }
    int iid;
    if (auto it = g.item_ids.find(item); it != g.item_ids.end()) {
      iid = it->second;
    } else {
      iid = g.n_items++;
      g.item_ids.emplace(item, iid);
      g.item_names.push_back(item);
    }

    const std::int64_t key = static_cast<std::int64_t>(uid) * (1LL << 31) + iid;
    if (auto it = pair_index.find(key); it != pair_index.end()) {
      // duplicate: keep the earliest timestamp
      auto& existing = g.interactions[it->second];
      if (ts >= 0 && (existing.timestamp < 0 || ts < existing.timestamp)) existing.timestamp = ts;
    } else {
      pair_index.emplace(key, g.interactions.size());
      g.interactions.push_back({uid, iid, ts});
    }
  }

  if (g.interactions.empty()) throw DataError("empty dataset: " + path);
  return g;
}

SplitBundle split_interactions(const InteractionGraph& g, SplitRatios ratios, std::uint64_t seed) {
  require(ratios.train > 0 && ratios.val > 0 && ratios.test > 0, "split ratios must be positive");
  require(std::abs(ratios.train + ratios.val + ratios.test - 1.0) < 1e-9,
          "split ratios must sum to 1");

  std::vector<std::vector<Interaction>> per_user(g.n_users);
  for (const auto& it : g.interactions) per_user[it.user].push_back(it);

  SplitBundle b;
  b.seed = seed;
  b.ratios = ratios;
  for (InteractionGraph* part : {&b.train, &b.val, &b.test}) {
    part->n_users = g.n_users;
    part->n_items = g.n_items;
    part->user_names = g.user_names;
    part->item_names = g.item_names;
    part->user_ids = g.user_ids;
    part->item_ids = g.item_ids;
  }

  Rng rng(seed);
  for (int u = 0; u < g.n_users; ++u) {
    auto& list = per_user[u];
    const int n = static_cast<int>(list.size());
    if (n == 0) continue;
    if (n < 3) {  // cold-start rule: too few interactions to split
      for (const auto& it : list) b.train.interactions.push_back(it);
      continue;
    }
    rng.shuffle(list);
    const int n_val = static_cast<int>(std::floor(n * ratios.val));
    const int n_test = static_cast<int>(std::floor(n * ratios.test));
    const int n_train = n - n_val - n_test;  // rounding remainder goes to train
    for (int i = 0; i < n; ++i) {
      if (i < n_train)
        b.train.interactions.push_back(list[i]);
      else if (i < n_train + n_val)
        b.val.interactions.push_back(list[i]);
      else
        b.test.interactions.push_back(list[i]);
    }
  }
  return b;
}

Hypergraph build_user_hypergraph(const InteractionGraph& train) {
  require(!train.interactions.empty(), "train split is empty");
  Hypergraph hg;
  hg.n_nodes = train.n_users;
  auto by_item = train.users_by_item();
  for (int i = 0; i < train.n_items; ++i) {
    if (by_item[i].empty()) continue;  // items with zero users emit no hyperedge
    hg.edges.push_back(std::move(by_item[i]));
    hg.edge_weights.push_back(1.0);
  }
  return hg;
}

Hypergraph build_item_hypergraph(const InteractionGraph& train) {
  require(!train.interactions.empty(), "train split is empty");
  Hypergraph hg;
  hg.n_nodes = train.n_items;
  auto by_user = train.items_by_user();
  for (int u = 0; u < train.n_users; ++u) {
    if (by_user[u].empty()) continue;
    hg.edges.push_back(std::move(by_user[u]));
    hg.edge_weights.push_back(1.0);
  }
  return hg;
}

std::pair<InteractionGraph, SyntheticLabels> generate_synthetic_heterophilic(
    int n_users, int n_items, int n_user_groups, int n_item_genres, double cross_rate,
    int interactions_per_user, std::uint64_t seed) {
  require(n_users > 0 && n_items > 0 && n_user_groups > 0 && n_item_genres > 0 &&
              interactions_per_user > 0,
          "all synthetic generator counts must be positive");
  require(cross_rate >= 0.0 && cross_rate <= 1.0, "cross_rate must be in [0, 1]");
  if (interactions_per_user > n_items)
    throw DataError("interactions_per_user exceeds n_items");

  SyntheticLabels labels;
  labels.n_groups = n_user_groups;
  labels.n_genres = n_item_genres;
  labels.user_groups.resize(n_users);
  labels.item_genres.resize(n_items);

  // Contiguous genre blocks; genre g owns items [g*n/G, (g+1)*n/G).
  std::vector<std::vector<int>> genre_items(n_item_genres);
  for (int i = 0; i < n_items; ++i) {
    const int genre = std::min(n_item_genres - 1,
                               static_cast<int>(static_cast<std::int64_t>(i) * n_item_genres / n_items));
    labels.item_genres[i] = genre;
    genre_items[genre].push_back(i);
  }
  for (int u = 0; u < n_users; ++u) {
    labels.user_groups[u] = std::min(
        n_user_groups - 1, static_cast<int>(static_cast<std::int64_t>(u) * n_user_groups / n_users));
  }

  if (cross_rate == 0.0) {
    for (int gr = 0; gr < n_user_groups; ++gr) {
      const int home = gr % n_item_genres;
      if (static_cast<int>(genre_items[home].size()) < interactions_per_user)
        throw DataError("cross_rate 0 needs at least interactions_per_user items per home genre");
    }
  }

  InteractionGraph g;
  g.n_users = n_users;
  g.n_items = n_items;
  g.user_names.reserve(n_users);
  g.item_names.reserve(n_items);
  for (int u = 0; u < n_users; ++u) {
    g.user_names.push_back("u" + std::to_string(u));
    g.user_ids.emplace(g.user_names.back(), u);
  }
  for (int i = 0; i < n_items; ++i) {
    g.item_names.push_back("i" + std::to_string(i));
    g.item_ids.emplace(g.item_names.back(), i);
  }

  Rng rng(seed);
  std::vector<char> taken(n_items, 0);
  std::vector<int> drawn;
  for (int u = 0; u < n_users; ++u) {
    const int home = labels.user_groups[u] % n_item_genres;
    const auto& home_pool = genre_items[home];
    drawn.clear();
    while (static_cast<int>(drawn.size()) < interactions_per_user) {
      int item;
      if (rng.uniform() < 1.0 - cross_rate) {
        item = home_pool[rng.uniform_index(home_pool.size())];
      } else {
        item = static_cast<int>(rng.uniform_index(n_items));
      }
      if (taken[item]) continue;
      taken[item] = 1;
      drawn.push_back(item);
    }
    for (int item : drawn) {
      taken[item] = 0;
      g.interactions.push_back({u, item, -1});
    }
  }
  return {std::move(g), std::move(labels)};
}

TextEmbeddings load_text_embeddings(const std::string& path, int expected_entities,
                                    TextEmbeddings::Kind kind) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open text-embedding file: " + path);
  int n = 0, d = 0;
  if (!(in >> n >> d) || n <= 0 || d <= 0)
    throw DataError("bad text-embedding header in " + path + " (expected 'n d')");
  if (n != expected_entities)
    throw DataError("text-embedding shape error: file has " + std::to_string(n) +
                    " rows, expected " + std::to_string(expected_entities));
  TextEmbeddings t;
  t.kind = kind;
  t.matrix.resize(n, d);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < d; ++c) {
      double v;
      if (!(in >> v))
        throw DataError("text-embedding file truncated at row " + std::to_string(r));
      if (!std::isfinite(v))
        throw DataError("non-finite value in text-embedding file at row " + std::to_string(r));
      t.matrix(r, c) = v;
    }
  }
  return t;
}

TextEmbeddings synth_text_embeddings(int n_entities, int dim, std::uint64_t seed,
                                     TextEmbeddings::Kind kind) {
  require(n_entities > 0 && dim > 0, "synth text embeddings need positive shape");
  TextEmbeddings t;
  t.kind = kind;
  t.matrix.resize(n_entities, dim);
  Rng rng(seed ^ (kind == TextEmbeddings::Kind::user ? 0x746578745f75ULL : 0x746578745f69ULL));
  for (int r = 0; r < n_entities; ++r)
    for (int c = 0; c < dim; ++c) t.matrix(r, c) = rng.uniform(-0.5, 0.5);
  return t;
}

Mat label_text_matrix(const std::vector<int>& labels, int n_classes, double noise,
                      std::uint64_t seed) {
  Mat m = Mat::Zero(static_cast<int>(labels.size()), n_classes);
  Rng rng(seed);
  for (int r = 0; r < m.rows(); ++r) {
    m(r, labels[r] % n_classes) = 1.0;
    for (int c = 0; c < n_classes; ++c) m(r, c) += noise * rng.gaussian();
  }
  return m;
}

void write_interactions(const InteractionGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write interaction file: " + path);
  for (const auto& it : g.interactions) {
    out << g.user_names[it.user] << '\t' << g.item_names[it.item];
    if (it.timestamp >= 0) out << '\t' << it.timestamp;
    out << '\n';
  }
}

void write_text_embeddings(const Mat& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write text-embedding file: " + path);
  out << m.rows() << ' ' << m.cols() << '\n';
  char buf[32];
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(r, c));
      out << buf << (c + 1 == m.cols() ? '\n' : ' ');
    }
  }
}

}  // namespace hyperwave
