#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "hyperwave/config.hpp"
#include "hyperwave/data.hpp"
#include "hyperwave/hdnn.hpp"
#include "hyperwave/spectral.hpp"
#include "hyperwave/wavelet.hpp"

namespace hyperwave {

struct MlpParams {
  Mat w1, b1, w2, b2;
};

struct HdnnParams {
  MlpParams mlp1, mlp2;
  Mat ln1_gain, ln1_bias, ln2_gain, ln2_bias;
};

struct WaveletParams {
  std::vector<Mat> lambda_raw;  // pre-softplus filter diagonals, n x 1 each
  std::vector<Mat> weight;      // d x d per layer
};

// Which pieces of the architecture are active. Derived from RunConfig for
// normal runs; raw_embeddings() yields the bare matrix-factorization model.
struct ModelSpec {
  int dim = 32;
  bool use_hdnn = true;
  bool use_wavelet = true;
  bool use_text = true;
  int hdnn_layers = 3;
  int wavelet_layers = 3;
  WaveletCombine combine = WaveletCombine::add;
  bool shared_lambda = false;
  bool learned_late = false;

  static ModelSpec from_config(const RunConfig& cfg);
  static ModelSpec raw_embeddings(int dim);
};

// Every learnable tensor. Components inactive under the originating spec stay
// empty (0 x 0) and are skipped by for_each.
struct ParameterSet {
  Mat user_embed;  // n_u x d
  Mat item_embed;  // n_i x d
  Mat text_proj;   // d_text x d
  HdnnParams hdnn_user, hdnn_item;
  WaveletParams wav_user, wav_item;
  Mat late_weight;  // 1 x 1 pre-sigmoid convex weight for learned late fusion

  // Visits (name, matrix) pairs in a fixed order, skipping empty matrices.
  // The order defines optimizer-state alignment and checkpoint layout.
  template <typename Fn>
  void for_each(Fn&& fn) {
    for_each_impl(*this, fn);
  }
  template <typename Fn>
  void for_each(Fn&& fn) const {
    for_each_impl(*this, fn);
  }

 private:
  template <typename Self, typename Fn>
  static void for_each_impl(Self& self, Fn& fn) {
    auto visit = [&fn](const char* name, auto& mat) {
      if (mat.size() > 0) fn(name, mat);
    };
    visit("user_embed", self.user_embed);
    visit("item_embed", self.item_embed);
    visit("text_proj", self.text_proj);
    auto visit_hdnn = [&visit](const std::string& prefix, auto& h) {
      // Name storage must outlive the callback; build strings on the spot.
      std::vector<std::pair<std::string, decltype(&h.mlp1.w1)>> entries = {
          {prefix + ".mlp1.w1", &h.mlp1.w1}, {prefix + ".mlp1.b1", &h.mlp1.b1},
          {prefix + ".mlp1.w2", &h.mlp1.w2}, {prefix + ".mlp1.b2", &h.mlp1.b2},
          {prefix + ".mlp2.w1", &h.mlp2.w1}, {prefix + ".mlp2.b1", &h.mlp2.b1},
          {prefix + ".mlp2.w2", &h.mlp2.w2}, {prefix + ".mlp2.b2", &h.mlp2.b2},
          {prefix + ".ln1_gain", &h.ln1_gain}, {prefix + ".ln1_bias", &h.ln1_bias},
          {prefix + ".ln2_gain", &h.ln2_gain}, {prefix + ".ln2_bias", &h.ln2_bias}};
      for (auto& [name, mat] : entries) visit(name.c_str(), *mat);
    };
    visit_hdnn("hdnn_user", self.hdnn_user);
    visit_hdnn("hdnn_item", self.hdnn_item);
    auto visit_wav = [&visit](const std::string& prefix, auto& w) {
      for (std::size_t l = 0; l < w.lambda_raw.size(); ++l) {
        const std::string name = prefix + ".lambda." + std::to_string(l);
        visit(name.c_str(), w.lambda_raw[l]);
      }
      for (std::size_t l = 0; l < w.weight.size(); ++l) {
        const std::string name = prefix + ".weight." + std::to_string(l);
        visit(name.c_str(), w.weight[l]);
      }
    };
    visit_wav("wav_user", self.wav_user);
    visit_wav("wav_item", self.wav_item);
    visit("late_weight", self.late_weight);
  }
};

// Deterministic initialization: uniform(-a, a) with a = sqrt(6 / (rows +
// cols)) for embeddings/weights, zeros for biases, ones for layer-norm gains,
// softplus-inverse(1) for filter diagonals, 0 for the late-fusion weight.
ParameterSet init_params(int n_users, int n_items, int d_text, const ModelSpec& spec,
                         std::uint64_t seed);

// Fixed operators and side inputs shared by every forward pass over one train
// split. Heap-held maps keep addresses stable for the tape.
struct ModelResources {
  std::shared_ptr<CsrMap> prop_user, prop_item;
  std::shared_ptr<WaveletBasis> basis_user, basis_item;
  Mat text_users, text_items;  // 0 x 0 when absent
  int n_users = 0;
  int n_items = 0;

  bool has_text() const { return text_users.size() > 0 && text_items.size() > 0; }
  int text_dim() const { return has_text() ? static_cast<int>(text_users.cols()) : 0; }
};

// Builds hypergraphs, propagation operators, wavelet bases, and loads text
// embeddings for the given train split. Pieces not needed under cfg are left
// null. `text_override` (user, item) bypasses file loading when non-empty.
ModelResources build_resources(const RunConfig& cfg, const InteractionGraph& train,
                               const Mat& text_users_override = Mat(),
                               const Mat& text_items_override = Mat());

struct LeafIds {
  NodeId user_embed = -1;
  NodeId item_embed = -1;
  NodeId text_proj = -1;
  NodeId late_weight = -1;
  HdnnParamIds hdnn_user, hdnn_item;
  WaveletParamIds wav_user, wav_item;
};

// Registers every non-empty parameter matrix as a tape leaf under its
// for_each name.
LeafIds register_leaves(Tape& tape, const ParameterSet& params);

struct ForwardResult {
  NodeId users = -1;  // final user embeddings, n_u x d
  NodeId items = -1;  // final item embeddings, n_i x d
  // Per-encoder outputs after intermediate (stream) fusion, index 0 = input;
  // populated only when both encoders run. Contrastive views pair these.
  std::vector<NodeId> hdnn_layers_user, wav_layers_user;
  std::vector<NodeId> hdnn_layers_item, wav_layers_item;
  bool has_views() const {
    return !hdnn_layers_user.empty() && !wav_layers_user.empty();
  }
};

// Full forward pass: both channels through the active encoders on the
// structural and (optionally) projected textual streams, intermediate fusion
// by stream mean, late fusion across encoders.
ForwardResult forward_full(Tape& tape, const LeafIds& leaves, const ModelSpec& spec,
                           const ModelResources& res);

// Dot-product score of one user-item pair from materialized embeddings.
double score(const Mat& users_emb, const Mat& items_emb, int u, int i);

// Routes a for_each tensor name back into its ParameterSet slot; unknown
// names raise DataError. Used by checkpoint loading and test fixtures.
void assign_param(ParameterSet& p, const std::string& name, Mat value);

}  // namespace hyperwave
