#include "hyperwave/model.hpp"

#include <cmath>
#include <utility>

#include "hyperwave/types.hpp"

namespace hyperwave {
namespace {

Mat glorot(int rows, int cols, Rng& rng) {
  Mat m(rows, cols);
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      m(r, c) = (2.0 * rng.uniform() - 1.0) * a;
    }
  }
  return m;
}

HdnnParams init_hdnn(int d, Rng& rng) {
  HdnnParams h;
  h.mlp1.w1 = glorot(d, d, rng);
  h.mlp1.b1 = Mat::Zero(1, d);
  h.mlp1.w2 = glorot(d, d, rng);
  h.mlp1.b2 = Mat::Zero(1, d);
  h.mlp2.w1 = glorot(d, d, rng);
  h.mlp2.b1 = Mat::Zero(1, d);
  h.mlp2.w2 = glorot(d, d, rng);
  h.mlp2.b2 = Mat::Zero(1, d);
  h.ln1_gain = Mat::Ones(1, d);
  h.ln1_bias = Mat::Zero(1, d);
  h.ln2_gain = Mat::Ones(1, d);
  h.ln2_bias = Mat::Zero(1, d);
  return h;
}

WaveletParams init_wavelet(int n, int d, int layers, bool shared_lambda, Rng& rng) {
  WaveletParams w;
  // softplus(raw) = 1  <=>  raw = log(e - 1)
  const double raw = std::log(std::expm1(1.0));
  const int n_lambda = shared_lambda ? 1 : layers;
  for (int l = 0; l < n_lambda; ++l) {
    w.lambda_raw.push_back(Mat::Constant(n, 1, raw));
  }
  for (int l = 0; l < layers; ++l) {
    w.weight.push_back(glorot(d, d, rng));
  }
  return w;
}

MlpParamIds leaf_mlp(Tape& tape, const std::string& prefix, const MlpParams& m) {
  MlpParamIds ids;
  ids.w1 = tape.leaf(prefix + ".w1", m.w1);
  ids.b1 = tape.leaf(prefix + ".b1", m.b1);
  ids.w2 = tape.leaf(prefix + ".w2", m.w2);
  ids.b2 = tape.leaf(prefix + ".b2", m.b2);
  return ids;
}

HdnnParamIds leaf_hdnn(Tape& tape, const std::string& prefix, const HdnnParams& h) {
  HdnnParamIds ids;
  ids.mlp1 = leaf_mlp(tape, prefix + ".mlp1", h.mlp1);
  ids.mlp2 = leaf_mlp(tape, prefix + ".mlp2", h.mlp2);
  ids.ln1_gain = tape.leaf(prefix + ".ln1_gain", h.ln1_gain);
  ids.ln1_bias = tape.leaf(prefix + ".ln1_bias", h.ln1_bias);
  ids.ln2_gain = tape.leaf(prefix + ".ln2_gain", h.ln2_gain);
  ids.ln2_bias = tape.leaf(prefix + ".ln2_bias", h.ln2_bias);
  return ids;
}

WaveletParamIds leaf_wavelet(Tape& tape, const std::string& prefix,
                             const WaveletParams& w) {
  WaveletParamIds ids;
  for (std::size_t l = 0; l < w.lambda_raw.size(); ++l) {
    ids.lambda_raw.push_back(
        tape.leaf(prefix + ".lambda." + std::to_string(l), w.lambda_raw[l]));
  }
  for (std::size_t l = 0; l < w.weight.size(); ++l) {
    ids.weight.push_back(
        tape.leaf(prefix + ".weight." + std::to_string(l), w.weight[l]));
  }
  return ids;
}

}  // namespace

ModelSpec ModelSpec::from_config(const RunConfig& cfg) {
  ModelSpec s;
  s.dim = cfg.model.dim;
  s.use_hdnn = cfg.hdnn.enabled;
  s.use_wavelet = cfg.wavelet.enabled;
  s.use_text = cfg.text.enabled;
  s.hdnn_layers = cfg.hdnn.layers;
  s.wavelet_layers = cfg.wavelet.layers;
  s.combine = cfg.wavelet.combine == "concat" ? WaveletCombine::concat
                                              : WaveletCombine::add;
  s.shared_lambda = cfg.wavelet.shared_lambda;
  s.learned_late = cfg.fusion.late == "learned_scalar";
  return s;
}

ModelSpec ModelSpec::raw_embeddings(int dim) {
  ModelSpec s;
  s.dim = dim;
  s.use_hdnn = false;
  s.use_wavelet = false;
  s.use_text = false;
  return s;
}

ParameterSet init_params(int n_users, int n_items, int d_text, const ModelSpec& spec,
                         std::uint64_t seed) {
  require(n_users >= 1 && n_items >= 1, "init_params needs entities");
  require(spec.dim >= 1, "init_params needs dim >= 1");
  Rng rng(seed);
  ParameterSet p;
  p.user_embed = glorot(n_users, spec.dim, rng);
  p.item_embed = glorot(n_items, spec.dim, rng);
  if (spec.use_text && d_text > 0) {
    p.text_proj = glorot(d_text, spec.dim, rng);
  }
  if (spec.use_hdnn) {
    p.hdnn_user = init_hdnn(spec.dim, rng);
    p.hdnn_item = init_hdnn(spec.dim, rng);
  }
  if (spec.use_wavelet) {
    p.wav_user = init_wavelet(n_users, spec.dim, spec.wavelet_layers,
                              spec.shared_lambda, rng);
    p.wav_item = init_wavelet(n_items, spec.dim, spec.wavelet_layers,
                              spec.shared_lambda, rng);
  }
  if (spec.learned_late && spec.use_hdnn && spec.use_wavelet) {
    p.late_weight = Mat::Zero(1, 1);
  }
  return p;
}

ModelResources build_resources(const RunConfig& cfg, const InteractionGraph& train,
                               const Mat& text_users_override,
                               const Mat& text_items_override) {
  ModelResources res;
  res.n_users = train.n_users;
  res.n_items = train.n_items;
  if (cfg.hdnn.enabled || cfg.wavelet.enabled) {
    const Hypergraph hu = build_user_hypergraph(train);
    const Hypergraph hi = build_item_hypergraph(train);
    if (cfg.hdnn.enabled) {
      res.prop_user = std::make_shared<CsrMap>(propagation_operator(hu));
      res.prop_item = std::make_shared<CsrMap>(propagation_operator(hi));
    }
    if (cfg.wavelet.enabled) {
      res.basis_user = std::make_shared<WaveletBasis>(WaveletBasis::build(
          hu, cfg.wavelet.scale, cfg.spectral.max_exact_n, cfg.wavelet.cheb_order));
      res.basis_item = std::make_shared<WaveletBasis>(WaveletBasis::build(
          hi, cfg.wavelet.scale, cfg.spectral.max_exact_n, cfg.wavelet.cheb_order));
    }
  }
  if (cfg.text.enabled) {
    if (text_users_override.size() > 0 || text_items_override.size() > 0) {
      require(text_users_override.rows() == train.n_users,
              "text user override row count mismatch");
      require(text_items_override.rows() == train.n_items,
              "text item override row count mismatch");
      res.text_users = text_users_override;
      res.text_items = text_items_override;
    } else if (!cfg.text.path_users.empty()) {
      res.text_users =
          load_text_embeddings(cfg.text.path_users, train.n_users,
                               TextEmbeddings::Kind::user)
              .matrix;
      res.text_items =
          load_text_embeddings(cfg.text.path_items, train.n_items,
                               TextEmbeddings::Kind::item)
              .matrix;
    }
    if (res.has_text() && res.text_users.cols() != res.text_items.cols()) {
      throw ConfigError(
          "user and item text embeddings must share one dimensionality (single "
          "projection)");
    }
  }
  return res;
}

LeafIds register_leaves(Tape& tape, const ParameterSet& params) {
  LeafIds ids;
  ids.user_embed = tape.leaf("user_embed", params.user_embed);
  ids.item_embed = tape.leaf("item_embed", params.item_embed);
  if (params.text_proj.size() > 0) {
    ids.text_proj = tape.leaf("text_proj", params.text_proj);
  }
  if (params.hdnn_user.mlp1.w1.size() > 0) {
    ids.hdnn_user = leaf_hdnn(tape, "hdnn_user", params.hdnn_user);
    ids.hdnn_item = leaf_hdnn(tape, "hdnn_item", params.hdnn_item);
  }
  if (!params.wav_user.weight.empty()) {
    ids.wav_user = leaf_wavelet(tape, "wav_user", params.wav_user);
    ids.wav_item = leaf_wavelet(tape, "wav_item", params.wav_item);
  }
  if (params.late_weight.size() > 0) {
    ids.late_weight = tape.leaf("late_weight", params.late_weight);
  }
  return ids;
}

namespace {

// Runs one channel (user or item) through the active encoders on the
// structural and optional textual streams, returning the late-fused output
// and filling the per-layer views.
NodeId run_channel(Tape& tape, const ModelSpec& spec, NodeId struct_leaf,
                   NodeId text_proj, const Mat& text_mat, const CsrMap* prop,
                   const WaveletBasis* basis, const HdnnParamIds& hp,
                   const WaveletParamIds& wp, NodeId late_weight,
                   std::vector<NodeId>& hdnn_views, std::vector<NodeId>& wav_views) {
  const bool text = text_proj >= 0 && text_mat.size() > 0;
  NodeId input_t = -1;
  if (text) {
    input_t = tape.matmul(tape.constant(text_mat), text_proj);
  }
  auto fuse = [&tape](NodeId a, NodeId b) {
    return tape.scale(tape.add(a, b), 0.5);
  };

  NodeId h_read = -1;
  NodeId w_read = -1;
  std::vector<NodeId> h_layers, w_layers;
  if (spec.use_hdnn) {
    EncodeOut es = hdnn_encode(tape, struct_leaf, *prop, hp, spec.hdnn_layers);
    if (text) {
      EncodeOut et = hdnn_encode(tape, input_t, *prop, hp, spec.hdnn_layers);
      h_read = fuse(es.readout, et.readout);
      for (std::size_t l = 0; l < es.layer_outputs.size(); ++l) {
        h_layers.push_back(fuse(es.layer_outputs[l], et.layer_outputs[l]));
      }
    } else {
      h_read = es.readout;
      h_layers = std::move(es.layer_outputs);
    }
  }
  if (spec.use_wavelet) {
    EncodeOut es = wavelet_encode(tape, struct_leaf, *basis, wp, spec.combine);
    if (text) {
      EncodeOut et = wavelet_encode(tape, input_t, *basis, wp, spec.combine);
      w_read = fuse(es.readout, et.readout);
      for (std::size_t l = 0; l < es.layer_outputs.size(); ++l) {
        w_layers.push_back(fuse(es.layer_outputs[l], et.layer_outputs[l]));
      }
    } else {
      w_read = es.readout;
      w_layers = std::move(es.layer_outputs);
    }
  }

  if (spec.use_hdnn && spec.use_wavelet) {
    hdnn_views = std::move(h_layers);
    wav_views = std::move(w_layers);
    if (late_weight >= 0) {
      // Learned convex combination: w A + (1 - w) B with w = sigmoid(raw).
      const auto n = static_cast<int>(tape.value(h_read).rows());
      NodeId w = tape.sigmoid(late_weight);
      NodeId ones = tape.constant(Mat::Ones(n, 1));
      NodeId w_col = tape.matmul(ones, w);
      NodeId one_minus =
          tape.add(tape.constant(Mat::Ones(1, 1)), tape.scale(w, -1.0));
      NodeId om_col = tape.matmul(ones, one_minus);
      return tape.add(tape.row_scale(h_read, w_col), tape.row_scale(w_read, om_col));
    }
    return fuse(h_read, w_read);
  }
  return spec.use_hdnn ? h_read : w_read;
}

}  // namespace

ForwardResult forward_full(Tape& tape, const LeafIds& leaves, const ModelSpec& spec,
                           const ModelResources& res) {
  ForwardResult out;
  if (!spec.use_hdnn && !spec.use_wavelet) {
    out.users = leaves.user_embed;
    out.items = leaves.item_embed;
    return out;
  }
  if (spec.use_hdnn) {
    require(res.prop_user != nullptr && res.prop_item != nullptr,
            "forward_full: propagation operators missing");
  }
  if (spec.use_wavelet) {
    require(res.basis_user != nullptr && res.basis_item != nullptr,
            "forward_full: wavelet bases missing");
  }
  const bool text = spec.use_text && res.has_text() && leaves.text_proj >= 0;
  const Mat empty;
  out.users = run_channel(tape, spec, leaves.user_embed,
                          text ? leaves.text_proj : -1,
                          text ? res.text_users : empty, res.prop_user.get(),
                          res.basis_user.get(), leaves.hdnn_user, leaves.wav_user,
                          leaves.late_weight, out.hdnn_layers_user,
                          out.wav_layers_user);
  out.items = run_channel(tape, spec, leaves.item_embed,
                          text ? leaves.text_proj : -1,
                          text ? res.text_items : empty, res.prop_item.get(),
                          res.basis_item.get(), leaves.hdnn_item, leaves.wav_item,
                          leaves.late_weight, out.hdnn_layers_item,
                          out.wav_layers_item);
  return out;
}

void assign_param(ParameterSet& p, const std::string& name, Mat value) {
  auto mlp_slot = [](MlpParams& m, const std::string& field) -> Mat* {
    if (field == "w1") return &m.w1;
    if (field == "b1") return &m.b1;
    if (field == "w2") return &m.w2;
    if (field == "b2") return &m.b2;
    return nullptr;
  };
  auto hdnn_slot = [&mlp_slot](HdnnParams& h, const std::string& rest) -> Mat* {
    const auto dot = rest.find('.');
    if (dot != std::string::npos) {
      const std::string head = rest.substr(0, dot);
      const std::string field = rest.substr(dot + 1);
      if (head == "mlp1") return mlp_slot(h.mlp1, field);
      if (head == "mlp2") return mlp_slot(h.mlp2, field);
      return nullptr;
    }
    if (rest == "ln1_gain") return &h.ln1_gain;
    if (rest == "ln1_bias") return &h.ln1_bias;
    if (rest == "ln2_gain") return &h.ln2_gain;
    if (rest == "ln2_bias") return &h.ln2_bias;
    return nullptr;
  };
  auto wav_slot = [](WaveletParams& w, const std::string& rest) -> Mat* {
    const auto dot = rest.find('.');
    if (dot == std::string::npos) return nullptr;
    const std::string head = rest.substr(0, dot);
    int idx = -1;
    try {
      idx = std::stoi(rest.substr(dot + 1));
    } catch (...) {
      return nullptr;
    }
    if (idx < 0 || idx > 4096) return nullptr;
    std::vector<Mat>* vec = nullptr;
    if (head == "lambda") vec = &w.lambda_raw;
    else if (head == "weight") vec = &w.weight;
    else return nullptr;
    if (static_cast<int>(vec->size()) <= idx) vec->resize(idx + 1);
    return &(*vec)[idx];
  };

  Mat* slot = nullptr;
  if (name == "user_embed") slot = &p.user_embed;
  else if (name == "item_embed") slot = &p.item_embed;
  else if (name == "text_proj") slot = &p.text_proj;
  else if (name == "late_weight") slot = &p.late_weight;
  else if (name.rfind("hdnn_user.", 0) == 0) slot = hdnn_slot(p.hdnn_user, name.substr(10));
  else if (name.rfind("hdnn_item.", 0) == 0) slot = hdnn_slot(p.hdnn_item, name.substr(10));
  else if (name.rfind("wav_user.", 0) == 0) slot = wav_slot(p.wav_user, name.substr(9));
  else if (name.rfind("wav_item.", 0) == 0) slot = wav_slot(p.wav_item, name.substr(9));
  if (slot == nullptr) {
    throw DataError("checkpoint contains unknown tensor '" + name + "'");
  }
  *slot = std::move(value);
}

double score(const Mat& users_emb, const Mat& items_emb, int u, int i) {
  require(u >= 0 && u < users_emb.rows(), "score: user id out of range");
  require(i >= 0 && i < items_emb.rows(), "score: item id out of range");
  require(users_emb.cols() == items_emb.cols(), "score: dimension mismatch");
  return users_emb.row(u).dot(items_emb.row(i));
}

}  // namespace hyperwave
