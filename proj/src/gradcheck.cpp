#include "hyperwave/gradcheck.hpp"

#include <cmath>
#include <map>
#include <utility>

#include "hyperwave/config.hpp"
#include "hyperwave/hdnn.hpp"
#include "hyperwave/losses.hpp"
#include "hyperwave/model.hpp"
#include "hyperwave/spectral.hpp"
#include "hyperwave/wavelet.hpp"

namespace hyperwave {
namespace {

// Sum of all entries as a 1 x 1 node, for scalarizing matrix outputs.
NodeId to_scalar(Tape& tape, NodeId x) {
  const auto rows = tape.value(x).rows();
  const auto cols = tape.value(x).cols();
  NodeId cm = tape.mean_rows(x);
  NodeId s = tape.matmul(cm, tape.constant(Mat::Ones(cols, 1)));
  return tape.scale(s, static_cast<double>(rows));
}

Mat seeded_matrix(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      m(r, c) = rng.gaussian() * 0.5;
    }
  }
  return m;
}

// 6-node toy hypergraph with overlapping edges.
Hypergraph toy_hypergraph() {
  Hypergraph hg;
  hg.n_nodes = 6;
  hg.edges = {{0, 1, 2}, {2, 3}, {3, 4, 5}, {0, 5}};
  hg.edge_weights = {1.0, 1.0, 1.0, 1.0};
  return hg;
}

GradCheckCase run_case(const std::string& name, const TapeBuilder& f,
                       const std::map<std::string, Mat>& leaves, double tol) {
  GradCheckCase c;
  c.name = name;
  c.result = grad_check(f, leaves);
  c.pass = std::isfinite(c.result.max_rel_error) && c.result.max_rel_error < tol;
  return c;
}

// Tiny interaction set for the end-to-end case: 4 users x 4 items.
InteractionGraph toy_interactions() {
  InteractionGraph g;
  g.n_users = 4;
  g.n_items = 4;
  g.interactions = {{0, 0, -1}, {0, 1, -1}, {1, 1, -1}, {1, 2, -1},
                    {2, 2, -1}, {2, 3, -1}, {3, 3, -1}, {3, 0, -1}};
  for (int i = 0; i < 4; ++i) {
    g.user_names.push_back("u" + std::to_string(i));
    g.item_names.push_back("i" + std::to_string(i));
    g.user_ids[g.user_names.back()] = i;
    g.item_ids[g.item_names.back()] = i;
  }
  return g;
}

}  // namespace

std::vector<GradCheckCase> run_gradcheck_suite(double tol, bool inject_error) {
  std::vector<GradCheckCase> cases;

  // Dense primitive chain: matmul, bias add, relu, layer norm.
  {
    std::map<std::string, Mat> leaves = {{"x", seeded_matrix(5, 3, 11)},
                                         {"w", seeded_matrix(3, 3, 12)},
                                         {"b", seeded_matrix(1, 3, 13)},
                                         {"gain", seeded_matrix(1, 3, 14)},
                                         {"bias", seeded_matrix(1, 3, 15)}};
    auto f = [](Tape& t, const std::map<std::string, Mat>& lv) {
      NodeId x = t.leaf("x", lv.at("x"));
      NodeId w = t.leaf("w", lv.at("w"));
      NodeId b = t.leaf("b", lv.at("b"));
      NodeId gain = t.leaf("gain", lv.at("gain"));
      NodeId bias = t.leaf("bias", lv.at("bias"));
      NodeId h = t.relu(t.add(t.matmul(x, w), b));
      return to_scalar(t, t.layer_norm(h, gain, bias));
    };
    cases.push_back(run_case("dense_chain", f, leaves, tol));
  }

  // Propagation operator application.
  {
    const SparseOperator prop = propagation_operator(toy_hypergraph());
    const CsrMap map(prop);
    std::map<std::string, Mat> leaves = {{"x", seeded_matrix(6, 3, 21)}};
    auto f = [map](Tape& t, const std::map<std::string, Mat>& lv) {
      NodeId x = t.leaf("x", lv.at("x"));
      return to_scalar(t, t.sparse_apply(map, x));
    };
    cases.push_back(run_case("sparse_apply", f, leaves, tol));
  }

  // Pointwise reparameterizations and row scaling.
  {
    std::map<std::string, Mat> leaves = {{"x", seeded_matrix(4, 3, 31)},
                                         {"v", seeded_matrix(4, 1, 32)}};
    auto f = [](Tape& t, const std::map<std::string, Mat>& lv) {
      NodeId x = t.leaf("x", lv.at("x"));
      NodeId v = t.leaf("v", lv.at("v"));
      NodeId y = t.row_scale(t.elementwise_mul(x, t.sigmoid(x)), t.softplus(v));
      return to_scalar(t, y);
    };
    cases.push_back(run_case("pointwise_row_scale", f, leaves, tol));
  }

  // Normalization, similarity, and reduction primitives.
  {
    std::map<std::string, Mat> leaves = {{"a", seeded_matrix(4, 3, 41)},
                                         {"b", seeded_matrix(4, 3, 42)}};
    auto f = [](Tape& t, const std::map<std::string, Mat>& lv) {
      NodeId a = t.leaf("a", lv.at("a"));
      NodeId b = t.leaf("b", lv.at("b"));
      NodeId an = t.l2_normalize_rows(a);
      NodeId bn = t.l2_normalize_rows(b);
      NodeId sims = t.matmul(an, bn, false, true);
      NodeId lse = t.logsumexp_rows(sims);
      NodeId pos = t.row_dot(an, bn);
      return to_scalar(t, t.add(lse, t.scale(pos, -1.0)));
    };
    cases.push_back(run_case("cosine_logsumexp", f, leaves, tol));
  }

  // Structural ops: concat, gather, log-sigmoid.
  {
    std::map<std::string, Mat> leaves = {{"a", seeded_matrix(5, 2, 51)},
                                         {"b", seeded_matrix(5, 2, 52)}};
    auto f = [](Tape& t, const std::map<std::string, Mat>& lv) {
      NodeId a = t.leaf("a", lv.at("a"));
      NodeId b = t.leaf("b", lv.at("b"));
      NodeId cat = t.concat_rows(a, b);
      NodeId g = t.gather_rows(cat, {4, 0, 2, 0});
      return to_scalar(t, t.log_sigmoid(g));
    };
    cases.push_back(run_case("concat_gather_logsig", f, leaves, tol));
  }

  // Full diffusion layer on the 6-node toy, gradients through every weight.
  {
    const SparseOperator prop = propagation_operator(toy_hypergraph());
    const CsrMap map(prop);
    const int d = 3;
    std::map<std::string, Mat> leaves = {
        {"x", seeded_matrix(6, d, 61)},     {"m1w1", seeded_matrix(d, d, 62)},
        {"m1b1", seeded_matrix(1, d, 63)},  {"m1w2", seeded_matrix(d, d, 64)},
        {"m1b2", seeded_matrix(1, d, 65)},  {"m2w1", seeded_matrix(d, d, 66)},
        {"m2b1", seeded_matrix(1, d, 67)},  {"m2w2", seeded_matrix(d, d, 68)},
        {"m2b2", seeded_matrix(1, d, 69)},  {"g1", seeded_matrix(1, d, 70)},
        {"c1", seeded_matrix(1, d, 71)},    {"g2", seeded_matrix(1, d, 72)},
        {"c2", seeded_matrix(1, d, 73)}};
    auto f = [map](Tape& t, const std::map<std::string, Mat>& lv) {
      HdnnParamIds p;
      NodeId x = t.leaf("x", lv.at("x"));
      p.mlp1 = {t.leaf("m1w1", lv.at("m1w1")), t.leaf("m1b1", lv.at("m1b1")),
                t.leaf("m1w2", lv.at("m1w2")), t.leaf("m1b2", lv.at("m1b2"))};
      p.mlp2 = {t.leaf("m2w1", lv.at("m2w1")), t.leaf("m2b1", lv.at("m2b1")),
                t.leaf("m2w2", lv.at("m2w2")), t.leaf("m2b2", lv.at("m2b2"))};
      p.ln1_gain = t.leaf("g1", lv.at("g1"));
      p.ln1_bias = t.leaf("c1", lv.at("c1"));
      p.ln2_gain = t.leaf("g2", lv.at("g2"));
      p.ln2_bias = t.leaf("c2", lv.at("c2"));
      return to_scalar(t, hdnn_layer(t, x, map, p).x_v);
    };
    cases.push_back(run_case("hdnn_layer", f, leaves, tol));
  }

  // Wavelet convolution layer with exact basis, gradients through the filter
  // diagonal and the weight.
  {
    const Hypergraph hg = toy_hypergraph();
    const EigenDecomposition eig =
        eig_sym(hypergraph_laplacian(hg), /*max_exact_n=*/100);
    const WaveletBasis basis = WaveletBasis::exact(eig, 0.8);
    std::map<std::string, Mat> leaves = {{"x", seeded_matrix(6, 3, 81)},
                                         {"lam", seeded_matrix(6, 1, 82)},
                                         {"w", seeded_matrix(3, 3, 83)}};
    auto f = [basis](Tape& t, const std::map<std::string, Mat>& lv) {
      NodeId x = t.leaf("x", lv.at("x"));
      NodeId lam = t.leaf("lam", lv.at("lam"));
      NodeId w = t.leaf("w", lv.at("w"));
      return to_scalar(t, wavelet_layer(t, x, basis, lam, w));
    };
    cases.push_back(run_case("wavelet_layer", f, leaves, tol));
  }

  // Ranking loss.
  {
    std::map<std::string, Mat> leaves = {{"pos", seeded_matrix(6, 1, 91)},
                                         {"neg", seeded_matrix(6, 1, 92)}};
    auto f = [](Tape& t, const std::map<std::string, Mat>& lv) {
      return bpr_loss(t, t.leaf("pos", lv.at("pos")), t.leaf("neg", lv.at("neg")));
    };
    cases.push_back(run_case("bpr_loss", f, leaves, tol));
  }

  // Cross-view contrastive loss over two aligned layers.
  {
    std::map<std::string, Mat> leaves = {{"z0", seeded_matrix(4, 3, 101)},
                                         {"z1", seeded_matrix(4, 3, 102)},
                                         {"g0", seeded_matrix(4, 3, 103)},
                                         {"g1", seeded_matrix(4, 3, 104)}};
    auto f = [](Tape& t, const std::map<std::string, Mat>& lv) {
      std::vector<NodeId> z = {t.leaf("z0", lv.at("z0")), t.leaf("z1", lv.at("z1"))};
      std::vector<NodeId> g = {t.leaf("g0", lv.at("g0")), t.leaf("g1", lv.at("g1"))};
      return infonce_cross_view(t, z, g, {0, 1, 2, 3}, 0.2);
    };
    cases.push_back(run_case("infonce_cross_view", f, leaves, tol));
  }

  // End-to-end: full two-encoder model with text fusion, BPR + contrastive +
  // regularizer, gradients through every parameter tensor.
  {
    RunConfig cfg;
    cfg.model.dim = 3;
    cfg.hdnn.layers = 1;
    cfg.wavelet.layers = 1;
    cfg.spectral.max_exact_n = 100;
    cfg.train.tau = 0.2;
    cfg.train.lambda_ssl = 0.1;
    cfg.train.lambda_reg = 1e-2;
    const InteractionGraph graph = toy_interactions();
    const Mat text_u = seeded_matrix(4, 2, 111);
    const Mat text_i = seeded_matrix(4, 2, 112);
    const ModelResources res = build_resources(cfg, graph, text_u, text_i);
    const ModelSpec spec = ModelSpec::from_config(cfg);
    ParameterSet base = init_params(4, 4, 2, spec, 7);
    std::map<std::string, Mat> leaves;
    base.for_each([&leaves](const char* name, const Mat& m) { leaves[name] = m; });
    const std::vector<int> bu = {0, 1, 2, 3};
    const std::vector<int> bp = {0, 1, 2, 3};
    const std::vector<int> bn = {2, 3, 0, 1};
    const double lam_ssl = cfg.train.lambda_ssl;
    const double lam_reg = cfg.train.lambda_reg;
    const double tau = cfg.train.tau;
    auto f = [base, spec, res, bu, bp, bn, lam_ssl, lam_reg,
              tau](Tape& t, const std::map<std::string, Mat>& lv) {
      ParameterSet p = base;
      for (const auto& [k, v] : lv) assign_param(p, k, v);
      LeafIds ids = register_leaves(t, p);
      ForwardResult fw = forward_full(t, ids, spec, res);
      NodeId su = t.gather_rows(fw.users, bu);
      NodeId sp = t.gather_rows(fw.items, bp);
      NodeId sn = t.gather_rows(fw.items, bn);
      NodeId bpr = bpr_loss(t, t.row_dot(su, sp), t.row_dot(su, sn));
      NodeId ssl_u = infonce_cross_view(t, fw.hdnn_layers_user, fw.wav_layers_user,
                                        bu, tau);
      NodeId ssl_i = infonce_cross_view(t, fw.hdnn_layers_item, fw.wav_layers_item,
                                        bp, tau);
      return total_loss(t, bpr, ssl_u, ssl_i, ids.user_embed, ids.item_embed,
                        lam_ssl, lam_reg)
          .total;
    };
    cases.push_back(run_case("full_model_total_loss", f, leaves, tol));
  }

  if (inject_error) {
    // Plumbing fixture: a builder whose output drifts between evaluations, so
    // the finite-difference comparison must flag it.
    std::map<std::string, Mat> leaves = {{"x", seeded_matrix(2, 2, 121)}};
    auto f = [](Tape& t, const std::map<std::string, Mat>& lv) {
      static int calls = 0;
      ++calls;
      NodeId x = t.leaf("x", lv.at("x"));
      return to_scalar(t, t.scale(x, 1.0 + 0.05 * calls));
    };
    cases.push_back(run_case("injected_fault", f, leaves, tol));
  }

  return cases;
}

}  // namespace hyperwave
