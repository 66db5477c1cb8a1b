#pragma once

#include <array>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "hyperwave/spectral.hpp"
#include "hyperwave/types.hpp"

namespace hyperwave {

enum class OpKind {
  leaf,
  constant,
  matmul,
  sparse_apply,
  add,
  scale,
  relu,
  layer_norm,
  concat_rows,
  mean_rows,
  row_dot,
  l2_normalize_rows,
  log_sigmoid,
  logsumexp_rows,
  gather_rows,
  elementwise_mul,
  row_scale,
  softplus,
  sigmoid,
};

using NodeId = int;

// Reverse-mode tape over dense 64-bit matrices. Values are computed eagerly
// on record; backward walks the nodes in reverse recording order. Sparse and
// wavelet operators enter as fixed LinearMaps and are never differentiated.
class Tape {
 public:
  static constexpr double kLayerNormEps = 1e-6;

  NodeId leaf(const std::string& name, Mat value);
  NodeId constant(Mat value);

  NodeId matmul(NodeId a, NodeId b, bool trans_a = false, bool trans_b = false);
  NodeId sparse_apply(const LinearMap& op, NodeId x);
  // Same-shape addition, or row-wise bias broadcast when b is 1 x d.
  NodeId add(NodeId a, NodeId b);
  NodeId scale(NodeId a, double factor);
  NodeId relu(NodeId a);
  NodeId layer_norm(NodeId x, NodeId gain, NodeId bias, double eps = kLayerNormEps);
  // Horizontal concatenation [A | B] (per-row feature concat).
  NodeId concat_rows(NodeId a, NodeId b);
  NodeId mean_rows(NodeId a);  // n x d -> 1 x d column means
  NodeId row_dot(NodeId a, NodeId b);  // n x d, n x d -> n x 1
  NodeId l2_normalize_rows(NodeId a);  // zero rows stay zero
  NodeId log_sigmoid(NodeId a);
  NodeId logsumexp_rows(NodeId a);  // n x m -> n x 1, max-shifted
  NodeId gather_rows(NodeId a, std::vector<int> indices);
  NodeId elementwise_mul(NodeId a, NodeId b);  // same shape
  NodeId row_scale(NodeId x, NodeId v);        // diag(v) * x with v n x 1
  NodeId softplus(NodeId a);
  NodeId sigmoid(NodeId a);

  const Mat& value(NodeId id) const { return nodes_[id].value; }
  double scalar_value(NodeId id) const;
  std::size_t size() const { return nodes_.size(); }

  // Accumulates gradients for every node from a 1x1 loss; leaves untouched by
  // the loss get zero gradients.
  void backward(NodeId loss);
  const Mat& grad(NodeId id) const;
  // name -> gradient for all registered leaves (zeros if unreached).
  std::map<std::string, Mat> leaf_grads() const;

 private:
  struct Node {
    OpKind kind;
    std::array<NodeId, 3> in{-1, -1, -1};
    Mat value;
    double scalar = 0.0;  // scale factor or epsilon
    bool trans_a = false, trans_b = false;
    std::vector<int> indices;
    const LinearMap* op = nullptr;
    Mat saved;   // op-specific cache for backward
    Mat saved2;
  };

  NodeId push(Node n);
  const Node& at(NodeId id) const { return nodes_[id]; }

  std::vector<Node> nodes_;
  std::vector<Mat> grads_;
  std::map<std::string, NodeId> leaves_;
  bool ran_backward_ = false;
};

// Central finite differences against backward() for every leaf coordinate.
// The builder must deterministically construct the same graph from the given
// leaf values and return the scalar loss node.
using TapeBuilder = std::function<NodeId(Tape&, const std::map<std::string, Mat>&)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_leaf;
  int worst_row = -1, worst_col = -1;
};

GradCheckResult grad_check(const TapeBuilder& f, const std::map<std::string, Mat>& leaves,
                           double eps = 1e-5);

}  // namespace hyperwave
