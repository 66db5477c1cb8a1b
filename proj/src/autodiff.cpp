#include "hyperwave/autodiff.hpp"

#include <cmath>

namespace hyperwave {

namespace {

double log1p_exp(double x) {  // log(1 + e^x) without overflow
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

}  // namespace

NodeId Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Tape::leaf(const std::string& name, Mat value) {
  require(!leaves_.count(name), "duplicate leaf name: " + name);
  Node n;
  n.kind = OpKind::leaf;
  n.value = std::move(value);
  const NodeId id = push(std::move(n));
  leaves_[name] = id;
  return id;
}

NodeId Tape::constant(Mat value) {
  Node n;
  n.kind = OpKind::constant;
  n.value = std::move(value);
  return push(std::move(n));
}

NodeId Tape::matmul(NodeId a, NodeId b, bool trans_a, bool trans_b) {
  const Mat& va = at(a).value;
  const Mat& vb = at(b).value;
  const auto ak = trans_a ? va.rows() : va.cols();
  const auto bk = trans_b ? vb.cols() : vb.rows();
  require(ak == bk, "matmul inner dimension mismatch");
  Node n;
  n.kind = OpKind::matmul;
  n.in = {a, b, -1};
  n.trans_a = trans_a;
  n.trans_b = trans_b;
  if (!trans_a && !trans_b)
    n.value = va * vb;
  else if (trans_a && !trans_b)
    n.value = va.transpose() * vb;
  else if (!trans_a && trans_b)
    n.value = va * vb.transpose();
  else
    n.value = va.transpose() * vb.transpose();
  return push(std::move(n));
}

NodeId Tape::sparse_apply(const LinearMap& op, NodeId x) {
  require(at(x).value.rows() == op.dim(), "sparse_apply dimension mismatch");
  Node n;
  n.kind = OpKind::sparse_apply;
  n.in = {x, -1, -1};
  n.op = &op;
  n.value = op.apply(at(x).value);
  return push(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) {
  const Mat& va = at(a).value;
  const Mat& vb = at(b).value;
  Node n;
  n.kind = OpKind::add;
  n.in = {a, b, -1};
  if (va.rows() == vb.rows() && va.cols() == vb.cols()) {
    n.value = va + vb;
  } else if (vb.rows() == 1 && vb.cols() == va.cols()) {
    n.value = va.rowwise() + vb.row(0);  // row-wise bias
  } else {
    throw std::invalid_argument("add shape mismatch (only row-bias broadcast allowed)");
  }
  return push(std::move(n));
}

NodeId Tape::scale(NodeId a, double factor) {
  Node n;
  n.kind = OpKind::scale;
  n.in = {a, -1, -1};
  n.scalar = factor;
  n.value = factor * at(a).value;
  return push(std::move(n));
}

NodeId Tape::relu(NodeId a) {
  Node n;
  n.kind = OpKind::relu;
  n.in = {a, -1, -1};
  n.value = at(a).value.cwiseMax(0.0);
  return push(std::move(n));
}

NodeId Tape::layer_norm(NodeId x, NodeId gain, NodeId bias, double eps) {
  const Mat& vx = at(x).value;
  const Mat& vg = at(gain).value;
  const Mat& vb = at(bias).value;
  require(vg.rows() == 1 && vg.cols() == vx.cols(), "layer_norm gain must be 1 x d");
  require(vb.rows() == 1 && vb.cols() == vx.cols(), "layer_norm bias must be 1 x d");
  const auto d = vx.cols();

  Node n;
  n.kind = OpKind::layer_norm;
  n.in = {x, gain, bias};
  n.scalar = eps;
  Mat xhat(vx.rows(), d);
  Mat inv_std(vx.rows(), 1);
  for (int r = 0; r < vx.rows(); ++r) {
    const double mu = vx.row(r).mean();
    const double var = (vx.row(r).array() - mu).square().mean();
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std(r, 0) = is;
    xhat.row(r) = ((vx.row(r).array() - mu) * is).matrix();
  }
  n.value = (xhat.array().rowwise() * vg.row(0).array()).matrix().rowwise() + vb.row(0);
  n.saved = std::move(xhat);
  n.saved2 = std::move(inv_std);
  return push(std::move(n));
}

NodeId Tape::concat_rows(NodeId a, NodeId b) {
  const Mat& va = at(a).value;
  const Mat& vb = at(b).value;
  require(va.rows() == vb.rows(), "concat_rows needs equal row counts");
  Node n;
  n.kind = OpKind::concat_rows;
  n.in = {a, b, -1};
  n.value.resize(va.rows(), va.cols() + vb.cols());
  n.value << va, vb;
  return push(std::move(n));
}

NodeId Tape::mean_rows(NodeId a) {
  Node n;
  n.kind = OpKind::mean_rows;
  n.in = {a, -1, -1};
  n.value = at(a).value.colwise().mean();
  return push(std::move(n));
}

NodeId Tape::row_dot(NodeId a, NodeId b) {
  const Mat& va = at(a).value;
  const Mat& vb = at(b).value;
  require(va.rows() == vb.rows() && va.cols() == vb.cols(), "row_dot shape mismatch");
  Node n;
  n.kind = OpKind::row_dot;
  n.in = {a, b, -1};
  n.value = (va.array() * vb.array()).rowwise().sum().matrix();
  return push(std::move(n));
}

NodeId Tape::l2_normalize_rows(NodeId a) {
  const Mat& va = at(a).value;
  Node n;
  n.kind = OpKind::l2_normalize_rows;
  n.in = {a, -1, -1};
  n.value.resize(va.rows(), va.cols());
  Mat inv_norm = Mat::Zero(va.rows(), 1);
  for (int r = 0; r < va.rows(); ++r) {
    const double norm = va.row(r).norm();
    if (norm > 0.0) {
      inv_norm(r, 0) = 1.0 / norm;
      n.value.row(r) = va.row(r) * inv_norm(r, 0);
    } else {
      n.value.row(r).setZero();  // zero-norm guard
    }
  }
  n.saved = std::move(inv_norm);
  return push(std::move(n));
}

NodeId Tape::log_sigmoid(NodeId a) {
  Node n;
  n.kind = OpKind::log_sigmoid;
  n.in = {a, -1, -1};
  n.value = at(a).value.unaryExpr([](double x) { return -log1p_exp(-x); });
  return push(std::move(n));
}

NodeId Tape::logsumexp_rows(NodeId a) {
  const Mat& va = at(a).value;
  Node n;
  n.kind = OpKind::logsumexp_rows;
  n.in = {a, -1, -1};
  n.value.resize(va.rows(), 1);
  Mat softmax(va.rows(), va.cols());
  for (int r = 0; r < va.rows(); ++r) {
    const double m = va.row(r).maxCoeff();
    const Eigen::Array<double, 1, Eigen::Dynamic> e = (va.row(r).array() - m).exp();
    const double sum = e.sum();
    n.value(r, 0) = m + std::log(sum);
    softmax.row(r) = (e / sum).matrix();
  }
  n.saved = std::move(softmax);
  return push(std::move(n));
}

NodeId Tape::gather_rows(NodeId a, std::vector<int> indices) {
  const Mat& va = at(a).value;
  Node n;
  n.kind = OpKind::gather_rows;
  n.in = {a, -1, -1};
  n.value.resize(static_cast<int>(indices.size()), va.cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    require(indices[r] >= 0 && indices[r] < va.rows(), "gather_rows index out of range");
    n.value.row(static_cast<int>(r)) = va.row(indices[r]);
  }
  n.indices = std::move(indices);
  return push(std::move(n));
}

NodeId Tape::elementwise_mul(NodeId a, NodeId b) {
  const Mat& va = at(a).value;
  const Mat& vb = at(b).value;
  require(va.rows() == vb.rows() && va.cols() == vb.cols(), "elementwise_mul shape mismatch");
  Node n;
  n.kind = OpKind::elementwise_mul;
  n.in = {a, b, -1};
  n.value = va.cwiseProduct(vb);
  return push(std::move(n));
}

NodeId Tape::row_scale(NodeId x, NodeId v) {
  const Mat& vx = at(x).value;
  const Mat& vv = at(v).value;
  require(vv.cols() == 1 && vv.rows() == vx.rows(), "row_scale weight must be n x 1");
  Node n;
  n.kind = OpKind::row_scale;
  n.in = {x, v, -1};
  n.value = (vx.array().colwise() * vv.col(0).array()).matrix();
  return push(std::move(n));
}

NodeId Tape::softplus(NodeId a) {
  Node n;
  n.kind = OpKind::softplus;
  n.in = {a, -1, -1};
  n.value = at(a).value.unaryExpr([](double x) { return log1p_exp(x); });
  return push(std::move(n));
}

NodeId Tape::sigmoid(NodeId a) {
  Node n;
  n.kind = OpKind::sigmoid;
  n.in = {a, -1, -1};
  n.value = at(a).value.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
  return push(std::move(n));
}

double Tape::scalar_value(NodeId id) const {
  const Mat& v = at(id).value;
  require(v.rows() == 1 && v.cols() == 1, "node is not scalar");
  return v(0, 0);
}

void Tape::backward(NodeId loss) {
  const Mat& lv = at(loss).value;
  require(lv.rows() == 1 && lv.cols() == 1, "backward requires a scalar (1x1) loss node");

  grads_.assign(nodes_.size(), Mat());
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    grads_[i] = Mat::Zero(nodes_[i].value.rows(), nodes_[i].value.cols());
  grads_[loss](0, 0) = 1.0;
  ran_backward_ = true;

  for (NodeId id = loss; id >= 0; --id) {
    const Node& n = nodes_[id];
    const Mat& g = grads_[id];
    if (g.size() == 0 || g.isZero(0.0)) continue;
    switch (n.kind) {
      case OpKind::leaf:
      case OpKind::constant:
        break;
      case OpKind::matmul: {
        const Mat& va = at(n.in[0]).value;
        const Mat& vb = at(n.in[1]).value;
        if (!n.trans_a && !n.trans_b) {
          grads_[n.in[0]] += g * vb.transpose();
          grads_[n.in[1]] += va.transpose() * g;
        } else if (n.trans_a && !n.trans_b) {
          grads_[n.in[0]] += vb * g.transpose();
          grads_[n.in[1]] += va * g;
        } else if (!n.trans_a && n.trans_b) {
          grads_[n.in[0]] += g * vb;
          grads_[n.in[1]] += g.transpose() * va;
        } else {
          grads_[n.in[0]] += vb.transpose() * g.transpose();
          grads_[n.in[1]] += g.transpose() * va.transpose();
        }
        break;
      }
      case OpKind::sparse_apply:
        grads_[n.in[0]] += n.op->apply_adjoint(g);
        break;
      case OpKind::add: {
        grads_[n.in[0]] += g;
        Mat& gb = grads_[n.in[1]];
        if (gb.rows() == g.rows()) {
          gb += g;
        } else {
          gb += g.colwise().sum();  // bias broadcast
        }
        break;
      }
      case OpKind::scale:
        grads_[n.in[0]] += n.scalar * g;
        break;
      case OpKind::relu:
        grads_[n.in[0]] +=
            (at(n.in[0]).value.array() > 0.0).cast<double>().matrix().cwiseProduct(g);
        break;
      case OpKind::layer_norm: {
        const Mat& xhat = n.saved;
        const Mat& inv_std = n.saved2;
        const Mat& vg = at(n.in[1]).value;
        const auto d = static_cast<double>(xhat.cols());
        grads_[n.in[1]] += (g.array() * xhat.array()).colwise().sum().matrix();
        grads_[n.in[2]] += g.colwise().sum();
        Mat dxhat = (g.array().rowwise() * vg.row(0).array()).matrix();
        Mat& gx = grads_[n.in[0]];
        for (int r = 0; r < xhat.rows(); ++r) {
          const double mean_d = dxhat.row(r).mean();
          const double mean_dx = (dxhat.row(r).array() * xhat.row(r).array()).mean();
          gx.row(r) += (inv_std(r, 0) *
                        (dxhat.row(r).array() - mean_d - xhat.row(r).array() * mean_dx))
                           .matrix();
        }
        (void)d;
        break;
      }
      case OpKind::concat_rows: {
        const auto ca = at(n.in[0]).value.cols();
        grads_[n.in[0]] += g.leftCols(ca);
        grads_[n.in[1]] += g.rightCols(g.cols() - ca);
        break;
      }
      case OpKind::mean_rows: {
        const auto rows = at(n.in[0]).value.rows();
        grads_[n.in[0]] += (Mat::Ones(rows, 1) * g) / static_cast<double>(rows);
        break;
      }
      case OpKind::row_dot: {
        const Mat& va = at(n.in[0]).value;
        const Mat& vb = at(n.in[1]).value;
        grads_[n.in[0]] += (vb.array().colwise() * g.col(0).array()).matrix();
        grads_[n.in[1]] += (va.array().colwise() * g.col(0).array()).matrix();
        break;
      }
      case OpKind::l2_normalize_rows: {
        const Mat& y = n.value;
        const Mat& inv_norm = n.saved;
        Mat& gx = grads_[n.in[0]];
        for (int r = 0; r < y.rows(); ++r) {
          if (inv_norm(r, 0) == 0.0) continue;  // zero rows carry no gradient
          const double proj = y.row(r).dot(g.row(r));
          gx.row(r) += inv_norm(r, 0) * (g.row(r) - proj * y.row(r));
        }
        break;
      }
      case OpKind::log_sigmoid: {
        // d/dx log sigma(x) = sigma(-x)
        grads_[n.in[0]] += g.cwiseProduct(at(n.in[0]).value.unaryExpr(
            [](double x) { return 1.0 / (1.0 + std::exp(x)); }));
        break;
      }
      case OpKind::logsumexp_rows:
        grads_[n.in[0]] += (n.saved.array().colwise() * g.col(0).array()).matrix();
        break;
      case OpKind::gather_rows: {
        Mat& gx = grads_[n.in[0]];
        for (std::size_t r = 0; r < n.indices.size(); ++r)
          gx.row(n.indices[r]) += g.row(static_cast<int>(r));
        break;
      }
      case OpKind::elementwise_mul:
        grads_[n.in[0]] += g.cwiseProduct(at(n.in[1]).value);
        grads_[n.in[1]] += g.cwiseProduct(at(n.in[0]).value);
        break;
      case OpKind::row_scale: {
        const Mat& vx = at(n.in[0]).value;
        const Mat& vv = at(n.in[1]).value;
        grads_[n.in[0]] += (g.array().colwise() * vv.col(0).array()).matrix();
        grads_[n.in[1]] += (g.array() * vx.array()).rowwise().sum().matrix();
        break;
      }
      case OpKind::softplus:
        grads_[n.in[0]] += g.cwiseProduct(at(n.in[0]).value.unaryExpr(
            [](double x) { return 1.0 / (1.0 + std::exp(-x)); }));
        break;
      case OpKind::sigmoid:
        grads_[n.in[0]] += g.cwiseProduct(
            n.value.cwiseProduct((Mat::Ones(n.value.rows(), n.value.cols()) - n.value)));
        break;
    }
  }
}

const Mat& Tape::grad(NodeId id) const {
  require(ran_backward_, "grad() called before backward()");
  return grads_[id];
}

std::map<std::string, Mat> Tape::leaf_grads() const {
  require(ran_backward_, "leaf_grads() called before backward()");
  std::map<std::string, Mat> out;
  for (const auto& [name, id] : leaves_) out[name] = grads_[id];
  return out;
}

GradCheckResult grad_check(const TapeBuilder& f, const std::map<std::string, Mat>& leaves,
                           double eps) {
  Tape tape;
  const NodeId loss = f(tape, leaves);
  tape.backward(loss);
  const auto ad = tape.leaf_grads();

  auto eval = [&](const std::map<std::string, Mat>& pts) {
    Tape t;
    return t.scalar_value(f(t, pts));
  };

  GradCheckResult res;
  std::map<std::string, Mat> work = leaves;
  for (const auto& [name, base] : leaves) {
    for (int r = 0; r < base.rows(); ++r) {
      for (int c = 0; c < base.cols(); ++c) {
        work[name](r, c) = base(r, c) + eps;
        const double up = eval(work);
        work[name](r, c) = base(r, c) - eps;
        const double down = eval(work);
        work[name](r, c) = base(r, c);
        const double fd = (up - down) / (2.0 * eps);
        const double got = ad.at(name)(r, c);
        const double rel = std::abs(got - fd) / (std::abs(fd) + 1e-8);
        if (rel > res.max_rel_error) {
          res.max_rel_error = rel;
          res.worst_leaf = name;
          res.worst_row = r;
          res.worst_col = c;
        }
      }
    }
  }
  return res;
}

}  // namespace hyperwave
