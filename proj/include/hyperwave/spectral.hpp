#pragma once

#include <memory>
#include <vector>

#include "hyperwave/data.hpp"
#include "hyperwave/sparse.hpp"
#include "hyperwave/types.hpp"

namespace hyperwave {

// Fixed (non-differentiated) linear operator usable inside the tape.
// apply_adjoint must implement X -> A^T X.
class LinearMap {
 public:
  virtual ~LinearMap() = default;
  virtual Mat apply(const Mat& x) const = 0;
  virtual Mat apply_adjoint(const Mat& g) const = 0;
  virtual int dim() const = 0;
};

class CsrMap final : public LinearMap {
 public:
  explicit CsrMap(SparseOperator op) : op_(std::move(op)) {}
  Mat apply(const Mat& x) const override { return op_.apply(x); }
  Mat apply_adjoint(const Mat& g) const override { return op_.apply_transpose(g); }
  int dim() const override { return op_.rows(); }
  const SparseOperator& op() const { return op_; }

 private:
  SparseOperator op_;
};

class DenseSymmetricMap final : public LinearMap {
 public:
  explicit DenseSymmetricMap(Mat m) : m_(std::move(m)) {}
  Mat apply(const Mat& x) const override { return m_ * x; }
  Mat apply_adjoint(const Mat& g) const override { return m_.transpose() * g; }
  int dim() const override { return static_cast<int>(m_.rows()); }
  const Mat& matrix() const { return m_; }

 private:
  Mat m_;
};

struct EigenDecomposition {
  Vec eigenvalues;   // ascending
  Mat eigenvectors;  // orthonormal columns
};

// Normalized hypergraph propagation operator
// P = D_v^{-1/2} H W_e D_e^{-1} H^T D_v^{-1/2}; isolated nodes get zero rows.
SparseOperator propagation_operator(const Hypergraph& hg);

// Laplacian = I - P, symmetric PSD.
SparseOperator hypergraph_laplacian(const Hypergraph& hg);

// Dense symmetric eigendecomposition (LAPACK dsyevd). Throws SpectralCapError
// when n exceeds max_exact_n, advising chebyshev mode.
EigenDecomposition eig_sym(const SparseOperator& l, int max_exact_n = 5000);

// Power-iteration estimate of the largest eigenvalue of a symmetric operator.
double estimate_lambda_max(const SparseOperator& l, int iterations = 50);

// K-term Chebyshev expansion of exp(-s L) X; set inverse for exp(+s L) X.
Mat chebyshev_apply(const SparseOperator& l, double s, int k, const Mat& x,
                    double lambda_max = -1.0, bool inverse = false);

class ChebyshevHeatMap final : public LinearMap {
 public:
  ChebyshevHeatMap(SparseOperator l, double s, int k, double lambda_max, bool inverse)
      : l_(std::move(l)), s_(s), k_(k), lambda_max_(lambda_max), inverse_(inverse) {}
  Mat apply(const Mat& x) const override {
    return chebyshev_apply(l_, s_, k_, x, lambda_max_, inverse_);
  }
  // Chebyshev polynomial of a symmetric matrix is symmetric.
  Mat apply_adjoint(const Mat& g) const override { return apply(g); }
  int dim() const override { return l_.rows(); }

 private:
  SparseOperator l_;
  double s_;
  int k_;
  double lambda_max_;
  bool inverse_;
};

// Heat-kernel wavelet operators at scale s: forward Theta = U e^{-s L} U^T,
// inverse Theta' = U e^{+s L} U^T. Exact mode materializes both as dense
// matrices; chebyshev mode applies them as polynomial expansions.
class WaveletBasis {
 public:
  enum class Mode { exact, chebyshev };

  static WaveletBasis exact(const EigenDecomposition& eig, double scale);
  static WaveletBasis chebyshev(const SparseOperator& laplacian, double scale, int order);

  // Convenience: picks exact below max_exact_n, chebyshev otherwise.
  static WaveletBasis build(const Hypergraph& hg, double scale, int max_exact_n, int cheb_order);

  Mode mode() const { return mode_; }
  int cheb_order() const { return cheb_order_; }
  double scale() const { return scale_; }
  int dim() const { return forward_->dim(); }
  const Vec& eigenvalues() const { return eigenvalues_; }

  const LinearMap& forward() const { return *forward_; }   // Theta
  const LinearMap& inverse() const { return *inverse_; }   // Theta'

  Mat theta_dense() const;       // exact mode only
  Mat theta_inv_dense() const;   // exact mode only

 private:
  Mode mode_ = Mode::exact;
  double scale_ = 1.0;
  int cheb_order_ = 0;
  Vec eigenvalues_;
  std::shared_ptr<const LinearMap> forward_;
  std::shared_ptr<const LinearMap> inverse_;
};

}  // namespace hyperwave
