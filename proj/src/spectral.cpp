#include "hyperwave/spectral.hpp"

#include <lapacke.h>

#include <cmath>

#include "hyperwave/rng.hpp"

namespace hyperwave {

SparseOperator propagation_operator(const Hypergraph& hg) {
  hg.validate();
  const int n = hg.n_nodes;

  Vec node_degree = Vec::Zero(n);  // weighted: sum_e w_e H[v,e]
  for (int e = 0; e < hg.n_edges(); ++e)
    for (int v : hg.edges[e]) node_degree(v) += hg.edge_weights[e];

  Vec inv_sqrt_dv = Vec::Zero(n);
  for (int v = 0; v < n; ++v)
    if (node_degree(v) > 0.0) inv_sqrt_dv(v) = 1.0 / std::sqrt(node_degree(v));

  std::vector<std::array<int, 2>> idx;
  std::vector<double> vals;
  std::size_t budget = 0;
  for (const auto& e : hg.edges) budget += e.size() * e.size();
  idx.reserve(budget);
  vals.reserve(budget);

  for (int e = 0; e < hg.n_edges(); ++e) {
    const auto& members = hg.edges[e];
    const double c = hg.edge_weights[e] / static_cast<double>(members.size());  // w_e / d_e
    for (int u : members) {
      const double cu = c * inv_sqrt_dv(u);
      for (int v : members) {
        idx.push_back({u, v});
        vals.push_back(cu * inv_sqrt_dv(v));
      }
    }
  }
  return SparseOperator::from_triplets(n, std::move(idx), std::move(vals), true);
}

SparseOperator hypergraph_laplacian(const Hypergraph& hg) {
  return propagation_operator(hg).identity_minus();
}

EigenDecomposition eig_sym(const SparseOperator& l, int max_exact_n) {
  const int n = l.rows();
  if (n > max_exact_n)
    throw SpectralCapError("matrix of size " + std::to_string(n) + " exceeds exact cap " +
                           std::to_string(max_exact_n) + "; use chebyshev mode");
  if (l.asymmetry() > 1e-10) throw NumericError("eig_sym requires a symmetric operator");

  EigenDecomposition out;
  out.eigenvectors = l.dense();  // overwritten with eigenvectors by dsyevd
  out.eigenvalues.resize(n);
  const int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', n, out.eigenvectors.data(), n,
                                  out.eigenvalues.data());
  if (info != 0) throw NumericError("dsyevd failed with info " + std::to_string(info));
  return out;
}

double estimate_lambda_max(const SparseOperator& l, int iterations) {
  const int n = l.rows();
  if (n == 0) return 0.0;
  Rng rng(0x9e3779b97f4a7c15ULL);  // fixed seed: estimate must be deterministic
  Mat x(n, 1);
  for (int i = 0; i < n; ++i) x(i, 0) = rng.uniform(0.5, 1.5);
  x /= x.norm();
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Mat y = l.apply(x);
    const double norm = y.norm();
    if (norm == 0.0) return 0.0;
    lambda = (x.transpose() * y)(0, 0);
    x = y / norm;
  }
  return lambda;
}

Mat chebyshev_apply(const SparseOperator& l, double s, int k, const Mat& x, double lambda_max,
                    bool inverse) {
  require(k >= 1, "chebyshev order must be >= 1");
  require(s >= 0.0, "wavelet scale must be non-negative");
  if (lambda_max <= 0.0) lambda_max = std::max(estimate_lambda_max(l) * 1.01, 1e-12);

  // exp(sign * s * lambda) with lambda = lambda_max (t + 1) / 2 expands as
  // e^{sign*a} [I_0(a) + 2 sum_k (sign)^k I_k(a) T_k(t)], a = s lambda_max / 2.
  const double a = s * lambda_max / 2.0;
  const double sign = inverse ? 1.0 : -1.0;
  const double outer = std::exp(sign * a);

  std::vector<double> coeff(k);
  for (int j = 0; j < k; ++j) {
    const double bessel = std::cyl_bessel_i(static_cast<double>(j), a);
    coeff[j] = (j == 0 ? 1.0 : 2.0) * std::pow(sign, j) * bessel * outer;
  }

  // T_k recurrence on the rescaled operator Lt = (2 / lambda_max) L - I.
  // The explicit Mat return materializes the expression before the temporary
  // from l.apply dies.
  auto apply_lt = [&](const Mat& m) -> Mat { return (2.0 / lambda_max) * l.apply(m) - m; };

  Mat t_prev = x;  // T_0 X
  Mat acc = coeff[0] * t_prev;
  if (k > 1) {
    Mat t_cur = apply_lt(x);  // T_1 X
    acc += coeff[1] * t_cur;
    for (int j = 2; j < k; ++j) {
      Mat t_next = 2.0 * apply_lt(t_cur) - t_prev;
      acc += coeff[j] * t_next;
      t_prev = std::move(t_cur);
      t_cur = std::move(t_next);
    }
  }
  if (!acc.allFinite()) throw NumericError("chebyshev expansion produced non-finite values");
  return acc;
}

WaveletBasis WaveletBasis::exact(const EigenDecomposition& eig, double scale) {
  require(scale > 0.0, "wavelet scale must be positive");
  const double lam_max = eig.eigenvalues.size() ? eig.eigenvalues(eig.eigenvalues.size() - 1) : 0.0;
  if (scale * lam_max > 30.0)
    throw ConfigError("s * lambda_max = " + std::to_string(scale * lam_max) +
                      " would overflow the inverse kernel; use a smaller wavelet scale");

  WaveletBasis b;
  b.mode_ = Mode::exact;
  b.scale_ = scale;
  b.eigenvalues_ = eig.eigenvalues;
  const Mat& u = eig.eigenvectors;
  Vec decay = (-scale * eig.eigenvalues.array()).exp();
  Vec growth = (scale * eig.eigenvalues.array()).exp();
  b.forward_ = std::make_shared<DenseSymmetricMap>(u * decay.asDiagonal() * u.transpose());
  b.inverse_ = std::make_shared<DenseSymmetricMap>(u * growth.asDiagonal() * u.transpose());
  return b;
}

WaveletBasis WaveletBasis::chebyshev(const SparseOperator& laplacian, double scale, int order) {
  require(scale > 0.0, "wavelet scale must be positive");
  require(order >= 1, "chebyshev order must be >= 1");
  const double lam_max = std::max(estimate_lambda_max(laplacian) * 1.01, 1e-12);
  if (scale * lam_max > 30.0)
    throw ConfigError("s * lambda_max = " + std::to_string(scale * lam_max) +
                      " would overflow the inverse kernel; use a smaller wavelet scale");

  WaveletBasis b;
  b.mode_ = Mode::chebyshev;
  b.scale_ = scale;
  b.cheb_order_ = order;
  b.forward_ = std::make_shared<ChebyshevHeatMap>(laplacian, scale, order, lam_max, false);
  b.inverse_ = std::make_shared<ChebyshevHeatMap>(laplacian, scale, order, lam_max, true);
  return b;
}

WaveletBasis WaveletBasis::build(const Hypergraph& hg, double scale, int max_exact_n,
                                 int cheb_order) {
  SparseOperator lap = hypergraph_laplacian(hg);
  if (lap.rows() <= max_exact_n) {
    return exact(eig_sym(lap, max_exact_n), scale);
  }
  return chebyshev(lap, scale, cheb_order);
}

Mat WaveletBasis::theta_dense() const {
  const auto* dense = dynamic_cast<const DenseSymmetricMap*>(forward_.get());
  require(dense != nullptr, "theta_dense requires exact mode");
  return dense->matrix();
}

Mat WaveletBasis::theta_inv_dense() const {
  const auto* dense = dynamic_cast<const DenseSymmetricMap*>(inverse_.get());
  require(dense != nullptr, "theta_inv_dense requires exact mode");
  return dense->matrix();
}

}  // namespace hyperwave
