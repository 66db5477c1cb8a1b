#include <cmath>
#include <vector>

#include "doctest.h"
#include "hyperwave/data.hpp"
#include "hyperwave/rng.hpp"
#include "hyperwave/sparse.hpp"
#include "hyperwave/spectral.hpp"
#include "hyperwave/types.hpp"

using namespace hyperwave;

namespace {

Hypergraph two_node_one_edge() {
  Hypergraph hg;
  hg.n_nodes = 2;
  hg.edges = {{0, 1}};
  hg.edge_weights = {1.0};
  return hg;
}

Hypergraph random_hypergraph(int n, int n_edges, Rng& rng) {
  Hypergraph hg;
  hg.n_nodes = n;
  for (int e = 0; e < n_edges; ++e) {
    const int sz = rng.uniform_int(1, std::min(n, 5));
    std::vector<int> members;
    while (static_cast<int>(members.size()) < sz) {
      const int v = static_cast<int>(rng.uniform_index(n));
      if (std::find(members.begin(), members.end(), v) == members.end()) {
        members.push_back(v);
      }
    }
    std::sort(members.begin(), members.end());
    hg.edges.push_back(std::move(members));
    hg.edge_weights.push_back(1.0);
  }
  return hg;
}

Mat random_matrix(int rows, int cols, Rng& rng) {
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rng.gaussian();
  }
  return m;
}

}  // namespace

TEST_CASE("sparse operator from triplets sums repeats and sorts columns") {
  SparseOperator a = SparseOperator::from_triplets(
      3, {{0, 2}, {0, 0}, {0, 2}, {2, 1}}, {1.0, 2.0, 3.0, -1.5}, false);
  CHECK(a.coeff(0, 0) == 2.0);
  CHECK(a.coeff(0, 2) == 4.0);
  CHECK(a.coeff(2, 1) == -1.5);
  CHECK(a.coeff(1, 1) == 0.0);
  CHECK(a.nnz() == 3);
  a.validate();
}

TEST_CASE("spmm with identity returns the input") {
  const SparseOperator eye = SparseOperator::identity(4);
  Rng rng(1);
  const Mat x = random_matrix(4, 3, rng);
  CHECK((spmm(eye, x) - x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("spmm with the zero operator returns zeros") {
  const SparseOperator zero(4);
  Rng rng(2);
  const Mat x = random_matrix(4, 3, rng);
  CHECK(spmm(zero, x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("spmm matches the dense product on random operators") {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::array<int, 2>> idx;
    std::vector<double> vals;
    for (int k = 0; k < 60; ++k) {
      idx.push_back({rng.uniform_int(0, 19), rng.uniform_int(0, 19)});
      vals.push_back(rng.gaussian());
    }
    const SparseOperator a = SparseOperator::from_triplets(20, idx, vals, false);
    const Mat x = random_matrix(20, 4, rng);
    const Mat ref = a.dense() * x;
    CHECK((spmm(a, x) - ref).cwiseAbs().maxCoeff() < 1e-12);
    const Mat ref_t = a.dense().transpose() * x;
    CHECK((a.apply_transpose(x) - ref_t).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("spmm rejects dimension mismatches") {
  const SparseOperator eye = SparseOperator::identity(4);
  CHECK_THROWS(spmm(eye, Mat::Zero(5, 2)));
}

TEST_CASE("propagation operator on the 2-node single-edge hypergraph") {
  const SparseOperator p = propagation_operator(two_node_one_edge());
  CHECK(p.coeff(0, 0) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(p.coeff(0, 1) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(p.coeff(1, 0) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(p.coeff(1, 1) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(p.symmetric());
}

TEST_CASE("propagation operator zeroes isolated nodes") {
  Hypergraph hg;
  hg.n_nodes = 3;
  hg.edges = {{0, 1}};
  hg.edge_weights = {1.0};
  const SparseOperator p = propagation_operator(hg);
  const Mat d = p.dense();
  CHECK(d.row(2).cwiseAbs().maxCoeff() == 0.0);
  CHECK(d.col(2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("propagation operator is symmetric on random hypergraphs") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const Hypergraph hg = random_hypergraph(rng.uniform_int(2, 30), rng.uniform_int(1, 20), rng);
    const SparseOperator p = propagation_operator(hg);
    CHECK(p.asymmetry() < 1e-12);
  }
}

TEST_CASE("propagation row sums are exactly 1 on degree-regular hypergraphs") {
  // k-uniform cyclic design: every node sits in k same-size edges, so the
  // symmetric normalization telescopes to unit row sums.
  for (int k : {2, 3, 4}) {
    Hypergraph hg;
    hg.n_nodes = 12;
    for (int start = 0; start < 12; ++start) {
      std::vector<int> edge;
      for (int j = 0; j < k; ++j) edge.push_back((start + j) % 12);
      std::sort(edge.begin(), edge.end());
      hg.edges.push_back(std::move(edge));
      hg.edge_weights.push_back(1.0);
    }
    const Vec sums = propagation_operator(hg).row_sums();
    CHECK((sums.array() - 1.0).abs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("propagation row sums are non-negative on arbitrary hypergraphs") {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const Hypergraph hg = random_hypergraph(20, 12, rng);
    const Vec sums = propagation_operator(hg).row_sums();
    CHECK(sums.minCoeff() >= -1e-12);
  }
}

TEST_CASE("laplacian of the 2-node case with hand eigenvalues") {
  const SparseOperator lap = hypergraph_laplacian(two_node_one_edge());
  CHECK(lap.coeff(0, 0) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(lap.coeff(0, 1) == doctest::Approx(-0.5).epsilon(1e-13));
  const EigenDecomposition eig = eig_sym(lap);
  REQUIRE(eig.eigenvalues.size() == 2);
  CHECK(eig.eigenvalues(0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(eig.eigenvalues(1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("laplacian of an edgeless hypergraph is the identity") {
  Hypergraph hg;
  hg.n_nodes = 3;
  const Mat lap = hypergraph_laplacian(hg).dense();
  CHECK((lap - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("laplacian quadratic form is non-negative") {
  Rng rng(9);
  const Hypergraph hg = random_hypergraph(15, 10, rng);
  const SparseOperator lap = hypergraph_laplacian(hg);
  for (int trial = 0; trial < 100; ++trial) {
    const Mat x = random_matrix(15, 1, rng);
    const double q = (x.transpose() * spmm(lap, x))(0, 0);
    CHECK(q >= -1e-10);
  }
}

TEST_CASE("laplacian eigenvalues live in [0, 1] under this normalization") {
  Rng rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = rng.uniform_int(3, 50);
    const Hypergraph hg = random_hypergraph(n, rng.uniform_int(2, 30), rng);
    const EigenDecomposition eig = eig_sym(hypergraph_laplacian(hg));
    CHECK(eig.eigenvalues.minCoeff() >= -1e-9);
    CHECK(eig.eigenvalues.maxCoeff() <= 1.0 + 1e-9);
  }
}

TEST_CASE("eig_sym: identity matrix has all-ones spectrum") {
  const EigenDecomposition eig = eig_sym(SparseOperator::identity(5));
  CHECK((eig.eigenvalues.array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("eig_sym returns ascending eigenvalues, orthonormal vectors, and reconstructs") {
  Rng rng(11);
  std::vector<std::array<int, 2>> idx;
  std::vector<double> vals;
  for (int r = 0; r < 50; ++r) {
    for (int c = r; c < 50; ++c) {
      if (rng.uniform() < 0.1 || r == c) {
        const double v = rng.gaussian();
        idx.push_back({r, c});
        vals.push_back(v);
        if (r != c) {
          idx.push_back({c, r});
          vals.push_back(v);
        }
      }
    }
  }
  const SparseOperator a = SparseOperator::from_triplets(50, idx, vals, true);
  const EigenDecomposition eig = eig_sym(a);
  for (int i = 1; i < 50; ++i) CHECK(eig.eigenvalues(i) >= eig.eigenvalues(i - 1));
  const Mat gram = eig.eigenvectors.transpose() * eig.eigenvectors;
  CHECK((gram - Mat::Identity(50, 50)).cwiseAbs().maxCoeff() < 1e-8);
  const Mat rebuilt =
      eig.eigenvectors * eig.eigenvalues.asDiagonal() * eig.eigenvectors.transpose();
  CHECK((rebuilt - a.dense()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("eig_sym enforces the exact-mode size cap") {
  const SparseOperator big = SparseOperator::identity(12);
  CHECK_THROWS_WITH_AS(eig_sym(big, 10), doctest::Contains("chebyshev"), SpectralCapError);
}

TEST_CASE("wavelet basis tends to identity as the scale vanishes") {
  const EigenDecomposition eig = eig_sym(hypergraph_laplacian(two_node_one_edge()));
  const WaveletBasis basis = WaveletBasis::exact(eig, 1e-12);
  CHECK((basis.theta_dense() - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-11);
  CHECK((basis.theta_inv_dense() - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("wavelet basis spectrum on the 2-node case at unit scale") {
  const EigenDecomposition eig = eig_sym(hypergraph_laplacian(two_node_one_edge()));
  const WaveletBasis basis = WaveletBasis::exact(eig, 1.0);
  const Eigen::SelfAdjointEigenSolver<Mat> s(basis.theta_dense());
  REQUIRE(s.info() == Eigen::Success);
  CHECK(s.eigenvalues()(0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(s.eigenvalues()(1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("exact wavelet transform and inverse multiply to the identity") {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = rng.uniform_int(2, 50);
    const Hypergraph hg = random_hypergraph(n, rng.uniform_int(1, 25), rng);
    const EigenDecomposition eig = eig_sym(hypergraph_laplacian(hg));
    const WaveletBasis basis = WaveletBasis::exact(eig, 1.0);
    const Mat prod = basis.theta_dense() * basis.theta_inv_dense();
    CHECK((prod - Mat::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("wavelet basis guards against inverse-kernel overflow") {
  const EigenDecomposition eig = eig_sym(hypergraph_laplacian(two_node_one_edge()));
  CHECK_THROWS_WITH_AS(WaveletBasis::exact(eig, 31.0), doctest::Contains("scale"),
                       ConfigError);
}

TEST_CASE("chebyshev with K=1, s=0 is the identity map") {
  Rng rng(13);
  const Hypergraph hg = random_hypergraph(10, 6, rng);
  const SparseOperator lap = hypergraph_laplacian(hg);
  const Mat x = random_matrix(10, 3, rng);
  CHECK((chebyshev_apply(lap, 0.0, 1, x) - x).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("chebyshev approximation matches the exact kernel within 1e-3") {
  Rng rng(14);
  const Hypergraph hg = random_hypergraph(50, 30, rng);
  const SparseOperator lap = hypergraph_laplacian(hg);
  const EigenDecomposition eig = eig_sym(lap);
  const WaveletBasis exact = WaveletBasis::exact(eig, 1.0);
  const Mat x = random_matrix(50, 4, rng);
  const Mat ref = exact.theta_dense() * x;
  const Mat approx = chebyshev_apply(lap, 1.0, 30, x);
  CHECK((approx - ref).norm() / ref.norm() < 1e-3);
  const Mat ref_inv = exact.theta_inv_dense() * x;
  const Mat approx_inv = chebyshev_apply(lap, 1.0, 30, x, -1.0, true);
  CHECK((approx_inv - ref_inv).norm() / ref_inv.norm() < 1e-3);
}

TEST_CASE("chebyshev error is non-increasing in the expansion order") {
  Rng rng(15);
  const Hypergraph hg = random_hypergraph(40, 25, rng);
  const SparseOperator lap = hypergraph_laplacian(hg);
  const EigenDecomposition eig = eig_sym(lap);
  const WaveletBasis exact = WaveletBasis::exact(eig, 1.0);
  const Mat x = random_matrix(40, 3, rng);
  const Mat ref = exact.theta_dense() * x;
  double prev = std::numeric_limits<double>::infinity();
  for (int k : {5, 10, 20, 30}) {
    const double err = (chebyshev_apply(lap, 1.0, k, x) - ref).norm() / ref.norm();
    CHECK(err <= prev + 1e-12);  // floating-point floor slack
    prev = err;
  }
}

TEST_CASE("chebyshev basis agrees with the exact basis end to end") {
  Rng rng(16);
  const Hypergraph hg = random_hypergraph(30, 18, rng);
  const WaveletBasis exact = WaveletBasis::build(hg, 1.0, 5000, 30);
  const WaveletBasis cheb = WaveletBasis::build(hg, 1.0, 10, 30);
  CHECK(exact.mode() == WaveletBasis::Mode::exact);
  CHECK(cheb.mode() == WaveletBasis::Mode::chebyshev);
  const Mat x = random_matrix(30, 3, rng);
  const Mat a = exact.forward().apply(x);
  const Mat b = cheb.forward().apply(x);
  CHECK((a - b).norm() / a.norm() < 1e-3);
}

TEST_CASE("power iteration estimates the top eigenvalue") {
  Rng rng(17);
  const Hypergraph hg = random_hypergraph(25, 15, rng);
  const SparseOperator lap = hypergraph_laplacian(hg);
  const EigenDecomposition eig = eig_sym(lap);
  const double est = estimate_lambda_max(lap);
  CHECK(est == doctest::Approx(eig.eigenvalues.maxCoeff()).epsilon(0.05));
}
