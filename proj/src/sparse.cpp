#include "hyperwave/sparse.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace hyperwave {

SparseOperator SparseOperator::identity(int n) {
  SparseOperator a(n);
  a.col_.resize(n);
  a.val_.assign(n, 1.0);
  for (int i = 0; i < n; ++i) {
    a.col_[i] = i;
    a.row_ptr_[i + 1] = i + 1;
  }
  a.symmetric_ = true;
  return a;
}

SparseOperator SparseOperator::from_triplets(int n, std::vector<std::array<int, 2>> idx,
                                             std::vector<double> vals, bool symmetric) {
  require(idx.size() == vals.size(), "triplet index/value size mismatch");
  std::vector<std::size_t> order(idx.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return idx[a] < idx[b];
  });

  SparseOperator a(n);
  a.symmetric_ = symmetric;
  std::vector<std::size_t> counts(n, 0);
  int last_r = -1, last_c = -1;
  for (std::size_t k : order) {
    const int r = idx[k][0], c = idx[k][1];
    require(r >= 0 && r < n && c >= 0 && c < n, "triplet index out of range");
    if (r == last_r && c == last_c) {
      a.val_.back() += vals[k];
    } else {
      a.col_.push_back(c);
      a.val_.push_back(vals[k]);
      counts[r]++;
      last_r = r;
      last_c = c;
    }
  }
  for (int r = 0; r < n; ++r) a.row_ptr_[r + 1] = a.row_ptr_[r] + static_cast<int>(counts[r]);
  return a;
}

Mat SparseOperator::apply(const Mat& x) const {
  require(x.rows() == n_, "spmm dimension mismatch");
  Mat y = Mat::Zero(n_, x.cols());
  for (int r = 0; r < n_; ++r) {
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      y.row(r) += val_[k] * x.row(col_[k]);
    }
  }
  return y;
}

Mat SparseOperator::apply_transpose(const Mat& x) const {
  if (symmetric_) return apply(x);
  require(x.rows() == n_, "spmm dimension mismatch");
  Mat y = Mat::Zero(n_, x.cols());
  for (int r = 0; r < n_; ++r) {
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      y.row(col_[k]) += val_[k] * x.row(r);
    }
  }
  return y;
}

Mat SparseOperator::dense() const {
  Mat d = Mat::Zero(n_, n_);
  for (int r = 0; r < n_; ++r)
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) d(r, col_[k]) = val_[k];
  return d;
}

Vec SparseOperator::row_sums() const {
  Vec s = Vec::Zero(n_);
  for (int r = 0; r < n_; ++r)
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) s(r) += val_[k];
  return s;
}

double SparseOperator::coeff(int r, int c) const {
  for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
    if (col_[k] == c) return val_[k];
  return 0.0;
}

SparseOperator SparseOperator::identity_minus() const {
  std::vector<std::array<int, 2>> idx;
  std::vector<double> vals;
  idx.reserve(nnz() + n_);
  vals.reserve(nnz() + n_);
  for (int r = 0; r < n_; ++r) {
    idx.push_back({r, r});
    vals.push_back(1.0);
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      idx.push_back({r, col_[k]});
      vals.push_back(-val_[k]);
    }
  }
  return from_triplets(n_, std::move(idx), std::move(vals), symmetric_);
}

double SparseOperator::asymmetry() const {
  double worst = 0.0;
  for (int r = 0; r < n_; ++r)
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
      worst = std::max(worst, std::abs(val_[k] - coeff(col_[k], r)));
  return worst;
}

void SparseOperator::validate() const {
  require(static_cast<int>(row_ptr_.size()) == n_ + 1, "bad row_ptr length");
  for (int r = 0; r < n_; ++r) {
    int prev = -1;
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      require(col_[k] > prev, "unsorted or duplicate column index");
      require(col_[k] < n_, "column index out of range");
      prev = col_[k];
    }
  }
  if (symmetric_ && asymmetry() > 1e-12) throw NumericError("symmetric flag violated");
}

}  // namespace hyperwave
