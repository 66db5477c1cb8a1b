#pragma once

#include <array>
#include <vector>

#include "hyperwave/types.hpp"

namespace hyperwave {

// Square sparse matrix in CSR layout. Column indices are sorted within each
// row; the symmetric flag is set by constructors that guarantee A = A^T.
class SparseOperator {
 public:
  SparseOperator() = default;
  explicit SparseOperator(int n) : n_(n), row_ptr_(n + 1, 0) {}

  static SparseOperator identity(int n);
  // Triplets may contain repeats; they are summed. Entries that cancel to
  // exactly zero are kept out of the structure.
  static SparseOperator from_triplets(int n, std::vector<std::array<int, 2>> idx,
                                      std::vector<double> vals, bool symmetric);

  int rows() const { return n_; }
  std::size_t nnz() const { return col_.size(); }
  bool symmetric() const { return symmetric_; }

  const std::vector<int>& row_ptr() const { return row_ptr_; }
  const std::vector<int>& col() const { return col_; }
  const std::vector<double>& val() const { return val_; }

  // Exact sparse-dense product A * X.
  Mat apply(const Mat& x) const;
  // A^T * X (equals apply for symmetric operators).
  Mat apply_transpose(const Mat& x) const;

  Mat dense() const;
  Vec row_sums() const;
  double coeff(int r, int c) const;

  // I - this, preserving symmetry.
  SparseOperator identity_minus() const;

  // max |A - A^T|; 0 for structurally symmetric input.
  double asymmetry() const;

  void validate() const;

 private:
  int n_ = 0;
  std::vector<int> row_ptr_;
  std::vector<int> col_;
  std::vector<double> val_;
  bool symmetric_ = false;
};

inline Mat spmm(const SparseOperator& a, const Mat& x) { return a.apply(x); }

}  // namespace hyperwave
