#pragma once

#include <utility>
#include <vector>

#include "dhgreg/common.hpp"
#include "dhgreg/dense.hpp"

namespace dhg {

/// CSR sparse matrix. Column indices are sorted within each row.
struct SparseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<int> offsets;  // rows + 1, monotone
  std::vector<int> indices;  // nnz, sorted per row
  std::vector<real> values;  // nnz

  SparseMatrix() = default;
  SparseMatrix(int r, int c) : rows(r), cols(c), offsets(static_cast<size_t>(r) + 1, 0) {}

  long nnz() const { return static_cast<long>(indices.size()); }

  // entries as (row, col, value) triples; duplicates are summed
  static SparseMatrix from_coo(int rows, int cols,
                               std::vector<std::pair<std::pair<int, int>, real>> entries);

  static SparseMatrix identity(int n);

  /// Checks offsets monotone, indices sorted/in-range, nnz consistent.
  void validate() const;

  DenseMatrix to_dense() const;
};

// Y = A * X, exact CSR product.
DenseMatrix spmm(const SparseMatrix& a, const DenseMatrix& x);

// Y = A^T * X; the backward rule of spmm w.r.t. its dense operand.
DenseMatrix spmm_at(const SparseMatrix& a, const DenseMatrix& x);

}  // namespace dhg
