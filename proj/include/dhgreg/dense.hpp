#pragma once

#include <cstddef>
#include <vector>

#include "dhgreg/common.hpp"

namespace dhg {

/// Row-major dense matrix of `real`.
struct DenseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<real> data;

  DenseMatrix() = default;
  DenseMatrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, real(0)) {}

  static DenseMatrix zeros(int r, int c) { return DenseMatrix(r, c); }

  real* row(int i) { return data.data() + static_cast<size_t>(i) * cols; }
  const real* row(int i) const { return data.data() + static_cast<size_t>(i) * cols; }

  real& at(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
  real at(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }

  size_t size() const { return data.size(); }
  bool same_shape(const DenseMatrix& o) const { return rows == o.rows && cols == o.cols; }
  bool operator==(const DenseMatrix& o) const {
    return rows == o.rows && cols == o.cols && data == o.data;
  }
};

// C = A * B
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
// C = A * B^T
DenseMatrix matmul_bt(const DenseMatrix& a, const DenseMatrix& b);
// C = A^T * B  (deterministic under OpenMP: fixed-order reduction)
DenseMatrix matmul_at(const DenseMatrix& a, const DenseMatrix& b);

void add_inplace(DenseMatrix& dst, const DenseMatrix& src);           // dst += src
void axpy_inplace(DenseMatrix& dst, real alpha, const DenseMatrix& src);  // dst += alpha*src
DenseMatrix col_sums(const DenseMatrix& a);                           // 1 x cols

bool all_finite(const DenseMatrix& a);
real max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace dhg
