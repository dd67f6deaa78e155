#include "dhgreg/sparse.hpp"

#include <algorithm>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dhg {

SparseMatrix SparseMatrix::from_coo(
    int rows, int cols, std::vector<std::pair<std::pair<int, int>, real>> entries) {
  for (const auto& e : entries) {
    if (e.first.first < 0 || e.first.first >= rows || e.first.second < 0 ||
        e.first.second >= cols) {
      throw std::out_of_range("from_coo: entry out of range");
    }
  }
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  SparseMatrix m(rows, cols);
  m.indices.reserve(entries.size());
  m.values.reserve(entries.size());
  size_t i = 0;
  for (int r = 0; r < rows; ++r) {
    while (i < entries.size() && entries[i].first.first == r) {
      int c = entries[i].first.second;
      real v = entries[i].second;
      ++i;
      while (i < entries.size() && entries[i].first.first == r &&
             entries[i].first.second == c) {
        v += entries[i].second;
        ++i;
      }
      m.indices.push_back(c);
      m.values.push_back(v);
    }
    m.offsets[r + 1] = static_cast<int>(m.indices.size());
  }
  return m;
}

SparseMatrix SparseMatrix::identity(int n) {
  SparseMatrix m(n, n);
  m.indices.resize(n);
  m.values.assign(n, real(1));
  for (int i = 0; i < n; ++i) {
    m.indices[i] = i;
    m.offsets[i + 1] = i + 1;
  }
  return m;
}

void SparseMatrix::validate() const {
  if (static_cast<int>(offsets.size()) != rows + 1) {
    throw std::invalid_argument("csr: offsets size mismatch");
  }
  if (offsets.front() != 0 || offsets.back() != static_cast<int>(indices.size()) ||
      indices.size() != values.size()) {
    throw std::invalid_argument("csr: nnz mismatch");
  }
  for (int r = 0; r < rows; ++r) {
    if (offsets[r] > offsets[r + 1]) throw std::invalid_argument("csr: offsets not monotone");
    for (int p = offsets[r]; p < offsets[r + 1]; ++p) {
      if (indices[p] < 0 || indices[p] >= cols) {
        throw std::out_of_range("csr: column index out of range");
      }
      if (p > offsets[r] && indices[p - 1] >= indices[p]) {
        throw std::invalid_argument("csr: column indices not strictly sorted");
      }
    }
  }
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix d(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int p = offsets[r]; p < offsets[r + 1]; ++p) d.at(r, indices[p]) += values[p];
  }
  return d;
}

DenseMatrix spmm(const SparseMatrix& a, const DenseMatrix& x) {
  if (a.cols != x.rows) throw std::invalid_argument("spmm: shape mismatch");
  DenseMatrix y(a.rows, x.cols);
  const int n = x.cols;
#pragma omp parallel for schedule(static) if (a.nnz() * n > 32768)
  for (int r = 0; r < a.rows; ++r) {
    real* yr = y.row(r);
    for (int p = a.offsets[r]; p < a.offsets[r + 1]; ++p) {
      const real v = a.values[p];
      const real* xr = x.row(a.indices[p]);
      for (int j = 0; j < n; ++j) yr[j] += v * xr[j];
    }
  }
  return y;
}

DenseMatrix spmm_at(const SparseMatrix& a, const DenseMatrix& x) {
  if (a.rows != x.rows) throw std::invalid_argument("spmm_at: shape mismatch");
  DenseMatrix y(a.cols, x.cols);
  const int n = x.cols;
#ifdef _OPENMP
  if (a.nnz() * n > 32768) {
    // column-range split: every thread scans all rows but owns a disjoint
    // slice of feature columns, so writes never race and order is fixed
#pragma omp parallel
    {
      const int nt = omp_get_num_threads();
      const int t = omp_get_thread_num();
      const int c0 = static_cast<int>(static_cast<long>(n) * t / nt);
      const int c1 = static_cast<int>(static_cast<long>(n) * (t + 1) / nt);
      for (int r = 0; r < a.rows; ++r) {
        const real* xr = x.row(r);
        for (int p = a.offsets[r]; p < a.offsets[r + 1]; ++p) {
          const real v = a.values[p];
          real* yr = y.row(a.indices[p]);
          for (int j = c0; j < c1; ++j) yr[j] += v * xr[j];
        }
      }
    }
    return y;
  }
#endif
  for (int r = 0; r < a.rows; ++r) {
    const real* xr = x.row(r);
    for (int p = a.offsets[r]; p < a.offsets[r + 1]; ++p) {
      const real v = a.values[p];
      real* yr = y.row(a.indices[p]);
      for (int j = 0; j < n; ++j) yr[j] += v * xr[j];
    }
  }
  return y;
}

}  // namespace dhg
