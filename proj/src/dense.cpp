#include "dhgreg/dense.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dhg {

namespace {
void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}
}  // namespace

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.cols == b.rows, "matmul: inner dimensions disagree");
  DenseMatrix c(a.rows, b.cols);
  const int m = a.rows, kk = a.cols, n = b.cols;
#pragma omp parallel for schedule(static) if (static_cast<long>(m) * kk * n > 32768)
  for (int i = 0; i < m; ++i) {
    real* cr = c.row(i);
    const real* ar = a.row(i);
    for (int k = 0; k < kk; ++k) {
      const real av = ar[k];
      if (av == real(0)) continue;
      const real* br = b.row(k);
      for (int j = 0; j < n; ++j) cr[j] += av * br[j];
    }
  }
  return c;
}

DenseMatrix matmul_bt(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.cols == b.cols, "matmul_bt: inner dimensions disagree");
  DenseMatrix c(a.rows, b.rows);
  const int m = a.rows, kk = a.cols, n = b.rows;
#pragma omp parallel for schedule(static) if (static_cast<long>(m) * kk * n > 32768)
  for (int i = 0; i < m; ++i) {
    real* cr = c.row(i);
    const real* ar = a.row(i);
    for (int j = 0; j < n; ++j) {
      const real* br = b.row(j);
      real acc = 0;
      for (int k = 0; k < kk; ++k) acc += ar[k] * br[k];
      cr[j] = acc;
    }
  }
  return c;
}

DenseMatrix matmul_at(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.rows == b.rows, "matmul_at: inner dimensions disagree");
  const int m = a.rows, kk = a.cols, n = b.cols;
  DenseMatrix c(kk, n);
#ifdef _OPENMP
  if (static_cast<long>(m) * kk * n > 32768) {
    int nthreads = 1;
#pragma omp parallel
    {
#pragma omp single
      nthreads = omp_get_num_threads();
    }
    std::vector<DenseMatrix> locals(nthreads, DenseMatrix(kk, n));
#pragma omp parallel
    {
      DenseMatrix& local = locals[omp_get_thread_num()];
#pragma omp for schedule(static)
      for (int i = 0; i < m; ++i) {
        const real* ar = a.row(i);
        const real* br = b.row(i);
        for (int k = 0; k < kk; ++k) {
          const real av = ar[k];
          if (av == real(0)) continue;
          real* lr = local.row(k);
          for (int j = 0; j < n; ++j) lr[j] += av * br[j];
        }
      }
    }
    // fixed-order merge keeps the result bit-deterministic
    for (int t = 0; t < nthreads; ++t) add_inplace(c, locals[t]);
    return c;
  }
#endif
  for (int i = 0; i < m; ++i) {
    const real* ar = a.row(i);
    const real* br = b.row(i);
    for (int k = 0; k < kk; ++k) {
      const real av = ar[k];
      if (av == real(0)) continue;
      real* cr = c.row(k);
      for (int j = 0; j < n; ++j) cr[j] += av * br[j];
    }
  }
  return c;
}

void add_inplace(DenseMatrix& dst, const DenseMatrix& src) {
  require(dst.same_shape(src), "add_inplace: shape mismatch");
  const size_t n = dst.size();
  real* d = dst.data.data();
  const real* s = src.data.data();
  for (size_t i = 0; i < n; ++i) d[i] += s[i];
}

void axpy_inplace(DenseMatrix& dst, real alpha, const DenseMatrix& src) {
  require(dst.same_shape(src), "axpy_inplace: shape mismatch");
  const size_t n = dst.size();
  real* d = dst.data.data();
  const real* s = src.data.data();
  for (size_t i = 0; i < n; ++i) d[i] += alpha * s[i];
}

DenseMatrix col_sums(const DenseMatrix& a) {
  DenseMatrix out(1, a.cols);
  real* o = out.row(0);
  for (int i = 0; i < a.rows; ++i) {
    const real* r = a.row(i);
    for (int j = 0; j < a.cols; ++j) o[j] += r[j];
  }
  return out;
}

bool all_finite(const DenseMatrix& a) {
  const real* p = a.data.data();
  const size_t n = a.size();
  for (size_t i = 0; i < n; ++i) {
    if (!std::isfinite(p[i])) return false;
  }
  return true;
}

real max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("max_abs_diff: shape mismatch");
  real m = 0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

}  // namespace dhg
