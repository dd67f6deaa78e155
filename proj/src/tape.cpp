#include "dhgreg/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dhg {

namespace {
constexpr real kLayerNormEps = real(1e-5);
constexpr real kLeakySlope = real(0.2);

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}
}  // namespace

ValueId Tape::push(DenseMatrix v, bool needs_grad, const char* op_name) {
  if (finite_checks_ && !all_finite(v)) {
    throw NumericError(std::string("non-finite values produced by ") + op_name);
  }
  slots_.push_back(Slot{std::move(v), DenseMatrix(), needs_grad, nullptr});
  return static_cast<ValueId>(slots_.size() - 1);
}

ValueId Tape::constant(DenseMatrix v) { return push(std::move(v), false, "constant"); }

ValueId Tape::param(Parameter& p) {
  ValueId id = push(p.value, true, "param");
  slots_[id].leaf = &p;
  return id;
}

const DenseMatrix& Tape::grad(ValueId id) const {
  if (!ran_backward_) throw std::logic_error("grad() before backward()");
  return slots_[id].grad;
}

ValueId Tape::matmul(ValueId x, ValueId w) {
  const DenseMatrix& xv = value(x);
  const DenseMatrix& wv = value(w);
  ValueId out = push(dhg::matmul(xv, wv), needs(x) || needs(w), "matmul");
  if (needs(out)) steps_.push_back([x, w, out](Tape& t) {
    const DenseMatrix& g = t.grad_buf(out);
    if (t.needs(x)) add_inplace(t.grad_buf(x), matmul_bt(g, t.value(w)));
    if (t.needs(w)) add_inplace(t.grad_buf(w), matmul_at(t.value(x), g));
  });
  return out;
}

ValueId Tape::spmm(const SparseMatrix& a, ValueId x) {
  ValueId out = push(dhg::spmm(a, value(x)), needs(x), "spmm");
  const SparseMatrix* ap = &a;  // adjacency outlives the tape by contract
  if (needs(out)) steps_.push_back([ap, x, out](Tape& t) {
    if (t.needs(x)) add_inplace(t.grad_buf(x), spmm_at(*ap, t.grad_buf(out)));
  });
  return out;
}

ValueId Tape::add(ValueId x, ValueId y) {
  require(value(x).same_shape(value(y)), "add: shape mismatch");
  DenseMatrix v = value(x);
  add_inplace(v, value(y));
  ValueId out = push(std::move(v), needs(x) || needs(y), "add");
  if (needs(out)) steps_.push_back([x, y, out](Tape& t) {
    if (t.needs(x)) add_inplace(t.grad_buf(x), t.grad_buf(out));
    if (t.needs(y)) add_inplace(t.grad_buf(y), t.grad_buf(out));
  });
  return out;
}

ValueId Tape::add_row_broadcast(ValueId x, ValueId bias_row) {
  const DenseMatrix& xv = value(x);
  const DenseMatrix& bv = value(bias_row);
  require(bv.rows == 1 && bv.cols == xv.cols, "add_row_broadcast: bias must be 1 x cols");
  DenseMatrix v = xv;
  for (int i = 0; i < v.rows; ++i) {
    real* r = v.row(i);
    const real* b = bv.row(0);
    for (int j = 0; j < v.cols; ++j) r[j] += b[j];
  }
  ValueId out = push(std::move(v), needs(x) || needs(bias_row), "add_row_broadcast");
  if (needs(out)) steps_.push_back([x, bias_row, out](Tape& t) {
    const DenseMatrix& g = t.grad_buf(out);
    if (t.needs(x)) add_inplace(t.grad_buf(x), g);
    if (t.needs(bias_row)) add_inplace(t.grad_buf(bias_row), col_sums(g));
  });
  return out;
}

ValueId Tape::scale(ValueId x, real alpha) {
  DenseMatrix v = value(x);
  for (auto& e : v.data) e *= alpha;
  ValueId out = push(std::move(v), needs(x), "scale");
  if (needs(out)) steps_.push_back([x, out, alpha](Tape& t) {
    if (t.needs(x)) axpy_inplace(t.grad_buf(x), alpha, t.grad_buf(out));
  });
  return out;
}

ValueId Tape::sum_values(const std::vector<ValueId>& xs) {
  require(!xs.empty(), "sum_values: empty list");
  DenseMatrix v = value(xs[0]);
  bool any = needs(xs[0]);
  for (size_t i = 1; i < xs.size(); ++i) {
    add_inplace(v, value(xs[i]));
    any = any || needs(xs[i]);
  }
  ValueId out = push(std::move(v), any, "sum_values");
  std::vector<ValueId> ids = xs;
  if (needs(out)) steps_.push_back([ids, out](Tape& t) {
    const DenseMatrix& g = t.grad_buf(out);
    for (ValueId x : ids) {
      if (t.needs(x)) add_inplace(t.grad_buf(x), g);
    }
  });
  return out;
}

ValueId Tape::relu(ValueId x) {
  DenseMatrix v = value(x);
  for (auto& e : v.data) e = e > real(0) ? e : real(0);
  ValueId out = push(std::move(v), needs(x), "relu");
  if (needs(out)) steps_.push_back([x, out](Tape& t) {
    if (!t.needs(x)) return;
    const DenseMatrix& g = t.grad_buf(out);
    const DenseMatrix& y = t.value(out);
    DenseMatrix& gx = t.grad_buf(x);
    for (size_t i = 0; i < g.size(); ++i) {
      if (y.data[i] > real(0)) gx.data[i] += g.data[i];
    }
  });
  return out;
}

ValueId Tape::dropout(ValueId x, real p, bool training, Rng& rng) {
  require(p >= real(0) && p < real(1), "dropout: p must be in [0,1)");
  if (!training || p == real(0)) {
    // identity in eval mode; no rng consumption
    DenseMatrix v = value(x);
    ValueId out = push(std::move(v), needs(x), "dropout");
    if (needs(out)) steps_.push_back([x, out](Tape& t) {
      if (t.needs(x)) add_inplace(t.grad_buf(x), t.grad_buf(out));
    });
    return out;
  }
  const DenseMatrix& xv = value(x);
  const real keep = real(1) - p;
  const real inv_keep = real(1) / keep;
  std::vector<uint8_t> mask(xv.size());
  DenseMatrix v(xv.rows, xv.cols);
  for (size_t i = 0; i < xv.size(); ++i) {
    mask[i] = rng.uniform() < keep ? 1 : 0;
    v.data[i] = mask[i] ? xv.data[i] * inv_keep : real(0);
  }
  ValueId out = push(std::move(v), needs(x), "dropout");
  if (needs(out)) steps_.push_back([x, out, inv_keep, mask = std::move(mask)](Tape& t) {
    if (!t.needs(x)) return;
    const DenseMatrix& g = t.grad_buf(out);
    DenseMatrix& gx = t.grad_buf(x);
    for (size_t i = 0; i < g.size(); ++i) {
      if (mask[i]) gx.data[i] += g.data[i] * inv_keep;
    }
  });
  return out;
}

ValueId Tape::layer_norm(ValueId x, ValueId gain_row, ValueId bias_row) {
  const DenseMatrix& xv = value(x);
  const DenseMatrix& gv = value(gain_row);
  const DenseMatrix& bv = value(bias_row);
  require(gv.rows == 1 && gv.cols == xv.cols && bv.rows == 1 && bv.cols == xv.cols,
          "layer_norm: gain/bias must be 1 x cols");
  const int n = xv.cols;
  DenseMatrix xhat(xv.rows, n);
  std::vector<real> inv_std(xv.rows);
  DenseMatrix v(xv.rows, n);
  for (int i = 0; i < xv.rows; ++i) {
    const real* r = xv.row(i);
    real mean = 0;
    for (int j = 0; j < n; ++j) mean += r[j];
    mean /= n;
    real var = 0;
    for (int j = 0; j < n; ++j) {
      const real d = r[j] - mean;
      var += d * d;
    }
    var /= n;
    const real is = real(1) / std::sqrt(var + kLayerNormEps);
    inv_std[i] = is;
    real* xh = xhat.row(i);
    real* vr = v.row(i);
    const real* g = gv.row(0);
    const real* b = bv.row(0);
    for (int j = 0; j < n; ++j) {
      xh[j] = (r[j] - mean) * is;
      vr[j] = xh[j] * g[j] + b[j];
    }
  }
  ValueId out =
      push(std::move(v), needs(x) || needs(gain_row) || needs(bias_row), "layer_norm");
  if (needs(out)) steps_.push_back([x, gain_row, bias_row, out, xhat = std::move(xhat),
                    inv_std = std::move(inv_std)](Tape& t) {
    const DenseMatrix& g = t.grad_buf(out);
    const int n = g.cols;
    if (t.needs(bias_row)) add_inplace(t.grad_buf(bias_row), col_sums(g));
    if (t.needs(gain_row)) {
      DenseMatrix& gg = t.grad_buf(gain_row);
      real* o = gg.row(0);
      for (int i = 0; i < g.rows; ++i) {
        const real* gr = g.row(i);
        const real* xh = xhat.row(i);
        for (int j = 0; j < n; ++j) o[j] += gr[j] * xh[j];
      }
    }
    if (t.needs(x)) {
      DenseMatrix& gx = t.grad_buf(x);
      const real* gain = t.value(gain_row).row(0);
      for (int i = 0; i < g.rows; ++i) {
        const real* gr = g.row(i);
        const real* xh = xhat.row(i);
        real* gxr = gx.row(i);
        real mean_dxh = 0, mean_dxh_xh = 0;
        for (int j = 0; j < n; ++j) {
          const real dxh = gr[j] * gain[j];
          mean_dxh += dxh;
          mean_dxh_xh += dxh * xh[j];
        }
        mean_dxh /= n;
        mean_dxh_xh /= n;
        const real is = inv_std[i];
        for (int j = 0; j < n; ++j) {
          const real dxh = gr[j] * gain[j];
          gxr[j] += is * (dxh - mean_dxh - xh[j] * mean_dxh_xh);
        }
      }
    }
  });
  return out;
}

ValueId Tape::gather_rows(ValueId x, std::vector<int> rows) {
  const DenseMatrix& xv = value(x);
  DenseMatrix v(static_cast<int>(rows.size()), xv.cols);
  for (size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] >= 0 && rows[i] < xv.rows, "gather_rows: index out of range");
    std::copy(xv.row(rows[i]), xv.row(rows[i]) + xv.cols, v.row(static_cast<int>(i)));
  }
  ValueId out = push(std::move(v), needs(x), "gather_rows");
  if (needs(out)) steps_.push_back([x, out, rows = std::move(rows)](Tape& t) {
    if (!t.needs(x)) return;
    const DenseMatrix& g = t.grad_buf(out);
    DenseMatrix& gx = t.grad_buf(x);
    for (size_t i = 0; i < rows.size(); ++i) {
      const real* gr = g.row(static_cast<int>(i));
      real* dst = gx.row(rows[i]);
      for (int j = 0; j < g.cols; ++j) dst[j] += gr[j];
    }
  });
  return out;
}

ValueId Tape::concat_cols(const std::vector<ValueId>& xs) {
  require(!xs.empty(), "concat_cols: empty list");
  const int rows = value(xs[0]).rows;
  int total = 0;
  bool any = false;
  for (ValueId x : xs) {
    require(value(x).rows == rows, "concat_cols: row mismatch");
    total += value(x).cols;
    any = any || needs(x);
  }
  DenseMatrix v(rows, total);
  int off = 0;
  for (ValueId x : xs) {
    const DenseMatrix& xv = value(x);
    for (int i = 0; i < rows; ++i) {
      std::copy(xv.row(i), xv.row(i) + xv.cols, v.row(i) + off);
    }
    off += xv.cols;
  }
  ValueId out = push(std::move(v), any, "concat_cols");
  std::vector<ValueId> ids = xs;
  if (needs(out)) steps_.push_back([ids, out](Tape& t) {
    const DenseMatrix& g = t.grad_buf(out);
    int off = 0;
    for (ValueId x : ids) {
      const int c = t.value(x).cols;
      if (t.needs(x)) {
        DenseMatrix& gx = t.grad_buf(x);
        for (int i = 0; i < g.rows; ++i) {
          const real* gr = g.row(i) + off;
          real* dst = gx.row(i);
          for (int j = 0; j < c; ++j) dst[j] += gr[j];
        }
      }
      off += c;
    }
  });
  return out;
}

ValueId Tape::gat_head(const SparseMatrix& neighbors, ValueId h, ValueId a_src,
                       ValueId a_dst) {
  const DenseMatrix& hv = value(h);
  const DenseMatrix& asv = value(a_src);
  const DenseMatrix& adv = value(a_dst);
  const int n = hv.rows, f = hv.cols;
  require(neighbors.rows == n && neighbors.cols == n, "gat_head: pattern shape mismatch");
  require(asv.rows == f && asv.cols == 1 && adv.rows == f && adv.cols == 1,
          "gat_head: attention vectors must be f x 1");

  // s_i = a_src . h_i ; d_j = a_dst . h_j
  std::vector<real> s(n), d(n);
  for (int i = 0; i < n; ++i) {
    const real* hr = hv.row(i);
    real ss = 0, dd = 0;
    for (int k = 0; k < f; ++k) {
      ss += hr[k] * asv.data[k];
      dd += hr[k] * adv.data[k];
    }
    s[i] = ss;
    d[i] = dd;
  }

  const long nnz = neighbors.nnz();
  std::vector<real> alpha(nnz);
  std::vector<real> lrelu_grad(nnz);
  DenseMatrix out_v(n, f);
#pragma omp parallel for schedule(static) if (nnz * f > 32768)
  for (int i = 0; i < n; ++i) {
    const int p0 = neighbors.offsets[i], p1 = neighbors.offsets[i + 1];
    if (p0 == p1) continue;
    real zmax = -1e300;
    for (int p = p0; p < p1; ++p) {
      const real z = s[i] + d[neighbors.indices[p]];
      const real e = z > real(0) ? z : kLeakySlope * z;
      lrelu_grad[p] = z > real(0) ? real(1) : kLeakySlope;
      alpha[p] = e;  // pre-softmax, reused below
      zmax = std::max(zmax, e);
    }
    real denom = 0;
    for (int p = p0; p < p1; ++p) {
      alpha[p] = std::exp(alpha[p] - zmax);
      denom += alpha[p];
    }
    real* orow = out_v.row(i);
    for (int p = p0; p < p1; ++p) {
      alpha[p] /= denom;
      const real* hr = hv.row(neighbors.indices[p]);
      const real a = alpha[p];
      for (int k = 0; k < f; ++k) orow[k] += a * hr[k];
    }
  }

  ValueId out = push(std::move(out_v), needs(h) || needs(a_src) || needs(a_dst), "gat_head");
  const SparseMatrix* np = &neighbors;
  if (needs(out)) steps_.push_back([np, h, a_src, a_dst, out, s = std::move(s), d = std::move(d),
                    alpha = std::move(alpha), lrelu_grad = std::move(lrelu_grad)](Tape& t) {
    const DenseMatrix& g = t.grad_buf(out);
    const DenseMatrix& hv = t.value(h);
    const DenseMatrix& asv = t.value(a_src);
    const DenseMatrix& adv = t.value(a_dst);
    const int n = hv.rows, f = hv.cols;
    const bool want_h = t.needs(h);

    // d(loss)/d(z_ij) via softmax backward, then fan out to s_i, d_j, h.
    std::vector<real> ds(n, real(0)), dd(n, real(0));
    DenseMatrix gh(n, f);
    for (int i = 0; i < n; ++i) {
      const int p0 = np->offsets[i], p1 = np->offsets[i + 1];
      if (p0 == p1) continue;
      const real* gr = g.row(i);
      // dalpha_ij = g_i . h_j ; row-level softmax jacobian
      real dot_sum = 0;
      for (int p = p0; p < p1; ++p) {
        const real* hr = hv.row(np->indices[p]);
        real da = 0;
        for (int k = 0; k < f; ++k) da += gr[k] * hr[k];
        dot_sum += alpha[p] * da;
      }
      for (int p = p0; p < p1; ++p) {
        const int j = np->indices[p];
        const real* hr = hv.row(j);
        real da = 0;
        for (int k = 0; k < f; ++k) da += gr[k] * hr[k];
        const real dz = alpha[p] * (da - dot_sum) * lrelu_grad[p];
        ds[i] += dz;
        dd[j] += dz;
        if (want_h) {
          // direct path: out_i += alpha_ij h_j
          real* ghr = gh.row(j);
          const real a = alpha[p];
          for (int k = 0; k < f; ++k) ghr[k] += a * gr[k];
        }
      }
    }
    if (want_h) {
      for (int i = 0; i < n; ++i) {
        real* ghr = gh.row(i);
        for (int k = 0; k < f; ++k) {
          ghr[k] += ds[i] * asv.data[k] + dd[i] * adv.data[k];
        }
      }
      add_inplace(t.grad_buf(h), gh);
    }
    if (t.needs(a_src)) {
      DenseMatrix& ga = t.grad_buf(a_src);
      for (int i = 0; i < n; ++i) {
        const real* hr = hv.row(i);
        for (int k = 0; k < f; ++k) ga.data[k] += ds[i] * hr[k];
      }
    }
    if (t.needs(a_dst)) {
      DenseMatrix& ga = t.grad_buf(a_dst);
      for (int i = 0; i < n; ++i) {
        const real* hr = hv.row(i);
        for (int k = 0; k < f; ++k) ga.data[k] += dd[i] * hr[k];
      }
    }
  });
  return out;
}

ValueId Tape::softmax_cross_entropy(ValueId logits, const std::vector<int8_t>& labels,
                                    const std::vector<int>& mask_rows) {
  const DenseMatrix& lv = value(logits);
  require(!mask_rows.empty(), "softmax_cross_entropy: empty mask");
  require(static_cast<int>(labels.size()) == lv.rows,
          "softmax_cross_entropy: labels size mismatch");
  const int c = lv.cols;
  DenseMatrix probs(static_cast<int>(mask_rows.size()), c);
  real loss = 0;
  for (size_t m = 0; m < mask_rows.size(); ++m) {
    const int r = mask_rows[m];
    require(r >= 0 && r < lv.rows, "softmax_cross_entropy: mask row out of range");
    const int8_t y = labels[r];
    require(y >= 0 && y < c, "softmax_cross_entropy: label out of range");
    const real* row = lv.row(r);
    real mx = row[0];
    for (int j = 1; j < c; ++j) mx = std::max(mx, row[j]);
    real denom = 0;
    real* pr = probs.row(static_cast<int>(m));
    for (int j = 0; j < c; ++j) {
      pr[j] = std::exp(row[j] - mx);
      denom += pr[j];
    }
    for (int j = 0; j < c; ++j) pr[j] /= denom;
    loss -= std::log(std::max(pr[y], real(1e-300)));
  }
  loss /= static_cast<real>(mask_rows.size());
  DenseMatrix v(1, 1);
  v.data[0] = loss;
  ValueId out = push(std::move(v), needs(logits), "softmax_cross_entropy");
  std::vector<int> rows = mask_rows;
  std::vector<int8_t> labs = labels;
  if (needs(out)) steps_.push_back([logits, out, rows = std::move(rows), labs = std::move(labs),
                    probs = std::move(probs)](Tape& t) {
    if (!t.needs(logits)) return;
    const real gscale = t.grad_buf(out).data[0] / static_cast<real>(rows.size());
    DenseMatrix& gl = t.grad_buf(logits);
    const int c = gl.cols;
    for (size_t m = 0; m < rows.size(); ++m) {
      const int r = rows[m];
      const real* pr = probs.row(static_cast<int>(m));
      real* gr = gl.row(r);
      for (int j = 0; j < c; ++j) {
        const real onehot = (j == labs[r]) ? real(1) : real(0);
        gr[j] += gscale * (pr[j] - onehot);
      }
    }
  });
  return out;
}

ValueId Tape::sum_all(ValueId x) {
  real s = 0;
  for (real e : value(x).data) s += e;
  DenseMatrix v(1, 1);
  v.data[0] = s;
  ValueId out = push(std::move(v), needs(x), "sum_all");
  if (needs(out)) steps_.push_back([x, out](Tape& t) {
    if (!t.needs(x)) return;
    const real g = t.grad_buf(out).data[0];
    for (auto& e : t.grad_buf(x).data) e += g;
  });
  return out;
}

void Tape::backward(ValueId root) {
  const DenseMatrix& rv = value(root);
  if (rv.rows != 1 || rv.cols != 1) {
    throw std::invalid_argument("backward: root must be scalar (1x1)");
  }
  for (auto& s : slots_) {
    if (s.needs_grad) s.grad = DenseMatrix(s.value.rows, s.value.cols);
  }
  if (!slots_[root].needs_grad) {
    // nothing reachable; still mark backward as run
    slots_[root].grad = DenseMatrix(1, 1);
    ran_backward_ = true;
    return;
  }
  slots_[root].grad.data[0] = real(1);
  for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)(*this);
  for (auto& s : slots_) {
    if (s.leaf != nullptr) add_inplace(s.leaf->grad, s.grad);
  }
  ran_backward_ = true;
}

}  // namespace dhg
