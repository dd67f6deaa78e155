#pragma once

#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "dhgreg/common.hpp"
#include "dhgreg/dense.hpp"
#include "dhgreg/rng.hpp"
#include "dhgreg/sparse.hpp"

namespace dhg {

/// A named trainable tensor with its gradient accumulator.
struct Parameter {
  std::string name;
  DenseMatrix value;
  DenseMatrix grad;
  bool weight_decay = false;  // linear/conv weights only, not biases or LN params
};

/// Owns the parameters of one model. Stable addresses (deque).
class ParamStore {
 public:
  Parameter& add(const std::string& name, int rows, int cols, bool weight_decay) {
    items_.push_back(Parameter{name, DenseMatrix(rows, cols), DenseMatrix(rows, cols),
                               weight_decay});
    return items_.back();
  }
  void zero_grads() {
    for (auto& p : items_) std::fill(p.grad.data.begin(), p.grad.data.end(), real(0));
  }
  size_t size() const { return items_.size(); }
  Parameter& operator[](size_t i) { return items_[i]; }
  const Parameter& operator[](size_t i) const { return items_[i]; }
  auto begin() { return items_.begin(); }
  auto end() { return items_.end(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

 private:
  std::deque<Parameter> items_;
};

using ValueId = int;

/// Reverse-mode differentiation record. Ops are recorded in execution order;
/// backward() replays the recorded rules in reverse. One tape = one forward
/// pass; single-threaded by contract (kernels may parallelize internally).
class Tape {
 public:
  Tape() = default;

  ValueId constant(DenseMatrix v);
  ValueId param(Parameter& p);

  const DenseMatrix& value(ValueId id) const { return slots_[id].value; }
  /// Gradient of the last backward() root w.r.t. this slot.
  const DenseMatrix& grad(ValueId id) const;

  // ---- differentiable ops ----
  ValueId matmul(ValueId x, ValueId w);
  ValueId spmm(const SparseMatrix& a, ValueId x);  // adjacency is constant data
  ValueId add(ValueId x, ValueId y);
  ValueId add_row_broadcast(ValueId x, ValueId bias_row);
  ValueId scale(ValueId x, real alpha);
  ValueId sum_values(const std::vector<ValueId>& xs);
  ValueId relu(ValueId x);
  ValueId dropout(ValueId x, real p, bool training, Rng& rng);
  ValueId layer_norm(ValueId x, ValueId gain_row, ValueId bias_row);
  ValueId gather_rows(ValueId x, std::vector<int> rows);
  ValueId concat_cols(const std::vector<ValueId>& xs);
  /// One GAT attention head over the given neighbor pattern (which must
  /// already contain self loops): out_i = sum_j alpha_ij h_j with
  /// alpha_i = softmax_j leakyrelu(a_src.h_i + a_dst.h_j), slope 0.2.
  ValueId gat_head(const SparseMatrix& neighbors, ValueId h, ValueId a_src, ValueId a_dst);
  /// Mean over masked rows of -log softmax(logits)[label]. Returns 1x1.
  ValueId softmax_cross_entropy(ValueId logits, const std::vector<int8_t>& labels,
                                const std::vector<int>& mask_rows);
  ValueId sum_all(ValueId x);

  ValueId linear(ValueId x, ValueId w, ValueId b) {
    return add_row_broadcast(matmul(x, w), b);
  }

  /// Seeds d(root)=1, runs all recorded rules in reverse, then accumulates
  /// leaf gradients into their Parameters.
  void backward(ValueId root);

  void set_finite_checks(bool on) { finite_checks_ = on; }

 private:
  struct Slot {
    DenseMatrix value;
    DenseMatrix grad;
    bool needs_grad = false;
    Parameter* leaf = nullptr;
  };

  ValueId push(DenseMatrix v, bool needs_grad, const char* op_name);
  DenseMatrix& grad_buf(ValueId id) { return slots_[id].grad; }
  bool needs(ValueId id) const { return slots_[id].needs_grad; }

  std::vector<Slot> slots_;
  std::vector<std::function<void(Tape&)>> steps_;
  bool finite_checks_ = true;
  bool ran_backward_ = false;
};

}  // namespace dhg
