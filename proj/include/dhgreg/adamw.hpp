#pragma once

#include <vector>

#include "dhgreg/common.hpp"
#include "dhgreg/tape.hpp"

namespace dhg {

struct AdamWConfig {
  real lr = real(0.001);
  real beta1 = real(0.9);
  real beta2 = real(0.999);
  real eps = real(1e-8);
  real weight_decay = real(0.01);
};

/// AdamW with decoupled weight decay: the decay term multiplies the weights
/// directly and never enters the moment estimates. Decay is applied only to
/// parameters flagged weight_decay (linear/conv weights).
class AdamW {
 public:
  AdamW(ParamStore& params, AdamWConfig cfg);

  /// One optimizer step from the gradients currently in the store.
  void step();

  long step_count() const { return step_; }

 private:
  ParamStore& params_;
  AdamWConfig cfg_;
  std::vector<DenseMatrix> m_;
  std::vector<DenseMatrix> v_;
  long step_ = 0;
};

}  // namespace dhg
