/*******************************************************************************
 * Adam over GcnParams.
 *
 * Coupled decay (default) adds 2λW to the gradient before the moment update;
 * decoupled decay instead shrinks W by lr·2λ·W after it.
 *
 * @file:   optimizer.hpp
 ******************************************************************************/
#pragma once

#include <cstdint>

#include "coarsegnn/gnn/model.hpp"

namespace coarsegnn {

struct AdamConfig {
  double lr = 0.01;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool decoupled = false;
};

struct AdamState {
  GcnParams m;
  GcnParams v;
  std::uint64_t step = 0;

  [[nodiscard]] static AdamState for_params(const GcnParams &params);
};

/// One update in place. `grads` must not include the decay term.
void adam_step(GcnParams &params, const GcnParams &grads, AdamState &state,
               const AdamConfig &config);

} // namespace coarsegnn
