/*******************************************************************************
 * @file:   optimizer.cpp
 ******************************************************************************/
#include "coarsegnn/gnn/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace coarsegnn {

namespace {

void update(Matrix &w, const Matrix &g_raw, Matrix &m, Matrix &v, const AdamConfig &cfg,
            const double c1, const double c2) {
  if (g_raw.rows() != w.rows() || g_raw.cols() != w.cols()) {
    throw std::invalid_argument("gradient shape does not match parameter");
  }
  Matrix g = g_raw;
  if (!cfg.decoupled && cfg.weight_decay != 0.0) {
    g += 2.0 * cfg.weight_decay * w;
  }
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
  v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
  const auto m_hat = m.array() / c1;
  const auto v_hat = v.array() / c2;
  w.array() -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
  if (cfg.decoupled && cfg.weight_decay != 0.0) {
    w *= 1.0 - cfg.lr * 2.0 * cfg.weight_decay;
  }
}

} // namespace

AdamState AdamState::for_params(const GcnParams &params) {
  return {zeros_like(params), zeros_like(params), 0};
}

void adam_step(GcnParams &params, const GcnParams &grads, AdamState &state,
               const AdamConfig &config) {
  if (grads.layers.size() != params.layers.size() ||
      state.m.layers.size() != params.layers.size()) {
    throw std::invalid_argument("optimizer state does not match parameters");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    update(params.layers[l], grads.layers[l], state.m.layers[l], state.v.layers[l], config, c1,
           c2);
  }
  update(params.head, grads.head, state.m.head, state.v.head, config, c1, c2);
}

} // namespace coarsegnn
