/*******************************************************************************
 * @file:   loss.cpp
 ******************************************************************************/
#include "coarsegnn/gnn/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace coarsegnn {

namespace {

std::vector<Eigen::Index> supervised(std::span<const std::uint8_t> mask, const Eigen::Index rows) {
  if (static_cast<Eigen::Index>(mask.size()) != rows) {
    throw std::invalid_argument("mask length does not match rows");
  }
  auto idx = masked_rows(mask);
  if (idx.empty()) {
    throw std::invalid_argument("no supervised nodes");
  }
  return idx;
}

} // namespace

std::vector<Eigen::Index> masked_rows(std::span<const std::uint8_t> mask) {
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] != 0) {
      rows.push_back(static_cast<Eigen::Index>(i));
    }
  }
  return rows;
}

Eigen::Index argmax_row(const Matrix &m, const Eigen::Index row) {
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < m.cols(); ++c) {
    if (m(row, c) > m(row, best)) {
      best = c;
    }
  }
  return best;
}

double cross_entropy(const Matrix &logits, std::span<const int> labels,
                     std::span<const std::uint8_t> mask) {
  if (static_cast<Eigen::Index>(labels.size()) != logits.rows()) {
    throw std::invalid_argument("label count does not match rows");
  }
  const auto rows = supervised(mask, logits.rows());
  double total = 0.0;
  for (const Eigen::Index r : rows) {
    const int label = labels[static_cast<std::size_t>(r)];
    if (label < 0 || label >= logits.cols()) {
      throw std::invalid_argument("class label outside output width");
    }
    const double peak = logits.row(r).maxCoeff();
    total += peak + std::log((logits.row(r).array() - peak).exp().sum()) - logits(r, label);
  }
  return total / static_cast<double>(rows.size());
}

double mae(const Matrix &prediction, const Matrix &targets, std::span<const std::uint8_t> mask) {
  if (prediction.rows() != targets.rows() || prediction.cols() != targets.cols()) {
    throw std::invalid_argument("prediction/target shape mismatch");
  }
  const auto rows = supervised(mask, prediction.rows());
  double total = 0.0;
  for (const Eigen::Index r : rows) {
    total += (prediction.row(r) - targets.row(r)).cwiseAbs().sum();
  }
  return total / static_cast<double>(rows.size() * static_cast<std::size_t>(prediction.cols()));
}

double accuracy(const Matrix &logits, std::span<const int> labels,
                std::span<const std::uint8_t> mask) {
  if (static_cast<Eigen::Index>(labels.size()) != logits.rows()) {
    throw std::invalid_argument("label count does not match rows");
  }
  const auto rows = supervised(mask, logits.rows());
  std::size_t hits = 0;
  for (const Eigen::Index r : rows) {
    hits += argmax_row(logits, r) == labels[static_cast<std::size_t>(r)] ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(rows.size());
}

double normalized_mae(const Matrix &prediction, const Matrix &targets,
                      std::span<const std::uint8_t> mask, const double sigma) {
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("sigma must be positive");
  }
  return mae(prediction, targets, mask) / sigma;
}

double target_sigma(const Matrix &targets, std::span<const std::uint8_t> mask) {
  const auto rows = supervised(mask, targets.rows());
  double sum = 0.0;
  double count = 0.0;
  for (const Eigen::Index r : rows) {
    sum += targets.row(r).sum();
    count += static_cast<double>(targets.cols());
  }
  const double mean = sum / count;
  double sq = 0.0;
  for (const Eigen::Index r : rows) {
    sq += (targets.row(r).array() - mean).square().sum();
  }
  const double sigma = std::sqrt(sq / count);
  return sigma > 0.0 ? sigma : 1.0;
}

} // namespace coarsegnn
