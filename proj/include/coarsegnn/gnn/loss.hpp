/*******************************************************************************
 * Masked losses and evaluation metrics on plain matrices. Training builds the
 * same losses on a Tape; these evaluate without recording.
 *
 * @file:   loss.hpp
 ******************************************************************************/
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "coarsegnn/sparse.hpp"

namespace coarsegnn {

/// Row indices whose mask entry is set.
[[nodiscard]] std::vector<Eigen::Index> masked_rows(std::span<const std::uint8_t> mask);

/// Mean softmax cross-entropy over masked rows. Throws std::invalid_argument
/// "no supervised nodes" for an empty mask.
[[nodiscard]] double cross_entropy(const Matrix &logits, std::span<const int> labels,
                                   std::span<const std::uint8_t> mask);

/// Mean absolute error over masked rows and all target columns.
[[nodiscard]] double mae(const Matrix &prediction, const Matrix &targets,
                         std::span<const std::uint8_t> mask);

/// Argmax-match rate over masked rows; argmax ties go to the lowest column.
[[nodiscard]] double accuracy(const Matrix &logits, std::span<const int> labels,
                              std::span<const std::uint8_t> mask);

/// mae / sigma. Throws for sigma ≤ 0.
[[nodiscard]] double normalized_mae(const Matrix &prediction, const Matrix &targets,
                                    std::span<const std::uint8_t> mask, double sigma);

/// Population standard deviation of the masked target entries, pooled over
/// columns. Returns 1 when it would be zero so normalization stays defined.
[[nodiscard]] double target_sigma(const Matrix &targets, std::span<const std::uint8_t> mask);

[[nodiscard]] Eigen::Index argmax_row(const Matrix &m, Eigen::Index row);

} // namespace coarsegnn
