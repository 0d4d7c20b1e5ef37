/*******************************************************************************
 * Parameter checkpoints.
 *
 * Layout: 8-byte magic "CGNNCKPT", uint32 version, uint32 header length, a
 * JSON header {"L", "dims", "seed"}, then every weight matrix row-major as
 * little-endian doubles (layers first, head last). Round-trips bit-exactly.
 *
 * @file:   checkpoint.hpp
 ******************************************************************************/
#pragma once

#include <filesystem>

#include "coarsegnn/gnn/model.hpp"

namespace coarsegnn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const GcnParams &params, const std::filesystem::path &path);
/// Throws FormatError for a bad magic, version, header or truncated payload.
[[nodiscard]] GcnParams load_checkpoint(const std::filesystem::path &path);

} // namespace coarsegnn
