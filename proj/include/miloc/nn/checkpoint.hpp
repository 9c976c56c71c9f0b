#pragma once

#include "miloc/nn/network.hpp"

#include <filesystem>
#include <iosfwd>

namespace miloc::nn {

// Binary parameter dump, little-endian:
//   "MLNN" | u32 version | i64 C, H, W
//   u32 layer count, then per layer: u32 kind | u32 ndims | i64 dims...
//   u32 tensor count, then per tensor: u32 rank | i64 shape... | f64 values...
// Doubles are stored bit-exactly, so save/load round-trips exactly.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const Network& net);
Network read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Network& net);
Network load_checkpoint(const std::filesystem::path& path);

} // namespace miloc::nn
