#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hvs/nn.hpp"

namespace hvs::nn {

// Checkpoint layout, all integers and floats little-endian:
//
//   magic      8 bytes  "HVSCKPT\0"
//   version    u32      kCheckpointVersion
//   input      3 x u32  channels, height, width
//   n_layers   u32
//   layers     n_layers x {u32 kind, u32 units, u32 kernel, f32 rate, u32 activation}
//   step       u64
//   seed       u64
//   tensors    for each conv/dense layer in order:
//                u32 rows, u32 cols, rows*cols f32 weights (row-major),
//                u32 n, n f32 biases
//
// Nothing may follow the last tensor.
inline constexpr char kCheckpointMagic[8] = {'H', 'V', 'S', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> save_params(const NetworkParams& params);

NetworkParams load_params(std::span<const std::uint8_t> bytes);

/// As load_params, and additionally rejects a checkpoint whose architecture
/// differs from expected.
NetworkParams load_params(std::span<const std::uint8_t> bytes, const Architecture& expected);

}  // namespace hvs::nn
