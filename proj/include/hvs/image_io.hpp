#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "hvs/image.hpp"

namespace hvs {

using Bytes = std::vector<std::uint8_t>;

// CIFAR-10 binary layout: 1 label byte, then the R, G and B planes of a
// 32x32 image, 1024 bytes each, row-major.
inline constexpr Index kCifarSide = 32;
inline constexpr std::size_t kCifarRecordBytes = 1 + 3 * 32 * 32;
inline constexpr int kCifarClasses = 10;

/// Decodes up to max_count records from a CIFAR-10 batch. Pixel byte b
/// becomes b/255.
Dataset load_cifar10_records(std::span<const std::uint8_t> raw,
                             std::size_t max_count = std::numeric_limits<std::size_t>::max());

/// Inverse of load_cifar10_records for 32x32 RGB images, rounding each
/// value to the nearest byte.
Bytes encode_cifar10_records(const Dataset& data);

Dataset load_cifar10_file(const std::filesystem::path& path,
                          std::size_t max_count = std::numeric_limits<std::size_t>::max());

enum class CifarSplit { kTrain, kTest };

/// Loads data_batch_1..5.bin (train) or test_batch.bin (test) from dir,
/// stopping after max_count records. Missing train batches after the first
/// are skipped.
Dataset load_cifar10_split(const std::filesystem::path& dir, CifarSplit split,
                           std::size_t max_count = std::numeric_limits<std::size_t>::max());

/// 8-bit quantization used by every exporter: round-half-up of v*255,
/// clamped to [0,255].
std::uint8_t quantize_unit(float v);

/// Binary PPM ("P6", maxval 255).
Bytes encode_ppm(const Image& img);

/// Reads the P6/maxval-255 subset that encode_ppm writes (comments allowed).
Image decode_ppm(std::span<const std::uint8_t> bytes);

/// Grid of equally sized images, row-major, separated (not surrounded) by
/// pad white pixels.
Image make_montage(std::span<const Image> images, Index columns, Index pad);

enum class SyntheticKind { kConstant, kCheckerboard, kNoise };

SyntheticKind parse_synthetic_kind(std::string_view name);

// Amplitude of the checkerboard pattern: neighbouring pixels differ by this.
inline constexpr float kCheckerAmplitude = 0.25f;

/// Two-class synthetic data: even indices are class 0 ("dark", mean near
/// 0.3), odd are class 1 ("bright", mean near 0.7). Deterministic in seed.
Dataset synthesize_dataset(SyntheticKind kind, std::size_t count, std::uint64_t seed, Index side = kCifarSide);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace hvs
