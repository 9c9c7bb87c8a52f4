#include "hvs/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "hvs/random.hpp"

namespace hvs {

const std::vector<std::string>& cifar10_class_names() {
  static const std::vector<std::string> names = {"airplane", "automobile", "bird",  "cat",  "deer",
                                                 "dog",      "frog",       "horse", "ship", "truck"};
  return names;
}

Dataset load_cifar10_records(std::span<const std::uint8_t> raw, std::size_t max_count) {
  if (raw.size() % kCifarRecordBytes != 0) {
    throw FormatError("CIFAR-10 batch length " + std::to_string(raw.size()) + " is not a multiple of " +
                      std::to_string(kCifarRecordBytes));
  }
  const std::size_t n = std::min(max_count, raw.size() / kCifarRecordBytes);
  constexpr Index plane = kCifarSide * kCifarSide;

  Dataset out;
  out.class_names = cifar10_class_names();
  out.items.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto record = raw.subspan(i * kCifarRecordBytes, kCifarRecordBytes);
    if (record[0] >= kCifarClasses) {
      throw CorruptRecordError("CIFAR-10 record " + std::to_string(i) + " has label byte " +
                               std::to_string(record[0]));
    }
    Image img(kCifarSide, kCifarSide, 3);
    // Record planes already match the planar storage order.
    for (Index k = 0; k < 3 * plane; ++k) {
      img.values()[k] = static_cast<float>(record[1 + k]) / 255.0f;
    }
    out.items.push_back({std::move(img), record[0]});
  }
  return out;
}

Bytes encode_cifar10_records(const Dataset& data) {
  Bytes out;
  out.reserve(data.size() * kCifarRecordBytes);
  for (const auto& item : data.items) {
    const auto& img = item.image;
    if (img.height() != kCifarSide || img.width() != kCifarSide || img.channels() != 3) {
      throw DimensionError("CIFAR-10 records hold 32x32x3 images only");
    }
    if (item.label < 0 || item.label > 255) {
      throw ArgumentError("label " + std::to_string(item.label) + " does not fit a CIFAR-10 label byte");
    }
    out.push_back(static_cast<std::uint8_t>(item.label));
    for (Index k = 0; k < img.size(); ++k) out.push_back(quantize_unit(img.values()[k]));
  }
  return out;
}

Dataset load_cifar10_file(const std::filesystem::path& path, std::size_t max_count) {
  const Bytes raw = read_file(path);
  try {
    return load_cifar10_records(raw, max_count);
  } catch (const CorruptRecordError& e) {
    throw CorruptRecordError(path.string() + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

Dataset load_cifar10_split(const std::filesystem::path& dir, CifarSplit split, std::size_t max_count) {
  std::vector<std::filesystem::path> files;
  if (split == CifarSplit::kTest) {
    files.push_back(dir / "test_batch.bin");
  } else {
    for (int b = 1; b <= 5; ++b) files.push_back(dir / ("data_batch_" + std::to_string(b) + ".bin"));
  }
  if (!std::filesystem::exists(files.front())) {
    throw ConfigError("CIFAR-10 batch not found: " + files.front().string());
  }

  Dataset out;
  out.class_names = cifar10_class_names();
  for (const auto& f : files) {
    if (out.size() >= max_count || !std::filesystem::exists(f)) break;
    Dataset part = load_cifar10_file(f, max_count - out.size());
    std::move(part.items.begin(), part.items.end(), std::back_inserter(out.items));
  }
  return out;
}

std::uint8_t quantize_unit(float v) {
  const double scaled = std::floor(static_cast<double>(v) * 255.0 + 0.5);
  return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

Bytes encode_ppm(const Image& img) {
  if (img.channels() != 3) throw DimensionError("PPM export needs 3 channels");
  const std::string header =
      "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  Bytes out(header.begin(), header.end());
  out.reserve(header.size() + static_cast<std::size_t>(img.size()));
  for (Index r = 0; r < img.height(); ++r) {
    for (Index c = 0; c < img.width(); ++c) {
      for (Index ch = 0; ch < 3; ++ch) out.push_back(quantize_unit(img(r, c, ch)));
    }
  }
  return out;
}

namespace {

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string next_ppm_token(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(bytes[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  std::string token;
  while (pos < bytes.size() && !std::isspace(bytes[pos])) token.push_back(static_cast<char>(bytes[pos++]));
  if (token.empty()) throw FormatError("PPM: truncated header");
  return token;
}

long parse_ppm_number(const std::string& token) {
  if (!std::all_of(token.begin(), token.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
    throw FormatError("PPM: bad header field '" + token + "'");
  }
  return std::stol(token);
}

}  // namespace

Image decode_ppm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  if (next_ppm_token(bytes, pos) != "P6") throw FormatError("PPM: expected P6 magic");
  const long width = parse_ppm_number(next_ppm_token(bytes, pos));
  const long height = parse_ppm_number(next_ppm_token(bytes, pos));
  const long maxval = parse_ppm_number(next_ppm_token(bytes, pos));
  if (maxval != 255) throw FormatError("PPM: only maxval 255 is supported");
  if (width <= 0 || height <= 0) throw FormatError("PPM: empty image");
  ++pos;  // single whitespace byte after maxval
  const auto needed = static_cast<std::size_t>(width * height * 3);
  if (pos + needed != bytes.size()) throw FormatError("PPM: pixel data length mismatch");

  Image img(height, width, 3);
  for (long r = 0; r < height; ++r) {
    for (long c = 0; c < width; ++c) {
      for (long ch = 0; ch < 3; ++ch) img(r, c, ch) = static_cast<float>(bytes[pos++]) / 255.0f;
    }
  }
  return img;
}

Image make_montage(std::span<const Image> images, Index columns, Index pad) {
  if (images.empty()) throw ArgumentError("montage needs at least one image");
  if (columns < 1) throw ArgumentError("montage needs columns >= 1");
  if (pad < 0) throw ArgumentError("montage padding must be non-negative");
  const Image& first = images.front();
  for (const auto& img : images) require_same_shape(first, img, "make_montage");

  const Index count = static_cast<Index>(images.size());
  const Index cols = std::min(columns, count);
  const Index rows = (count + columns - 1) / columns;
  const Index h = first.height();
  const Index w = first.width();
  Image out(rows * h + (rows - 1) * pad, cols * w + (cols - 1) * pad, first.channels(), 1.0f);
  for (Index k = 0; k < count; ++k) {
    const Index top = (k / columns) * (h + pad);
    const Index left = (k % columns) * (w + pad);
    for (Index ch = 0; ch < first.channels(); ++ch) {
      out.plane(ch).block(top, left, h, w) = images[static_cast<std::size_t>(k)].plane(ch);
    }
  }
  return out;
}

SyntheticKind parse_synthetic_kind(std::string_view name) {
  if (name == "constant") return SyntheticKind::kConstant;
  if (name == "checkerboard") return SyntheticKind::kCheckerboard;
  if (name == "noise") return SyntheticKind::kNoise;
  throw ArgumentError("unknown synthetic kind '" + std::string(name) + "'");
}

Dataset synthesize_dataset(SyntheticKind kind, std::size_t count, std::uint64_t seed, Index side) {
  if (count < 1) throw ArgumentError("synthetic dataset needs count >= 1");
  Rng rng(seed);
  Dataset out;
  out.class_names = {"dark", "bright"};
  out.items.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const int label = static_cast<int>(i % 2);
    const double mean = label == 0 ? 0.3 : 0.7;
    Image img(side, side, 3);
    for (Index ch = 0; ch < 3; ++ch) {
      const auto base = static_cast<float>(mean + rng.uniform(-0.05, 0.05));
      auto plane = img.plane(ch);
      switch (kind) {
        case SyntheticKind::kConstant:
          plane.setConstant(base);
          break;
        case SyntheticKind::kCheckerboard: {
          const float lo = base - kCheckerAmplitude / 2;
          const float hi = lo + kCheckerAmplitude;
          for (Index r = 0; r < side; ++r) {
            for (Index c = 0; c < side; ++c) plane(r, c) = ((r + c) % 2 == 0) ? lo : hi;
          }
          break;
        }
        case SyntheticKind::kNoise:
          for (Index r = 0; r < side; ++r) {
            for (Index c = 0; c < side; ++c) {
              plane(r, c) = std::clamp(base + static_cast<float>(rng.uniform(-0.2, 0.2)), 0.0f, 1.0f);
            }
          }
          break;
      }
    }
    out.items.push_back({std::move(img), label});
  }
  return out;
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  Bytes out((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw ConfigError("read failed: " + path.string());
  return out;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ConfigError("write failed: " + path.string());
}

}  // namespace hvs
