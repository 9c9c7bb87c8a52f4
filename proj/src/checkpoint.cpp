#include "hvs/checkpoint.hpp"

#include <bit>
#include <string>

namespace hvs::nn {

namespace {

class Writer {
 public:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) out_.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  void u64(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) out_.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::span<const std::uint8_t> raw(std::size_t n) {
    need(n);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * k);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * k);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw CheckpointFormatError("checkpoint truncated at byte " + std::to_string(pos_));
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> save_params(const NetworkParams& params) {
  Writer w;
  w.raw(kCheckpointMagic, sizeof kCheckpointMagic);
  w.u32(kCheckpointVersion);
  const auto& arch = params.arch;
  w.u32(static_cast<std::uint32_t>(arch.input.channels));
  w.u32(static_cast<std::uint32_t>(arch.input.height));
  w.u32(static_cast<std::uint32_t>(arch.input.width));
  w.u32(static_cast<std::uint32_t>(arch.layers.size()));
  for (const auto& l : arch.layers) {
    w.u32(static_cast<std::uint32_t>(l.kind));
    w.u32(l.units);
    w.u32(l.kernel);
    w.f32(l.rate);
    w.u32(static_cast<std::uint32_t>(l.activation));
  }
  w.u64(params.step);
  w.u64(params.seed);
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    if (!arch.layers[i].has_params()) continue;
    const auto& p = params.layers[i];
    w.u32(static_cast<std::uint32_t>(p.weights.rows()));
    w.u32(static_cast<std::uint32_t>(p.weights.cols()));
    for (Index k = 0; k < p.weights.size(); ++k) w.f32(p.weights.data()[k]);
    w.u32(static_cast<std::uint32_t>(p.bias.size()));
    for (Index k = 0; k < p.bias.size(); ++k) w.f32(p.bias[k]);
  }
  return w.take();
}

NetworkParams load_params(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const auto magic = r.raw(sizeof kCheckpointMagic);
  if (!std::equal(magic.begin(), magic.end(), kCheckpointMagic)) throw CheckpointFormatError("bad checkpoint magic");
  if (const auto v = r.u32(); v != kCheckpointVersion) {
    throw CheckpointFormatError("unsupported checkpoint version " + std::to_string(v));
  }

  NetworkParams net;
  net.arch.input.channels = r.u32();
  net.arch.input.height = r.u32();
  net.arch.input.width = r.u32();
  const std::uint32_t n_layers = r.u32();
  if (n_layers > 4096) throw CheckpointFormatError("implausible layer count " + std::to_string(n_layers));
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    LayerSpec l;
    const std::uint32_t kind = r.u32();
    if (kind < 1 || kind > 5) throw CheckpointFormatError("unknown layer kind " + std::to_string(kind));
    l.kind = static_cast<LayerKind>(kind);
    l.units = r.u32();
    l.kernel = r.u32();
    l.rate = r.f32();
    const std::uint32_t act = r.u32();
    if (act > 2) throw CheckpointFormatError("unknown activation " + std::to_string(act));
    l.activation = static_cast<Activation>(act);
    net.arch.layers.push_back(l);
  }
  try {
    net.arch.validate();
  } catch (const ArgumentError& e) {
    throw CheckpointFormatError(std::string("checkpoint architecture invalid: ") + e.what());
  }
  net.step = r.u64();
  net.seed = r.u64();

  for (const auto& [rows, cols] : weight_shapes(net.arch)) {
    LayerParams<float> p;
    if (rows > 0) {
      const std::uint32_t got_rows = r.u32();
      const std::uint32_t got_cols = r.u32();
      if (got_rows != rows || got_cols != cols) {
        throw CheckpointFormatError("weight tensor " + std::to_string(got_rows) + "x" + std::to_string(got_cols) +
                                    " where the architecture implies " + std::to_string(rows) + "x" +
                                    std::to_string(cols));
      }
      p.weights.resize(rows, cols);
      for (Index k = 0; k < p.weights.size(); ++k) p.weights.data()[k] = r.f32();
      if (r.u32() != rows) throw CheckpointFormatError("bias length does not match layer width");
      p.bias.resize(rows);
      for (Index k = 0; k < rows; ++k) p.bias[k] = r.f32();
    }
    net.layers.push_back(std::move(p));
  }
  if (!r.at_end()) throw CheckpointFormatError("trailing bytes after checkpoint tensors");
  if (!net.all_finite()) throw CheckpointFormatError("checkpoint holds non-finite values");
  return net;
}

NetworkParams load_params(std::span<const std::uint8_t> bytes, const Architecture& expected) {
  NetworkParams net = load_params(bytes);
  if (!(net.arch == expected)) {
    throw CheckpointFormatError("checkpoint architecture [" + net.arch.describe() + "] differs from expected [" +
                                expected.describe() + "]");
  }
  return net;
}

}  // namespace hvs::nn
