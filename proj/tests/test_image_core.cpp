#include "doctest.h"

#include <cmath>
#include <string>

#include "hvs/image_io.hpp"
#include "hvs/random.hpp"

using namespace hvs;

namespace {

Bytes zero_record(std::uint8_t label = 0) {
  Bytes b(kCifarRecordBytes, 0);
  b[0] = label;
  return b;
}

Image random_image(Rng& rng, Index h, Index w) {
  Image img(h, w, 3);
  for (Index k = 0; k < img.size(); ++k) img.values()[k] = static_cast<float>(rng.uniform());
  return img;
}

}  // namespace

TEST_CASE("CIFAR: zero record decodes to a black image with label 0") {
  const Dataset d = load_cifar10_records(zero_record(), 1);
  REQUIRE(d.size() == 1);
  CHECK(d.items[0].label == 0);
  CHECK(d.items[0].image.height() == 32);
  CHECK(d.items[0].image.width() == 32);
  CHECK(d.items[0].image.channels() == 3);
  CHECK((d.items[0].image.values().array() == 0.0f).all());
  CHECK(d.class_names.size() == 10);
}

TEST_CASE("CIFAR: label bytes above 9 are corrupt records") {
  CHECK_THROWS_AS(load_cifar10_records(zero_record(255)), CorruptRecordError);
  CHECK_THROWS_AS(load_cifar10_records(zero_record(10)), CorruptRecordError);
  CHECK_NOTHROW(load_cifar10_records(zero_record(9)));
}

TEST_CASE("CIFAR: length must be a whole number of records") {
  CHECK_THROWS_AS(load_cifar10_records(Bytes(3072, 0)), FormatError);
  CHECK_THROWS_AS(load_cifar10_records(Bytes(3074, 0)), FormatError);
  CHECK(load_cifar10_records(Bytes{}).empty());
}

TEST_CASE("CIFAR: R-plane byte 51 at offset 1 is exactly 0.2") {
  Bytes b = zero_record();
  b[1] = 51;
  // 51 * 5 == 255, so 51/255 is exactly 1/5.
  REQUIRE(51 * 5 == 255);
  const Dataset d = load_cifar10_records(b);
  CHECK(d.items[0].image(0, 0, 0) == 0.2f);
  CHECK(d.items[0].image(0, 0, 1) == 0.0f);
}

TEST_CASE("CIFAR: every byte value decodes to the correctly rounded b/255") {
  Bytes b = zero_record();
  for (int v = 0; v < 256; ++v) b[1 + static_cast<std::size_t>(v)] = static_cast<std::uint8_t>(v);
  const Image img = load_cifar10_records(b).items[0].image;
  for (int v = 0; v < 256; ++v) {
    const float got = img(v / 32, v % 32, 0);
    CHECK(got == static_cast<float>(v / 255.0));
    CHECK(got >= 0.0f);
    CHECK(got <= 1.0f);
  }
}

TEST_CASE("CIFAR: max_count limits records and preserves order") {
  Bytes raw;
  for (std::uint8_t label : {4, 1, 8, 2}) {
    const Bytes r = zero_record(label);
    raw.insert(raw.end(), r.begin(), r.end());
  }
  const Dataset d = load_cifar10_records(raw, 3);
  REQUIRE(d.size() == 3);
  CHECK(d.items[0].label == 4);
  CHECK(d.items[1].label == 1);
  CHECK(d.items[2].label == 8);
  CHECK(load_cifar10_records(raw, 0).empty());
  CHECK(load_cifar10_records(raw, 99).size() == 4);
}

TEST_CASE("CIFAR golden: two-record batch matches the generator formula") {
  const Dataset d = load_cifar10_file(std::string(HVS_GOLDEN_DIR) + "/cifar_two_records.bin");
  REQUIRE(d.size() == 2);
  CHECK(d.items[0].label == 3);
  CHECK(d.items[1].label == 7);
  for (int n = 0; n < 2; ++n) {
    for (int ch = 0; ch < 3; ++ch) {
      for (int r = 0; r < 32; ++r) {
        for (int c = 0; c < 32; ++c) {
          const int byte = (7 * r + 3 * c + 50 * ch + 11 * n) % 256;
          REQUIRE(d.items[static_cast<std::size_t>(n)].image(r, c, ch) == static_cast<float>(byte / 255.0));
        }
      }
    }
  }
  CHECK(encode_cifar10_records(d) == read_file(std::string(HVS_GOLDEN_DIR) + "/cifar_two_records.bin"));
}

TEST_CASE("CIFAR golden: corrupt label file is rejected") {
  CHECK_THROWS_AS(load_cifar10_file(std::string(HVS_GOLDEN_DIR) + "/cifar_corrupt_label.bin"), CorruptRecordError);
}

TEST_CASE("CIFAR: split loader reports a missing directory") {
  CHECK_THROWS_AS(load_cifar10_split("/nonexistent-hvs-dir", CifarSplit::kTest), ConfigError);
}

TEST_CASE("PPM: header and pixel bytes") {
  const std::string header = "P6\n1 1\n255\n";
  const Bytes black = encode_ppm(Image(1, 1, 3, 0.0f));
  CHECK(std::string(black.begin(), black.begin() + static_cast<long>(header.size())) == header);
  CHECK(Bytes(black.begin() + static_cast<long>(header.size()), black.end()) == Bytes{0, 0, 0});

  const Bytes white = encode_ppm(Image(1, 1, 3, 1.0f));
  CHECK(Bytes(white.end() - 3, white.end()) == Bytes{255, 255, 255});

  // 0.5 * 255 = 127.5 rounds half-up to 128.
  const Bytes gray = encode_ppm(Image(1, 1, 3, 0.5f));
  CHECK(Bytes(gray.end() - 3, gray.end()) == Bytes{128, 128, 128});
}

TEST_CASE("PPM: interleaves channels in row-major pixel order") {
  Image img(1, 2, 3);
  img(0, 0, 0) = 1.0f;
  img(0, 1, 2) = 1.0f;
  const Bytes b = encode_ppm(img);
  CHECK(Bytes(b.end() - 6, b.end()) == Bytes{255, 0, 0, 0, 0, 255});
}

TEST_CASE("PPM: quantization clamps out-of-range values") {
  CHECK(quantize_unit(-0.3f) == 0);
  CHECK(quantize_unit(1.7f) == 255);
  CHECK(quantize_unit(1.0f / 255.0f) == 1);
}

TEST_CASE("PPM: encode(decode(encode(x))) is byte-identical") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Image img = random_image(rng, 1 + static_cast<Index>(rng.below(9)), 1 + static_cast<Index>(rng.below(9)));
    const Bytes first = encode_ppm(img);
    CHECK(encode_ppm(decode_ppm(first)) == first);
  }
}

TEST_CASE("PPM: decoder rejects malformed streams") {
  const auto as_bytes = [](const std::string& s) { return Bytes(s.begin(), s.end()); };
  CHECK_THROWS_AS(decode_ppm(as_bytes("P3\n1 1\n255\n   ")), FormatError);
  CHECK_THROWS_AS(decode_ppm(as_bytes("P6\n1 1\n65535\n")), FormatError);
  CHECK_THROWS_AS(decode_ppm(as_bytes("P6\n2 1\n255\n\x01\x02\x03")), FormatError);
  CHECK_THROWS_AS(decode_ppm(as_bytes("P6\n")), FormatError);
  Bytes with_comment = as_bytes("P6\n# made by hand\n1 1\n255\n");
  with_comment.insert(with_comment.end(), {10, 20, 30});
  CHECK(decode_ppm(with_comment)(0, 0, 2) == 30.0f / 255.0f);
}

TEST_CASE("montage: single image without padding is the identity") {
  Rng rng(3);
  const Image img = random_image(rng, 5, 7);
  const Image out = make_montage(std::vector<Image>{img}, 1, 0);
  CHECK(out == img);
}

TEST_CASE("montage: four 32x32 images in two columns with pad 2 is 66x66") {
  Rng rng(4);
  std::vector<Image> imgs;
  for (int k = 0; k < 4; ++k) imgs.push_back(random_image(rng, 32, 32));
  const Image out = make_montage(imgs, 2, 2);
  CHECK(out.height() == 2 * 32 + 2);
  CHECK(out.width() == 2 * 32 + 2);
  // Cell (1,1) starts at (34,34); padding is white.
  CHECK(out(34 + 5, 34 + 6, 1) == imgs[3](5, 6, 1));
  CHECK(out(3, 34 + 31, 2) == imgs[1](3, 31, 2));
  CHECK(out(32, 10, 0) == 1.0f);
  CHECK(out(10, 33, 0) == 1.0f);
}

TEST_CASE("montage: partial last row and argument errors") {
  std::vector<Image> imgs(3, Image(4, 4, 3, 0.0f));
  const Image out = make_montage(imgs, 2, 1);
  CHECK(out.height() == 9);
  CHECK(out.width() == 9);
  CHECK(out(6, 6, 0) == 1.0f);  // empty cell stays white

  CHECK_THROWS_AS(make_montage(std::vector<Image>{Image(4, 4, 3), Image(5, 4, 3)}, 2, 0), DimensionError);
  CHECK_THROWS_AS(make_montage(std::vector<Image>{}, 1, 0), ArgumentError);
  CHECK_THROWS_AS(make_montage(imgs, 0, 0), ArgumentError);
}

TEST_CASE("synthetic: constant images are spatially constant") {
  const Dataset d = synthesize_dataset(SyntheticKind::kConstant, 2, 7);
  REQUIRE(d.size() == 2);
  for (const auto& item : d.items) {
    for (Index ch = 0; ch < 3; ++ch) {
      const auto p = item.image.plane(ch).array();
      CHECK((p == p(0, 0)).all());
    }
  }
}

TEST_CASE("synthetic: same seed gives the same dataset, different seed differs") {
  for (auto kind : {SyntheticKind::kConstant, SyntheticKind::kCheckerboard, SyntheticKind::kNoise}) {
    const Dataset a = synthesize_dataset(kind, 5, 42);
    const Dataset b = synthesize_dataset(kind, 5, 42);
    const Dataset c = synthesize_dataset(kind, 5, 43);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a.items[i].image == b.items[i].image);
      CHECK(a.items[i].label == b.items[i].label);
    }
    CHECK_FALSE(a.items[0].image == c.items[0].image);
  }
}

TEST_CASE("synthetic: checkerboard neighbours differ by the checker amplitude") {
  const Image img = synthesize_dataset(SyntheticKind::kCheckerboard, 1, 0).items[0].image;
  for (Index ch = 0; ch < 3; ++ch) {
    for (Index r = 0; r < img.height(); ++r) {
      for (Index c = 0; c < img.width(); ++c) {
        if (c + 1 < img.width()) CHECK(std::abs(img(r, c, ch) - img(r, c + 1, ch)) == doctest::Approx(kCheckerAmplitude).epsilon(1e-6));
        if (r + 1 < img.height()) CHECK(std::abs(img(r, c, ch) - img(r + 1, c, ch)) == doctest::Approx(kCheckerAmplitude).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("synthetic: labels alternate and classes separate by mean intensity") {
  const Dataset d = synthesize_dataset(SyntheticKind::kNoise, 10, 5);
  CHECK(d.class_count() == 2);
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(d.items[i].label == static_cast<int>(i % 2));
    CHECK(in_unit_range(d.items[i].image));
    const double mean = d.items[i].image.values().cast<double>().mean();
    if (d.items[i].label == 0) {
      CHECK(mean < 0.5);
    } else {
      CHECK(mean > 0.5);
    }
  }
  CHECK_THROWS_AS(synthesize_dataset(SyntheticKind::kNoise, 0, 1), ArgumentError);
  CHECK_THROWS_AS(parse_synthetic_kind("plaid"), ArgumentError);
}

TEST_CASE("CIFAR encode/load round trip on synthetic data") {
  const Dataset d = synthesize_dataset(SyntheticKind::kCheckerboard, 3, 9);
  const Bytes raw = encode_cifar10_records(d);
  CHECK(raw.size() == 3 * kCifarRecordBytes);
  const Dataset back = load_cifar10_records(raw);
  CHECK(encode_cifar10_records(back) == raw);
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(back.items[i].label == d.items[i].label);
    CHECK((back.items[i].image.values() - d.items[i].image.values()).cwiseAbs().maxCoeff() <= 0.5f / 255.0f + 1e-7f);
  }
}
