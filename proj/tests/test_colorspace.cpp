#include "doctest.h"

#include "hvs/colorspace.hpp"
#include "hvs/random.hpp"

using namespace hvs;

namespace {

Image pixel(float r, float g, float b) {
  Image img(1, 1, 3);
  img(0, 0, 0) = r;
  img(0, 0, 1) = g;
  img(0, 0, 2) = b;
  return img;
}

YuvImageT<double> yuv_pixel(double y, double u, double v) {
  YuvImageT<double> img(1, 1, 3);
  img(0, 0, 0) = y;
  img(0, 0, 1) = u;
  img(0, 0, 2) = v;
  return img;
}

}  // namespace

TEST_CASE("matrices hold the published constants") {
  const auto m1 = rgb_to_yuv_matrix();
  CHECK(m1(0, 0) == 0.299);
  CHECK(m1(0, 1) == 0.587);
  CHECK(m1(0, 2) == 0.114);
  CHECK(m1(1, 2) == 0.43601035);
  CHECK(m1(2, 0) == 0.61497538);
  const auto m2 = yuv_to_rgb_matrix();
  CHECK(m2(0, 2) == 1.13988303);
  CHECK(m2(1, 1) == -0.394642334);
  CHECK(m2(2, 1) == 2.03206185);
  CHECK(m2.col(0) == Eigen::Vector3d::Ones());
}

TEST_CASE("chroma rows sum to zero and the matrices are mutual inverses") {
  const auto m1 = rgb_to_yuv_matrix();
  CHECK(std::abs(m1.row(1).sum()) < 1e-7);
  CHECK(std::abs(m1.row(2).sum()) < 1e-7);
  CHECK(std::abs(m1.row(0).sum() - 1.0) < 1e-12);
  CHECK((yuv_to_rgb_matrix() * m1 - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("rgb_to_yuv reference pixels") {
  const auto black = rgb_to_yuv(pixel(0, 0, 0));
  CHECK((black.values().array() == 0.0f).all());

  const auto white = rgb_to_yuv(ImageT<double>(1, 1, 3, 1.0));
  CHECK(std::abs(white(0, 0, 0) - 1.0) < 1e-7);
  CHECK(std::abs(white(0, 0, 1)) < 1e-7);
  CHECK(std::abs(white(0, 0, 2)) < 1e-7);

  const auto red = rgb_to_yuv(pixel(1, 0, 0));
  CHECK(red(0, 0, 0) == doctest::Approx(0.299).epsilon(1e-7));
  CHECK(red(0, 0, 1) == doctest::Approx(-0.14714119).epsilon(1e-7));
  CHECK(red(0, 0, 2) == doctest::Approx(0.61497538).epsilon(1e-7));
}

TEST_CASE("yuv_to_rgb reference pixels") {
  const auto zero = yuv_to_rgb(yuv_pixel(0, 0, 0));
  CHECK((zero.image.values().array() == 0.0).all());
  CHECK(zero.clamp_count == 0);

  const auto gray = yuv_to_rgb(yuv_pixel(1, 0, 0));
  for (Index ch = 0; ch < 3; ++ch) CHECK(std::abs(gray.image(0, 0, ch) - 1.0) < 1e-6);
  CHECK(gray.clamp_count == 0);
}

TEST_CASE("yuv_to_rgb clamps out-of-gamut values and counts them") {
  // B = Y + 2.032 U leaves the gamut; G = Y - 0.395 U stays inside.
  const auto out = yuv_to_rgb(yuv_pixel(1.0, 0.5, 0.0));
  CHECK(out.clamp_count == 1);
  CHECK(out.image(0, 0, 2) == 1.0);
  CHECK(out.image(0, 0, 1) == doctest::Approx(1.0 - 0.5 * 0.394642334));
  CHECK(in_unit_range(out.image));
}

TEST_CASE("YUV round trip stays within 1e-5 over 10^4 random pixels") {
  Rng rng(2024);
  Image img(100, 100, 3);
  for (Index k = 0; k < img.size(); ++k) img.values()[k] = static_cast<float>(rng.uniform());
  const auto back = yuv_to_rgb(rgb_to_yuv(img));
  CHECK((back.image.values() - img.values()).cwiseAbs().maxCoeff() < 1e-5f);
}

TEST_CASE("zero-luma projection") {
  SUBCASE("zero maps to zero") {
    const GradientT<double> g(4, 4, 3, 0.0);
    CHECK((project_gradient_zero_luma(g).values().array() == 0.0).all());
  }
  SUBCASE("pure luma direction vanishes") {
    for (double c : {-3.0, -0.01, 0.5, 2.0}) {
      const GradientT<double> g(2, 3, 3, c);
      CHECK(project_gradient_zero_luma(g).values().cwiseAbs().maxCoeff() < 1e-6);
    }
  }
  SUBCASE("output carries no luma, and projection is linear and idempotent") {
    Rng rng(5);
    auto random_grad = [&] {
      GradientT<double> g(6, 6, 3);
      for (Index k = 0; k < g.size(); ++k) g.values()[k] = rng.uniform(-1, 1);
      return g;
    };
    for (int trial = 0; trial < 50; ++trial) {
      const auto a = random_grad();
      const auto b = random_grad();
      const auto pa = project_gradient_zero_luma(a);
      // Independent luma evaluation with the literal first row.
      for (Index r = 0; r < 6; ++r) {
        for (Index c = 0; c < 6; ++c) {
          const double y = 0.299 * pa(r, c, 0) + 0.587 * pa(r, c, 1) + 0.114 * pa(r, c, 2);
          CHECK(std::abs(y) < 1e-6);
        }
      }
      CHECK((project_gradient_zero_luma(pa).values() - pa.values()).cwiseAbs().maxCoeff() < 1e-6);

      GradientT<double> combo(6, 6, 3);
      combo.values() = 2.0 * a.values() - 0.5 * b.values();
      const Eigen::VectorXd expected = 2.0 * pa.values() - 0.5 * project_gradient_zero_luma(b).values();
      CHECK((project_gradient_zero_luma(combo).values() - expected).cwiseAbs().maxCoeff() < 1e-6);
    }
  }
  SUBCASE("single precision also keeps luma below 1e-6") {
    Rng rng(6);
    GradientT<float> g(32, 32, 3);
    for (Index k = 0; k < g.size(); ++k) g.values()[k] = static_cast<float>(8.0 / 255.0 * (rng.below(3) - 1.0));
    CHECK((luma_of(project_gradient_zero_luma(g)).abs() < 1e-6).all());
  }
}

TEST_CASE("colour transforms reject non-RGB input") {
  CHECK_THROWS_AS(rgb_to_yuv(Image(2, 2, 1)), DimensionError);
}
