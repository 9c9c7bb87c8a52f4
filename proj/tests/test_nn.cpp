#include "doctest.h"

#include "hvs/image_io.hpp"
#include "hvs/nn.hpp"

using namespace hvs;
using namespace hvs::nn;

namespace {

template <typename S>
ImageT<S> random_image(Rng& rng, Index side) {
  ImageT<S> img(side, side, 3);
  for (Index k = 0; k < img.size(); ++k) img.values()[k] = static_cast<S>(rng.uniform());
  return img;
}

// Central differences of the inference loss with respect to one weight.
double numeric_weight_derivative(Network<double> net, const ImageT<double>& img, int label, std::size_t layer, Index k,
                                 double h) {
  double& w = net.layers[layer].weights.data()[k];
  const double orig = w;
  w = orig + h;
  const double up = inference_loss(net, img, label);
  w = orig - h;
  const double down = inference_loss(net, img, label);
  return (up - down) / (2 * h);
}

}  // namespace

TEST_CASE("cifar10 architecture shapes") {
  const auto arch = Architecture::cifar10();
  CHECK_NOTHROW(arch.validate());
  const auto shapes = arch.shapes();
  REQUIRE(shapes.size() == 13);
  CHECK(shapes[1] == Shape{32, 32, 32});
  CHECK(shapes[3] == Shape{32, 16, 16});
  CHECK(shapes[7] == Shape{64, 8, 8});
  CHECK(shapes[9] == Shape{4096, 1, 1});
  CHECK(shapes[10] == Shape{512, 1, 1});
  CHECK(shapes[12] == Shape{10, 1, 1});
  CHECK(arch.classes() == 10);
  CHECK(arch.layers[3].rate == 0.25f);
  CHECK(arch.layers[10].rate == 0.5f);
}

TEST_CASE("architecture validation rejects malformed layer sequences") {
  Architecture a = Architecture::reduced();
  a.layers.pop_back();
  CHECK_THROWS_AS(a.validate(), ArgumentError);

  Architecture b = Architecture::reduced();
  b.layers[0] = LayerSpec::conv(4, 2);
  CHECK_THROWS_AS(b.validate(), ArgumentError);

  Architecture c = Architecture::reduced();
  c.layers[3].rate = 1.0f;
  CHECK_THROWS_AS(c.validate(), ArgumentError);

  Architecture d = Architecture::reduced();
  d.layers.erase(d.layers.begin() + 8);  // drop flatten
  CHECK_THROWS_AS(d.validate(), ArgumentError);
}

TEST_CASE("init_network") {
  const auto arch = Architecture::cifar10();
  const auto a = init_network(arch, 5);
  const auto b = init_network(arch, 5);
  CHECK(a.same_weights(b));
  CHECK_FALSE(a.same_weights(init_network(arch, 6)));

  // First conv: 32 filters over 3 channels x 3 x 3.
  CHECK(a.layers[0].weights.rows() == 32);
  CHECK(a.layers[0].weights.cols() == 3 * 3 * 3);
  CHECK(a.layers[9].weights.rows() == 512);
  CHECK(a.layers[9].weights.cols() == 4096);
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    if (!arch.layers[i].has_params()) {
      CHECK(a.layers[i].weights.size() == 0);
      continue;
    }
    CHECK((a.layers[i].bias.array() == 0.0f).all());
    const double limit = std::sqrt(6.0 / static_cast<double>(a.layers[i].weights.cols()));
    CHECK(a.layers[i].weights.cwiseAbs().maxCoeff() <= limit);
  }
  CHECK(a.all_finite());
}

TEST_CASE("forward: probabilities are normalized and inference is deterministic") {
  Rng rng(1);
  const auto net = init_network(Architecture::cifar10(), 3);
  for (int trial = 0; trial < 3; ++trial) {
    const Image img = random_image<float>(rng, 32);
    const auto p = forward(net, img);
    CHECK(p.size() == 10);
    CHECK((p.array() >= 0.0f).all());
    CHECK(std::abs(p.cast<double>().sum() - 1.0) < 1e-6);
    CHECK(forward(net, img) == p);
  }
  CHECK_THROWS_AS(forward(net, Image(16, 16, 3)), DimensionError);
}

TEST_CASE("forward: zero weights give uniform probabilities") {
  const auto net = zero_network(Architecture::cifar10());
  Rng rng(2);
  const auto p = forward(net, random_image<float>(rng, 32));
  for (Index k = 0; k < 10; ++k) CHECK(p[k] == doctest::Approx(0.1).epsilon(1e-7));
}

TEST_CASE("forward: train mode applies inverted dropout") {
  Rng data_rng(4);
  const auto net = init_network<double>(Architecture::reduced(), 9);
  const auto img = random_image<double>(data_rng, 8);
  Rng a(100);
  Rng b(100);
  Rng c(101);
  Tape<double> tape;
  const auto pa = forward_batch<double>(net, img.values(), Mode::kTrain, &a, &tape);
  CHECK(forward_batch<double>(net, img.values(), Mode::kTrain, &b) == pa);
  CHECK_FALSE(forward_batch<double>(net, img.values(), Mode::kTrain, &c) == pa);
  CHECK_FALSE(forward(net, img) == Vector<double>(pa.col(0)));

  const auto& mask = tape.dropout_masks[10];  // rate 0.5
  REQUIRE(mask.size() == 32);
  CHECK(((mask.array() == 0.0) || (mask.array() == 2.0)).all());
  CHECK(std::abs(pa.sum() - 1.0) < 1e-12);
  CHECK_THROWS_AS(forward_batch<double>(net, img.values(), Mode::kTrain, nullptr), ArgumentError);
}

TEST_CASE("argmax breaks ties toward the lowest index") {
  Eigen::VectorXd p(4);
  p << 0.2, 0.3, 0.3, 0.2;
  CHECK(argmax(p) == 1);
  CHECK(argmax(Eigen::VectorXd::Constant(10, 0.1)) == 0);
}

TEST_CASE("loss_and_input_gradient") {
  Rng rng(5);
  const auto net = init_network(Architecture::cifar10(), 1);
  const Image img = random_image<float>(rng, 32);
  const auto lg = loss_and_input_gradient(net, img, 3);
  CHECK(lg.gradient.same_shape(img));
  CHECK(lg.gradient.values().allFinite());
  CHECK(lg.loss == doctest::Approx(-std::log(static_cast<double>(forward(net, img)[3]))).epsilon(1e-5));
  CHECK_THROWS_AS(loss_and_input_gradient(net, img, 10), ArgumentError);
  CHECK_THROWS_AS(loss_and_input_gradient(net, img, -1), ArgumentError);
  CHECK_THROWS_AS(loss_and_input_gradient(net, Image(8, 8, 3), 0), DimensionError);

  const auto zero = zero_network(Architecture::cifar10());
  const auto zg = loss_and_input_gradient(zero, img, 3);
  CHECK((zg.gradient.values().array() == 0.0f).all());
  CHECK(zg.loss == doctest::Approx(std::log(10.0)));
}

TEST_CASE("input gradient matches central differences on the reduced network") {
  auto draw = [](std::uint64_t seed) {
    Rng rng(seed * 31);
    auto net = init_network<double>(Architecture::reduced(), seed);
    auto img = random_image<double>(rng, 8);
    const int label = static_cast<int>(rng.below(10));
    return std::tuple{net, img, label};
  };
  for (std::uint64_t seed : {1u, 3u, 4u, 5u, 6u}) {
    const auto [net, img, label] = draw(seed);
    CHECK(gradient_check(net, img, label, 1e-3) < 1e-3);
  }
  // Here a step of 1e-3 crosses a ReLU/max-pool kink at one input; a
  // smaller step stays on one linear piece and agrees.
  const auto [net, img, label] = draw(2);
  CHECK(gradient_check(net, img, label, 1e-3) > 1e-3);
  CHECK(kink_crossings(net, img, 1e-3) > 0);
  CHECK(gradient_check(net, img, label, 1e-4) < 1e-6);
}

TEST_CASE("draws whose stencils cross no kink always pass the gradient check") {
  int smooth = 0;
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    Rng rng(seed + 500);
    const auto net = init_network<double>(Architecture::reduced(), seed);
    const auto img = random_image<double>(rng, 8);
    const int label = static_cast<int>(rng.below(10));
    if (kink_crossings(net, img, 1e-3) > 0) continue;
    ++smooth;
    CHECK(gradient_check(net, img, label, 1e-3) < 1e-3);
  }
  CHECK(smooth > 0);
}

TEST_CASE("parameter gradients match central differences") {
  Rng rng(12);
  const auto net = init_network<double>(Architecture::reduced(), 4);
  const auto img = random_image<double>(rng, 8);
  const int label = 6;
  Tape<double> tape;
  const auto probs = forward_batch<double>(net, img.values(), Mode::kInfer, nullptr, &tape);
  Batch<double> dlogits = probs;
  dlogits(label, 0) -= 1.0;
  const auto g = backward_batch(net, tape, dlogits, false);
  for (std::size_t layer : {0u, 1u, 4u, 5u, 9u, 11u}) {
    const auto& w = net.layers[layer].weights;
    for (int probe = 0; probe < 5; ++probe) {
      const Index k = static_cast<Index>(rng.below(static_cast<std::uint64_t>(w.size())));
      const double analytic = g.layers[layer].weights.data()[k];
      const double numeric = numeric_weight_derivative(net, img, label, layer, k, 1e-4);
      CHECK(std::abs(analytic - numeric) <= 1e-5 + 1e-4 * std::abs(numeric));
    }
  }
}

TEST_CASE("gradient_check degenerate cases") {
  Rng rng(6);
  const auto net = init_network<double>(Architecture::reduced(), 8);
  const auto img = random_image<double>(rng, 8);
  const auto numeric = numeric_input_gradient(net, img, 2);
  Eigen::VectorXd flipped = -numeric.values();
  // |(-n) - n| / |n| = 2 wherever n != 0.
  CHECK(max_relative_error(flipped, numeric.values()) == doctest::Approx(2.0));

  const auto zero = zero_network<double>(Architecture::reduced());
  CHECK(gradient_check(zero, img, 2) == 0.0);
}

TEST_CASE("training") {
  const auto arch = Architecture::reduced(2);
  const Dataset two = synthesize_dataset(SyntheticKind::kNoise, 2, 3, 8);

  SUBCASE("one epoch on two images lowers the loss") {
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch = 2;
    cfg.seed = 1;
    const auto r = train(init_network(arch, 2), two, cfg);
    REQUIRE(r.history.size() == 1);
    CHECK(*r.history[0].loss < *r.initial.loss);
    CHECK(r.params.step == 1);
  }
  SUBCASE("lr = 0 leaves weights unchanged bit-for-bit") {
    TrainConfig cfg;
    cfg.lr = 0.0;
    cfg.epochs = 2;
    const auto init = init_network(arch, 2);
    const auto r = train(init, two, cfg);
    CHECK(r.params.same_weights(init));
    CHECK(r.history.size() == 2);
  }
  SUBCASE("same seed reproduces the run") {
    const Dataset data = synthesize_dataset(SyntheticKind::kNoise, 20, 4, 8);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch = 4;
    cfg.seed = 99;
    const auto a = train(init_network(arch, 2), data, cfg);
    const auto b = train(init_network(arch, 2), data, cfg);
    CHECK(a.params.same_weights(b.params));
    cfg.seed = 100;
    CHECK_FALSE(train(init_network(arch, 2), data, cfg).params.same_weights(a.params));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(train(init_network(arch, 2), Dataset{}, TrainConfig{}), ArgumentError);
    Dataset bad = two;
    bad.items[0].label = 5;
    CHECK_THROWS_AS(train(init_network(arch, 2), bad, TrainConfig{}), ArgumentError);
  }
}

TEST_CASE("training fits the synthetic classes") {
  const Dataset data = synthesize_dataset(SyntheticKind::kNoise, 64, 21, 8);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.batch = 8;
  cfg.seed = 3;
  const auto r = train(init_network(Architecture::reduced(2), 5), data, cfg);
  CHECK(*r.history.back().accuracy >= 0.9);
  CHECK(r.params.all_finite());
}
