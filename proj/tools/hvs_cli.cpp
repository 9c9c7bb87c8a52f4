// Command-line front end: synth, train, attack, report, gradcheck.

#include "CLI11.hpp"

#include <chrono>
#include <cstdlib>
#include <iomanip>
#include <iostream>

#include "hvs/attacks.hpp"
#include "hvs/checkpoint.hpp"
#include "hvs/harness.hpp"
#include "hvs/image_io.hpp"
#include "hvs/nn.hpp"

namespace {

using namespace hvs;

std::filesystem::path resolve_data(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kDataDirEnv); env && *env) return env;
  throw ConfigError(std::string("no --data given and ") + kDataDirEnv + " is not set");
}

struct SynthArgs {
  std::string kind = "noise";
  std::size_t count = 100;
  std::uint64_t seed = 0;
  std::string out;
};

int run_synth(const SynthArgs& a) {
  const Dataset data = synthesize_dataset(parse_synthetic_kind(a.kind), a.count, a.seed);
  write_file(a.out, encode_cifar10_records(data));
  std::cout << "wrote " << data.size() << " " << a.kind << " images to " << a.out << "\n";
  return 0;
}

struct TrainArgs {
  std::string data;
  std::string checkpoint;
  std::string range;
  std::string eval_data;
  std::size_t eval_count = 1000;
  std::uint32_t classes = 10;
  nn::TrainConfig cfg;
};

int run_train(TrainArgs a) {
  const auto data_path = resolve_data(a.data);
  Dataset data = load_dataset(data_path, CifarSplit::kTrain);
  if (!a.range.empty()) {
    const IndexRange r = parse_range(a.range);
    if (r.last > data.size()) throw ConfigError("range exceeds the " + std::to_string(data.size()) + " training images");
    data.items = {data.items.begin() + static_cast<std::ptrdiff_t>(r.first),
                  data.items.begin() + static_cast<std::ptrdiff_t>(r.last)};
  }
  if (data.empty()) throw ConfigError("no training images");
  const auto arch = nn::Architecture::cifar10(a.classes, data.items.front().image.height());
  std::cout << "training " << arch.describe() << "\n"
            << data.size() << " images, lr " << a.cfg.lr << ", momentum " << a.cfg.momentum << ", batch "
            << a.cfg.batch << ", " << a.cfg.epochs << " epochs, seed " << a.cfg.seed << "\n";

  a.cfg.evaluate_each_epoch = false;
  const auto start = std::chrono::steady_clock::now();
  auto result = nn::train(nn::init_network(arch, a.cfg.seed), data, a.cfg, [&](const nn::EpochStats& s) {
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
    std::cout << "epoch " << s.epoch << "  train loss " << std::fixed << std::setprecision(4) << s.train_loss
              << "  (" << std::setprecision(1) << dt.count() << " s)\n"
              << std::defaultfloat;
  });
  write_file(a.checkpoint, nn::save_params(result.params));
  std::cout << "saved " << a.checkpoint << "\n";

  if (!a.eval_data.empty()) {
    const Dataset test = load_dataset(a.eval_data, CifarSplit::kTest, a.eval_count);
    const auto [loss, acc] = nn::evaluate(result.params, test);
    std::cout << "held-out loss " << loss << ", accuracy " << acc << " on " << test.size() << " images\n";
  }
  return 0;
}

struct AttackArgs {
  std::string data;
  std::string synthetic;
  std::vector<std::string> attacks;
  std::string range = "0..100";
  ExperimentConfig cfg;
};

int run_attack_cmd(AttackArgs a) {
  if (!a.synthetic.empty()) {
    // kind:count
    const auto colon = a.synthetic.find(':');
    SyntheticSpec s;
    s.kind = parse_synthetic_kind(a.synthetic.substr(0, colon));
    s.count = colon == std::string::npos ? 100 : std::stoul(a.synthetic.substr(colon + 1));
    s.seed = a.cfg.seed;
    a.cfg.synthetic = s;
  } else {
    a.cfg.data = resolve_data(a.data);
  }
  if (!a.attacks.empty()) {
    a.cfg.attacks.clear();
    for (const auto& name : a.attacks) a.cfg.attacks.push_back(parse_attack_kind(name));
  }
  a.cfg.range = parse_range(a.range);
  const Report report = run_experiment(a.cfg);
  emit_report(report, a.cfg.out, a.cfg.per_image);

  const auto agg = report_to_json(report)["aggregates"];
  std::cout << report.rows.size() << " images, clean accuracy " << agg["clean_accuracy"] << "\n";
  for (const auto& name : report.attack_names) {
    const auto& s = agg["attacks"][name];
    std::cout << "  " << std::left << std::setw(12) << name << " success " << s["success_rate"] << "  adv acc "
              << s["adv_accuracy"] << "  mean L0 " << s["mean_l0_pixels"] << "  mean L2 " << s["mean_l2"] << "\n";
  }
  std::cout << "report written to " << a.cfg.out.string() << "\n";
  return 0;
}

int run_report(const std::string& dir) {
  const auto path = std::filesystem::path(dir) / "report.json";
  const auto raw = read_file(path);
  const auto doc = nlohmann::json::parse(raw.begin(), raw.end());
  const Report r = report_from_json(doc);
  const auto recomputed = compute_aggregates(r.rows, r.attack_names, r.include_misclassified);
  if (recomputed != doc.at("aggregates")) {
    throw InvariantError(path.string() + ": stored aggregates do not match the rows");
  }
  std::cout << path.string() << ": " << r.rows.size() << " rows, aggregates consistent\n";
  if (!recomputed.is_null()) std::cout << recomputed.dump(2) << "\n";
  return 0;
}

struct GradcheckArgs {
  std::string checkpoint;
  std::string data;
  std::size_t index = 0;
  std::uint64_t seed = 0;
  double h = 1e-3;
  double threshold = 1e-3;
};

int run_gradcheck(const GradcheckArgs& a) {
  nn::Network<double> net;
  ImageT<double> img;
  int label = 0;
  if (a.checkpoint.empty()) {
    // Advance past draws whose finite-difference stencils cross a kink.
    for (std::uint64_t seed = a.seed;; ++seed) {
      net = nn::init_network<double>(nn::Architecture::reduced(), seed);
      Rng rng(seed + 1);
      img = ImageT<double>(8, 8, 3);
      for (Index k = 0; k < img.size(); ++k) img.values()[k] = rng.uniform();
      label = static_cast<int>(rng.below(10));
      if (nn::kink_crossings(net, img, a.h) == 0) {
        std::cout << "reduced network " << net.arch.describe() << ", seed " << seed << "\n";
        break;
      }
    }
  } else {
    net = nn::load_params(read_file(a.checkpoint)).cast<double>();
    const Dataset data = load_dataset(resolve_data(a.data), CifarSplit::kTest, a.index + 1);
    if (a.index >= data.size()) throw ConfigError("image index out of range");
    img = data.items[a.index].image.cast<double>();
    label = data.items[a.index].label;
  }
  const double err = nn::gradient_check(net, img, label, a.h);
  std::cout << "max relative error " << err << " over " << img.size() << " inputs (threshold " << a.threshold << ")\n";
  if (const Index kinks = nn::kink_crossings(net, img, a.h); kinks > 0) {
    std::cout << kinks << " inputs have a ReLU or max-pool kink within the step; try a smaller --step or another --seed\n";
  }
  return err < a.threshold ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Perceptually masked FGSM attacks on a small CIFAR-10 CNN"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(hvs::kToolkitVersion));

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic two-class dataset in CIFAR-10 binary format");
  synth_cmd->add_option("--kind", synth.kind, "constant, checkerboard or noise")->capture_default_str();
  synth_cmd->add_option("--count", synth.count, "Number of images")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed)->capture_default_str();
  synth_cmd->add_option("--out", synth.out, "Output .bin file")->required();

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train the classifier and write a checkpoint");
  train_cmd->add_option("--data", train.data, "CIFAR-10 directory or batch file");
  train_cmd->add_option("--checkpoint", train.checkpoint, "Output checkpoint")->required();
  train_cmd->add_option("--range", train.range, "Training subset a..b");
  train_cmd->add_option("--epochs", train.cfg.epochs)->capture_default_str();
  train_cmd->add_option("--lr", train.cfg.lr)->capture_default_str();
  train_cmd->add_option("--momentum", train.cfg.momentum)->capture_default_str();
  train_cmd->add_option("--batch", train.cfg.batch)->capture_default_str();
  train_cmd->add_option("--seed", train.cfg.seed)->capture_default_str();
  train_cmd->add_option("--classes", train.classes, "Output classes (2 for synthetic data)")->capture_default_str();
  train_cmd->add_option("--eval-data", train.eval_data, "Held-out data to report accuracy on");
  train_cmd->add_option("--eval-count", train.eval_count)->capture_default_str();

  AttackArgs attack;
  auto* attack_cmd = app.add_subcommand("attack", "Attack a range of images and write report.json and montages");
  attack_cmd->add_option("--data", attack.data, "CIFAR-10 directory (test batch) or batch file");
  attack_cmd->add_option("--synthetic", attack.synthetic, "Use generated data instead, kind[:count]");
  attack_cmd->add_option("--checkpoint", attack.cfg.checkpoint)->required();
  attack_cmd->add_option("--attack", attack.attacks, "fgsm, hvs2, approx-luma, luma-zero (repeatable)");
  attack_cmd->add_option("--epsilon", attack.cfg.epsilon)->capture_default_str();
  attack_cmd->add_option("--tau", attack.cfg.tau, "Frequency threshold for hvs2")->capture_default_str();
  attack_cmd->add_option("--range", attack.range, "Image indices a..b (b exclusive)")->capture_default_str();
  attack_cmd->add_option("--seed", attack.cfg.seed)->capture_default_str();
  attack_cmd->add_option("--out", attack.cfg.out, "Output directory")->required();
  attack_cmd->add_flag("--include-misclassified", attack.cfg.include_misclassified,
                       "Count already-misclassified images in success rates");
  attack_cmd->add_flag("--per-image", attack.cfg.per_image, "Also write per-image PPMs");

  std::string report_dir;
  auto* report_cmd = app.add_subcommand("report", "Check and summarize an existing report.json");
  report_cmd->add_option("--out", report_dir, "Directory holding report.json")->required();

  GradcheckArgs grad;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Compare backprop input gradients with central differences");
  grad_cmd->add_option("--checkpoint", grad.checkpoint, "Check this model instead of a reduced random one");
  grad_cmd->add_option("--data", grad.data);
  grad_cmd->add_option("--index", grad.index)->capture_default_str();
  grad_cmd->add_option("--seed", grad.seed)->capture_default_str();
  grad_cmd->add_option("--step", grad.h, "Finite-difference step")->capture_default_str();
  grad_cmd->add_option("--threshold", grad.threshold)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth_cmd) return run_synth(synth);
    if (*train_cmd) return run_train(train);
    if (*attack_cmd) return run_attack_cmd(attack);
    if (*report_cmd) return run_report(report_dir);
    if (*grad_cmd) return run_gradcheck(grad);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
