#include "hvs/harness.hpp"

#include <charconv>

#include "hvs/checkpoint.hpp"
#include "hvs/frequency.hpp"

namespace hvs {

using nlohmann::json;

IndexRange parse_range(std::string_view text) {
  const auto dots = text.find("..");
  if (dots == std::string_view::npos) throw ConfigError("range must look like a..b, got '" + std::string(text) + "'");
  auto number = [&](std::string_view part) {
    std::size_t v = 0;
    const auto [end, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc{} || end != part.data() + part.size() || part.empty()) {
      throw ConfigError("bad range bound '" + std::string(part) + "'");
    }
    return v;
  };
  IndexRange r{number(text.substr(0, dots)), number(text.substr(dots + 2))};
  if (r.size() == 0) throw ConfigError("range " + std::string(text) + " selects no images");
  return r;
}

void ExperimentConfig::validate() const {
  if (range.size() == 0) throw ConfigError("empty image selection");
  if (attacks.empty()) throw ConfigError("no attacks configured");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!(tau >= 0.0)) throw ConfigError("tau must be non-negative");
  if (!synthetic && data.empty()) throw ConfigError("no data source configured");
  if (checkpoint.empty()) throw ConfigError("no checkpoint configured");
}

Dataset load_dataset(const std::filesystem::path& path, CifarSplit split, std::size_t max_count) {
  if (std::filesystem::is_directory(path)) return load_cifar10_split(path, split, max_count);
  if (!std::filesystem::exists(path)) throw ConfigError("data path not found: " + path.string());
  return load_cifar10_file(path, max_count);
}

namespace {

json config_to_json(const ExperimentConfig& cfg) {
  json attacks = json::array();
  for (auto k : cfg.attacks) attacks.push_back(std::string(attack_name(k)));
  json c = {
      {"attacks", attacks},
      {"checkpoint", cfg.checkpoint.string()},
      {"epsilon", cfg.epsilon},
      {"include_misclassified", cfg.include_misclassified},
      {"range", {{"first", cfg.range.first}, {"last", cfg.range.last}}},
      {"seed", cfg.seed},
      {"tau", cfg.tau},
  };
  if (cfg.synthetic) {
    const char* kinds[] = {"constant", "checkerboard", "noise"};
    c["data"] = {{"synthetic", kinds[static_cast<int>(cfg.synthetic->kind)]},
                 {"count", cfg.synthetic->count},
                 {"seed", cfg.synthetic->seed}};
  } else {
    c["data"] = cfg.data.string();
  }
  return c;
}

json distance_to_json(const DistanceRecord& d) {
  return {{"l0_pixels", d.l0_pixels}, {"l1", d.l1}, {"l2", d.l2}, {"linf", d.linf}};
}

}  // namespace

Report run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  nn::NetworkParams model;
  try {
    model = nn::load_params(read_file(cfg.checkpoint));
  } catch (const CheckpointFormatError& e) {
    throw ConfigError(cfg.checkpoint.string() + ": " + e.what());
  }
  Dataset data = cfg.synthetic ? synthesize_dataset(cfg.synthetic->kind, cfg.synthetic->count, cfg.synthetic->seed)
                               : load_dataset(cfg.data, CifarSplit::kTest, cfg.range.last);
  return run_experiment(cfg, model, data);
}

Report run_experiment(const ExperimentConfig& cfg, const nn::NetworkParams& model, const Dataset& data) {
  cfg.validate();
  if (cfg.range.last > data.size()) {
    throw ConfigError("range ends at " + std::to_string(cfg.range.last) + " but the dataset has " +
                      std::to_string(data.size()) + " images");
  }
  const nn::ModelOracle<float> oracle(model);

  Report report;
  report.config = config_to_json(cfg);
  report.include_misclassified = cfg.include_misclassified;
  for (auto k : cfg.attacks) report.attack_names.emplace_back(attack_name(k));

  for (std::size_t idx = cfg.range.first; idx < cfg.range.last; ++idx) {
    const LabeledImage& item = data.items[idx];
    if (item.label >= oracle.class_count()) {
      throw ConfigError("image " + std::to_string(idx) + " has label " + std::to_string(item.label) +
                        " but the model has " + std::to_string(oracle.class_count()) + " classes");
    }
    nn::require_input_shape(model, item.image);
    ReportRow row{idx, item.label, oracle.predict(item.image), {}};
    for (auto kind : cfg.attacks) {
      const AttackSpec spec{kind, cfg.epsilon, cfg.tau};
      const AdversarialResult r = run_attack(spec, oracle, item);
      verify_attack_invariants(spec, r);
      const std::string name(attack_name(kind));
      row.attacks[name] = {r.adv_pred, r.success, lp_distances(r.adversarial, r.clean), r.perturbed_pixels(),
                           r.clamp_count};
      report.adversarial_images[name].push_back(r.adversarial);
    }
    report.clean_images.push_back(item.image);
    report.rows.push_back(std::move(row));
  }
  return report;
}

json compute_aggregates(const std::vector<ReportRow>& rows, const std::vector<std::string>& attack_names,
                        bool include_misclassified) {
  if (rows.empty()) return nullptr;
  const auto n = static_cast<double>(rows.size());
  std::size_t clean_correct = 0;
  for (const auto& row : rows) clean_correct += row.clean_pred == row.label;

  json per_attack = json::object();
  for (const auto& name : attack_names) {
    double l0 = 0, l1 = 0, l2 = 0, linf = 0, perturbed = 0, clamps = 0;
    std::size_t adv_correct = 0, denom = 0, hits = 0;
    for (const auto& row : rows) {
      const AttackOutcome& o = row.attacks.at(name);
      l0 += static_cast<double>(o.distance.l0_pixels);
      l1 += o.distance.l1;
      l2 += o.distance.l2;
      linf += o.distance.linf;
      perturbed += static_cast<double>(o.perturbed_pixels);
      clamps += static_cast<double>(o.clamp_count);
      adv_correct += o.adv_pred == row.label;
      if (include_misclassified || row.clean_pred == row.label) {
        ++denom;
        hits += o.adv_pred != row.label;
      }
    }
    per_attack[name] = {
        {"adv_accuracy", static_cast<double>(adv_correct) / n},
        {"mean_clamp_count", clamps / n},
        {"mean_l0_pixels", l0 / n},
        {"mean_l1", l1 / n},
        {"mean_l2", l2 / n},
        {"mean_linf", linf / n},
        {"mean_perturbed_pixels", perturbed / n},
        {"success_rate", denom ? json(static_cast<double>(hits) / static_cast<double>(denom)) : json(nullptr)},
    };
  }
  return {{"attacks", per_attack}, {"clean_accuracy", static_cast<double>(clean_correct) / n}};
}

json report_to_json(const Report& report) {
  json rows = json::array();
  for (const auto& row : report.rows) {
    json attacks = json::object();
    for (const auto& [name, o] : row.attacks) {
      attacks[name] = {{"adv_pred", o.adv_pred},
                       {"clamp_count", o.clamp_count},
                       {"distance", distance_to_json(o.distance)},
                       {"perturbed_pixels", o.perturbed_pixels},
                       {"success", o.success}};
    }
    rows.push_back({{"attacks", attacks}, {"clean_pred", row.clean_pred}, {"index", row.index}, {"label", row.label}});
  }
  json config = report.config.is_null() ? json::object() : report.config;
  config["include_misclassified"] = report.include_misclassified;
  config["attacks"] = report.attack_names;
  return {
      {"aggregates", compute_aggregates(report.rows, report.attack_names, report.include_misclassified)},
      {"config", config},
      {"rows", rows},
      {"schema_version", kReportSchemaVersion},
      {"toolkit_version", std::string(kToolkitVersion)},
  };
}

Report report_from_json(const json& doc) {
  if (!doc.is_object() || doc.value("schema_version", 0) != kReportSchemaVersion) {
    throw FormatError("not a version " + std::to_string(kReportSchemaVersion) + " report");
  }
  Report r;
  try {
    r.config = doc.at("config");
    r.attack_names = r.config.at("attacks").get<std::vector<std::string>>();
    r.include_misclassified = r.config.at("include_misclassified").get<bool>();
    for (const auto& jr : doc.at("rows")) {
      ReportRow row{jr.at("index").get<std::size_t>(), jr.at("label").get<int>(), jr.at("clean_pred").get<int>(), {}};
      for (const auto& [name, ja] : jr.at("attacks").items()) {
        const auto& d = ja.at("distance");
        row.attacks[name] = {ja.at("adv_pred").get<int>(),
                             ja.at("success").get<bool>(),
                             {d.at("l0_pixels").get<Index>(), d.at("l1").get<double>(), d.at("l2").get<double>(),
                              d.at("linf").get<double>()},
                             ja.at("perturbed_pixels").get<Index>(),
                             ja.at("clamp_count").get<Index>()};
      }
      r.rows.push_back(std::move(row));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed report: ") + e.what());
  }
  return r;
}

std::string canonical_json(const json& doc) { return doc.dump(2) + "\n"; }

void emit_report(const Report& report, const std::filesystem::path& outdir, bool per_image) {
  std::error_code ec;
  std::filesystem::create_directories(outdir, ec);
  if (ec) throw ConfigError("cannot create " + outdir.string() + ": " + ec.message());

  const std::string body = canonical_json(report_to_json(report));
  write_file(outdir / "report.json", std::span(reinterpret_cast<const std::uint8_t*>(body.data()), body.size()));

  if (report.clean_images.empty()) return;
  constexpr Index kPad = 2;
  std::vector<Image> comparison;
  for (std::size_t i = 0; i < report.clean_images.size(); ++i) {
    comparison.push_back(report.clean_images[i]);
    for (const auto& name : report.attack_names) comparison.push_back(report.adversarial_images.at(name)[i]);
  }
  write_file(outdir / "comparison.ppm",
             encode_ppm(make_montage(comparison, static_cast<Index>(1 + report.attack_names.size()), kPad)));

  for (const auto& name : report.attack_names) {
    const auto& adv = report.adversarial_images.at(name);
    std::vector<Image> cells;
    for (std::size_t i = 0; i < report.clean_images.size(); ++i) {
      cells.push_back(report.clean_images[i]);
      cells.push_back(adv[i]);
    }
    write_file(outdir / ("montage_" + name + ".ppm"), encode_ppm(make_montage(cells, 2, kPad)));
  }

  if (!per_image) return;
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const std::string stem = "image_" + std::to_string(report.rows[i].index);
    write_file(outdir / (stem + "_clean.ppm"), encode_ppm(report.clean_images[i]));
    write_file(outdir / (stem + "_frequency.ppm"),
               encode_ppm(frequency_to_image(pixel_frequency_map(report.clean_images[i]))));
    for (const auto& name : report.attack_names) {
      write_file(outdir / (stem + "_" + name + ".ppm"), encode_ppm(report.adversarial_images.at(name)[i]));
    }
  }
}

}  // namespace hvs
