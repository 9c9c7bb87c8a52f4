#pragma once

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hvs/attacks.hpp"
#include "hvs/image_io.hpp"
#include "hvs/metrics.hpp"

namespace hvs {

inline constexpr std::string_view kToolkitVersion = "1.0.0";
inline constexpr int kReportSchemaVersion = 1;
// Consulted when no --data path is given.
inline constexpr const char* kDataDirEnv = "HVS_DATA_DIR";

struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::kNoise;
  std::size_t count = 1;
  std::uint64_t seed = 0;
};

/// Half-open index range [first, last).
struct IndexRange {
  std::size_t first = 0;
  std::size_t last = 100;

  std::size_t size() const { return last > first ? last - first : 0; }
};

/// Parses "a..b" as [a, b).
IndexRange parse_range(std::string_view text);

struct ExperimentConfig {
  // A CIFAR-10 directory (test_batch.bin is used) or a single batch file.
  // Ignored when synthetic is set.
  std::filesystem::path data;
  std::optional<SyntheticSpec> synthetic;
  std::filesystem::path checkpoint;
  std::vector<AttackKind> attacks{AttackKind::kFgsm, AttackKind::kHvs2};
  IndexRange range;
  double epsilon = kDefaultEpsilon;
  double tau = kDefaultTau;
  std::filesystem::path out;
  std::uint64_t seed = 0;
  // Count images the model already misclassifies in success rates.
  bool include_misclassified = false;
  // Also write one PPM per clean/adversarial image and frequency map.
  bool per_image = false;

  void validate() const;
};

struct AttackOutcome {
  int adv_pred = 0;
  bool success = false;
  DistanceRecord distance;
  Index perturbed_pixels = 0;
  Index clamp_count = 0;
};

struct ReportRow {
  std::size_t index = 0;
  int label = 0;
  int clean_pred = 0;
  std::map<std::string, AttackOutcome> attacks;
};

struct Report {
  nlohmann::json config;
  std::vector<std::string> attack_names;
  bool include_misclassified = false;
  std::vector<ReportRow> rows;

  // Images for montages, aligned with rows. Not serialized.
  std::vector<Image> clean_images;
  std::map<std::string, std::vector<Image>> adversarial_images;
};

/// Loads a CIFAR directory split or a single batch file.
Dataset load_dataset(const std::filesystem::path& path, CifarSplit split,
                     std::size_t max_count = std::numeric_limits<std::size_t>::max());

/// Attacks every selected image with every configured attack and re-checks
/// the attack invariants on each result. Rows follow image index order.
Report run_experiment(const ExperimentConfig& cfg);

/// Same, on an already loaded model and dataset.
Report run_experiment(const ExperimentConfig& cfg, const nn::NetworkParams& model, const Dataset& data);

/// Aggregates recomputed from rows: clean accuracy and, per attack, success
/// rate, adversarial accuracy and mean distances. Null when there are no rows.
nlohmann::json compute_aggregates(const std::vector<ReportRow>& rows, const std::vector<std::string>& attack_names,
                                  bool include_misclassified);

nlohmann::json report_to_json(const Report& report);

/// Rows, attack names and config back from a report document (no images).
Report report_from_json(const nlohmann::json& doc);

/// Sorted keys, two-space indent, shortest round-trip doubles, trailing newline.
std::string canonical_json(const nlohmann::json& doc);

/// Writes report.json, one montage_<attack>.ppm per attack (rows of
/// clean | adversarial), comparison.ppm (clean | attack 1 | attack 2 ...) and,
/// when requested, per-image PPMs. Existing files are overwritten.
void emit_report(const Report& report, const std::filesystem::path& outdir, bool per_image = false);

}  // namespace hvs
