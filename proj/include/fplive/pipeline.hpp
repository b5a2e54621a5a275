#pragma once

// Batch pipeline stages behind the CLI: extract -> select -> train -> eval /
// sweep, plus the synthetic dataset writer. One global seed derives the
// per-module seeds, output ordering follows the manifest regardless of the
// worker count, and selection/training refuse feature files that contain
// test-split rows.

#include <atomic>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "fplive/common.hpp"
#include "fplive/eval.hpp"
#include "fplive/features.hpp"
#include "fplive/forest.hpp"
#include "fplive/image.hpp"
#include "fplive/manifest.hpp"
#include "fplive/select.hpp"
#include "fplive/synth.hpp"

namespace fplive {

struct RunConfig {
  BlockSpec block;
  GaborBankSpec gabor;
  ForestParams forest;  // seed field is ignored; derived from the global seed
  int folds = 5;
  int select_max_dim = 13;
  double threshold = 0.5;
  std::uint64_t seed = 42;
  int workers = 1;
  bool invert = false;
  double max_fail_fraction = 0.1;

  std::uint64_t synth_seed() const { return mix_seed(seed, kSeedStreamSynth); }
  std::uint64_t select_seed() const { return mix_seed(seed, kSeedStreamSelect); }
  std::uint64_t forest_seed() const { return mix_seed(seed, kSeedStreamForest); }
};

// ---------------------------------------------------------------------------
// extract
// ---------------------------------------------------------------------------

struct ExtractStats {
  int total = 0;
  int succeeded = 0;
  std::vector<std::string> failures;  // "path: reason"
  bool over_failure_budget = false;
};

inline ExtractStats cmd_extract(const std::string& manifest_path, const std::string& out_path,
                                const RunConfig& config,
                                std::optional<Split> split_filter = std::nullopt,
                                const std::string& dump_dir = "") {
  const DatasetManifest manifest = load_manifest(manifest_path);
  std::vector<SampleRecord> records;
  for (const auto& r : manifest.records)
    if (!split_filter || r.split == *split_filter) records.push_back(r);
  if (records.empty()) throw DataError("no records to extract (split filter too strict?)");

  const std::size_t n = records.size();
  std::vector<std::optional<FeatureRecord>> results(n);
  std::vector<std::string> dumps(n);
  std::vector<std::string> errors(n);
  std::atomic<std::size_t> next{0};

  const auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) break;
      try {
        IntensityGrid grid = load_image(records[i].path);
        if (config.invert) grid = inverted(grid);
        const ImageFeatures extracted = extract_all(grid, config.block, config.gabor);
        FeatureRecord rec;
        rec.path = records[i].path;
        rec.label = records[i].label;
        rec.material = records[i].material;
        rec.sensor = records[i].sensor;
        rec.split = records[i].split;
        rec.q = extracted.q;
        rec.note = extracted.exclusion_note();
        results[i] = std::move(rec);
        if (!dump_dir.empty()) {
          std::string dump;
          for (const auto& b : extracted.blocks) {
            if (!b.profile) continue;
            dump += "# block x=" + format_g17(b.center.x) + " y=" + format_g17(b.center.y) +
                    " angle=" + format_g17(b.angle) + "\n";
            dump += profile_dump(*b.profile);
          }
          dumps[i] = std::move(dump);
        }
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  std::vector<std::thread> threads;
  for (int t = 1; t < config.workers; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();

  ExtractStats stats;
  stats.total = static_cast<int>(n);
  std::vector<FeatureRecord> ok;
  for (std::size_t i = 0; i < n; ++i) {
    if (results[i]) {
      ok.push_back(*results[i]);
    } else {
      stats.failures.push_back(records[i].path + ": " + errors[i]);
    }
  }
  stats.succeeded = static_cast<int>(ok.size());
  if (ok.empty()) throw DataError("every image failed feature extraction");
  save_feature_file(ok, out_path);

  if (!dump_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(dump_dir);
    for (std::size_t i = 0; i < n; ++i) {
      if (!results[i] || dumps[i].empty()) continue;
      const std::string name = fs::path(records[i].path).stem().string() + ".profiles.txt";
      std::ofstream out(fs::path(dump_dir) / name, std::ios::binary);
      out << dumps[i];
    }
  }
  stats.over_failure_budget =
      stats.failures.size() > config.max_fail_fraction * static_cast<double>(n);
  return stats;
}

// ---------------------------------------------------------------------------
// select / train: training-split stages refuse files with test rows.
// ---------------------------------------------------------------------------

inline void require_train_only(const std::vector<FeatureRecord>& records,
                               const std::string& stage) {
  for (const auto& r : records)
    if (r.split == Split::Test)
      throw LeakageError(stage + " refuses feature files containing Test rows (" + r.path +
                         "); extract the Train split separately");
}

inline FeatureSubset cmd_select(const std::string& features_path, const std::string& out_path,
                                const RunConfig& config) {
  const auto records = load_feature_file(features_path);
  require_train_only(records, "select");
  const auto [x, y] = feature_matrix(records);
  SelectionObjective objective;
  objective.folds = config.folds;
  objective.seed = config.select_seed();
  objective.forest = config.forest;
  const FeatureSubset subset = sffs(x, y, objective, config.select_max_dim);
  save_subset_report(subset, out_path);
  return subset;
}

inline ForestModel cmd_train(const std::string& features_path, const std::vector<bool>& mask,
                             const std::string& model_path, const RunConfig& config) {
  const auto records = load_feature_file(features_path);
  require_train_only(records, "train");
  const auto [x, y] = feature_matrix(records);
  ForestParams params = config.forest;
  params.seed = config.forest_seed();
  const ForestModel model = train(x, y, params, mask);
  save_model(model, model_path);
  return model;
}

// ---------------------------------------------------------------------------
// eval / sweep
// ---------------------------------------------------------------------------

inline std::vector<ScoredSample> score_features(const std::vector<FeatureRecord>& records,
                                                const ForestModel& model) {
  std::vector<ScoredSample> samples;
  samples.reserve(records.size());
  std::vector<double> row(13);
  for (const auto& r : records) {
    for (int i = 0; i < 13; ++i) row[i] = r.q[i];
    samples.push_back({r.path, predict_score(model, row).live_probability, r.label,
                       r.material, r.sensor});
  }
  return samples;
}

inline EvalReport cmd_eval(const std::vector<ScoredSample>& samples,
                           const std::string& report_path, double threshold,
                           const std::string& scores_out = "") {
  const EvalReport report = evaluate(samples, threshold);
  std::ofstream out(report_path, std::ios::binary);
  if (!out) throw DataError(report_path + ": cannot open for writing");
  out << render_report(report);
  if (!scores_out.empty()) save_score_file(samples, scores_out);
  return report;
}

inline SweepCurve cmd_sweep(const std::vector<ScoredSample>& samples,
                            const std::string& out_path) {
  const SweepCurve curve = threshold_sweep(samples);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw DataError(out_path + ": cannot open for writing");
  out << encode_sweep(curve);
  return curve;
}

// ---------------------------------------------------------------------------
// synth: LivDet-shaped synthetic dataset. Live images have constant stripe
// widths, fakes carry per-row width jitter; everything else (period, noise,
// per-image orientation) is drawn identically for both classes.
// ---------------------------------------------------------------------------

struct SynthDatasetParams {
  int train_per_class = 20;
  int test_per_class = 20;
  int width = 160;
  int height = 160;
  int period = 10;
  double ridge_fraction = 0.5;
  int live_jitter = 0;
  int fake_jitter = 3;
  double noise_std = 5.0;
  std::string material = "jitter";
  std::string sensor = "synth";
};

inline DatasetManifest cmd_synth(const std::string& out_dir, const SynthDatasetParams& params,
                                 const RunConfig& config) {
  namespace fs = std::filesystem;
  const std::uint64_t base_seed = config.synth_seed();
  std::uint64_t counter = 0;
  const auto emit = [&](const fs::path& dir, const std::string& stem, int count, int jitter) {
    fs::create_directories(dir);
    for (int i = 0; i < count; ++i) {
      SynthSpec spec;
      spec.width = params.width;
      spec.height = params.height;
      spec.period = params.period;
      spec.ridge_fraction = params.ridge_fraction;
      spec.jitter = jitter;
      spec.noise_std = params.noise_std;
      spec.seed = mix_seed(base_seed, counter);
      Rng rng(mix_seed(spec.seed, 0x0F1E));
      spec.orientation = rng.next_unit() * kPi;
      ++counter;
      char name[64];
      std::snprintf(name, sizeof(name), "%s_%04d.pgm", stem.c_str(), i);
      save_pgm(gen_stripe_grid(spec).grid, (dir / name).string());
    }
  };

  const fs::path root(out_dir);
  emit(root / "Train" / "Live", "live", params.train_per_class, params.live_jitter);
  emit(root / "Train" / "Fake" / params.material, "fake", params.train_per_class,
       params.fake_jitter);
  emit(root / "Test" / "Live", "live", params.test_per_class, params.live_jitter);
  emit(root / "Test" / "Fake" / params.material, "fake", params.test_per_class,
       params.fake_jitter);

  LayoutDescriptor layout;
  layout.sensor = params.sensor;
  const DatasetManifest manifest = build_manifest(out_dir, layout);
  save_manifest(manifest, (root / "manifest.txt").string());
  return manifest;
}

}  // namespace fplive
