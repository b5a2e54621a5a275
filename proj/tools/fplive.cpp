// fplive command line front end: synth, manifest, extract, select, train,
// eval, sweep. Exit codes: 0 success, 1 usage error, 2 data error, 3 train/
// test leakage guard.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fplive/fplive.hpp"

namespace {

using namespace fplive;

void add_common_flags(CLI::App* cmd, RunConfig& config) {
  cmd->add_option("--seed", config.seed, "global seed; module seeds derive from it");
}

void add_extract_flags(CLI::App* cmd, RunConfig& config) {
  cmd->add_option("--block-size", config.block.block_size, "analysis block size in px");
  cmd->add_option("--fg-threshold", config.block.fg_variance_threshold,
                  "foreground intensity-variance threshold");
  cmd->add_flag("--invert", config.invert, "flip polarity (for ridges-bright sensors)");
  cmd->add_option("--gabor-orientations", config.gabor.orientations, "gabor bank size");
  cmd->add_option("--gabor-wavelength", config.gabor.wavelength, "gabor wavelength, px");
  cmd->add_option("--gabor-sigma", config.gabor.sigma, "gabor envelope scale, px");
  cmd->add_option("--workers", config.workers, "parallel image workers")
      ->check(CLI::Range(1, 256));
}

void add_forest_flags(CLI::App* cmd, RunConfig& config) {
  cmd->add_option("--trees", config.forest.tree_count, "trees in the forest");
  cmd->add_option("--max-depth", config.forest.max_depth, "tree depth cap (0 = unlimited)");
  cmd->add_option("--min-leaf", config.forest.min_leaf, "minimum samples per leaf");
}

std::optional<Split> parse_split_filter(const std::string& s) {
  if (s == "all") return std::nullopt;
  return parse_split(s);
}

int run(int argc, char** argv) {
  CLI::App app{"fplive: fingerprint liveness detection from local ridge-valley quality features"};
  app.require_subcommand(1);
  RunConfig config;

  // synth
  auto* synth = app.add_subcommand("synth", "generate a labeled synthetic stripe dataset");
  SynthDatasetParams synth_params;
  std::string synth_out;
  synth->add_option("--out", synth_out, "output dataset directory")->required();
  synth->add_option("--train-per-class", synth_params.train_per_class, "train images per class");
  synth->add_option("--test-per-class", synth_params.test_per_class, "test images per class");
  synth->add_option("--size", synth_params.width, "image side length, px");
  synth->add_option("--period", synth_params.period, "stripe period, px");
  synth->add_option("--live-jitter", synth_params.live_jitter, "width jitter of live images");
  synth->add_option("--fake-jitter", synth_params.fake_jitter, "width jitter of fake images");
  synth->add_option("--noise", synth_params.noise_std, "gaussian intensity noise std");
  synth->add_option("--material", synth_params.material, "material tag for fakes");
  synth->add_option("--sensor", synth_params.sensor, "sensor tag");
  add_common_flags(synth, config);

  // manifest
  auto* manifest_cmd = app.add_subcommand("manifest", "build a dataset manifest from a directory tree");
  std::string manifest_root, manifest_out, layout_path, sensor_tag;
  manifest_cmd->add_option("--root", manifest_root, "dataset root directory")->required();
  manifest_cmd->add_option("--out", manifest_out, "manifest output file")->required();
  manifest_cmd->add_option("--layout", layout_path, "layout rule file");
  manifest_cmd->add_option("--sensor", sensor_tag, "sensor tag override");

  // extract
  auto* extract = app.add_subcommand("extract", "compute quality vectors for a manifest");
  std::string extract_manifest, extract_out, extract_split = "all", dump_dir;
  extract->add_option("--manifest", extract_manifest, "input manifest")->required();
  extract->add_option("--out", extract_out, "feature file output")->required();
  extract->add_option("--split", extract_split, "Train, Test or all")
      ->check(CLI::IsMember({"Train", "Test", "all"}));
  extract->add_option("--dump-profiles", dump_dir, "directory for per-block profile dumps");
  add_extract_flags(extract, config);
  add_common_flags(extract, config);

  // select
  auto* select = app.add_subcommand("select", "SFFS feature selection on train-split features");
  std::string select_features, select_out;
  select->add_option("--features", select_features, "train-split feature file")->required();
  select->add_option("--out", select_out, "subset report output")->required();
  select->add_option("--folds", config.folds, "cross-validation folds");
  select->add_option("--max-dim", config.select_max_dim, "largest subset size");
  add_forest_flags(select, config);
  add_common_flags(select, config);

  // train
  auto* train_cmd = app.add_subcommand("train", "train the forest on train-split features");
  std::string train_features, train_model, subset_path, mask_bits;
  train_cmd->add_option("--features", train_features, "train-split feature file")->required();
  train_cmd->add_option("--out", train_model, "model output file")->required();
  train_cmd->add_option("--subset", subset_path, "subset report from select");
  train_cmd->add_option("--mask", mask_bits, "explicit 13-char mask bitstring");
  add_forest_flags(train_cmd, config);
  add_common_flags(train_cmd, config);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "score features with a model and report error rates");
  std::string eval_features, eval_model, eval_scores_in, eval_report, eval_scores_out;
  eval_cmd->add_option("--features", eval_features, "feature file to score");
  eval_cmd->add_option("--model", eval_model, "trained model file");
  eval_cmd->add_option("--scores", eval_scores_in, "pre-scored sample file (alternative input)");
  eval_cmd->add_option("--out", eval_report, "report output file")->required();
  eval_cmd->add_option("--scores-out", eval_scores_out, "also write the score file");
  eval_cmd->add_option("--threshold", config.threshold, "decision threshold")
      ->check(CLI::Range(0.0, 1.0));
  add_common_flags(eval_cmd, config);

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "emit the 101-point threshold sweep table");
  std::string sweep_features, sweep_model, sweep_scores_in, sweep_out;
  sweep_cmd->add_option("--features", sweep_features, "feature file to score");
  sweep_cmd->add_option("--model", sweep_model, "trained model file");
  sweep_cmd->add_option("--scores", sweep_scores_in, "pre-scored sample file (alternative input)");
  sweep_cmd->add_option("--out", sweep_out, "sweep table output")->required();
  add_common_flags(sweep_cmd, config);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }

  if (synth->parsed()) {
    synth_params.height = synth_params.width;
    const DatasetManifest manifest = cmd_synth(synth_out, synth_params, config);
    std::cout << summarize(manifest).to_text();
    std::cout << "manifest: " << synth_out << "/manifest.txt\n";
    return 0;
  }
  if (manifest_cmd->parsed()) {
    LayoutDescriptor layout;
    if (!layout_path.empty()) layout = load_layout(layout_path);
    if (!sensor_tag.empty()) layout.sensor = sensor_tag;
    const DatasetManifest manifest = build_manifest(manifest_root, layout);
    save_manifest(manifest, manifest_out);
    std::cout << summarize(manifest).to_text();
    return 0;
  }
  if (extract->parsed()) {
    const ExtractStats stats = cmd_extract(extract_manifest, extract_out, config,
                                           parse_split_filter(extract_split), dump_dir);
    for (const auto& failure : stats.failures) std::cerr << "extract failed: " << failure << "\n";
    std::cout << "extracted " << stats.succeeded << "/" << stats.total << " images\n";
    if (stats.over_failure_budget) {
      std::cerr << "more than " << config.max_fail_fraction * 100 << "% of images failed\n";
      return 2;
    }
    return 0;
  }
  if (select->parsed()) {
    const FeatureSubset subset = cmd_select(select_features, select_out, config);
    std::cout << "mask " << subset.mask_bits() << " score " << format_g17(subset.score) << "\n";
    return 0;
  }
  if (train_cmd->parsed()) {
    std::vector<bool> mask;
    if (!mask_bits.empty()) {
      mask = mask_from_bits(mask_bits);
    } else if (!subset_path.empty()) {
      mask = load_subset_report(subset_path).mask;
    } else {
      mask.assign(13, true);  // all features
    }
    const ForestModel model = cmd_train(train_features, mask, train_model, config);
    std::cout << "trained " << model.params.tree_count << " trees on " << model.train_samples
              << " samples";
    if (!std::isnan(model.oob_accuracy))
      std::cout << " (oob accuracy " << format_fixed(model.oob_accuracy, 4) << ")";
    std::cout << "\n";
    return 0;
  }

  const auto load_samples = [&](const std::string& features_path, const std::string& model_path,
                                const std::string& scores_path) {
    if (!scores_path.empty()) return load_score_file(scores_path);
    if (features_path.empty() || model_path.empty())
      throw DataError("need either --scores or both --features and --model");
    const ForestModel model = load_model(model_path);
    return score_features(load_feature_file(features_path), model);
  };
  if (eval_cmd->parsed()) {
    const auto samples = load_samples(eval_features, eval_model, eval_scores_in);
    const EvalReport report = cmd_eval(samples, eval_report, config.threshold, eval_scores_out);
    std::cout << render_report(report);
    return 0;
  }
  if (sweep_cmd->parsed()) {
    const auto samples = load_samples(sweep_features, sweep_model, sweep_scores_in);
    cmd_sweep(samples, sweep_out);
    std::cout << "wrote 101 sweep points to " << sweep_out << "\n";
    return 0;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const fplive::LeakageError& e) {
    std::cerr << "leakage guard: " << e.what() << "\n";
    return 3;
  } catch (const fplive::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
