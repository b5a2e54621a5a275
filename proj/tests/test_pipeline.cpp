#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "fplive/pipeline.hpp"

namespace fs = std::filesystem;
using namespace fplive;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class PipelineFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() / "fplive_pipeline_test";
    fs::remove_all(root_);
    fs::create_directories(root_);
    config_.seed = 42;
    config_.forest.tree_count = 40;
  }
  void TearDown() override { fs::remove_all(root_); }

  std::string path(const std::string& name) const { return (root_ / name).string(); }

  DatasetManifest make_dataset(int per_class) {
    SynthDatasetParams params;
    params.train_per_class = per_class;
    params.test_per_class = per_class;
    return cmd_synth(path("data"), params, config_);
  }

  fs::path root_;
  RunConfig config_;
};

TEST_F(PipelineFixture, ExtractWritesOneLinePerImage) {
  make_dataset(3);  // 12 images total
  const ExtractStats stats =
      cmd_extract(path("data/manifest.txt"), path("features.tsv"), config_);
  EXPECT_EQ(stats.total, 12);
  EXPECT_EQ(stats.succeeded, 12);
  EXPECT_TRUE(stats.failures.empty());
  EXPECT_EQ(load_feature_file(path("features.tsv")).size(), 12u);
}

TEST_F(PipelineFixture, CorruptImageIsLoggedNotFatal) {
  make_dataset(3);
  // corrupt one image in place
  const DatasetManifest manifest = load_manifest(path("data/manifest.txt"));
  std::ofstream(manifest.records[0].path, std::ios::binary) << "garbage";
  const ExtractStats stats =
      cmd_extract(path("data/manifest.txt"), path("features.tsv"), config_);
  EXPECT_EQ(stats.succeeded, 11);
  ASSERT_EQ(stats.failures.size(), 1u);
  EXPECT_NE(stats.failures[0].find(manifest.records[0].path), std::string::npos);
  EXPECT_FALSE(stats.over_failure_budget);  // 1/12 < 10%... just over 8%
  EXPECT_EQ(load_feature_file(path("features.tsv")).size(), 11u);
}

TEST_F(PipelineFixture, FailureBudgetTrips) {
  make_dataset(3);
  const DatasetManifest manifest = load_manifest(path("data/manifest.txt"));
  for (int i = 0; i < 3; ++i)
    std::ofstream(manifest.records[i].path, std::ios::binary) << "garbage";
  const ExtractStats stats =
      cmd_extract(path("data/manifest.txt"), path("features.tsv"), config_);
  EXPECT_TRUE(stats.over_failure_budget);  // 3/12 = 25%
}

TEST_F(PipelineFixture, MissingManifestRejected) {
  EXPECT_THROW(cmd_extract(path("nope.txt"), path("f.tsv"), config_), DataError);
}

TEST_F(PipelineFixture, SelectRefusesTestRows) {
  make_dataset(3);
  cmd_extract(path("data/manifest.txt"), path("all.tsv"), config_);  // both splits
  EXPECT_THROW(cmd_select(path("all.tsv"), path("subset.txt"), config_), LeakageError);
  EXPECT_THROW(cmd_train(path("all.tsv"), std::vector<bool>(13, true), path("model.txt"),
                         config_),
               LeakageError);
}

TEST_F(PipelineFixture, SweepHasExactly101Lines) {
  make_dataset(4);
  cmd_extract(path("data/manifest.txt"), path("train.tsv"), config_, Split::Train);
  cmd_extract(path("data/manifest.txt"), path("test.tsv"), config_, Split::Test);
  cmd_train(path("train.tsv"), std::vector<bool>(13, true), path("model.txt"), config_);
  const ForestModel model = load_model(path("model.txt"));
  const auto samples = score_features(load_feature_file(path("test.tsv")), model);
  cmd_sweep(samples, path("sweep.tsv"));
  const std::string sweep = slurp(path("sweep.tsv"));
  EXPECT_EQ(std::count(sweep.begin(), sweep.end(), '\n'), 101);
}

TEST_F(PipelineFixture, EndToEndSeparatesClasses) {
  make_dataset(20);
  cmd_extract(path("data/manifest.txt"), path("train.tsv"), config_, Split::Train);
  cmd_extract(path("data/manifest.txt"), path("test.tsv"), config_, Split::Test);
  const FeatureSubset subset = cmd_select(path("train.tsv"), path("subset.txt"), config_);
  EXPECT_GE(subset.score, 0.9);
  cmd_train(path("train.tsv"), subset.mask, path("model.txt"), config_);
  const ForestModel model = load_model(path("model.txt"));
  const auto samples = score_features(load_feature_file(path("test.tsv")), model);
  const EvalReport report = cmd_eval(samples, path("report.txt"), 0.5, path("scores.txt"));
  ASSERT_EQ(report.sensors.size(), 1u);
  const auto& r = report.sensors[0].at_livdet;
  EXPECT_LE(ace(r.ferrlive, r.ferrfake), 5.0);
  // artifacts exist and reload
  EXPECT_EQ(load_score_file(path("scores.txt")).size(), 40u);
  EXPECT_FALSE(slurp(path("report.txt")).empty());
}

TEST_F(PipelineFixture, WorkerCountDoesNotChangeBytes) {
  make_dataset(5);
  config_.workers = 1;
  cmd_extract(path("data/manifest.txt"), path("w1.tsv"), config_, Split::Train);
  config_.workers = 4;
  cmd_extract(path("data/manifest.txt"), path("w4.tsv"), config_, Split::Train);
  EXPECT_EQ(slurp(path("w1.tsv")), slurp(path("w4.tsv")));
  EXPECT_FALSE(slurp(path("w1.tsv")).empty());
}

TEST_F(PipelineFixture, RerunsAreByteIdentical) {
  make_dataset(5);
  for (const char* suffix : {"a", "b"}) {
    cmd_extract(path("data/manifest.txt"), path(std::string("train_") + suffix + ".tsv"),
                config_, Split::Train);
    cmd_select(path(std::string("train_") + suffix + ".tsv"),
               path(std::string("subset_") + suffix + ".txt"), config_);
    cmd_train(path(std::string("train_") + suffix + ".tsv"),
              load_subset_report(path(std::string("subset_") + suffix + ".txt")).mask,
              path(std::string("model_") + suffix + ".txt"), config_);
  }
  EXPECT_EQ(slurp(path("train_a.tsv")), slurp(path("train_b.tsv")));
  EXPECT_EQ(slurp(path("subset_a.txt")), slurp(path("subset_b.txt")));
  EXPECT_EQ(slurp(path("model_a.txt")), slurp(path("model_b.txt")));
}

TEST_F(PipelineFixture, TestSplitNeverInfluencesMaskOrModel) {
  make_dataset(5);
  cmd_extract(path("data/manifest.txt"), path("train.tsv"), config_, Split::Train);
  cmd_select(path("train.tsv"), path("subset_full.txt"), config_);
  cmd_train(path("train.tsv"), load_subset_report(path("subset_full.txt")).mask,
            path("model_full.txt"), config_);

  fs::remove_all(root_ / "data" / "Test");
  const DatasetManifest rebuilt = build_manifest(path("data"), [] {
    LayoutDescriptor layout;
    layout.sensor = "synth";
    return layout;
  }());
  save_manifest(rebuilt, path("data/manifest.txt"));
  cmd_extract(path("data/manifest.txt"), path("train2.tsv"), config_, Split::Train);
  cmd_select(path("train2.tsv"), path("subset_notest.txt"), config_);
  cmd_train(path("train2.tsv"), load_subset_report(path("subset_notest.txt")).mask,
            path("model_notest.txt"), config_);

  EXPECT_EQ(slurp(path("train.tsv")), slurp(path("train2.tsv")));
  EXPECT_EQ(slurp(path("subset_full.txt")), slurp(path("subset_notest.txt")));
  EXPECT_EQ(slurp(path("model_full.txt")), slurp(path("model_notest.txt")));
}

TEST_F(PipelineFixture, SynthDatasetShapeAndDeterminism) {
  const DatasetManifest manifest = make_dataset(4);
  EXPECT_EQ(manifest.count(Split::Train, Label::Live), 4);
  EXPECT_EQ(manifest.count(Split::Test, Label::Fake), 4);
  const SplitSummary summary = summarize(manifest);
  EXPECT_EQ(summary.train.fakes.at("jitter"), 4);

  // regenerating under the same seed yields identical image bytes
  const std::string image0 = slurp(manifest.records[0].path);
  fs::remove_all(root_ / "data");
  make_dataset(4);
  EXPECT_EQ(slurp(manifest.records[0].path), image0);
  EXPECT_FALSE(image0.empty());
}

TEST_F(PipelineFixture, ProfileDumpsWrittenOnRequest) {
  make_dataset(2);
  cmd_extract(path("data/manifest.txt"), path("f.tsv"), config_, Split::Train,
              path("dumps"));
  int dumped = 0;
  for (const auto& entry : fs::directory_iterator(path("dumps"))) {
    ++dumped;
    EXPECT_NE(slurp(entry.path()).find("# block"), std::string::npos);
  }
  EXPECT_EQ(dumped, 4);  // 2 live + 2 fake train images
}

}  // namespace
