#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <cstring>
#include <filesystem>

#include "fplive/features.hpp"
#include "fplive/synth.hpp"

using namespace fplive;

namespace {

RidgeValleyProfile make_profile(const std::vector<std::vector<int>>& rw_rows,
                                const std::vector<std::vector<int>>& vw_rows) {
  RidgeValleyProfile p;
  p.valid_rows = static_cast<int>(rw_rows.size());
  p.rw = IntGrid(p.valid_rows, static_cast<int>(rw_rows[0].size()));
  p.vw = IntGrid(p.valid_rows, vw_rows.empty() ? 0 : static_cast<int>(vw_rows[0].size()));
  for (int r = 0; r < p.valid_rows; ++r) {
    for (int c = 0; c < p.rw.cols; ++c) p.rw.at(r, c) = rw_rows[r][c];
    for (int c = 0; c < p.vw.cols; ++c) p.vw.at(r, c) = vw_rows[r][c];
    p.rows.push_back({r, 0, true});
  }
  return p;
}

TEST(WidthSmoothness, ConstantColumnsGiveZero) {
  const auto p = make_profile({{5, 7}, {5, 7}, {5, 7}}, {{4}, {4}, {4}});
  EXPECT_DOUBLE_EQ(rws(p), 0.0);
  EXPECT_DOUBLE_EQ(vws(p), 0.0);
}

TEST(WidthSmoothness, PopulationDeviationOfTwoRows) {
  // {4,6}: mean 5, population variance 1, std 1
  EXPECT_DOUBLE_EQ(rws(make_profile({{4}, {6}}, {})), 1.0);
  EXPECT_DOUBLE_EQ(vws(make_profile({{9}, {9}}, {{4}, {6}})), 1.0);
}

TEST(WidthSmoothness, AveragesAcrossColumns) {
  // column stds 1 and 0 -> (1+0)/2
  EXPECT_DOUBLE_EQ(rws(make_profile({{4, 8}, {6, 8}}, {})), 0.5);
}

TEST(WidthSmoothness, RejectsDegenerateProfiles) {
  RidgeValleyProfile p = make_profile({{4}, {6}}, {});
  EXPECT_THROW(vws(p), DataError);  // no valley columns
}

TEST(AbnormalCounts, ThresholdBoundary) {
  // all columns constant
  EXPECT_EQ(abnormal_counts(make_profile({{5}, {5}, {5}, {5}}, {})).first, 0);
  // std({4,6,4,6}) = 1.0 <= 1.03: normal
  const auto below = abnormal_counts(make_profile({{4}, {6}, {4}, {6}}, {}));
  EXPECT_EQ(below.first, 0);
  // std({3,6,3,6}) = 1.5 > 1.03: abnormal
  const auto above = abnormal_counts(make_profile({{3}, {6}, {3}, {6}}, {}));
  EXPECT_EQ(above.first, 1);
  // valley side, custom threshold
  const auto vab = abnormal_counts(make_profile({{5}, {5}}, {{2}, {8}}), 2.9);
  EXPECT_EQ(vab.second, 1);
}

TEST(AbnormalCounts, BoundedByColumnCounts) {
  Rng rng(31337);
  for (int trial = 0; trial < 20; ++trial) {
    const int rows = 2 + static_cast<int>(rng.next_below(10));
    const int rcols = 1 + static_cast<int>(rng.next_below(4));
    const int vcols = static_cast<int>(rng.next_below(4));
    std::vector<std::vector<int>> rw(rows, std::vector<int>(rcols));
    std::vector<std::vector<int>> vw(rows, std::vector<int>(vcols));
    for (auto& r : rw)
      for (auto& w : r) w = 1 + static_cast<int>(rng.next_below(12));
    for (auto& r : vw)
      for (auto& w : r) w = 1 + static_cast<int>(rng.next_below(12));
    const auto p = make_profile(rw, vcols == 0 ? std::vector<std::vector<int>>{} : vw);
    const auto [rab, vab] = abnormal_counts(p);
    EXPECT_GE(rab, 0);
    EXPECT_LE(rab, rcols);
    EXPECT_GE(vab, 0);
    EXPECT_LE(vab, vcols);
  }
}

BinaryBlock stripe_mask(int rows = 32) {
  // per row: V2 R5 V5 R2 -> interior runs R5 V5 (10 profiled px per row)
  BinaryBlock bin;
  bin.mask = BoolGrid(rows, 14, 0);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < 14; ++c)
      bin.mask.at(r, c) = ((c >= 2 && c < 7) || c >= 12) ? 1 : 0;
  return bin;
}

TEST(RidgeValleyClarity, PerfectStripesAreZero) {
  const BinaryBlock bin = stripe_mask();
  EXPECT_DOUBLE_EQ(rvc(bin, run_length_profile(bin)), 0.0);
}

TEST(RidgeValleyClarity, FlippedPixelsAreCounted) {
  const BinaryBlock clean = stripe_mask();
  const RidgeValleyProfile profile = run_length_profile(clean);
  ASSERT_EQ(profile.width_sum(), 320);  // 32 rows x 10 profiled px

  BinaryBlock corrupted = clean;
  // four ridge pixels inside the nominal valley span [7,12)
  for (const int row : {3, 9, 15, 21}) corrupted.mask.at(row, 9) = 1;
  EXPECT_DOUBLE_EQ(rvc(corrupted, profile), 4.0 / 320.0);
}

TEST(RidgeValleyClarity, RandomMaskIsPoor) {
  const BinaryBlock clean = stripe_mask();
  const RidgeValleyProfile profile = run_length_profile(clean);
  BinaryBlock random = clean;
  Rng rng(4242);
  for (auto& m : random.mask.data) m = rng.next_below(2) ? 1 : 0;
  EXPECT_GE(rvc(random, profile), 0.2);
}

OrientedBlock block_with_signature(const std::vector<double>& signature, int rows = 32) {
  OrientedBlock block;
  block.pixels = RealGrid(rows, static_cast<int>(signature.size()));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < block.pixels.cols; ++c) block.pixels.at(r, c) = signature[c];
  return block;
}

std::vector<double> tone(int n, int freq, double amplitude, bool cosine = false) {
  std::vector<double> s(n);
  for (int k = 0; k < n; ++k) {
    const double phase = 2.0 * kPi * freq * k / n;
    s[k] = 128.0 + amplitude * (cosine ? std::cos(phase) : std::sin(phase));
  }
  return s;
}

TEST(Fda, PureToneScoresOne) {
  EXPECT_NEAR(fda(block_with_signature(tone(16, 3, 50.0))), 1.0, 1e-9);
}

TEST(Fda, BoundaryDominantFrequencyScoresOne) {
  // F_max = 1 (lowest valid bin)
  EXPECT_DOUBLE_EQ(fda(block_with_signature(tone(16, 1, 50.0))), 1.0);
  // F_max = N/2 (highest valid bin); cosine so the Nyquist tone survives
  EXPECT_DOUBLE_EQ(fda(block_with_signature(tone(16, 8, 50.0, true))), 1.0);
}

TEST(Fda, TwoWellSeparatedTonesScoreHalf) {
  std::vector<double> s(16);
  for (int k = 0; k < 16; ++k)
    s[k] = 128.0 + 40.0 * std::sin(2.0 * kPi * 3 * k / 16.0) +
           40.0 * std::sin(2.0 * kPi * 6 * k / 16.0);
  const double value = fda_signature(s);
  EXPECT_NEAR(value, 0.5, 0.05);

  // independent DFT oracle
  const int n = 16, last = 8;
  std::vector<double> amp(last + 1, 0.0);
  for (int f = 1; f <= last; ++f) {
    std::complex<double> acc(0, 0);
    for (int k = 0; k < n; ++k)
      acc += s[k] * std::exp(std::complex<double>(0, -2.0 * kPi * f * k / n));
    amp[f] = std::abs(acc);
  }
  int fmax = 1;
  for (int f = 2; f <= last; ++f)
    if (amp[f] > amp[fmax]) fmax = f;
  double total = 0.0;
  for (int f = 1; f <= last; ++f) total += amp[f];
  const double expected = (amp[fmax] + 0.3 * amp[fmax - 1] + amp[fmax + 1]) / total;
  EXPECT_NEAR(value, expected, 1e-12);
}

TEST(Fda, RangeInvariantAndShortSignatureRejected) {
  Rng rng(555);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> s(16);
    for (auto& v : s) v = 60.0 + 140.0 * rng.next_unit();
    const double value = fda_signature(s);
    EXPECT_GT(value, 0.0);
    EXPECT_LE(value, 1.0);
  }
  EXPECT_THROW(fda_signature(std::vector<double>(6, 1.0)), DataError);
  OrientedBlock narrow;
  narrow.pixels = RealGrid(32, 6, 1.0);
  EXPECT_THROW(fda(narrow), DataError);
}

TEST(Ocl, ClosedFormEigenvalues) {
  // a=4, b=2, c=1: 1 - (3-sqrt2)/(3+sqrt2)
  const double expected = 1.0 - (3.0 - std::sqrt(2.0)) / (3.0 + std::sqrt(2.0));
  EXPECT_NEAR(ocl_from_covariance(4.0, 2.0, 1.0), expected, 1e-9);
  EXPECT_NEAR(expected, 0.6408, 5e-5);
}

TEST(Ocl, DegenerateAndPureGradientCases) {
  EXPECT_DOUBLE_EQ(ocl_from_covariance(0.0, 0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(ocl_from_covariance(3.0, 0.0, 0.0), 1.0);

  OrientedBlock constant;
  constant.pixels = RealGrid(32, 16, 42.0);
  EXPECT_DOUBLE_EQ(ocl(constant), 0.0);

  OrientedBlock ramp;
  ramp.pixels = RealGrid(32, 16);
  for (int r = 0; r < 32; ++r)
    for (int c = 0; c < 16; ++c) ramp.pixels.at(r, c) = 3.0 * c;
  EXPECT_DOUBLE_EQ(ocl(ramp), 1.0);
}

TEST(Ocl, BoundedAndQuarterTurnInvariant) {
  Rng rng(777);
  for (int trial = 0; trial < 10; ++trial) {
    OrientedBlock block;
    block.pixels = RealGrid(24, 24);
    const double theta = rng.next_unit() * kPi;
    for (int r = 0; r < 24; ++r)
      for (int c = 0; c < 24; ++c)
        block.pixels.at(r, c) =
            128 + 60 * std::sin(2 * kPi * (c * std::sin(theta) - r * std::cos(theta)) / 9.0) +
            4.0 * rng.next_normal();
    const double value = ocl(block);
    EXPECT_GE(value, 0.0);
    EXPECT_LE(value, 1.0);

    OrientedBlock rotated;
    rotated.pixels = RealGrid(24, 24);
    for (int r = 0; r < 24; ++r)
      for (int c = 0; c < 24; ++c) rotated.pixels.at(r, c) = block.pixels.at(c, 23 - r);
    EXPECT_NEAR(ocl(rotated), value, 0.02);
  }
}

OrientedBlock sinusoid_block(double theta, double noise, std::uint64_t seed) {
  OrientedBlock block;
  block.pixels = RealGrid(32, 16);
  Rng rng(seed);
  for (int r = 0; r < 32; ++r)
    for (int c = 0; c < 16; ++c)
      block.pixels.at(r, c) =
          128 + 60 * std::sin(2 * kPi * (c * std::sin(theta) - r * std::cos(theta)) / 8.0) +
          noise * rng.next_normal();
  return block;
}

TEST(GaborQuality, ConstantBlockScoresZero) {
  OrientedBlock constant;
  constant.pixels = RealGrid(32, 16, 130.0);
  EXPECT_NEAR(gabor_quality(constant, GaborBankSpec{}), 0.0, 1e-6);
}

TEST(GaborQuality, OrientedStructureBeatsScrambleAndNoise) {
  const OrientedBlock oriented = sinusoid_block(kPi / 2, 0.0, 1);
  OrientedBlock scrambled = oriented;
  Rng rng(909);
  rng.shuffle(scrambled.pixels.data);
  OrientedBlock noise;
  noise.pixels = RealGrid(32, 16);
  Rng nrng(910);
  for (auto& p : noise.pixels.data) p = 60.0 + 140.0 * nrng.next_unit();

  const GaborBankSpec bank;
  const double g_oriented = gabor_quality(oriented, bank);
  EXPECT_GT(g_oriented, gabor_quality(scrambled, bank));
  EXPECT_GT(g_oriented, gabor_quality(noise, bank));
}

TEST(GaborQuality, RejectsTinyBlocksAndBadBanks) {
  OrientedBlock tiny;
  tiny.pixels = RealGrid(8, 8, 1.0);
  EXPECT_THROW(gabor_quality(tiny, GaborBankSpec{}), DataError);
  GaborBankSpec bad;
  bad.orientations = 2;
  EXPECT_THROW(bad.validate(), DataError);
  GaborBankSpec long_wave;
  long_wave.wavelength = 100.0;
  EXPECT_THROW(long_wave.validate(), DataError);
}

LocalFeatureSet all_features(double v, int ab) {
  LocalFeatureSet f;
  f.rws = f.vws = f.rvc = f.fda = f.ocl = f.gabor = v;
  f.r_ab = f.v_ab = ab;
  return f;
}

TEST(Aggregate, IdenticalBlocksHaveZeroDeviation) {
  const std::vector<LocalFeatureSet> locals(5, all_features(0.8, 1));
  const QualityVector q = aggregate(locals);
  for (int i = 0; i < 5; ++i) {
    EXPECT_DOUBLE_EQ(q[i], 0.8);       // mu slots
    EXPECT_DOUBLE_EQ(q[5 + i], 0.0);   // sigma slots
  }
  EXPECT_DOUBLE_EQ(q[10], 1.0);
  EXPECT_DOUBLE_EQ(q[11], 1.0);
  EXPECT_DOUBLE_EQ(q[12], 0.8);
}

TEST(Aggregate, SampleDeviationUsesNMinusOne) {
  // rws {1,3}: mean 2, sample std sqrt(2)
  const std::vector<LocalFeatureSet> locals = {all_features(1.0, 0), all_features(3.0, 2)};
  const QualityVector q = aggregate(locals);
  EXPECT_DOUBLE_EQ(q[0], 2.0);
  EXPECT_DOUBLE_EQ(q[5], std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(q[10], 1.0);  // r_ab {0,2}
}

TEST(Aggregate, IntegerAbnormalMeans) {
  const std::vector<LocalFeatureSet> locals = {all_features(1, 0), all_features(1, 1),
                                               all_features(1, 2)};
  EXPECT_DOUBLE_EQ(aggregate(locals)[10], 1.0);
}

TEST(Aggregate, RequiresTwoBlocksPerPool) {
  std::vector<LocalFeatureSet> locals = {all_features(1, 0)};
  try {
    aggregate(locals);
    FAIL() << "expected rejection";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("insufficient foreground"), std::string::npos);
  }
  // a feature missing from all but one block also fails
  locals = {all_features(1, 0), all_features(2, 1)};
  locals[1].gabor.reset();
  EXPECT_THROW(aggregate(locals), DataError);
}

TEST(Aggregate, BlockOrderInvariant) {
  Rng rng(2020);
  std::vector<LocalFeatureSet> locals;
  for (int i = 0; i < 9; ++i)
    locals.push_back(all_features(rng.next_unit() * 3.0, static_cast<int>(rng.next_below(3))));
  const QualityVector a = aggregate(locals);
  std::vector<LocalFeatureSet> shuffled = locals;
  rng.shuffle(shuffled);
  const QualityVector b = aggregate(shuffled);
  for (int i = 0; i < 13; ++i) EXPECT_DOUBLE_EQ(a[i], b[i]) << "slot " << i;
}

SynthSpec basic_spec(int jitter, std::uint64_t seed, int size = 160) {
  SynthSpec spec;
  spec.width = spec.height = size;
  spec.period = 10;
  spec.jitter = jitter;
  spec.seed = seed;
  return spec;
}

TEST(ExtractAll, ConstantWidthPatternsScoreNearZero) {
  const ImageFeatures f = extract_all(gen_stripe_grid(basic_spec(0, 42)).grid);
  EXPECT_LT(f.q[0], 0.1);   // RWS mu
  EXPECT_LT(f.q[1], 0.1);   // VWS mu
  EXPECT_LT(f.q[10], 0.1);  // Rab mu
  EXPECT_LT(f.q[11], 0.1);  // Vab mu
}

TEST(ExtractAll, JitterRaisesWidthSmoothness) {
  const ImageFeatures smooth = extract_all(gen_stripe_grid(basic_spec(0, 42)).grid);
  const ImageFeatures rough = extract_all(gen_stripe_grid(basic_spec(3, 42)).grid);
  EXPECT_GT(rough.q[0], smooth.q[0]);
}

TEST(ExtractAll, BlankImageRejected) {
  try {
    extract_all(make_grid(160, 160, 200));
    FAIL() << "expected rejection";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("insufficient foreground"), std::string::npos);
  }
}

TEST(ExtractAll, DeterministicAcrossRuns) {
  SynthSpec spec = basic_spec(2, 7);
  spec.noise_std = 5.0;
  const IntensityGrid grid = gen_stripe_grid(spec).grid;
  const ImageFeatures a = extract_all(grid);
  const ImageFeatures b = extract_all(grid);
  for (int i = 0; i < 13; ++i)
    EXPECT_EQ(std::memcmp(&a.q.values[i], &b.q.values[i], sizeof(double)), 0);
  EXPECT_EQ(a.exclusions, b.exclusions);
}

TEST(ExtractAll, WidthSmoothnessIsTranslationInvariant) {
  for (const double phase : {0.0, 1.7, 3.3}) {
    SynthSpec spec = basic_spec(0, 42);
    spec.phase = phase;
    const ImageFeatures f = extract_all(gen_stripe_grid(spec).grid);
    EXPECT_DOUBLE_EQ(f.q[0], 0.0) << "phase " << phase;
    EXPECT_DOUBLE_EQ(f.q[1], 0.0) << "phase " << phase;
  }
}

TEST(ExtractAll, WidthSmoothnessMonotoneInJitter) {
  double prev = -1.0;
  for (const int jitter : {0, 1, 2, 3, 4}) {
    const ImageFeatures f = extract_all(gen_stripe_grid(basic_spec(jitter, 42, 288)).grid);
    EXPECT_GE(f.q[0], prev) << "jitter " << jitter;
    if (jitter == 0) EXPECT_DOUBLE_EQ(f.q[0], 0.0);
    prev = f.q[0];
  }
}

TEST(FeatureFile, RoundTrip) {
  std::vector<FeatureRecord> records;
  Rng rng(88);
  for (int i = 0; i < 6; ++i) {
    FeatureRecord r;
    r.path = "img_" + std::to_string(i) + ".pgm";
    r.label = i % 2 ? Label::Live : Label::Fake;
    r.material = i % 2 ? "" : "gelatin";
    r.sensor = "synth";
    r.split = i < 3 ? Split::Train : Split::Test;
    for (auto& v : r.q.values) v = rng.next_normal();
    r.note = "blocks=9";
    records.push_back(r);
  }
  const auto path = std::filesystem::temp_directory_path() / "fplive_features_rt.tsv";
  save_feature_file(records, path.string());
  const auto back = load_feature_file(path.string());
  ASSERT_EQ(back.size(), records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    EXPECT_EQ(back[i].path, records[i].path);
    EXPECT_EQ(back[i].label, records[i].label);
    EXPECT_EQ(back[i].material, records[i].material);
    EXPECT_EQ(back[i].split, records[i].split);
    EXPECT_EQ(back[i].note, records[i].note);
    for (int j = 0; j < 13; ++j) EXPECT_DOUBLE_EQ(back[i].q[j], records[i].q[j]);
  }
  std::filesystem::remove(path);
}

}  // namespace
