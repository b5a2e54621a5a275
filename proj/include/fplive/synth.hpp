#pragma once

// Synthetic stripe patterns with exactly known ridge/valley widths, plus
// labeled Gaussian feature clouds. These generators are the ground truth the
// feature extractors and the classifier stack are tested against.
//
// The pattern lives in a canonical frame with vertical ridges: ridge k spans
// [k*period, k*period + width + jitter(k,row)) along the normal axis. Jitter
// is a pure hash of (seed, ridge, row), so the pattern is evaluable at any
// point without materializing it and the recorded widths are exact.

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "fplive/common.hpp"
#include "fplive/image.hpp"

namespace fplive {

struct SynthSpec {
  int width = 160;
  int height = 160;
  int period = 10;              // ridge + valley period, px
  double ridge_fraction = 0.5;  // nominal ridge share of the period
  double orientation = kPi / 2; // ridge-flow direction in [0, pi)
  double phase = 0.0;           // lateral pattern shift of the stripes, px
  int jitter = 0;               // max per-row width deviation, px
  int abnormal_count = 0;       // ridges given abnormal_jitter instead
  int abnormal_jitter = 4;
  int valley_level = 200;
  int contrast = 140;           // valley_level - ridge_level
  double noise_std = 0.0;       // gray levels
  std::uint64_t seed = 0;

  void validate() const {
    if (width <= 0 || height <= 0) throw DataError("synth dimensions must be positive");
    if (period < 4) throw DataError("period must be >= 4 px");
    if (ridge_fraction <= 0.0 || ridge_fraction >= 1.0)
      throw DataError("ridge fraction must be in (0,1)");
    if (jitter >= period / 2 || (abnormal_count > 0 && abnormal_jitter >= period / 2))
      throw DataError("jitter must be below period/2");
    if (contrast < 1 || valley_level - contrast < 0 || valley_level > 255)
      throw DataError("contrast/levels out of range");
  }

  int nominal_ridge_width() const {
    const int w = static_cast<int>(std::lround(period * ridge_fraction));
    return std::clamp(w, 1, period - 1);
  }
};

// Exact pattern oracle in the canonical (vertical-ridge) frame.
class StripeTruth {
 public:
  explicit StripeTruth(const SynthSpec& spec) : spec_(spec) {
    spec_.validate();
    nominal_ = spec_.nominal_ridge_width();
    const int visible = std::max(1, spec_.width / spec_.period);
    abnormal_stride_ =
        spec_.abnormal_count > 0 ? std::max(1, visible / spec_.abnormal_count) : 0;
  }

  const SynthSpec& spec() const { return spec_; }

  bool ridge_is_abnormal(std::int64_t k) const {
    if (abnormal_stride_ == 0) return false;
    const std::int64_t m = ((k % abnormal_stride_) + abnormal_stride_) % abnormal_stride_;
    return m == 0;
  }

  // Signed width deviation of ridge k at canonical row r.
  int jitter_at(std::int64_t k, std::int64_t r) const {
    const int amp = ridge_is_abnormal(k) ? spec_.abnormal_jitter : spec_.jitter;
    if (amp == 0) return 0;
    const std::uint64_t h = splitmix64(mix_seed(spec_.seed, static_cast<std::uint64_t>(k) * 0x9e3779b9ULL) ^
                                       static_cast<std::uint64_t>(r));
    int j = static_cast<int>(h % (2 * amp + 1)) - amp;
    // keep both the ridge and the following valley at least 1 px wide
    return std::clamp(j, 1 - nominal_, spec_.period - 1 - nominal_);
  }

  int ridge_width(std::int64_t k, std::int64_t r) const { return nominal_ + jitter_at(k, r); }

  // Ridge k occupies [k*period, k*period + width_k) in the shifted normal
  // coordinate; the intensity ramps linearly across each boundary so the
  // mid-level crossing sits exactly on it. A pixel is ridge iff its coverage
  // exceeds one half.
  bool is_ridge(double xi, std::int64_t r) const {
    const double shifted = xi - spec_.phase + 0.5;
    const double p = spec_.period;
    const std::int64_t k = static_cast<std::int64_t>(std::floor(shifted / p));
    return shifted - static_cast<double>(k) * p < ridge_width(k, r);
  }

  // Continuous intensity profile. The edge ramps are just wide enough to
  // cover the bilinear sampling support, so crossings survive rotated
  // resampling exactly; integer samples classify identically to is_ridge.
  double value(double xi, std::int64_t r) const {
    constexpr double kEdgeHalfWidth = 0.75;
    const double shifted = xi - spec_.phase + 0.5;
    const double p = spec_.period;
    const std::int64_t k0 = static_cast<std::int64_t>(std::floor(shifted / p));
    double coverage = 0.0;
    for (std::int64_t k = k0 - 1; k <= k0 + 1; ++k) {
      const double start = static_cast<double>(k) * p;
      const double end = start + ridge_width(k, r);
      const double into = std::min(shifted - start, end - shifted);
      coverage = std::max(coverage,
                          std::clamp(0.5 * (into / kEdgeHalfWidth + 1.0), 0.0, 1.0));
    }
    return spec_.valley_level - spec_.contrast * coverage;
  }

  // Interior runs of the pattern among integer samples [col_a, col_b) of
  // canonical row r: run-length encoded with the first and last run dropped,
  // matching the border rule of run_length_profile.
  std::vector<std::pair<bool, int>> interior_runs(std::int64_t r, int col_a, int col_b) const {
    std::vector<std::pair<bool, int>> runs;
    for (int x = col_a; x < col_b; ++x) {
      const bool ridge = is_ridge(static_cast<double>(x), r);
      if (!runs.empty() && runs.back().first == ridge)
        ++runs.back().second;
      else
        runs.emplace_back(ridge, 1);
    }
    if (runs.size() <= 2) return {};
    return {runs.begin() + 1, runs.end() - 1};
  }

 private:
  SynthSpec spec_;
  int nominal_ = 0;
  int abnormal_stride_ = 0;
};

struct StripeImage {
  IntensityGrid grid;
  StripeTruth truth;
};

inline StripeImage gen_stripe_grid(const SynthSpec& spec) {
  StripeTruth truth(spec);
  IntensityGrid grid = make_grid(spec.width, spec.height);

  double ca = std::cos(spec.orientation - kPi / 2.0);
  double sa = std::sin(spec.orientation - kPi / 2.0);
  // Snap near-axis angles so axis-aligned patterns sample exactly.
  if (std::abs(ca) < 1e-9) ca = 0.0;
  if (std::abs(sa) < 1e-9) sa = 0.0;
  if (std::abs(std::abs(ca) - 1.0) < 1e-9) ca = ca > 0 ? 1.0 : -1.0;
  if (std::abs(std::abs(sa) - 1.0) < 1e-9) sa = sa > 0 ? 1.0 : -1.0;

  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      const double xi = x * ca + y * sa;
      const double eta = -x * sa + y * ca;
      const std::int64_t r = static_cast<std::int64_t>(std::floor(eta));
      grid.at(y, x) = static_cast<std::uint8_t>(std::lround(truth.value(xi, r)));
    }
  }
  if (spec.noise_std > 0.0) {
    Rng rng(mix_seed(spec.seed, 0xA015E));
    for (auto& p : grid.pixels) {
      const double v = p + rng.next_normal() * spec.noise_std;
      p = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  }
  return {std::move(grid), std::move(truth)};
}

// ---------------------------------------------------------------------------
// Labeled feature clouds for selection/classifier tests.
// ---------------------------------------------------------------------------

/// Two Gaussian class clouds separated along the informative dims only;
/// noise dims are exchangeable between classes. Rows: n_per_class of label 0
/// followed by n_per_class of label 1.
inline std::pair<RealGrid, std::vector<int>> gen_labeled_features(
    int n_per_class, int total_dims, const std::vector<int>& informative_dims,
    double separation, std::uint64_t seed) {
  if (n_per_class < 10) throw DataError("need at least 10 samples per class");
  if (total_dims < 1) throw DataError("need at least one dimension");
  std::vector<bool> informative(total_dims, false);
  for (const int d : informative_dims) {
    if (d < 0 || d >= total_dims) throw DataError("informative dim out of range");
    informative[d] = true;
  }
  Rng rng(mix_seed(seed, 0xFEA7));
  RealGrid x(2 * n_per_class, total_dims);
  std::vector<int> y(2 * n_per_class);
  for (int i = 0; i < 2 * n_per_class; ++i) {
    const int label = i < n_per_class ? 0 : 1;
    y[i] = label;
    for (int d = 0; d < total_dims; ++d) {
      double v = rng.next_normal();
      if (informative[d]) v += (label == 1 ? 0.5 : -0.5) * separation;
      x.at(i, d) = v;
    }
  }
  return {std::move(x), std::move(y)};
}

/// XOR construction on dims 0 and 1: each singleton is uninformative, the
/// pair determines the label.
inline std::pair<RealGrid, std::vector<int>> gen_xor_features(int n_per_class,
                                                              int total_dims,
                                                              std::uint64_t seed) {
  if (n_per_class < 10) throw DataError("need at least 10 samples per class");
  if (total_dims < 2) throw DataError("xor needs at least two dimensions");
  Rng rng(mix_seed(seed, 0x0B));
  RealGrid x(2 * n_per_class, total_dims);
  std::vector<int> y(2 * n_per_class);
  for (int i = 0; i < 2 * n_per_class; ++i) {
    const int label = i < n_per_class ? 0 : 1;
    y[i] = label;
    // label 1 -> same signs, label 0 -> opposite signs
    const double s0 = rng.next_u64() & 1 ? 1.0 : -1.0;
    const double s1 = label == 1 ? s0 : -s0;
    x.at(i, 0) = s0 + 0.3 * rng.next_normal();
    x.at(i, 1) = s1 + 0.3 * rng.next_normal();
    for (int d = 2; d < total_dims; ++d) x.at(i, d) = rng.next_normal();
  }
  return {std::move(x), std::move(y)};
}

}  // namespace fplive
