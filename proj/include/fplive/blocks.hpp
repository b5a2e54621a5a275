#pragma once

// Block-level ridge-valley machinery: foreground segmentation, ridge-flow
// orientation from the gradient covariance, rotation-normalized block
// extraction (ridge structure made vertical), regression-plane binarization
// and aligned ridge/valley width profiles.

#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fplive/common.hpp"
#include "fplive/image.hpp"

namespace fplive {

struct BlockSpec {
  int block_size = 32;      // square analysis tile, px
  int oriented_width = 16;  // rotated sub-block, across the ridge flow
  int oriented_height = 32; // rotated sub-block, along the ridge flow
  double fg_variance_threshold = 100.0;  // intensity variance (std >= 10 gray levels)

  void validate() const {
    if (block_size < 16) throw DataError("block_size must be >= 16");
    if (oriented_width < 4 || oriented_height < 4)
      throw DataError("oriented block dimensions must be >= 4");
    // The rotated rectangle has to fit inside the sampling disc.
    if (std::hypot(static_cast<double>(oriented_width), static_cast<double>(oriented_height)) >
        2.0 * block_size)
      throw DataError("oriented block diagonal exceeds the sampling disc");
  }

  // Radius of the disc of source pixels any rotation of the oriented
  // rectangle can touch, plus one pixel of bilinear margin.
  double sampling_radius() const {
    return 0.5 * std::hypot(oriented_width - 1.0, oriented_height - 1.0) + 1.0;
  }
};

struct BlockCenter {
  double x = 0.0;
  double y = 0.0;
};

struct OrientedBlock {
  RealGrid pixels;      // oriented_height x oriented_width, ridge flow vertical
  double angle = 0.0;   // source ridge-flow direction in [0, pi)
  BlockCenter center;
};

struct BinaryBlock {
  BoolGrid mask;            // true = ridge pixel (dark phase)
  double threshold = 0.0;   // fitted plane evaluated at the block centroid
};

struct ProfileRow {
  int source_row = 0;       // row in the oriented block
  int start_col = 0;        // first column of the first interior run
  bool starts_with_ridge = false;
};

// Aligned width matrices: rw is valid_rows x |R|, vw is valid_rows x |V|.
// Only rows whose interior (ridge count, valley count) equals the block's
// modal counts are retained, which is what makes the matrices rectangular.
struct RidgeValleyProfile {
  IntGrid rw;
  IntGrid vw;
  int valid_rows = 0;
  std::vector<ProfileRow> rows;  // metadata per retained row

  int ridge_count() const { return rw.cols; }
  int valley_count() const { return vw.cols; }

  long long width_sum() const {
    long long s = 0;
    for (const int w : rw.data) s += w;
    for (const int w : vw.data) s += w;
    return s;
  }
};

// ---------------------------------------------------------------------------
// Foreground segmentation: non-overlapping tiles whose intensity variance
// exceeds the threshold. Centers use the pixel-center convention.
// ---------------------------------------------------------------------------

inline std::vector<BlockCenter> segment_foreground(const IntensityGrid& grid,
                                                   const BlockSpec& spec) {
  spec.validate();
  if (!grid.valid()) throw DataError("invalid grid");
  const int b = spec.block_size;
  if (grid.width < b || grid.height < b)
    throw DataError("grid smaller than one block");
  std::vector<BlockCenter> centers;
  for (int y0 = 0; y0 + b <= grid.height; y0 += b) {
    for (int x0 = 0; x0 + b <= grid.width; x0 += b) {
      double sum = 0.0, sum_sq = 0.0;
      for (int r = y0; r < y0 + b; ++r) {
        for (int c = x0; c < x0 + b; ++c) {
          const double v = grid.at(r, c);
          sum += v;
          sum_sq += v * v;
        }
      }
      const double n = static_cast<double>(b) * b;
      const double mean = sum / n;
      const double var = sum_sq / n - mean * mean;
      if (var > spec.fg_variance_threshold)
        centers.push_back({x0 + (b - 1) / 2.0, y0 + (b - 1) / 2.0});
    }
  }
  return centers;
}

// ---------------------------------------------------------------------------
// Orientation: theta = 1/2 atan2(2c, a-b) + pi/2 over the gradient covariance
// a = mean(dx^2), b = mean(dy^2), c = mean(dx*dy). Returns the ridge-flow
// direction in [0, pi); nullopt when the block has no gradient energy.
// ---------------------------------------------------------------------------

inline std::optional<double> estimate_orientation(const IntensityGrid& grid,
                                                  BlockCenter center,
                                                  const BlockSpec& spec) {
  const int b = spec.block_size;
  const int x0 = static_cast<int>(std::lround(center.x - (b - 1) / 2.0));
  const int y0 = static_cast<int>(std::lround(center.y - (b - 1) / 2.0));
  if (x0 < 0 || y0 < 0 || x0 + b > grid.width || y0 + b > grid.height)
    throw DataError("orientation block not fully inside grid");

  double a = 0.0, bb = 0.0, c = 0.0;
  int n = 0;
  for (int r = y0 + 1; r < y0 + b - 1; ++r) {
    for (int col = x0 + 1; col < x0 + b - 1; ++col) {
      const double dx = 0.5 * (grid.at(r, col + 1) - grid.at(r, col - 1));
      const double dy = 0.5 * (grid.at(r + 1, col) - grid.at(r - 1, col));
      a += dx * dx;
      bb += dy * dy;
      c += dx * dy;
      ++n;
    }
  }
  a /= n;
  bb /= n;
  c /= n;
  if (a + bb <= 1e-12) return std::nullopt;
  double theta = 0.5 * std::atan2(2.0 * c, a - bb) + kPi / 2.0;
  if (theta >= kPi) theta -= kPi;
  if (theta < 0.0) theta += kPi;
  return theta;
}

// ---------------------------------------------------------------------------
// Oriented block extraction: bilinear resampling under rotation by
// (pi/2 - angle) about the center, so that ridge flow comes out vertical.
// Blocks whose sampling disc leaves the grid are skipped (nullopt).
// ---------------------------------------------------------------------------

inline std::optional<OrientedBlock> extract_oriented_block(const IntensityGrid& grid,
                                                           BlockCenter center,
                                                           double angle,
                                                           const BlockSpec& spec) {
  const double r = spec.sampling_radius();
  if (center.x - r < 0.0 || center.x + r > grid.width - 1 ||
      center.y - r < 0.0 || center.y + r > grid.height - 1)
    return std::nullopt;

  const int ow = spec.oriented_width, oh = spec.oriented_height;
  // Output (0,1) axis maps to the ridge direction (cos angle, sin angle).
  const double ca = std::cos(angle - kPi / 2.0);
  const double sa = std::sin(angle - kPi / 2.0);
  OrientedBlock block;
  block.pixels = RealGrid(oh, ow);
  block.angle = angle;
  block.center = center;
  for (int v = 0; v < oh; ++v) {
    const double dv = v - (oh - 1) / 2.0;
    for (int u = 0; u < ow; ++u) {
      const double du = u - (ow - 1) / 2.0;
      const double sx = center.x + du * ca - dv * sa;
      const double sy = center.y + du * sa + dv * ca;
      const int ix = static_cast<int>(std::floor(sx));
      const int iy = static_cast<int>(std::floor(sy));
      const double fx = sx - ix;
      const double fy = sy - iy;
      const double p00 = grid.at(iy, ix), p01 = grid.at(iy, ix + 1);
      const double p10 = grid.at(iy + 1, ix), p11 = grid.at(iy + 1, ix + 1);
      block.pixels.at(v, u) = (1 - fy) * ((1 - fx) * p00 + fx * p01) +
                              fy * ((1 - fx) * p10 + fx * p11);
    }
  }
  return block;
}

// ---------------------------------------------------------------------------
// Binarization by linear regression: fit intensity = plane(row, col) by least
// squares and mark pixels below the fitted value as ridge. The plane absorbs
// uniform illumination ramps, so the mask is invariant to affine intensity
// transforms with positive scale.
// ---------------------------------------------------------------------------

inline BinaryBlock binarize(const OrientedBlock& block) {
  const RealGrid& px = block.pixels;
  const int h = px.rows, w = px.cols;
  const double rc = (h - 1) / 2.0, cc = (w - 1) / 2.0;
  double sum = 0.0, src = 0.0, scc = 0.0, srr = 0.0, sccsq = 0.0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double v = px.at(r, c);
      sum += v;
      src += v * (r - rc);
      scc += v * (c - cc);
      srr += (r - rc) * (r - rc);
      sccsq += (c - cc) * (c - cc);
    }
  }
  const double n = static_cast<double>(h) * w;
  const double mean = sum / n;
  double var = 0.0;
  for (const double v : px.data) var += (v - mean) * (v - mean);
  if (var <= 1e-12) throw DataError("degenerate block");
  // Centered coordinates make the normal equations diagonal; srr and sccsq
  // are already summed over every pixel.
  const double beta_r = src / srr;
  const double beta_c = scc / sccsq;
  BinaryBlock bin;
  bin.mask = BoolGrid(h, w, 0);
  bin.threshold = mean;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double fitted = mean + beta_r * (r - rc) + beta_c * (c - cc);
      bin.mask.at(r, c) = px.at(r, c) < fitted ? 1 : 0;
    }
  }
  return bin;
}

// ---------------------------------------------------------------------------
// Run-length profile. Per row the mask is run-length encoded, runs touching
// the left/right border are dropped (their true width is unobservable), and
// rows whose interior (ridge count, valley count) matches the block's modal
// counts are aligned into the rw/vw matrices.
// ---------------------------------------------------------------------------

namespace detail {

struct RowRuns {
  int start_col = 0;        // first column of the first interior run
  bool starts_with_ridge = false;
  std::vector<int> ridge_widths;
  std::vector<int> valley_widths;
};

inline RowRuns interior_runs(const BoolGrid& mask, int row) {
  RowRuns out;
  std::vector<std::pair<bool, int>> runs;  // (is_ridge, width)
  std::vector<int> starts;
  int col = 0;
  while (col < mask.cols) {
    const bool ridge = mask.at(row, col) != 0;
    int end = col;
    while (end < mask.cols && (mask.at(row, end) != 0) == ridge) ++end;
    runs.emplace_back(ridge, end - col);
    starts.push_back(col);
    col = end;
  }
  if (runs.size() <= 2) return out;  // nothing interior
  out.start_col = starts[1];
  out.starts_with_ridge = runs[1].first;
  for (std::size_t i = 1; i + 1 < runs.size(); ++i) {
    if (runs[i].first)
      out.ridge_widths.push_back(runs[i].second);
    else
      out.valley_widths.push_back(runs[i].second);
  }
  return out;
}

}  // namespace detail

inline RidgeValleyProfile run_length_profile(const BinaryBlock& bin) {
  const BoolGrid& mask = bin.mask;
  if (mask.empty()) throw DataError("empty mask");

  std::vector<detail::RowRuns> per_row(mask.rows);
  std::map<std::pair<int, int>, int> count_freq;
  for (int r = 0; r < mask.rows; ++r) {
    per_row[r] = detail::interior_runs(mask, r);
    ++count_freq[{static_cast<int>(per_row[r].ridge_widths.size()),
                  static_cast<int>(per_row[r].valley_widths.size())}];
  }
  // Modal (|R|,|V|); frequency ties resolved toward the richer structure.
  std::pair<int, int> modal{0, 0};
  int best_freq = -1;
  for (const auto& [counts, freq] : count_freq) {
    if (freq > best_freq || (freq == best_freq && counts > modal)) {
      best_freq = freq;
      modal = counts;
    }
  }
  if (modal.first == 0) throw DataError("unprofilable block (no interior ridges)");

  RidgeValleyProfile profile;
  for (int r = 0; r < mask.rows; ++r) {
    const auto& row = per_row[r];
    if (static_cast<int>(row.ridge_widths.size()) != modal.first ||
        static_cast<int>(row.valley_widths.size()) != modal.second)
      continue;
    profile.rows.push_back({r, row.start_col, row.starts_with_ridge});
  }
  profile.valid_rows = static_cast<int>(profile.rows.size());
  if (profile.valid_rows < 2) throw DataError("unprofilable block (fewer than 2 aligned rows)");

  profile.rw = IntGrid(profile.valid_rows, modal.first);
  profile.vw = IntGrid(profile.valid_rows, modal.second);
  for (int i = 0; i < profile.valid_rows; ++i) {
    const auto& row = per_row[profile.rows[i].source_row];
    for (int j = 0; j < modal.first; ++j) profile.rw.at(i, j) = row.ridge_widths[j];
    for (int j = 0; j < modal.second; ++j) profile.vw.at(i, j) = row.valley_widths[j];
  }
  return profile;
}

// Debug dump: one line per retained row, row index then ridge widths then
// valley widths, tab separated.
inline std::string profile_dump(const RidgeValleyProfile& p) {
  std::ostringstream out;
  out << "# row\trw[1.." << p.ridge_count() << "]\tvw[1.." << p.valley_count() << "]\n";
  for (int i = 0; i < p.valid_rows; ++i) {
    out << p.rows[i].source_row;
    for (int j = 0; j < p.rw.cols; ++j) out << "\t" << p.rw.at(i, j);
    for (int j = 0; j < p.vw.cols; ++j) out << "\t" << p.vw.at(i, j);
    out << "\n";
  }
  return out.str();
}

}  // namespace fplive
