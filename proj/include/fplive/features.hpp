#pragma once

// Local quality features per block and their aggregation into the
// 13-dimensional quality vector:
//
//   slot  0..4   RWS^mu  VWS^mu  RVC^mu  FDA^mu  OCL^mu
//   slot  5..9   RWS^sd  VWS^sd  RVC^sd  FDA^sd  OCL^sd
//   slot 10..12  Rab^mu  Vab^mu  G^mu
//
// Width smoothness uses the population deviation inside a block; the
// cross-block sd slots use the sample deviation (1/(N*M-1)). Both are kept
// as-is even though the two conventions differ.

#include <array>
#include <cmath>
#include <complex>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fplive/blocks.hpp"
#include "fplive/common.hpp"
#include "fplive/image.hpp"
#include "fplive/manifest.hpp"

namespace fplive {

inline constexpr double kAbnormalWidthThreshold = 1.03;

struct GaborBankSpec {
  int orientations = 8;
  double wavelength = 8.0;  // px, matched to the 5-10 px ridge width prior at 500 dpi
  double sigma = 4.0;       // Gaussian envelope scale, px

  void validate() const {
    if (orientations < 4) throw DataError("gabor bank needs >= 4 orientations");
    if (wavelength < 2.0 || wavelength > 40.0)
      throw DataError("gabor wavelength outside the ridge period prior");
    if (sigma <= 0.0) throw DataError("gabor sigma must be positive");
  }

  int kernel_radius() const { return static_cast<int>(std::ceil(1.5 * sigma)); }
};

// Per-block feature values. Profile-dependent entries are absent when the
// block could not be binarized/profiled; FDA/OCL/Gabor stand on their own.
struct LocalFeatureSet {
  std::optional<double> rws, vws, rvc;
  std::optional<int> r_ab, v_ab;
  std::optional<double> fda, ocl, gabor;
};

inline constexpr std::array<const char*, 13> kQualitySlotNames = {
    "RWSmu", "VWSmu", "RVCmu", "FDAmu", "OCLmu",
    "RWSsd", "VWSsd", "RVCsd", "FDAsd", "OCLsd",
    "Rabmu", "Vabmu", "Gmu"};

struct QualityVector {
  std::array<double, 13> values{};

  double operator[](std::size_t i) const { return values[i]; }
};

// ---------------------------------------------------------------------------
// Width smoothness: mean over ridge (valley) columns of the population
// standard deviation of that column's widths across the retained rows.
// ---------------------------------------------------------------------------

namespace detail {

inline double column_population_std(const IntGrid& m, int col) {
  const int n = m.rows;
  double mean = 0.0;
  for (int r = 0; r < n; ++r) mean += m.at(r, col);
  mean /= n;
  double acc = 0.0;
  for (int r = 0; r < n; ++r) {
    const double d = m.at(r, col) - mean;
    acc += d * d;
  }
  return std::sqrt(acc / n);
}

inline double width_smoothness(const IntGrid& m) {
  double acc = 0.0;
  for (int c = 0; c < m.cols; ++c) acc += column_population_std(m, c);
  return acc / m.cols;
}

}  // namespace detail

inline double rws(const RidgeValleyProfile& p) {
  if (p.rw.cols < 1 || p.valid_rows < 2) throw DataError("unprofilable");
  return detail::width_smoothness(p.rw);
}

inline double vws(const RidgeValleyProfile& p) {
  if (p.vw.cols < 1 || p.valid_rows < 2) throw DataError("unprofilable");
  return detail::width_smoothness(p.vw);
}

// Number of ridge/valley columns whose width deviation exceeds t_w.
inline std::pair<int, int> abnormal_counts(const RidgeValleyProfile& p,
                                           double t_w = kAbnormalWidthThreshold) {
  if (p.rw.cols < 1 || p.valid_rows < 2) throw DataError("unprofilable");
  int r_ab = 0, v_ab = 0;
  for (int c = 0; c < p.rw.cols; ++c)
    if (detail::column_population_std(p.rw, c) > t_w) ++r_ab;
  for (int c = 0; c < p.vw.cols; ++c)
    if (detail::column_population_std(p.vw, c) > t_w) ++v_ab;
  return {r_ab, v_ab};
}

// ---------------------------------------------------------------------------
// Ridge-valley clarity: lay nominal spans (average ridge / valley width, in
// each retained row's own run order) over the row and count mask pixels whose
// class disagrees with the span they fall in, normalized by the total number
// of profiled ridge+valley pixels.
// ---------------------------------------------------------------------------

inline double rvc(const BinaryBlock& bin, const RidgeValleyProfile& profile) {
  if (profile.valid_rows < 2 || profile.rw.cols < 1) throw DataError("unprofilable");
  double ridge_nominal = 0.0;
  for (const int w : profile.rw.data) ridge_nominal += w;
  ridge_nominal /= profile.rw.data.size();
  double valley_nominal = 0.0;
  if (!profile.vw.data.empty()) {
    for (const int w : profile.vw.data) valley_nominal += w;
    valley_nominal /= profile.vw.data.size();
  }

  const int runs_per_row = profile.ridge_count() + profile.valley_count();
  long long misclassified = 0;
  for (int i = 0; i < profile.valid_rows; ++i) {
    const ProfileRow& row = profile.rows[i];
    long long row_width = 0;
    for (int j = 0; j < profile.rw.cols; ++j) row_width += profile.rw.at(i, j);
    for (int j = 0; j < profile.vw.cols; ++j) row_width += profile.vw.at(i, j);

    // Cumulative nominal boundaries in this row's run order.
    std::vector<double> bounds(runs_per_row + 1, 0.0);
    std::vector<bool> is_ridge(runs_per_row);
    bool ridge_run = row.starts_with_ridge;
    for (int k = 0; k < runs_per_row; ++k, ridge_run = !ridge_run) {
      is_ridge[k] = ridge_run;
      bounds[k + 1] = bounds[k] + (ridge_run ? ridge_nominal : valley_nominal);
    }
    int k = 0;
    for (long long x = row.start_col; x < row.start_col + row_width; ++x) {
      const double pos = static_cast<double>(x - row.start_col) + 0.5;
      while (k + 1 < runs_per_row && pos >= bounds[k + 1]) ++k;
      const bool actual = bin.mask.at(row.source_row, static_cast<int>(x)) != 0;
      if (actual != is_ridge[k]) ++misclassified;
    }
  }
  return static_cast<double>(misclassified) / static_cast<double>(profile.width_sum());
}

// ---------------------------------------------------------------------------
// Frequency domain analysis: the 1-D signature of the ridge-valley structure
// is the mean intensity of each line along the ridge flow, indexed across the
// stack (for a flow-vertical block that is the column-mean sequence). DFT of
// the signature; concentration of amplitude around the dominant non-DC
// frequency, lower neighbor attenuated by C = 0.3. Boundary dominant
// frequencies score 1.
// ---------------------------------------------------------------------------

inline double fda_signature(const std::vector<double>& signature) {
  const int n = static_cast<int>(signature.size());
  if (n < 8) throw DataError("too-short signature for FDA");
  const int last = n / 2;
  std::vector<double> amp(last + 1, 0.0);
  for (int f = 1; f <= last; ++f) {
    std::complex<double> acc(0.0, 0.0);
    for (int k = 0; k < n; ++k) {
      const double phase = -2.0 * kPi * f * k / n;
      acc += signature[k] * std::complex<double>(std::cos(phase), std::sin(phase));
    }
    amp[f] = std::abs(acc);
  }
  int f_max = 1;
  for (int f = 2; f <= last; ++f)
    if (amp[f] > amp[f_max]) f_max = f;
  if (f_max == 1 || f_max == last) return 1.0;
  double total = 0.0;
  for (int f = 1; f <= last; ++f) total += amp[f];
  constexpr double kNeighborWeight = 0.3;
  return (amp[f_max] + kNeighborWeight * amp[f_max - 1] + amp[f_max + 1]) / total;
}

inline double fda(const OrientedBlock& block) {
  const int n = block.pixels.cols;
  if (n < 8) throw DataError("too-short signature for FDA");
  std::vector<double> signature(n, 0.0);
  for (int c = 0; c < n; ++c) {
    double s = 0.0;
    for (int r = 0; r < block.pixels.rows; ++r) s += block.pixels.at(r, c);
    signature[c] = s / block.pixels.rows;
  }
  return fda_signature(signature);
}

// ---------------------------------------------------------------------------
// Orientation certainty level: 1 - lambda_min/lambda_max of the gradient
// covariance [a c; c b], zero when the block carries no gradient energy.
// ---------------------------------------------------------------------------

inline double ocl_from_covariance(double a, double b, double c) {
  const double disc = std::sqrt((a - b) * (a - b) + 4.0 * c * c);
  const double lambda_max = 0.5 * (a + b + disc);
  if (lambda_max <= 0.0) return 0.0;
  const double lambda_min = 0.5 * (a + b - disc);
  return 1.0 - lambda_min / lambda_max;
}

inline double ocl(const OrientedBlock& block) {
  const RealGrid& px = block.pixels;
  if (px.rows < 3 || px.cols < 3) throw DataError("block too small for OCL");
  double a = 0.0, b = 0.0, c = 0.0;
  int n = 0;
  for (int r = 1; r + 1 < px.rows; ++r) {
    for (int col = 1; col + 1 < px.cols; ++col) {
      const double dx = 0.5 * (px.at(r, col + 1) - px.at(r, col - 1));
      const double dy = 0.5 * (px.at(r + 1, col) - px.at(r - 1, col));
      a += dx * dx;
      b += dy * dy;
      c += dx * dy;
      ++n;
    }
  }
  return ocl_from_covariance(a / n, b / n, c / n);
}

// ---------------------------------------------------------------------------
// Gabor quality: per-pixel magnitude responses to a zero-mean oriented Gabor
// bank; the block value is the mean over pixels of the per-pixel standard
// deviation across orientations. Responses are evaluated only where the
// kernel fits entirely inside the block.
// ---------------------------------------------------------------------------

inline double gabor_quality(const OrientedBlock& block, const GaborBankSpec& bank) {
  bank.validate();
  const RealGrid& px = block.pixels;
  const int rad = bank.kernel_radius();
  const int size = 2 * rad + 1;
  if (px.rows < size || px.cols < size)
    throw DataError("block smaller than gabor filter support");

  const int k_count = bank.orientations;
  std::vector<RealGrid> kre(k_count, RealGrid(size, size));
  std::vector<RealGrid> kim(k_count, RealGrid(size, size));
  for (int k = 0; k < k_count; ++k) {
    const double theta = kPi * k / k_count;
    const double ct = std::cos(theta), st = std::sin(theta);
    double mre = 0.0, mim = 0.0;
    for (int dy = -rad; dy <= rad; ++dy) {
      for (int dx = -rad; dx <= rad; ++dx) {
        const double xr = dx * ct + dy * st;
        const double env = std::exp(-(dx * dx + dy * dy) / (2.0 * bank.sigma * bank.sigma));
        const double phase = 2.0 * kPi * xr / bank.wavelength;
        kre[k].at(dy + rad, dx + rad) = env * std::cos(phase);
        kim[k].at(dy + rad, dx + rad) = env * std::sin(phase);
        mre += kre[k].at(dy + rad, dx + rad);
        mim += kim[k].at(dy + rad, dx + rad);
      }
    }
    // Zero-mean kernels: constant blocks produce exactly zero response.
    const double nk = static_cast<double>(size) * size;
    for (auto& v : kre[k].data) v -= mre / nk;
    for (auto& v : kim[k].data) v -= mim / nk;
  }

  double acc = 0.0;
  int count = 0;
  std::vector<double> mags(k_count);
  for (int r = rad; r + rad < px.rows; ++r) {
    for (int c = rad; c + rad < px.cols; ++c) {
      for (int k = 0; k < k_count; ++k) {
        double re = 0.0, im = 0.0;
        for (int dy = -rad; dy <= rad; ++dy) {
          for (int dx = -rad; dx <= rad; ++dx) {
            const double v = px.at(r + dy, c + dx);
            re += v * kre[k].at(dy + rad, dx + rad);
            im += v * kim[k].at(dy + rad, dx + rad);
          }
        }
        mags[k] = std::hypot(re, im);
      }
      double mean = 0.0;
      for (const double m : mags) mean += m;
      mean /= k_count;
      double var = 0.0;
      for (const double m : mags) var += (m - mean) * (m - mean);
      acc += std::sqrt(var / k_count);
      ++count;
    }
  }
  return acc / count;
}

// ---------------------------------------------------------------------------
// Aggregation across blocks. Each feature aggregates over its own valid-block
// set; mean slots for all eight features, sample-deviation slots for the five
// smoothness/clarity/frequency/orientation features.
// ---------------------------------------------------------------------------

namespace detail {

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (const double x : v) s += x;
  return s / v.size();
}

inline double sample_std_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double acc = 0.0;
  for (const double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / (v.size() - 1));
}

}  // namespace detail

inline QualityVector aggregate(const std::vector<LocalFeatureSet>& locals) {
  std::array<std::vector<double>, 8> pools;  // rws vws rvc fda ocl rab vab gabor
  for (const auto& f : locals) {
    if (f.rws) pools[0].push_back(*f.rws);
    if (f.vws) pools[1].push_back(*f.vws);
    if (f.rvc) pools[2].push_back(*f.rvc);
    if (f.fda) pools[3].push_back(*f.fda);
    if (f.ocl) pools[4].push_back(*f.ocl);
    if (f.r_ab) pools[5].push_back(static_cast<double>(*f.r_ab));
    if (f.v_ab) pools[6].push_back(static_cast<double>(*f.v_ab));
    if (f.gabor) pools[7].push_back(*f.gabor);
  }
  for (std::size_t i = 0; i < pools.size(); ++i) {
    if (pools[i].size() < 2)
      throw DataError("insufficient foreground (feature pool " + std::to_string(i) +
                      " has " + std::to_string(pools[i].size()) + " blocks)");
    // fixed reduction order: aggregation is exactly block-order invariant
    std::sort(pools[i].begin(), pools[i].end());
  }
  QualityVector q;
  q.values[0] = detail::mean_of(pools[0]);
  q.values[1] = detail::mean_of(pools[1]);
  q.values[2] = detail::mean_of(pools[2]);
  q.values[3] = detail::mean_of(pools[3]);
  q.values[4] = detail::mean_of(pools[4]);
  q.values[5] = detail::sample_std_of(pools[0]);
  q.values[6] = detail::sample_std_of(pools[1]);
  q.values[7] = detail::sample_std_of(pools[2]);
  q.values[8] = detail::sample_std_of(pools[3]);
  q.values[9] = detail::sample_std_of(pools[4]);
  q.values[10] = detail::mean_of(pools[5]);
  q.values[11] = detail::mean_of(pools[6]);
  q.values[12] = detail::mean_of(pools[7]);
  return q;
}

// ---------------------------------------------------------------------------
// Whole-image extraction: segment -> orient -> rotate -> binarize -> profile
// -> features -> aggregate. Blocks failing a stage drop out of the affected
// feature pools; the reasons are tallied.
// ---------------------------------------------------------------------------

struct BlockFeatures {
  BlockCenter center;
  double angle = 0.0;
  LocalFeatureSet features;
  std::optional<RidgeValleyProfile> profile;
};

struct ImageFeatures {
  QualityVector q;
  std::vector<BlockFeatures> blocks;
  std::map<std::string, int> exclusions;

  std::string exclusion_note() const {
    std::string note = "blocks=" + std::to_string(blocks.size());
    if (!exclusions.empty()) {
      note += " excl=";
      bool first = true;
      for (const auto& [reason, n] : exclusions) {
        if (!first) note += ",";
        note += reason + ":" + std::to_string(n);
        first = false;
      }
    }
    return note;
  }
};

inline ImageFeatures extract_all(const IntensityGrid& grid, const BlockSpec& spec = {},
                                 const GaborBankSpec& bank = {}) {
  bank.validate();
  ImageFeatures out;
  const auto centers = segment_foreground(grid, spec);
  if (centers.empty()) throw DataError("insufficient foreground (no blocks)");

  for (const BlockCenter& center : centers) {
    const auto angle = estimate_orientation(grid, center, spec);
    if (!angle) {
      ++out.exclusions["no-orientation"];
      continue;
    }
    auto oriented = extract_oriented_block(grid, center, *angle, spec);
    if (!oriented) {
      ++out.exclusions["edge"];
      continue;
    }
    BlockFeatures bf;
    bf.center = center;
    bf.angle = *angle;
    bf.features.ocl = ocl(*oriented);
    if (oriented->pixels.cols >= 8) bf.features.fda = fda(*oriented);
    if (oriented->pixels.rows >= 2 * bank.kernel_radius() + 1 &&
        oriented->pixels.cols >= 2 * bank.kernel_radius() + 1)
      bf.features.gabor = gabor_quality(*oriented, bank);

    try {
      const BinaryBlock bin = binarize(*oriented);
      const RidgeValleyProfile profile = run_length_profile(bin);
      bf.features.rws = rws(profile);
      if (profile.valley_count() >= 1) bf.features.vws = vws(profile);
      const auto [r_ab, v_ab] = abnormal_counts(profile);
      bf.features.r_ab = r_ab;
      bf.features.v_ab = v_ab;
      bf.features.rvc = rvc(bin, profile);
      bf.profile = profile;
    } catch (const DataError& e) {
      const std::string what = e.what();
      ++out.exclusions[what.find("degenerate") != std::string::npos ? "degenerate"
                                                                    : "unprofilable"];
    }
    out.blocks.push_back(std::move(bf));
  }
  std::vector<LocalFeatureSet> locals;
  locals.reserve(out.blocks.size());
  for (const auto& b : out.blocks) locals.push_back(b.features);
  out.q = aggregate(locals);
  return out;
}

// ---------------------------------------------------------------------------
// Feature file: the interchange format between extract, select, train and
// eval. One tab-separated line per image: path, label, material (- if none),
// sensor, split, the 13 feature values, then a '#' note with per-stage
// exclusion tallies.
// ---------------------------------------------------------------------------

struct FeatureRecord {
  std::string path;
  Label label = Label::Live;
  std::string material;
  std::string sensor;
  Split split = Split::Train;
  QualityVector q;
  std::string note;
};

inline std::string feature_file_header() {
  std::string h = "# path\tlabel\tmaterial\tsensor\tsplit";
  for (const char* name : kQualitySlotNames) h += std::string("\t") + name;
  h += "\tnotes\n";
  return h;
}

inline std::string encode_feature_line(const FeatureRecord& r) {
  std::string line = r.path + "\t" + to_string(r.label) + "\t" +
                     (r.material.empty() ? "-" : r.material) + "\t" + r.sensor +
                     "\t" + to_string(r.split);
  for (const double v : r.q.values) line += "\t" + format_g17(v);
  line += "\t# " + (r.note.empty() ? std::string("ok") : r.note) + "\n";
  return line;
}

inline void save_feature_file(const std::vector<FeatureRecord>& records,
                              const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path + ": cannot open for writing");
  out << feature_file_header();
  for (const auto& r : records) out << encode_feature_line(r);
}

inline std::vector<FeatureRecord> load_feature_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": unreadable feature file");
  std::vector<FeatureRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_tabs(line);
    if (f.size() < 18) throw DataError(path + ": malformed feature line '" + line + "'");
    FeatureRecord r;
    r.path = f[0];
    r.label = parse_label(f[1]);
    r.material = f[2] == "-" ? "" : f[2];
    r.sensor = f[3];
    r.split = parse_split(f[4]);
    for (int i = 0; i < 13; ++i) r.q.values[i] = parse_double(f[5 + i]);
    if (f.size() > 18 && f[18].size() > 2 && f[18][0] == '#') r.note = f[18].substr(2);
    records.push_back(std::move(r));
  }
  if (records.empty()) throw DataError(path + ": empty feature file");
  return records;
}

// Feature matrix view used by selection and the forest: rows are samples in
// file order, labels are 1 for Live and 0 for Fake.
inline std::pair<RealGrid, std::vector<int>> feature_matrix(
    const std::vector<FeatureRecord>& records) {
  RealGrid x(static_cast<int>(records.size()), 13);
  std::vector<int> y(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (int j = 0; j < 13; ++j) x.at(static_cast<int>(i), j) = records[i].q[j];
    y[i] = records[i].label == Label::Live ? 1 : 0;
  }
  return {std::move(x), std::move(y)};
}

}  // namespace fplive
