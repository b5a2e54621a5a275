#pragma once

// LivDet-style metrics: Ferrlive / Ferrfake / ACE at a threshold, per-material
// breakdowns, and the 0.00..1.00 step-0.01 threshold sweep with its EER and
// best-ACE operating points. The decision rule is fake at score <= t, so
// Ferrlive is non-decreasing and Ferrfake non-increasing in t, exactly.

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fplive/common.hpp"
#include "fplive/manifest.hpp"

namespace fplive {

struct ScoredSample {
  std::string path;
  double score = 0.0;  // probability of live
  Label label = Label::Live;
  std::string material;  // empty for live samples
  std::string sensor;
};

struct ErrorRates {
  double ferrlive = 0.0;  // % of live samples scored <= t
  double ferrfake = 0.0;  // % of fake samples scored  > t
};

inline double ace(double ferrlive, double ferrfake) {
  if (ferrlive < 0 || ferrlive > 100 || ferrfake < 0 || ferrfake > 100)
    throw DataError("error rates must be percentages in [0,100]");
  return 0.5 * (ferrlive + ferrfake);
}

inline ErrorRates ferr_rates(const std::vector<ScoredSample>& samples, double threshold) {
  long long live = 0, fake = 0, live_err = 0, fake_err = 0;
  for (const auto& s : samples) {
    if (s.label == Label::Live) {
      ++live;
      if (s.score <= threshold) ++live_err;
    } else {
      ++fake;
      if (s.score > threshold) ++fake_err;
    }
  }
  if (live == 0 || fake == 0) throw DataError("need at least one live and one fake sample");
  return {100.0 * live_err / live, 100.0 * fake_err / fake};
}

// Per-material Ferrfake at a threshold; fakes without a material tag group
// under "unknown". The overall rate pools every fake sample (count-weighted).
inline std::map<std::string, double> ferrfake_by_material(
    const std::vector<ScoredSample>& samples, double threshold) {
  std::map<std::string, std::pair<long long, long long>> counts;  // material -> (errors, total)
  for (const auto& s : samples) {
    if (s.label != Label::Fake) continue;
    auto& [err, total] = counts[s.material.empty() ? "unknown" : s.material];
    ++total;
    if (s.score > threshold) ++err;
  }
  std::map<std::string, double> rates;
  for (const auto& [mat, c] : counts) rates[mat] = 100.0 * c.first / c.second;
  return rates;
}

// ---------------------------------------------------------------------------
// Threshold sweep: 101 grid points, t = i/100.
// ---------------------------------------------------------------------------

struct SweepPoint {
  double threshold = 0.0;
  double ferrlive = 0.0;
  double ferrfake = 0.0;
  double ace_value = 0.0;
};

struct SweepCurve {
  std::vector<SweepPoint> points;  // exactly 101
};

inline SweepCurve threshold_sweep(const std::vector<ScoredSample>& samples) {
  SweepCurve curve;
  curve.points.reserve(101);
  for (int i = 0; i <= 100; ++i) {
    const double t = i / 100.0;
    const ErrorRates r = ferr_rates(samples, t);
    curve.points.push_back({t, r.ferrlive, r.ferrfake, ace(r.ferrlive, r.ferrfake)});
  }
  return curve;
}

/// Grid point minimizing |Ferrlive - Ferrfake|; ties go to the lower
/// threshold. The reported EER is the mean of the two rates there.
inline std::pair<double, double> eer_point(const SweepCurve& curve) {
  if (curve.points.size() != 101) throw DataError("sweep curve must have 101 points");
  std::size_t best = 0;
  double best_gap = std::abs(curve.points[0].ferrlive - curve.points[0].ferrfake);
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const double gap = std::abs(curve.points[i].ferrlive - curve.points[i].ferrfake);
    if (gap < best_gap) {
      best_gap = gap;
      best = i;
    }
  }
  const auto& p = curve.points[best];
  return {p.threshold, 0.5 * (p.ferrlive + p.ferrfake)};
}

/// Grid argmin of ACE; ties go to the lower threshold.
inline std::pair<double, double> best_ace_point(const SweepCurve& curve) {
  if (curve.points.size() != 101) throw DataError("sweep curve must have 101 points");
  std::size_t best = 0;
  for (std::size_t i = 1; i < curve.points.size(); ++i)
    if (curve.points[i].ace_value < curve.points[best].ace_value) best = i;
  return {curve.points[best].threshold, curve.points[best].ace_value};
}

// ---------------------------------------------------------------------------
// Score file: one line per sample: path, label, material (- for none), score.
// ---------------------------------------------------------------------------

inline std::string encode_score_file(const std::vector<ScoredSample>& samples) {
  std::string out = "# path\tlabel\tmaterial\tsensor\tscore\n";
  for (const auto& s : samples)
    out += s.path + "\t" + to_string(s.label) + "\t" +
           (s.material.empty() ? "-" : s.material) + "\t" + s.sensor + "\t" +
           format_g17(s.score) + "\n";
  return out;
}

inline void save_score_file(const std::vector<ScoredSample>& samples, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path + ": cannot open for writing");
  out << encode_score_file(samples);
}

inline std::vector<ScoredSample> load_score_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": unreadable score file");
  std::vector<ScoredSample> samples;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_tabs(line);
    if (f.size() != 5) throw DataError(path + ": malformed score line '" + line + "'");
    ScoredSample s;
    s.path = f[0];
    s.label = parse_label(f[1]);
    s.material = f[2] == "-" ? "" : f[2];
    s.sensor = f[3];
    s.score = parse_double(f[4]);
    if (s.score < 0.0 || s.score > 1.0) throw DataError(path + ": score out of [0,1]");
    samples.push_back(std::move(s));
  }
  if (samples.empty()) throw DataError(path + ": empty score file");
  return samples;
}

// ---------------------------------------------------------------------------
// Evaluation report: per-sensor error rates at the LivDet threshold with the
// per-material Ferrfake breakdown, plus the best-ACE and EER operating points
// from the sweep.
// ---------------------------------------------------------------------------

struct SensorReport {
  std::string sensor;
  long long live_count = 0;
  long long fake_count = 0;
  double livdet_threshold = 0.5;
  ErrorRates at_livdet;
  std::map<std::string, double> material_ferrfake;
  double best_threshold = 0.0, best_ace = 0.0;
  double eer_threshold = 0.0, eer = 0.0;
  ErrorRates at_best;
  ErrorRates at_eer;
};

struct EvalReport {
  std::vector<SensorReport> sensors;  // sorted by sensor tag
};

inline EvalReport evaluate(const std::vector<ScoredSample>& samples,
                           double livdet_threshold = 0.5) {
  std::map<std::string, std::vector<ScoredSample>> by_sensor;
  for (const auto& s : samples) by_sensor[s.sensor].push_back(s);
  EvalReport report;
  for (const auto& [sensor, group] : by_sensor) {
    SensorReport r;
    r.sensor = sensor;
    for (const auto& s : group) (s.label == Label::Live ? r.live_count : r.fake_count)++;
    r.livdet_threshold = livdet_threshold;
    r.at_livdet = ferr_rates(group, livdet_threshold);
    r.material_ferrfake = ferrfake_by_material(group, livdet_threshold);
    const SweepCurve curve = threshold_sweep(group);
    std::tie(r.best_threshold, r.best_ace) = best_ace_point(curve);
    std::tie(r.eer_threshold, r.eer) = eer_point(curve);
    r.at_best = ferr_rates(group, r.best_threshold);
    r.at_eer = ferr_rates(group, r.eer_threshold);
    report.sensors.push_back(std::move(r));
  }
  return report;
}

inline std::string render_report(const EvalReport& report) {
  std::ostringstream out;
  out << "# fplive evaluation report\n";
  for (const auto& r : report.sensors) {
    out << "sensor: " << r.sensor << "\n";
    out << "  samples: live " << r.live_count << ", fake " << r.fake_count << "\n";
    out << "  Ferrfake by material at t=" << format_fixed(r.livdet_threshold, 2) << ":\n";
    for (const auto& [mat, rate] : r.material_ferrfake)
      out << "    " << mat << "\t" << format_fixed(rate, 2) << "\n";
    out << "  operating points      Best     EER      LivDet\n";
    const auto line = [&](const char* name, double best, double eer, double livdet) {
      out << "  " << name;
      for (std::size_t i = std::strlen(name); i < 20; ++i) out << ' ';
      out << format_fixed(best, 2) << "     " << format_fixed(eer, 2) << "     "
          << format_fixed(livdet, 2) << "\n";
    };
    line("Threshold", r.best_threshold, r.eer_threshold, r.livdet_threshold);
    line("ACE", r.best_ace, 0.5 * (r.at_eer.ferrlive + r.at_eer.ferrfake),
         ace(r.at_livdet.ferrlive, r.at_livdet.ferrfake));
    line("Ferrfake", r.at_best.ferrfake, r.at_eer.ferrfake, r.at_livdet.ferrfake);
    line("Ferrlive", r.at_best.ferrlive, r.at_eer.ferrlive, r.at_livdet.ferrlive);
  }
  return out.str();
}

// Sweep table: exactly 101 data lines (threshold, Ferrlive, Ferrfake, ACE).
inline std::string encode_sweep(const SweepCurve& curve) {
  std::string out;
  for (const auto& p : curve.points)
    out += format_fixed(p.threshold, 2) + "\t" + format_fixed(p.ferrlive, 6) + "\t" +
           format_fixed(p.ferrfake, 6) + "\t" + format_fixed(p.ace_value, 6) + "\n";
  return out;
}

}  // namespace fplive
