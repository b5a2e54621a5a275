#pragma once

// Sequential forward floating selection with a cross-validated forest
// objective, plus an exhaustive-search oracle for small dimensionalities.
// Tie-breaking is fixed (higher score, then the lexicographically lowest
// ascending index sequence, shorter prefixes first) so selected subsets are
// reproducible artifacts.

#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fplive/common.hpp"
#include "fplive/forest.hpp"

namespace fplive {

struct SelectionObjective {
  int folds = 5;
  std::uint64_t seed = 0;
  ForestParams forest;  // forest.seed is derived per fold, not used directly

  void validate() const {
    if (folds < 2) throw DataError("fold count must be >= 2");
    forest.validate();
  }
};

struct HistoryStep {
  int step = 0;
  bool added = true;  // false = removed
  int feature = -1;
  double score = 0.0;
};

struct FeatureSubset {
  std::vector<bool> mask;
  double score = 0.0;
  std::vector<HistoryStep> history;

  std::string mask_bits() const {
    std::string s;
    for (const bool b : mask) s += b ? '1' : '0';
    return s;
  }
  int size() const {
    int n = 0;
    for (const bool b : mask) n += b;
    return n;
  }
};

inline std::vector<bool> mask_from_bits(const std::string& bits) {
  std::vector<bool> mask(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != '0' && bits[i] != '1') throw DataError("malformed mask '" + bits + "'");
    mask[i] = bits[i] == '1';
  }
  return mask;
}

// ---------------------------------------------------------------------------
// Objective: stratified k-fold cross-validated accuracy of the forest
// restricted to the masked features. Every random draw derives from
// objective.seed, so the value of a subset does not depend on evaluation
// order or concurrency.
// ---------------------------------------------------------------------------

inline double cv_accuracy(const RealGrid& x, const std::vector<int>& y,
                          const std::vector<bool>& mask, const SelectionObjective& obj) {
  obj.validate();
  if (static_cast<int>(mask.size()) != x.cols) throw DataError("mask arity mismatch");
  bool any = false;
  for (const bool b : mask) any |= b;
  if (!any) throw DataError("empty feature mask");

  std::vector<int> live_idx, fake_idx;
  for (int i = 0; i < x.rows; ++i) (y[i] == 1 ? live_idx : fake_idx).push_back(i);
  if (live_idx.size() < 2 || fake_idx.size() < 2)
    throw DataError("need >= 2 samples per class");
  if (obj.folds > static_cast<int>(std::min(live_idx.size(), fake_idx.size())))
    throw DataError("fold count exceeds the smallest class");

  // Fold assignment depends only on (labels, seed): identical folds for every
  // candidate subset.
  std::vector<int> fold(x.rows, 0);
  Rng fold_rng(mix_seed(obj.seed, 0xF01D5));
  for (auto* cls : {&live_idx, &fake_idx}) {
    fold_rng.shuffle(*cls);
    for (std::size_t i = 0; i < cls->size(); ++i)
      fold[(*cls)[i]] = static_cast<int>(i % obj.folds);
  }

  int correct = 0;
  std::vector<double> row(x.cols);
  for (int k = 0; k < obj.folds; ++k) {
    std::vector<int> train_rows, test_rows;
    for (int i = 0; i < x.rows; ++i) (fold[i] == k ? test_rows : train_rows).push_back(i);

    RealGrid xt(static_cast<int>(train_rows.size()), x.cols);
    std::vector<int> yt(train_rows.size());
    for (std::size_t i = 0; i < train_rows.size(); ++i) {
      for (int f = 0; f < x.cols; ++f) xt.at(static_cast<int>(i), f) = x.at(train_rows[i], f);
      yt[i] = y[train_rows[i]];
    }
    ForestParams params = obj.forest;
    params.seed = mix_seed(obj.seed, 0x70BD0000ULL + static_cast<std::uint64_t>(k));
    const ForestModel model = train(xt, yt, params, mask);

    for (const int i : test_rows) {
      for (int f = 0; f < x.cols; ++f) row[f] = x.at(i, f);
      const int predicted = classify(predict_score(model, row)) == Label::Live ? 1 : 0;
      if (predicted == y[i]) ++correct;
    }
  }
  return static_cast<double>(correct) / x.rows;
}

namespace detail {

inline std::vector<int> mask_indices(const std::vector<bool>& mask) {
  std::vector<int> idx;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) idx.push_back(static_cast<int>(i));
  return idx;
}

// True when (score_a, a) beats (score_b, b): higher score, ties to the
// lexicographically lowest index sequence (a strict prefix sorts first).
inline bool subset_better(double score_a, const std::vector<bool>& a, double score_b,
                          const std::vector<bool>& b) {
  if (score_a != score_b) return score_a > score_b;
  const auto ia = mask_indices(a), ib = mask_indices(b);
  return std::lexicographical_compare(ia.begin(), ia.end(), ib.begin(), ib.end());
}

class SubsetCache {
 public:
  SubsetCache(const RealGrid& x, const std::vector<int>& y, const SelectionObjective& obj)
      : x_(x), y_(y), obj_(obj) {}

  double score(const std::vector<bool>& mask) {
    const auto it = cache_.find(mask);
    if (it != cache_.end()) return it->second;
    const double s = cv_accuracy(x_, y_, mask, obj_);
    cache_.emplace(mask, s);
    return s;
  }

 private:
  const RealGrid& x_;
  const std::vector<int>& y_;
  const SelectionObjective& obj_;
  std::map<std::vector<bool>, double> cache_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// SFFS: best single addition, then conditional best single removals while a
// removal improves the best score recorded at the smaller size. Stops when
// the subset would exceed max_dim or no addition improves the best recorded
// score at the new size. Returns the best state ever visited; the history
// replays from the empty set to exactly the reported mask.
// ---------------------------------------------------------------------------

inline FeatureSubset sffs(const RealGrid& x, const std::vector<int>& y,
                          const SelectionObjective& obj, int max_dim = 0) {
  const int d = x.cols;
  if (d < 1) throw DataError("no features");
  if (max_dim <= 0 || max_dim > d) max_dim = d;
  detail::SubsetCache cache(x, y, obj);

  std::vector<bool> cur(d, false);
  std::vector<double> best_at_size(d + 1, -std::numeric_limits<double>::infinity());
  std::vector<HistoryStep> log;
  std::vector<std::vector<bool>> states;

  bool have_best = false;
  double best_score = 0.0;
  std::vector<bool> best_mask;
  const auto consider = [&](double s, const std::vector<bool>& m) {
    if (!have_best || detail::subset_better(s, m, best_score, best_mask)) {
      have_best = true;
      best_score = s;
      best_mask = m;
    }
  };

  int size = 0, step = 0;
  while (size < max_dim) {
    // forward: best single addition, ties to the lower feature index
    int best_f = -1;
    double add_score = -std::numeric_limits<double>::infinity();
    for (int f = 0; f < d; ++f) {
      if (cur[f]) continue;
      cur[f] = true;
      const double s = cache.score(cur);
      cur[f] = false;
      if (s > add_score) {
        add_score = s;
        best_f = f;
      }
    }
    if (best_f < 0 || add_score <= best_at_size[size + 1]) break;
    cur[best_f] = true;
    ++size;
    log.push_back({++step, true, best_f, add_score});
    states.push_back(cur);
    best_at_size[size] = add_score;
    consider(add_score, cur);

    // backward floating: keep removing while it improves the recorded best
    while (size > 1) {
      int best_g = -1;
      double drop_score = -std::numeric_limits<double>::infinity();
      for (int g = 0; g < d; ++g) {
        if (!cur[g]) continue;
        cur[g] = false;
        const double s = cache.score(cur);
        cur[g] = true;
        if (s > drop_score) {
          drop_score = s;
          best_g = g;
        }
      }
      if (best_g < 0 || drop_score <= best_at_size[size - 1]) break;
      cur[best_g] = false;
      --size;
      log.push_back({++step, false, best_g, drop_score});
      states.push_back(cur);
      best_at_size[size] = drop_score;
      consider(drop_score, cur);
    }
  }
  if (!have_best) throw DataError("selection produced no subset");

  // Truncate the log at the first state equal to the reported mask so a
  // replay of the history lands exactly there.
  std::size_t cut = states.size();
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i] == best_mask) {
      cut = i + 1;
      break;
    }
  }
  FeatureSubset out;
  out.mask = best_mask;
  out.score = best_score;
  out.history.assign(log.begin(), log.begin() + cut);
  return out;
}

// Evaluates every nonempty subset up to max_dim; same tie-breaking as sffs.
inline FeatureSubset exhaustive_best_subset(const RealGrid& x, const std::vector<int>& y,
                                            const SelectionObjective& obj, int max_dim = 6) {
  const int d = x.cols;
  if (d > 16) throw DataError("exhaustive search limited to 16 features");
  if (max_dim <= 0 || max_dim > d) max_dim = d;
  detail::SubsetCache cache(x, y, obj);
  bool have_best = false;
  double best_score = 0.0;
  std::vector<bool> best_mask;
  for (unsigned bits = 1; bits < (1u << d); ++bits) {
    if (__builtin_popcount(bits) > max_dim) continue;
    std::vector<bool> mask(d);
    for (int f = 0; f < d; ++f) mask[f] = (bits >> f) & 1u;
    const double s = cache.score(mask);
    if (!have_best || detail::subset_better(s, mask, best_score, best_mask)) {
      have_best = true;
      best_score = s;
      best_mask = mask;
    }
  }
  FeatureSubset out;
  out.mask = best_mask;
  out.score = best_score;
  int step = 0;
  for (const int f : detail::mask_indices(best_mask))
    out.history.push_back({++step, true, f, best_score});
  return out;
}

// ---------------------------------------------------------------------------
// Subset report: mask bitstring, score, full history table.
// ---------------------------------------------------------------------------

inline std::string encode_subset_report(const FeatureSubset& subset) {
  std::ostringstream out;
  out << "# fplive-subset-v1\n";
  out << "mask\t" << subset.mask_bits() << "\n";
  out << "score\t" << format_g17(subset.score) << "\n";
  out << "# step\taction\tfeature\tscore\n";
  for (const auto& h : subset.history)
    out << h.step << "\t" << (h.added ? "add" : "remove") << "\t" << h.feature << "\t"
        << format_g17(h.score) << "\n";
  return out.str();
}

inline void save_subset_report(const FeatureSubset& subset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path + ": cannot open for writing");
  out << encode_subset_report(subset);
}

inline FeatureSubset load_subset_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": unreadable subset report");
  FeatureSubset subset;
  bool have_mask = false, have_score = false;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_tabs(line);
    if (f[0] == "mask" && f.size() == 2) {
      subset.mask = mask_from_bits(f[1]);
      have_mask = true;
    } else if (f[0] == "score" && f.size() == 2) {
      subset.score = parse_double(f[1]);
      have_score = true;
    } else if (f.size() == 4) {
      subset.history.push_back({static_cast<int>(parse_int(f[0])), f[1] == "add",
                                static_cast<int>(parse_int(f[2])), parse_double(f[3])});
    } else {
      throw DataError(path + ": malformed subset line '" + line + "'");
    }
  }
  if (!have_mask || !have_score) throw DataError(path + ": incomplete subset report");
  return subset;
}

}  // namespace fplive
