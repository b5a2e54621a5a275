#pragma once

// Random forest over quality vectors: bootstrap resampling, greedy
// Gini-impurity splits over a random feature subset per node, leaf values are
// live fractions and scores average them across trees. Construction is fully
// deterministic: tree i draws from mix_seed(params.seed, i) and every random
// mapping is explicit, so (data, params, mask, seed) determine the model bytes.

#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fplive/common.hpp"
#include "fplive/manifest.hpp"

namespace fplive {

struct ForestParams {
  int tree_count = 100;
  int max_depth = 0;             // 0 = unlimited
  int min_leaf = 1;
  int features_per_split = 0;    // 0 = ceil(sqrt(masked feature count))
  double bootstrap_fraction = 1.0;  // sampled with replacement
  std::uint64_t seed = 0;

  void validate() const {
    if (tree_count < 1) throw DataError("tree_count must be >= 1");
    if (min_leaf < 1) throw DataError("min_leaf must be >= 1");
    if (max_depth < 0) throw DataError("max_depth must be >= 0");
    if (bootstrap_fraction <= 0.0) throw DataError("bootstrap_fraction must be > 0");
  }
};

struct TreeNode {
  bool is_leaf = true;
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double live_fraction = 0.0;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // preorder, root at 0

  double predict(const std::vector<double>& x) const {
    int i = 0;
    while (!nodes[i].is_leaf)
      i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
    return nodes[i].live_fraction;
  }
};

struct ForestModel {
  ForestParams params;
  std::vector<bool> mask;  // feature arity of the training matrix
  std::vector<DecisionTree> trees;
  int train_samples = 0;
  int train_live = 0;
  int train_fake = 0;
  double oob_accuracy = std::numeric_limits<double>::quiet_NaN();

  int arity() const { return static_cast<int>(mask.size()); }
};

struct Score {
  double live_probability = 0.0;
};

namespace detail {

struct TreeBuilder {
  const RealGrid& x;
  const std::vector<int>& y;
  const std::vector<int>& masked_features;
  int mtry;
  int max_depth;
  int min_leaf;
  Rng& rng;
  std::vector<TreeNode>& nodes;

  int build(std::vector<int>& indices, int depth) {
    const int node_index = static_cast<int>(nodes.size());
    nodes.emplace_back();
    const int n = static_cast<int>(indices.size());
    int live = 0;
    for (const int i : indices) live += y[i];
    nodes[node_index].live_fraction = static_cast<double>(live) / n;

    const bool pure = live == 0 || live == n;
    const bool depth_capped = max_depth > 0 && depth >= max_depth;
    if (pure || depth_capped || n < 2 * min_leaf || n < 2) return node_index;

    // Candidate features: mtry distinct draws, evaluated in ascending order
    // so ties resolve to the lower feature index.
    std::vector<int> pool = masked_features;
    const int k = std::min<int>(mtry, static_cast<int>(pool.size()));
    for (int i = 0; i < k; ++i) {
      const std::size_t j = i + rng.next_below(pool.size() - i);
      std::swap(pool[i], pool[j]);
    }
    std::vector<int> candidates(pool.begin(), pool.begin() + k);
    std::sort(candidates.begin(), candidates.end());

    double best_gini = std::numeric_limits<double>::infinity();
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::pair<double, int>> order(n);
    for (const int f : candidates) {
      for (int i = 0; i < n; ++i) order[i] = {x.at(indices[i], f), y[indices[i]]};
      std::sort(order.begin(), order.end());
      int left_live = 0;
      for (int i = 0; i + 1 < n; ++i) {
        left_live += order[i].second;
        if (order[i].first == order[i + 1].first) continue;
        const int left_n = i + 1;
        const int right_n = n - left_n;
        if (left_n < min_leaf || right_n < min_leaf) continue;
        const double pl = static_cast<double>(left_live) / left_n;
        const double pr = static_cast<double>(live - left_live) / right_n;
        const double gini = (left_n * 2.0 * pl * (1.0 - pl) + right_n * 2.0 * pr * (1.0 - pr)) / n;
        if (gini < best_gini) {
          best_gini = gini;
          best_feature = f;
          best_threshold = 0.5 * (order[i].first + order[i + 1].first);
        }
      }
    }
    if (best_feature < 0) return node_index;  // no valid split among candidates

    std::vector<int> left_idx, right_idx;
    left_idx.reserve(indices.size());
    for (const int i : indices)
      (x.at(i, best_feature) <= best_threshold ? left_idx : right_idx).push_back(i);
    indices.clear();
    indices.shrink_to_fit();

    nodes[node_index].is_leaf = false;
    nodes[node_index].feature = best_feature;
    nodes[node_index].threshold = best_threshold;
    nodes[node_index].left = build(left_idx, depth + 1);
    nodes[node_index].right = build(right_idx, depth + 1);
    return node_index;
  }
};

}  // namespace detail

inline ForestModel train(const RealGrid& x, const std::vector<int>& y,
                         const ForestParams& params, const std::vector<bool>& mask) {
  params.validate();
  const int n = x.rows;
  if (n < 2 || static_cast<std::size_t>(n) != y.size())
    throw DataError("need >= 2 labeled samples");
  if (static_cast<int>(mask.size()) != x.cols) throw DataError("mask arity mismatch");
  std::vector<int> masked_features;
  for (int f = 0; f < x.cols; ++f)
    if (mask[f]) masked_features.push_back(f);
  if (masked_features.empty()) throw DataError("empty feature mask");
  int live = 0;
  for (const int label : y) {
    if (label != 0 && label != 1) throw DataError("labels must be 0 or 1");
    live += label;
  }
  if (live == 0 || live == n) throw DataError("single-class training data");

  const int m = static_cast<int>(masked_features.size());
  const int mtry = params.features_per_split > 0
                       ? std::min(params.features_per_split, m)
                       : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(m))));

  ForestModel model;
  model.params = params;
  model.mask = mask;
  model.train_samples = n;
  model.train_live = live;
  model.train_fake = n - live;
  model.trees.resize(params.tree_count);

  std::vector<double> oob_sum(n, 0.0);
  std::vector<int> oob_count(n, 0);
  const int boot_n = std::max(1, static_cast<int>(std::lround(params.bootstrap_fraction * n)));
  std::vector<double> row(x.cols);

  for (int t = 0; t < params.tree_count; ++t) {
    Rng rng(mix_seed(params.seed, static_cast<std::uint64_t>(t)));
    std::vector<int> indices(boot_n);
    std::vector<char> in_bag(n, 0);
    for (int i = 0; i < boot_n; ++i) {
      indices[i] = static_cast<int>(rng.next_below(n));
      in_bag[indices[i]] = 1;
    }
    detail::TreeBuilder builder{x, y, masked_features, mtry, params.max_depth,
                                params.min_leaf, rng, model.trees[t].nodes};
    builder.build(indices, 0);

    for (int i = 0; i < n; ++i) {
      if (in_bag[i]) continue;
      for (int f = 0; f < x.cols; ++f) row[f] = x.at(i, f);
      oob_sum[i] += model.trees[t].predict(row);
      ++oob_count[i];
    }
  }
  int oob_correct = 0, oob_total = 0;
  for (int i = 0; i < n; ++i) {
    if (oob_count[i] == 0) continue;
    ++oob_total;
    const int predicted = oob_sum[i] / oob_count[i] > 0.5 ? 1 : 0;
    if (predicted == y[i]) ++oob_correct;
  }
  if (oob_total > 0)
    model.oob_accuracy = static_cast<double>(oob_correct) / oob_total;
  return model;
}

inline Score predict_score(const ForestModel& model, const std::vector<double>& v) {
  if (static_cast<int>(v.size()) != model.arity())
    throw DataError("feature arity mismatch: vector has " + std::to_string(v.size()) +
                    " entries, model expects " + std::to_string(model.arity()));
  double acc = 0.0;
  for (const auto& tree : model.trees) acc += tree.predict(v);
  return {acc / model.trees.size()};
}

/// LivDet decision rule: live strictly above the threshold, fake at or below.
inline Label classify(const Score& s, double threshold = 0.5) {
  if (threshold < 0.0 || threshold > 1.0) throw DataError("threshold must be in [0,1]");
  return s.live_probability > threshold ? Label::Live : Label::Fake;
}

// ---------------------------------------------------------------------------
// Text serialization. Values that must round-trip exactly are hexfloats; the
// tree section is covered by an FNV-1a digest so truncated or edited files
// are rejected.
// ---------------------------------------------------------------------------

inline std::string encode_model(const ForestModel& model) {
  std::ostringstream body;
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    const auto& nodes = model.trees[t].nodes;
    body << "tree " << t << " " << nodes.size() << "\n";
    for (const auto& node : nodes) {
      if (node.is_leaf)
        body << "l " << format_hexfloat(node.live_fraction) << "\n";
      else
        body << "s " << node.feature << " " << format_hexfloat(node.threshold) << " "
             << node.left << " " << node.right << "\n";
    }
  }
  body << "end\n";
  const std::string body_str = body.str();

  std::ostringstream out;
  out << "fplive-forest-v1\n";
  out << "arity " << model.arity() << "\n";
  out << "mask ";
  for (const bool b : model.mask) out << (b ? '1' : '0');
  out << "\n";
  out << "trees " << model.params.tree_count << "\n";
  out << "seed " << model.params.seed << "\n";
  out << "max_depth " << model.params.max_depth << "\n";
  out << "min_leaf " << model.params.min_leaf << "\n";
  out << "features_per_split " << model.params.features_per_split << "\n";
  out << "bootstrap_fraction " << format_hexfloat(model.params.bootstrap_fraction) << "\n";
  out << "train_samples " << model.train_samples << "\n";
  out << "train_live " << model.train_live << "\n";
  out << "train_fake " << model.train_fake << "\n";
  out << "oob_accuracy "
      << (std::isnan(model.oob_accuracy) ? std::string("-")
                                         : format_hexfloat(model.oob_accuracy))
      << "\n";
  out << "digest " << fnv1a_hex(body_str) << "\n";
  out << body_str;
  return out.str();
}

inline void save_model(const ForestModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path + ": cannot open for writing");
  out << encode_model(model);
  if (!out) throw DataError(path + ": write failed");
}

inline double parse_hexfloat(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw DataError("malformed float '" + s + "'");
  return v;
}

inline ForestModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": unreadable model file");
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::istringstream stream(content);
  std::string line;
  if (!std::getline(stream, line) || line != "fplive-forest-v1")
    throw DataError(path + ": not a fplive forest model");

  std::map<std::string, std::string> header;
  std::string digest;
  while (std::getline(stream, line)) {
    const auto space = line.find(' ');
    if (space == std::string::npos) throw DataError(path + ": malformed header line");
    const std::string key = line.substr(0, space);
    const std::string value = line.substr(space + 1);
    if (key == "digest") {
      digest = value;
      break;
    }
    header[key] = value;
  }
  if (digest.empty()) throw DataError(path + ": model file integrity error (no digest)");
  const std::string body(content.substr(static_cast<std::size_t>(stream.tellg())));
  if (fnv1a_hex(body) != digest)
    throw DataError(path + ": model file integrity error (digest mismatch)");

  const auto field = [&](const std::string& key) -> const std::string& {
    const auto it = header.find(key);
    if (it == header.end()) throw DataError(path + ": missing model field '" + key + "'");
    return it->second;
  };

  ForestModel model;
  model.params.tree_count = static_cast<int>(parse_int(field("trees")));
  model.params.seed = static_cast<std::uint64_t>(parse_int(field("seed")));
  model.params.max_depth = static_cast<int>(parse_int(field("max_depth")));
  model.params.min_leaf = static_cast<int>(parse_int(field("min_leaf")));
  model.params.features_per_split = static_cast<int>(parse_int(field("features_per_split")));
  model.params.bootstrap_fraction = parse_hexfloat(field("bootstrap_fraction"));
  model.train_samples = static_cast<int>(parse_int(field("train_samples")));
  model.train_live = static_cast<int>(parse_int(field("train_live")));
  model.train_fake = static_cast<int>(parse_int(field("train_fake")));
  const std::string& oob = field("oob_accuracy");
  model.oob_accuracy = oob == "-" ? std::numeric_limits<double>::quiet_NaN() : parse_hexfloat(oob);
  const int arity = static_cast<int>(parse_int(field("arity")));
  const std::string& mask_str = field("mask");
  if (static_cast<int>(mask_str.size()) != arity)
    throw DataError(path + ": mask/arity mismatch");
  model.mask.resize(arity);
  for (int i = 0; i < arity; ++i) {
    if (mask_str[i] != '0' && mask_str[i] != '1')
      throw DataError(path + ": malformed mask");
    model.mask[i] = mask_str[i] == '1';
  }

  std::istringstream body_stream(body);
  model.trees.resize(model.params.tree_count);
  for (int t = 0; t < model.params.tree_count; ++t) {
    if (!std::getline(body_stream, line))
      throw DataError(path + ": model file integrity error (truncated)");
    std::istringstream head(line);
    std::string tag;
    long long index = -1, count = -1;
    head >> tag >> index >> count;
    if (tag != "tree" || index != t || count < 1)
      throw DataError(path + ": malformed tree header '" + line + "'");
    auto& nodes = model.trees[t].nodes;
    nodes.resize(count);
    for (long long i = 0; i < count; ++i) {
      if (!std::getline(body_stream, line))
        throw DataError(path + ": model file integrity error (truncated)");
      std::istringstream ns(line);
      std::string kind;
      ns >> kind;
      TreeNode node;
      if (kind == "l") {
        std::string frac;
        ns >> frac;
        node.is_leaf = true;
        node.live_fraction = parse_hexfloat(frac);
        if (node.live_fraction < 0.0 || node.live_fraction > 1.0)
          throw DataError(path + ": leaf fraction out of range");
      } else if (kind == "s") {
        std::string thr;
        ns >> node.feature >> thr >> node.left >> node.right;
        node.is_leaf = false;
        node.threshold = parse_hexfloat(thr);
        if (node.feature < 0 || node.feature >= arity || !model.mask[node.feature])
          throw DataError(path + ": split feature outside subset mask");
        if (node.left <= 0 || node.left >= count || node.right <= 0 || node.right >= count)
          throw DataError(path + ": node child index out of range");
      } else {
        throw DataError(path + ": malformed node line '" + line + "'");
      }
      nodes[i] = node;
    }
  }
  if (!std::getline(body_stream, line) || line != "end")
    throw DataError(path + ": model file integrity error (missing end marker)");
  return model;
}

}  // namespace fplive
