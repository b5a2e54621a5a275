#pragma once

// Dataset manifests. A manifest maps every image file under a root directory
// to (label, material, sensor, split) using a declarative layout: path
// components are matched case-insensitively against split/label tokens, and
// for fakes the component below the label folder names the spoof material.
// The default layout ingests LivDet 2009 and 2015 style trees unchanged.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fplive/common.hpp"

namespace fplive {

enum class Label { Live, Fake };
enum class Split { Train, Test };

inline std::string to_string(Label l) { return l == Label::Live ? "Live" : "Fake"; }
inline std::string to_string(Split s) { return s == Split::Train ? "Train" : "Test"; }

inline Label parse_label(const std::string& s) {
  if (s == "Live") return Label::Live;
  if (s == "Fake") return Label::Fake;
  throw DataError("unknown label '" + s + "'");
}

inline Split parse_split(const std::string& s) {
  if (s == "Train") return Split::Train;
  if (s == "Test") return Split::Test;
  throw DataError("unknown split '" + s + "'");
}

struct SampleRecord {
  std::string path;
  Label label = Label::Live;
  std::string material;  // empty = none (live); fakes always carry a tag
  std::string sensor;
  Split split = Split::Train;
};

struct DatasetManifest {
  std::vector<SampleRecord> records;

  int count(Split s, Label l) const {
    int n = 0;
    for (const auto& r : records)
      if (r.split == s && r.label == l) ++n;
    return n;
  }
};

// Folder-token layout. Tokens are matched against lowercased path components.
struct LayoutDescriptor {
  std::map<std::string, Split> split_tokens = {
      {"train", Split::Train}, {"training", Split::Train},
      {"test", Split::Test},   {"testing", Split::Test}};
  std::map<std::string, Label> label_tokens = {
      {"live", Label::Live},  {"alive", Label::Live}, {"real", Label::Live},
      {"genuine", Label::Live},
      {"fake", Label::Fake},  {"spoof", Label::Fake}, {"spoofs", Label::Fake},
      {"attack", Label::Fake}};
  // Canonical spellings for material folders.
  std::map<std::string, std::string> material_aliases = {
      {"liquid ecoflex", "liquid-ecoflex"}, {"liquidecoflex", "liquid-ecoflex"},
      {"liquid_ecoflex", "liquid-ecoflex"}, {"wood glue", "woodglue"},
      {"wood_glue", "woodglue"},            {"body double", "bodydouble"},
      {"body_double", "bodydouble"},        {"play doh", "playdoh"},
      {"play-doh", "playdoh"}};
  std::set<std::string> extensions = {".pgm", ".ppm", ".pnm", ".png"};
  std::string sensor;  // empty: use the root directory's name
};

// Layout file: one rule per line, "<token> split <Train|Test>" or
// "<token> label <Live|Fake>" or "sensor <tag>". '#' starts a comment.
inline LayoutDescriptor load_layout(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": unreadable layout file");
  LayoutDescriptor layout;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string a, b, c;
    ss >> a >> b >> c;
    if (a == "sensor") {
      layout.sensor = b;
    } else if (b == "split") {
      layout.split_tokens[to_lower(a)] = parse_split(c);
    } else if (b == "label") {
      layout.label_tokens[to_lower(a)] = parse_label(c);
    } else {
      throw DataError(path + ": malformed layout rule '" + line + "'");
    }
  }
  return layout;
}

namespace detail {

inline std::string normalize_material(const LayoutDescriptor& layout, const std::string& folder) {
  const std::string low = to_lower(folder);
  const auto it = layout.material_aliases.find(low);
  return it != layout.material_aliases.end() ? it->second : low;
}

}  // namespace detail

/// Walks `root` and assigns every image file exactly one SampleRecord.
/// Ambiguities (no split/label token, conflicting labels) and files whose
/// path matches both splits are reported with the offending paths.
inline DatasetManifest build_manifest(const std::string& root,
                                      const LayoutDescriptor& layout = {}) {
  namespace fs = std::filesystem;
  const fs::path root_path(root);
  if (!fs::is_directory(root_path)) throw DataError(root + ": not a directory");

  const std::string sensor =
      layout.sensor.empty() ? root_path.filename().string() : layout.sensor;

  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(root_path)) {
    if (!entry.is_regular_file()) continue;
    if (layout.extensions.count(to_lower(entry.path().extension().string())))
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError(root + ": no image files found");

  DatasetManifest manifest;
  std::vector<std::string> ambiguous;
  std::vector<std::string> duplicates;
  for (const auto& file : files) {
    const fs::path rel = fs::relative(file, root_path);
    std::vector<std::string> dirs;  // path components above the filename
    for (auto it = rel.begin(); it != rel.end(); ++it)
      if (std::next(it) != rel.end()) dirs.push_back(it->string());

    std::optional<Split> split;
    std::optional<Label> label;
    bool split_conflict = false, label_conflict = false;
    std::size_t label_pos = 0;
    for (std::size_t i = 0; i < dirs.size(); ++i) {
      const std::string comp = to_lower(dirs[i]);
      if (const auto s = layout.split_tokens.find(comp); s != layout.split_tokens.end()) {
        if (split && *split != s->second) split_conflict = true;
        split = s->second;
      }
      if (const auto l = layout.label_tokens.find(comp); l != layout.label_tokens.end()) {
        if (label && *label != l->second) label_conflict = true;
        label = l->second;
        label_pos = i;
      }
    }
    // Material: first component below the Fake folder that is not itself
    // a split/label token.
    std::string material;
    if (label && *label == Label::Fake) {
      for (std::size_t i = label_pos + 1; i < dirs.size(); ++i) {
        const std::string comp = to_lower(dirs[i]);
        if (layout.split_tokens.count(comp) || layout.label_tokens.count(comp)) continue;
        material = detail::normalize_material(layout, dirs[i]);
        break;
      }
    }
    if (split_conflict) {
      duplicates.push_back(rel.string());
      continue;
    }
    if (!split || !label || label_conflict) {
      ambiguous.push_back(rel.string());
      continue;
    }
    SampleRecord rec;
    rec.path = (root_path / rel).string();
    rec.label = *label;
    rec.material = *label == Label::Fake ? (material.empty() ? "unknown" : material) : "";
    rec.sensor = sensor;
    rec.split = *split;
    manifest.records.push_back(std::move(rec));
  }

  if (!duplicates.empty()) {
    std::string msg = "duplicate sample (path matches both Train and Test):";
    for (const auto& p : duplicates) msg += "\n  " + p;
    throw DataError(msg);
  }
  if (!ambiguous.empty()) {
    std::string msg = "ambiguous label folder for:";
    for (const auto& p : ambiguous) msg += "\n  " + p;
    throw DataError(msg);
  }
  return manifest;
}

// ---------------------------------------------------------------------------
// Manifest text format: '#'-prefixed header, then one tab-separated record
// per line: path, label, material (- for none), sensor, split.
// ---------------------------------------------------------------------------

inline std::string encode_manifest(const DatasetManifest& m) {
  std::string out = "# path\tlabel\tmaterial\tsensor\tsplit\n";
  for (const auto& r : m.records) {
    out += r.path + "\t" + to_string(r.label) + "\t" +
           (r.material.empty() ? "-" : r.material) + "\t" + r.sensor + "\t" +
           to_string(r.split) + "\n";
  }
  return out;
}

inline void save_manifest(const DatasetManifest& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path + ": cannot open for writing");
  out << encode_manifest(m);
}

inline DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": unreadable manifest");
  DatasetManifest m;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_tabs(line);
    if (f.size() != 5) throw DataError(path + ": malformed manifest line '" + line + "'");
    SampleRecord rec;
    rec.path = f[0];
    rec.label = parse_label(f[1]);
    rec.material = f[2] == "-" ? "" : f[2];
    rec.sensor = f[3];
    rec.split = parse_split(f[4]);
    if (rec.label == Label::Live && !rec.material.empty())
      throw DataError(path + ": live record with material tag: " + rec.path);
    if (rec.label == Label::Fake && rec.material.empty())
      throw DataError(path + ": fake record without material tag: " + rec.path);
    m.records.push_back(std::move(rec));
  }
  if (m.records.empty()) throw DataError(path + ": empty manifest");
  return m;
}

// ---------------------------------------------------------------------------
// Split summary: live counts and per-material fake counts per split.
// ---------------------------------------------------------------------------

struct SplitSummary {
  struct Part {
    int live = 0;
    std::map<std::string, int> fakes;  // material -> count
    int fake_total() const {
      int n = 0;
      for (const auto& [_, c] : fakes) n += c;
      return n;
    }
  };
  Part train, test;

  std::string to_text() const {
    std::ostringstream out;
    for (const auto* part : {&train, &test}) {
      out << (part == &train ? "Train" : "Test") << ":\n";
      out << "  Live: " << part->live << "\n";
      out << "  Fake: " << part->fake_total() << "\n";
      for (const auto& [mat, n] : part->fakes) out << "    " << mat << ": " << n << "\n";
    }
    return out.str();
  }
};

inline SplitSummary summarize(const DatasetManifest& m) {
  if (m.records.empty()) throw DataError("empty manifest");
  SplitSummary s;
  for (const auto& r : m.records) {
    auto& part = r.split == Split::Train ? s.train : s.test;
    if (r.label == Label::Live) {
      ++part.live;
    } else {
      ++part.fakes[r.material];
    }
  }
  return s;
}

}  // namespace fplive
