#pragma once

// Shared plumbing: error types, deterministic RNG, seed derivation,
// a small 2-D grid container and text formatting helpers.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>
#include <algorithm>

namespace fplive {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable/ill-formed inputs, degenerate data, arity mismatches.
class DataError : public Error {
 public:
  using Error::Error;
};

// Train/test isolation violations (a stage fed rows from the wrong split).
class LeakageError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Seeding. One global seed derives every module seed through mix_seed with a
// fixed stream tag, so a single --seed reproduces a whole pipeline run.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
}

// Stream tags for module seed derivation from the global run seed.
inline constexpr std::uint64_t kSeedStreamSynth = 1;
inline constexpr std::uint64_t kSeedStreamSelect = 2;
inline constexpr std::uint64_t kSeedStreamForest = 3;

// Counter-based splitmix64 generator. All random draws go through explicit
// mappings (never std::*_distribution) so byte-identical output does not
// depend on the standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64(state_++); }

  // Uniform in [0,1).
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [0,n). Modulo map; bias is irrelevant at these ranges.
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  // Uniform integer in [lo,hi] inclusive.
  std::int64_t next_int(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(next_below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  // Box-Muller; deterministic call order, spare value cached.
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = next_unit();
    } while (u1 <= 0.0);
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[next_below(i)]);
    }
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// ---------------------------------------------------------------------------
// Small row-major 2-D container.
// ---------------------------------------------------------------------------

template <typename T>
struct Grid2D {
  int rows = 0;
  int cols = 0;
  std::vector<T> data;

  Grid2D() = default;
  Grid2D(int r, int c, T fill = T{}) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

  T& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  const T& at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  bool empty() const { return data.empty(); }
};

using RealGrid = Grid2D<double>;
using BoolGrid = Grid2D<unsigned char>;
using IntGrid = Grid2D<int>;

// ---------------------------------------------------------------------------
// Text helpers. %.17g round-trips doubles exactly; %a is used where files must
// reproduce bit patterns under parsing (model files).
// ---------------------------------------------------------------------------

inline std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::string format_hexfloat(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%a", x);
  return buf;
}

inline std::string format_fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, x);
  return buf;
}

inline double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw DataError("malformed number: '" + s + "'");
  return v;
}

inline long long parse_int(const std::string& s) {
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0') throw DataError("malformed integer: '" + s + "'");
  return v;
}

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::string to_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// FNV-1a, used as the integrity digest of serialized models.
inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string fnv1a_hex(const std::string& bytes) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(bytes)));
  return buf;
}

inline constexpr double kPi = 3.141592653589793238462643383279502884;

}  // namespace fplive
