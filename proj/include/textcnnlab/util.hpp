#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace textcnn {

// Deterministic RNG used everywhere. Distribution helpers are hand-rolled so
// that a (seed, call sequence) pair pins the byte-exact output stream
// independent of the standard library's <random> distribution internals.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n)
  size_t index(size_t n) {
    if (n == 0) throw std::invalid_argument("Rng::index: n must be > 0");
    // rejection sampling, no modulo bias
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return static_cast<size_t>(x % n);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

  // derive an independent stream, e.g. one per worker or per condition
  Rng fork(uint64_t salt) {
    return Rng(gen_() ^ (salt * 0x9e3779b97f4a7c15ull));
  }

 private:
  std::mt19937_64 gen_;
};

// FNV-1a over bytes; used for vocabulary identity hashes.
class Fnv1a {
 public:
  void update(const void* data, size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ull;
    }
  }
  void update(const std::string& s) { update(s.data(), s.size()); }
  void update(uint64_t v) { update(&v, sizeof(v)); }
  uint64_t digest() const { return h_; }
  std::string hex() const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h_));
    return std::string(buf);
  }

 private:
  uint64_t h_ = 0xcbf29ce484222325ull;
};

// 9 significant digits, enough to round-trip float32 exactly.
inline std::string format_sig9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return std::string(buf);
}

inline std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return std::string(buf);
}

// ceil(fraction * n), robust to the float noise of decimal fractions
// (0.1 * 23363 must give 2337, 1.0 * V must give V).
inline int64_t ceil_fraction(int64_t n, double fraction) {
  double raw = fraction * static_cast<double>(n);
  double nearest = std::round(raw);
  if (std::abs(raw - nearest) < 1e-6) return static_cast<int64_t>(nearest);
  return static_cast<int64_t>(std::ceil(raw));
}

}  // namespace textcnn
