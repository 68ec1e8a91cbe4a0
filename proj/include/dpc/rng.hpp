#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace dpc {

// Every random draw in the toolkit flows from one root seed through named
// substreams ("data", "init", "sampling", "uncertainty", ...), optionally
// indexed (run number, epoch). Streams derived from the same (seed, name,
// index) triple are identical, so runs reproduce bit-for-bit regardless of
// how work is scheduled. Distribution mapping is implemented here instead of
// <random>'s distributions, whose output is not pinned by the standard.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // Uniform on [lo, hi) with 53-bit resolution.
  double uniform(double lo = 0.0, double hi = 1.0) {
    double u = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
  }

  int uniform_int(int lo, int hi_inclusive) {
    auto span = static_cast<uint64_t>(hi_inclusive - lo) + 1;
    return lo + static_cast<int>(gen_() % span);
  }

  // Marsaglia polar method; cached second variate to keep draw counts stable.
  double normal(double mean = 0.0, double stddev = 1.0) {
    if (has_spare_) {
      has_spare_ = false;
      return mean + stddev * spare_;
    }
    double u, v, s;
    do {
      u = uniform(-1.0, 1.0);
      v = uniform(-1.0, 1.0);
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return mean + stddev * u * f;
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

namespace detail {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

inline Rng substream(uint64_t root_seed, std::string_view name, uint64_t index = 0) {
  uint64_t s = detail::splitmix64(root_seed ^ detail::fnv1a(name));
  s = detail::splitmix64(s ^ index);
  return Rng(s);
}

}  // namespace dpc
