#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace dslad::rng {

using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Purpose tags keep independently keyed streams from colliding.
namespace tag {
constexpr std::uint64_t init = 1;
constexpr std::uint64_t plan = 2;
constexpr std::uint64_t pairs = 3;
constexpr std::uint64_t infer = 4;
constexpr std::uint64_t inject = 5;
constexpr std::uint64_t synthetic = 6;
}  // namespace tag

inline Engine make_engine(std::uint64_t seed) { return Engine(splitmix64(seed)); }

// Derives an independent stream keyed by (seed, a, b, c). Serial and
// parallel consumers of the same key see identical draws.
inline Engine stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                     std::uint64_t c = 0) {
  std::uint64_t x = splitmix64(seed);
  x = splitmix64(x ^ splitmix64(a));
  x = splitmix64(x ^ splitmix64(b));
  x = splitmix64(x ^ splitmix64(c));
  return Engine(x);
}

// Unbiased integer in [0, n). The standard distributions are
// implementation-defined, so the mapping is pinned here to keep runs
// reproducible across toolchains.
inline std::uint64_t uniform_index(Engine& eng, std::uint64_t n) {
  const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % n;
  std::uint64_t v;
  do {
    v = eng();
  } while (v >= limit);
  return v % n;
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform_real(Engine& eng) {
  return double(eng() >> 11) * (1.0 / 9007199254740992.0);
}

inline double uniform_real(Engine& eng, double lo, double hi) {
  return lo + (hi - lo) * uniform_real(eng);
}

// Standard normal via Marsaglia polar; pinned for the same reason as above.
class Normal {
 public:
  double operator()(Engine& eng) {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = uniform_real(eng, -1.0, 1.0);
      v = uniform_real(eng, -1.0, 1.0);
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

 private:
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace dslad::rng
