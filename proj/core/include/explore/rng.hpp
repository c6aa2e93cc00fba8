#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace explore {

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t mix_key(uint64_t a, uint64_t b) {
  uint64_t s = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  return splitmix64(s);
}

inline uint64_t hash_string(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// xoshiro256++ with explicit distribution code so streams are reproducible
// across platforms and standard library versions.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) {
    uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  // Derives an independent stream from a master seed and a stream key.
  static Rng stream(uint64_t master, uint64_t key) {
    return Rng(mix_key(master, key));
  }

  uint64_t next() {
    const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  double uniform() { return (next() >> 11) * 0x1.0p-53; }  // [0, 1)

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Inclusive bounds, unbiased via rejection.
  int uniform_int(int lo, int hi) {
    const uint64_t span = static_cast<uint64_t>(hi) - static_cast<uint64_t>(lo) + 1;
    const uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    uint64_t v;
    do {
      v = next();
    } while (v >= limit);
    return lo + static_cast<int>(v % span);
  }

  size_t index(size_t n) {  // [0, n)
    return static_cast<size_t>(uniform_int(0, static_cast<int>(n) - 1));
  }

  // Box-Muller without spare caching: deterministic regardless of call mix.
  double normal() {
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Gaussian(0, sigma) truncated to [-bound, bound] by rejection.
  double truncated_normal(double sigma, double bound) {
    if (sigma <= 0.0 || bound <= 0.0) return 0.0;
    double x;
    do {
      x = normal(0.0, sigma);
    } while (std::abs(x) > bound);
    return x;
  }

 private:
  static uint64_t rotl(uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }
  uint64_t s_[4];
};

}  // namespace explore
