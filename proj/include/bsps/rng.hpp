#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace bsps {

// splitmix64 finalizer; decorrelates adjacent integer seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic RNG with self-contained samplers. The std:: distributions are
// implementation-defined, so uniform/normal/gamma are generated here directly;
// a given seed yields the same stream on any toolchain.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on (0,1), never returns 0 or 1.
  double uniform() {
    const double u = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    return u > 0.0 ? u : 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Marsaglia polar method with one cached spare.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double r = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * r;
    has_spare_ = true;
    return u * r;
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  double exponential() { return -std::log(uniform()); }

  // Gamma(shape, scale=1) via Marsaglia-Tsang; shape<1 boosted through shape+1.
  double gamma(double shape);

  // InvGamma(shape, rate): X = rate / Gamma(shape, 1).
  double inv_gamma(double shape, double rate) { return rate / gamma(shape); }

  bool bernoulli(double p) { return uniform() < p; }

  // Independent substream keyed by `stream`, derived from the original seed;
  // used for per-replication and per-chain seeding so results do not depend
  // on scheduling.
  std::uint64_t seed_for(std::uint64_t stream) const {
    return mix64(seed_ ^ mix64(stream + 0x51a5f51a5ULL));
  }
  Rng spawn(std::uint64_t stream) const { return Rng(seed_for(stream)); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace bsps
