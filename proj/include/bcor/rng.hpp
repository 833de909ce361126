#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace bcor {

// Seeded random stream with named substream derivation.
//
// All simulation randomness flows through this class so that results are
// reproducible bit-for-bit: a root seed plus a substream name identifies a
// stream, independent of thread scheduling or evaluation order. Variates are
// generated from the raw mt19937_64 output with our own transforms (inverse
// CDF for normals, Marsaglia-Tsang for gammas) rather than std::distribution
// objects, whose output sequences are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Derives an independent stream from (root, name). Same inputs always give
  // the same stream.
  static Rng substream(std::uint64_t root, std::string_view name);

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1); never returns an exact endpoint.
  double uniform_pos() {
    return ((next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via the inverse CDF.
  double normal();

  double exponential() { return -std::log(uniform_pos()); }

  int bernoulli(double p) { return uniform() < p ? 1 : 0; }

  // Gamma(shape, scale=1), shape > 0.
  double gamma(double shape);

  // Inverse-Gamma(shape, scale): reciprocal of Gamma(shape, rate=scale).
  double inv_gamma(double shape, double scale) { return scale / gamma(shape); }

  double beta(double a, double b) {
    double x = gamma(a);
    double y = gamma(b);
    return x / (x + y);
  }

  // Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  // Uniformly random size-b subset of {0, ..., n-1} (partial Fisher-Yates).
  std::vector<int> subset(int n, int b);

 private:
  std::mt19937_64 gen_;
};

}  // namespace bcor
