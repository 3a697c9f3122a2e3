#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "lowrank/matrix.hpp"

namespace lowrank {

// Deterministic random source with independent substreams.
//
// The engine is std::mt19937_64, whose output sequence for a given seed is
// fixed by the C++ standard, so the raw bit stream is identical on every
// platform. Each (seed, stream_id) pair is mixed through splitmix64 into an
// engine seed; trials keyed by stream_id are reproducible regardless of
// scheduling. Variates are derived locally rather than through
// std::*_distribution (whose algorithms are implementation-defined):
// uniforms take the top 53 bits of one engine draw, normals come from the
// Marsaglia polar method.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed, std::uint64_t stream_id = 0)
      : seed_(seed), stream_id_(stream_id), eng_(derive(seed, stream_id)) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64() { return eng_(); }

  // Unbiased draw from {0, ..., n-1}.
  std::uint64_t bounded(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("SeededRng::bounded: n must be positive");
    const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t r = eng_();
      if (r >= threshold) return r % n;
    }
  }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Uniform on the open interval (0, 1).
  double uniform_open() {
    return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    require_arg(lo <= hi, "SeededRng::uniform: lo must be <= hi");
    return lo + (hi - lo) * uniform();
  }

  // Standard normal via the Marsaglia polar method; the rejected draws are
  // part of the deterministic stream.
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
    const double k = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * k;
    has_spare_ = true;
    return u * k;
  }

  // Entries filled in row-major order.
  Matrix gaussian_matrix(Index rows, Index cols, double stddev = 1.0) {
    require_arg(rows >= 1 && cols >= 1,
                "SeededRng::gaussian_matrix: dimensions must be positive");
    require_arg(stddev >= 0.0,
                "SeededRng::gaussian_matrix: stddev must be >= 0");
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) m(i, j) = stddev * normal();
    return m;
  }

  Matrix uniform_matrix(Index rows, Index cols, double lo, double hi) {
    require_arg(rows >= 1 && cols >= 1,
                "SeededRng::uniform_matrix: dimensions must be positive");
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) m(i, j) = uniform(lo, hi);
    return m;
  }

 private:
  static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ (stream + 0x9E3779B97F4A7C15ULL));
  }

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace lowrank
