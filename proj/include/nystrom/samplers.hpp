#pragma once

#include <nystrom/errors.hpp>
#include <nystrom/points.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace nystrom {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ splitmix64(b + 0x632be59bd9b4e019ULL));
}

/// FNV-1a, for deriving streams from names.
inline std::uint64_t hash_string(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// (seed, stream) pair naming one reproducible random sequence.
struct SeededGenerator {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  std::uint64_t key() const { return hash_combine(seed, stream); }

  /// Child stream; distinct tags give independent sequences.
  SeededGenerator derive(std::uint64_t tag) const { return {seed, hash_combine(stream, tag)}; }
  SeededGenerator derive(std::string_view tag) const { return derive(hash_string(tag)); }

  std::mt19937_64 engine() const { return std::mt19937_64(key()); }
};

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

/// Beta(2,5) CDF: 1 - (1-x)^6 - 6x(1-x)^5, density 30 x (1-x)^4.
inline double beta25_cdf(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double y = 1.0 - x;
  const double y5 = y * y * y * y * y;
  return 1.0 - y5 * y - 6.0 * x * y5;
}

/// Inverse CDF by 30 bisection steps.
inline double beta25_quantile(double u) {
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 30; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (beta25_cdf(mid) < u) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

inline std::vector<std::uint32_t> first_primes(int count) {
  std::vector<std::uint32_t> primes;
  for (std::uint32_t c = 2; static_cast<int>(primes.size()) < count; ++c) {
    bool prime = true;
    for (auto p : primes) {
      if (p * p > c) break;
      if (c % p == 0) {
        prime = false;
        break;
      }
    }
    if (prime) primes.push_back(c);
  }
  return primes;
}

/// Van der Corput radical inverse of `index` in `base`.
inline double radical_inverse(std::uint64_t index, std::uint32_t base) {
  const double inv = 1.0 / base;
  double factor = inv;
  double result = 0.0;
  while (index > 0) {
    result += static_cast<double>(index % base) * factor;
    index /= base;
    factor *= inv;
  }
  return result;
}

inline constexpr int kOwenDigits = 32;

/// Radical inverse with nested uniform (Owen) scrambling. The permutation
/// applied to digit k is a hash of (key, digits 1..k-1), so every subtree of
/// the digit tree gets its own independent permutation.
inline double owen_scrambled_radical_inverse(std::uint64_t index, std::uint32_t base,
                                             std::uint64_t key) {
  const double inv = 1.0 / base;
  double factor = inv;
  double result = 0.0;
  std::uint64_t path = key;
  std::vector<std::uint32_t> perm(base);
  for (int k = 0; k < kOwenDigits && factor > 0x1.0p-64; ++k) {
    const auto digit = static_cast<std::uint32_t>(index % base);
    index /= base;
    // Fisher-Yates on {0..base-1} driven by the node hash.
    std::iota(perm.begin(), perm.end(), 0U);
    std::uint64_t h = path;
    for (std::uint32_t i = base - 1; i > 0; --i) {
      h = splitmix64(h);
      std::swap(perm[i], perm[h % (i + 1)]);
    }
    result += static_cast<double>(perm[digit]) * factor;
    path = hash_combine(path, digit + 1);
    factor *= inv;
  }
  return std::min(result, std::nextafter(1.0, 0.0));
}

enum class SampleKind { iid_uniform, grid, halton, halton_owen, beta25 };

inline std::string to_string(SampleKind kind) {
  switch (kind) {
    case SampleKind::iid_uniform: return "iid-uniform";
    case SampleKind::grid: return "grid";
    case SampleKind::halton: return "halton";
    case SampleKind::halton_owen: return "halton-owen";
    case SampleKind::beta25: return "beta25";
  }
  return "unknown";
}

/// n points in [0,1]^d.
///
/// - grid: {i/n : i = 1..n}, d = 1 only;
/// - halton: unscrambled, indices 1..n, bases = first d primes;
/// - halton-owen: Owen-scrambled Halton, indices 0..n-1;
/// - beta25: coordinatewise i.i.d. Beta(2,5).
inline PointSet generate(SampleKind kind, Eigen::Index n, int d, const SeededGenerator& gen) {
  if (n < 0 || d < 1) throw InvalidArgument("generate: need n >= 0 and d >= 1");
  PointSet X(n, d);
  switch (kind) {
    case SampleKind::iid_uniform: {
      auto eng = gen.engine();
      for (Eigen::Index i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) X(i, j) = uniform01(eng);
      break;
    }
    case SampleKind::beta25: {
      auto eng = gen.engine();
      for (Eigen::Index i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) X(i, j) = beta25_quantile(uniform01(eng));
      break;
    }
    case SampleKind::grid: {
      if (d != 1) throw InvalidArgument("grid sampling is only supported for d = 1");
      for (Eigen::Index i = 0; i < n; ++i) {
        X(i, 0) = static_cast<double>(i + 1) / static_cast<double>(n);
      }
      break;
    }
    case SampleKind::halton:
    case SampleKind::halton_owen: {
      const auto bases = first_primes(d);
      for (int j = 0; j < d; ++j) {
        const std::uint64_t key = hash_combine(gen.key(), static_cast<std::uint64_t>(j));
        for (Eigen::Index i = 0; i < n; ++i) {
          X(i, j) = kind == SampleKind::halton
                        ? radical_inverse(static_cast<std::uint64_t>(i + 1), bases[j])
                        : owen_scrambled_radical_inverse(static_cast<std::uint64_t>(i), bases[j],
                                                         key);
        }
      }
      break;
    }
  }
  return X;
}

/// Z = H followed by 20n i.i.d. Beta(2,5)^d points.
inline PointSet landmark_mix(const PointSet& H, Eigen::Index n, const SeededGenerator& gen) {
  if (H.rows() == 0) throw InvalidArgument("landmark_mix: H must be nonempty");
  return concat_rows(H, generate(SampleKind::beta25, 20 * n, static_cast<int>(H.cols()), gen));
}

}  // namespace nystrom
