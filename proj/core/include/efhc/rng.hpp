#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace efhc {

using Rng = std::mt19937_64;

// Named sub-streams so that every consumer of randomness draws from its own
// deterministic stream derived from a user-facing seed.
namespace stream {
inline constexpr std::uint64_t topology_base = 1;
inline constexpr std::uint64_t availability = 2;
inline constexpr std::uint64_t data = 3;
inline constexpr std::uint64_t partition = 4;
inline constexpr std::uint64_t policy = 5;
inline constexpr std::uint64_t sgd = 6;
inline constexpr std::uint64_t init = 7;
inline constexpr std::uint64_t bandwidth = 8;
inline constexpr std::uint64_t grad_bound = 9;
inline constexpr std::uint64_t replica = 10;
}  // namespace stream

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministically derives an independent seed from (seed, stream, index).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream_id,
                                 std::uint64_t index = 0) {
  return mix64(mix64(seed ^ mix64(stream_id)) ^ mix64(index));
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t index = 0) {
  return Rng(derive_seed(seed, stream_id, index));
}

/// Uniform double in [0, 1) built from the top 53 bits of the generator.
/// Bit-stable across standard libraries, unlike uniform_real_distribution.
inline double uniform_double(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n) via the multiply-shift reduction.
inline std::uint64_t bounded_int(Rng& rng, std::uint64_t n) {
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(rng()) * n) >> 64);
}

/// Standard normal draw (Box-Muller, no state carried between calls).
inline double normal(Rng& rng) {
  double u1 = 1.0 - uniform_double(rng);  // (0, 1]
  double u2 = uniform_double(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(bounded_int(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

/// First k entries of a random permutation of [0, n): sampling without
/// replacement via a partial Fisher-Yates pass.
inline std::vector<int> sample_without_replacement(Rng& rng, int n, int k) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < k; ++i) {
    int j = i + static_cast<int>(bounded_int(rng, static_cast<std::uint64_t>(n - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

}  // namespace efhc
