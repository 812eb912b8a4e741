#ifndef UQKIT_RANDGEN_RANDOM_HPP_
#define UQKIT_RANDGEN_RANDOM_HPP_

#include <cstdint>
#include <random>

namespace uqkit {

/*
 * RNG contract (version 1):
 *
 *   engine      std::mt19937_64
 *   streams     stream (seed, k) is seeded with splitmix64(seed ^ splitmix64(k))
 *   normal      std::normal_distribution<double>
 *   uniform     std::uniform_real_distribution<double>
 *
 * Every stochastic operation derives its streams from the master seed and a
 * task index, never from a shared generator, so parallel execution order
 * cannot change results. Draws are reproducible for a given standard
 * library; the distribution adaptors are not bit-identical across vendors.
 */
inline constexpr const char *kRngContract = "mt19937_64+splitmix64-streams/v1";

using Engine = std::mt19937_64;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t stream_seed(std::uint64_t seed,
                                           std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream));
}

inline Engine make_stream(std::uint64_t seed, std::uint64_t stream = 0) {
  return Engine(stream_seed(seed, stream));
}

// Tags for independent purposes that share one master seed.
enum class StreamPurpose : std::uint64_t {
  kSampling = 1,
  kFolds = 2,
  kRestarts = 3,
  kBootstrap = 4,
  kNoise = 5,
  kPermutation = 6,
};

// Derives a sub-seed so that two purposes never share a stream family.
inline constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                           StreamPurpose purpose) {
  return splitmix64(seed + 0x632BE59BD9B4E019ULL *
                               static_cast<std::uint64_t>(purpose));
}

}  // namespace uqkit

#endif  // UQKIT_RANDGEN_RANDOM_HPP_
