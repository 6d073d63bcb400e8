#pragma once

#include <cstdint>
#include <random>

namespace ctal {

// splitmix64: cheap, well-mixed stream seeding.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derive an independent stream seed from (global seed, entity id, epoch/step).
// Plans stay identical regardless of how work is distributed over threads.
inline uint64_t split_seed(uint64_t global, uint64_t id, uint64_t epoch = 0) {
  return mix64(mix64(global ^ mix64(id)) ^ mix64(epoch + 0x51ed2701ULL));
}

inline uint64_t hash_str(const std::string& s, uint64_t seed = 0) {
  uint64_t h = 1469598103934665603ULL ^ seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

using Rng = std::mt19937_64;

inline double uniform_real(Rng& rng, double lo = 0.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi) {  // inclusive bounds
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline bool bernoulli(Rng& rng, double p) {
  return std::bernoulli_distribution(p)(rng);
}

inline double normal(Rng& rng, double mean = 0.0, double stddev = 1.0) {
  return std::normal_distribution<double>(mean, stddev)(rng);
}

}  // namespace ctal
