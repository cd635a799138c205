#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string>
#include <string_view>

#include "wncs/linalg.hpp"

namespace wncs {

// Named substream roles. Values are part of the reproducibility contract;
// append new roles, never renumber.
enum class StreamRole : std::uint64_t {
  kPlantNoise = 1,
  kChannel = 2,
  kReceiverNoise = 3,
  kWarmup = 4,
  kTraining = 5,
  kPolicy = 6,
  kTuning = 7,
};

// Deterministic random stream: mt19937_64 seeded through a SplitMix64 key
// derivation. Uniform and normal conversions are done here rather than with
// <random> distributions so draw sequences do not depend on the standard
// library vendor.
class RngStream {
 public:
  static constexpr std::string_view kAlgorithm = "mt19937_64+splitmix64-derive";

  explicit RngStream(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  std::string_view algorithm() const { return kAlgorithm; }

  // Independent child stream keyed by an ordered tuple of integers.
  RngStream derive(std::initializer_list<std::uint64_t> keys) const;
  RngStream derive(StreamRole role, std::uint64_t index = 0) const;

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  double normal();
  Vector normal_vector(Eigen::Index n);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

// Stable 64-bit hash of a label (FNV-1a), for keying streams by name.
std::uint64_t hash_label(std::string_view label);

}  // namespace wncs
