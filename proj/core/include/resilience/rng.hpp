#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace resilience {

/// Deterministic random stream. Wraps mt19937_64 (whose output sequence is
/// fixed by the standard) with hand-rolled uniform/normal transforms so draws
/// are identical across standard-library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform on [0, 1).
  double uniform();

  /// Standard normal (Box-Muller; keeps the spare deterministically).
  double normal();

  /// Uniform integer in [0, bound), bound > 0. Rejection-sampled, unbiased.
  std::uint64_t uniform_int(std::uint64_t bound);

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Derives an independent substream seed from a base seed, a stage tag and an
/// index. All pipeline randomness flows from one top-level seed through this.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                          std::uint64_t index = 0);

}  // namespace resilience
