#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mdvt {

/// Stream tags used to derive independent substreams from one master seed.
enum class Stream : std::uint64_t {
  kInit = 1,
  kProjection = 2,
  kSplit = 3,
  kShuffle = 4,
  kNegative = 5,
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t salt = 0);

/// Thin wrapper over mt19937_64 whose distributions are defined here rather
/// than by the standard library, so sequences are identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound); bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  /// Uniform double in the open interval (0, 1).
  double open_unit();

  /// Standard normal via Box-Muller (one value per call, no caching).
  double normal();

 private:
  std::mt19937_64 engine_;
};

template <typename Range>
void shuffle(Range& range, Rng& rng) {
  using std::swap;
  const auto n = static_cast<std::uint64_t>(std::size(range));
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = rng.below(i);
    swap(range[i - 1], range[j]);
  }
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace mdvt
