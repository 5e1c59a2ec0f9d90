#pragma once

#include <cstdint>

namespace terralabel {

// splitmix64 finalizer; also used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Tags naming every stochastic step. A stream is a pure function of
// (master seed, tag, index), never of execution order.
enum class StreamTag : std::uint64_t {
  kBlockPick = 1,
  kSplit = 2,
  kTree = 3,
  kSites = 4,
  kScene = 5,
  kCorrupt = 6,
  kCloud = 7,
  kSceneRun = 8,
};

class Rng64 {
 public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  constexpr explicit Rng64(std::uint64_t state = 0) : state_(state) {}

  static constexpr Rng64 stream(std::uint64_t master, StreamTag tag,
                                std::uint64_t index = 0) {
    const std::uint64_t t = mix64(static_cast<std::uint64_t>(tag) * kGamma);
    return Rng64(mix64(mix64(master ^ t) + index * kGamma));
  }

  constexpr std::uint64_t next() {
    state_ += kGamma;
    return mix64(state_);
  }

  // Uniform in [0, n) by modulo reduction; the bias is negligible for the
  // small n used here and keeps the draw trivially reproducible.
  constexpr std::uint64_t below(std::uint64_t n) { return next() % n; }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller. Each call consumes two draws and returns
  // the cosine branch only, so the stream position is always predictable.
  double normal();

  [[nodiscard]] constexpr std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

// Functional form of Rng64::next: returns the advanced generator and the draw.
struct RngStep {
  Rng64 rng;
  std::uint64_t value;
};
constexpr RngStep rng_next(Rng64 rng) {
  const std::uint64_t v = rng.next();
  return {rng, v};
}

// FNV-1a, used to fold text identifiers (scene ids) into seeds.
constexpr std::uint64_t fnv1a(const char* s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (; *s; ++s) {
    h ^= static_cast<unsigned char>(*s);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace terralabel
