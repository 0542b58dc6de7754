#pragma once

// Portable seeded generators. xoshiro256** supplies the draws, SplitMix64
// expands a 64-bit seed into generator state. Both have published reference
// outputs, so a given seed yields the same sequence on every platform.

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string_view>

namespace manet {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

class Xoshiro256StarStar {
 public:
  using State = std::array<std::uint64_t, 4>;

  explicit Xoshiro256StarStar(const State& state) : s_(state) {
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) {
      throw std::invalid_argument("xoshiro256** state must not be all zero");
    }
  }

  static Xoshiro256StarStar from_seed(std::uint64_t seed) {
    SplitMix64 mix(seed);
    State st{};
    for (auto& w : st) w = mix.next();
    return Xoshiro256StarStar(st);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// 53-bit uniform double on [0, 1).
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  State s_;
};

/// Subsystems that consume randomness. Each gets its own stream so that a
/// change in one subsystem's draw count never shifts another's sequence.
enum class StreamLabel : std::uint8_t { kMobility, kTraffic, kExtGate, kMacJitter, kHello };

constexpr std::string_view to_string(StreamLabel label) {
  switch (label) {
    case StreamLabel::kMobility: return "mobility";
    case StreamLabel::kTraffic: return "traffic";
    case StreamLabel::kExtGate: return "ext-gate";
    case StreamLabel::kMacJitter: return "mac-jitter";
    case StreamLabel::kHello: return "hello";
  }
  return "?";
}

/// One labelled stream derived from (seed, label, index). `index` separates
/// per-node streams that share a label (mobility is drawn per node).
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, StreamLabel label, std::uint64_t index = 0)
      : gen_(Xoshiro256StarStar::from_seed(derive(seed, label, index))), label_(label) {}

  StreamLabel label() const { return label_; }
  std::uint64_t draws() const { return draws_; }

  std::uint64_t next_u64() {
    ++draws_;
    return gen_.next();
  }

  /// Uniform real on [lo, hi).
  double uniform(double lo, double hi) {
    if (!(lo < hi)) throw std::logic_error("uniform requires lo < hi");
    ++draws_;
    const double v = lo + gen_.next_unit() * (hi - lo);
    // lo + u*(hi-lo) can round up to hi for u just below 1.
    return v < hi ? v : std::nextafter(hi, lo);
  }

  /// Uniform integer on [0, n), rejection-sampled to avoid modulo bias.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::logic_error("below requires n > 0");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

 private:
  static std::uint64_t derive(std::uint64_t seed, StreamLabel label, std::uint64_t index) {
    SplitMix64 mix(seed);
    std::uint64_t h = mix.next();
    h ^= (static_cast<std::uint64_t>(label) + 1) * 0xD6E8FEB86659FD93ULL;
    h = SplitMix64(h).next();
    h ^= (index + 1) * 0x9E3779B97F4A7C15ULL;
    return SplitMix64(h).next();
  }

  Xoshiro256StarStar gen_;
  StreamLabel label_;
  std::uint64_t draws_ = 0;
};

}  // namespace manet
