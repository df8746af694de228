#pragma once

#include <cmath>
#include <cstdint>

namespace misspec {

// Counter-based generator: draw i of stream s under seed k is a pure
// function mix(k, s, i). Streams let one trajectory own independent
// sources for consequence draws (stream 0) and tie-breaks (stream 1)
// without coupling their consumption counts.
class CounterRng {
 public:
  static constexpr std::uint64_t kConsequenceStream = 0;
  static constexpr std::uint64_t kTieBreakStream = 1;
  static constexpr std::uint64_t kSamplingStream = 2;

  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix64(seed ^ (stream * 0x9e3779b97f4a7c15ULL) ^ 0x853c49e6748fea9bULL)) {}

  std::uint64_t next_u64() { return mix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL); }

  // uniform on [0,1), 53-bit resolution
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform on (0,1], safe under log()
  double next_open_double() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  // Box-Muller. Consumption order: u1 = next_open_double(), u2 = next_double();
  // returns r*cos(2*pi*u2) first, caches r*sin(2*pi*u2) for the next call.
  double next_normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = next_open_double();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

  // uniform index in [0, n)
  std::size_t next_index(std::size_t n) {
    return static_cast<std::size_t>(next_double() * static_cast<double>(n)) % n;
  }

 private:
  static std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

// Paired streams owned by a single trajectory.
struct TrajectoryRng {
  CounterRng consequence;
  CounterRng tie_break;
  explicit TrajectoryRng(std::uint64_t seed)
      : consequence(seed, CounterRng::kConsequenceStream),
        tie_break(seed, CounterRng::kTieBreakStream) {}
};

}  // namespace misspec
