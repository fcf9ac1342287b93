#pragma once

#include <cmath>
#include <cstdint>

namespace twz {

// splitmix64: tiny, well-mixed 64-bit generator used both as the PRNG and as
// the stream-splitting hash. Deterministic across platforms.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seed splitting: one user-visible 64-bit seed fans out to independent
// streams keyed by (channel, index). The two keys are folded in through
// separate splitmix rounds so that streams for different trials/channels
// never overlap:
//   s0 = mix(seed ^ channel * C)   s_stream = mix(s0 ^ index * C)
// This is the documented scheme; trial i of channel c always sees the same
// draws regardless of thread count or evaluation order.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t channel, std::uint64_t index) {
    std::uint64_t s = seed ^ (channel * 0xd2b74407b1ce6e93ULL);
    std::uint64_t s0 = splitmix64(s);
    state_ = s0 ^ (index * 0xca5a826395121157ULL);
    (void)splitmix64(state_); // burn one output to decorrelate nearby indices
  }

  std::uint64_t next_u64() { return splitmix64(state_); }

  // Uniform in (0, 1]; never returns 0 so logs are safe.
  double next_double() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; one spare value cached.
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = next_double();
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

} // namespace twz
