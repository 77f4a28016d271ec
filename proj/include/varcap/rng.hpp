#pragma once

#include <cstdint>

namespace varcap {

/// Counter-based stream in the splitmix64 family: the state is derived from
/// (seed, sample, substream), so any (sample, DER) cell can be generated
/// independently of evaluation order or thread schedule.
class RngStream {
  public:
    static constexpr std::uint64_t shared_substream = ~0ull;

    RngStream(std::uint64_t seed, std::uint64_t sample, std::uint64_t substream) {
        state_ = mix(seed ^ mix(sample ^ mix(substream ^ 0x9e3779b97f4a7c15ull)));
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        return mix(state_);
    }

    /// Uniform on the open interval (0, 1).
    double uniform01() {
        const std::uint64_t bits = next_u64() >> 11;  // 53 bits
        return (static_cast<double>(bits) + 0.5) * (1.0 / 9007199254740992.0);
    }

  private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

}  // namespace varcap
