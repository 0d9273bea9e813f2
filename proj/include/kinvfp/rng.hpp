#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace kinvfp {

constexpr std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Counter-based stream: the n-th draw of stream `id` under `seed` is a pure
// function of (seed, id, n), so results do not depend on evaluation order.
class CounterRng {
  public:
    CounterRng(std::uint64_t seed, std::uint64_t id, std::uint64_t counter = 0)
        : key_(splitmix64(seed ^ splitmix64(id ^ 0x5851f42d4c957f2dULL))), counter_(counter) {}

    std::uint64_t next_u64() { return splitmix64(key_ + 0x9e3779b97f4a7c15ULL * counter_++); }

    // Uniform on (0,1), never exactly 0.
    double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    // Box-Muller; one pair per call, second value kept for the next call.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double r = std::sqrt(-2.0 * std::log(uniform()));
        double th = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(th);
        has_spare_ = true;
        return r * std::cos(th);
    }

    std::uint64_t counter() const { return counter_; }

  private:
    std::uint64_t key_;
    std::uint64_t counter_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Named substream ids derived from a label.
constexpr std::uint64_t stream_id(const char* label) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (; *label; ++label) h = (h ^ static_cast<unsigned char>(*label)) * 0x100000001b3ULL;
    return h;
}

}  // namespace kinvfp
