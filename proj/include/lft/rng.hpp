#pragma once

#include <cmath>
#include <cstdint>

namespace lft {

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

constexpr std::uint64_t splitmix64(std::uint64_t z) {
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace detail

/// Deterministic per-site random stream: xorshift64* seeded through
/// splitmix64 from (lattice seed, global site index). The same pair
/// produces the same sequence on every rank layout and platform.
class RngStream {
  public:
    /// Wraps a raw generator state. A zero state is mapped to 1.
    explicit RngStream(std::uint64_t state) : state_(state ? state : 1) {}

    static RngStream for_site(std::uint64_t seed, std::int64_t global_index) {
        const std::uint64_t mix =
            seed ^ (detail::kGolden * (static_cast<std::uint64_t>(global_index) + 1));
        return RngStream(detail::splitmix64(mix));
    }

    std::uint64_t uniform64() {
        std::uint64_t s = state_;
        s ^= s >> 12;
        s ^= s << 25;
        s ^= s >> 27;
        state_ = s;
        return s * 0x2545F4914F6CDD1Dull;
    }

    /// Uniform double in [0, 1), 53 significant bits.
    double uniform() {
        return static_cast<double>(uniform64() >> 11) * 0x1.0p-53;
    }

    /// Standard Gaussian via Box-Muller; the sine companion is cached.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 == 0.0)
            u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    std::uint64_t state() const { return state_; }

  private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace lft
