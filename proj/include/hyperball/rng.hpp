#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace hyperball {

// Deterministic random stream. The distributions are implemented by hand
// because the std:: distribution algorithms are implementation-defined:
// a fixed seed must reproduce the same draws on every platform.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    // Uniform in [0, 1), 53 significant bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    // Standard normal via Box-Muller.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform01();
        } while (u1 <= 0.0);
        const double u2 = uniform01();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        constexpr double two_pi = 6.283185307179586476925286766559;
        spare_ = mag * std::sin(two_pi * u2);
        have_spare_ = true;
        return mag * std::cos(two_pi * u2);
    }

    std::uint64_t next_u64() { return engine_(); }

    // Independent child stream; role keys distinct subsystems.
    RandomStream fork(std::uint64_t role) const {
        std::mt19937_64 probe = engine_;
        const std::uint64_t base = probe();
        return RandomStream(base ^ (role * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL));
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace hyperball
