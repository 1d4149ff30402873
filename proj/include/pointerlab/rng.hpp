#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace pointerlab {

/// Deterministic random stream identified by (seed, stream id). Trajectory i
/// of a run always uses stream i, so results do not depend on scheduling.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_(stream_id) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32),
                          0x9e3779b9u};
        engine_.seed(seq);
    }

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_; }
    std::mt19937_64& engine() noexcept { return engine_; }

    /// Uniform on (0, 1); never returns 0 so -log(u) is finite.
    double uniform() {
        double u;
        do {
            u = std::generate_canonical<double, 53>(engine_);
        } while (u <= 0.0);
        return u;
    }

    double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
    double exponential(double rate = 1.0) { return -std::log(uniform()) / rate; }
    double phase() { return 2.0 * std::numbers::pi * uniform(); }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
};

}  // namespace pointerlab
