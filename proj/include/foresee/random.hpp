#pragma once

#include <cstdint>
#include <random>

namespace foresee {

/// SplitMix64 finaliser; used to decorrelate derived seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed for sub-stream `stream` of a run seeded with `base`.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept;

/// Platform-reproducible random source.
///
/// Bits come from std::mt19937_64, whose output sequence the C++ standard
/// fixes exactly. The distribution layer is written out here because the
/// standard distributions are implementation-defined:
///   uniform01: top 53 bits of one draw, scaled by 2^-53, in [0, 1);
///   gaussian:  Marsaglia polar method on pairs of (2u - 1), second deviate cached.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    double uniform01();
    double gaussian();

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace foresee
