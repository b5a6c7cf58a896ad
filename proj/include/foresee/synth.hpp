#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "foresee/engine.hpp"
#include "foresee/tensor.hpp"

namespace foresee {

enum class NoiseFamily { kGaussian, kUniform };

/// Synthetic world y_t = f(x_t) + g_t + eps_t with a random-walk bias g_{t+1} = g_t + v_t.
///
/// f is a fixed daily demand profile: `base_level` scaled by a one-peak
/// hourly curve of relative swing `base_amplitude`, varying smoothly by region
/// and dipping on weekends; base_amplitude = 0 gives the flat value base_level.
/// v_t and eps_t are independent, zero-mean, with per-entry standard
/// deviations drift_std and noise_std (times noise_region_scale[r] when set).
/// drift_spatial_share is the fraction of drift variance shared by every
/// region at a given (hour, channel); 0 gives independent entries.
struct WorldConfig {
    TensorShape shape{24, 4, 2};
    std::size_t horizon = 500;
    double base_level = 20.0;
    double base_amplitude = 0.5;
    std::optional<DayTensor> bias_init;
    double drift_std = 0.2;
    double noise_std = 1.0;
    double drift_spatial_share = 0.0;
    std::vector<double> noise_region_scale;
    NoiseFamily family = NoiseFamily::kGaussian;
    std::uint64_t seed = 1;

    void validate() const;

    /// g_1, zero when bias_init is unset.
    DayTensor initial_bias() const;

    /// Tr(Sigma) of the per-day noise covariance.
    double noise_trace() const;
};

struct WorldTrace {
    std::vector<DayRecord> records;
    std::vector<DayTensor> bias_path;   // g_1 .. g_T
    std::vector<DayTensor> drift_path;  // v_1 .. v_{T-1}
    std::vector<DayTensor> noise_path;  // eps_1 .. eps_T
    std::optional<std::size_t> shift_day;
    std::optional<DayTensor> shift_amount;
};

/// The base forecast f(x_t) of day `day` (1-based).
DayTensor base_signal(const WorldConfig& config, std::size_t day);

WorldTrace generate(const WorldConfig& config);

/// As generate, plus a one-off step shift_amount added to g at shift_day (1-based).
WorldTrace regime_shift_world(const WorldConfig& config, std::size_t shift_day, const DayTensor& shift_amount);

} // namespace foresee
