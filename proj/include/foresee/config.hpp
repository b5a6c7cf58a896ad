#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "foresee/engine.hpp"
#include "foresee/synth.hpp"
#include "foresee/theory.hpp"

namespace foresee {

/// 24 hours x 16 regions (a 4 x 4 grid) x 2 channels, 500 days, drift 0.2, noise 1, zero initial bias.
WorldConfig default_world();

/// {0, 0.05, ..., 0.95}.
std::vector<double> default_alpha_grid();

/// Everything a CLI invocation needs. Loaded from a single JSON document in
/// which every key is optional:
///
///   strategy, alphas, eta, eta_gamma, eta_kernel, kernel_len, gamma_init,
///   padding (zero|circular), loss_reduction (mean|sum),
///   ogd_order (literal|params_first), seed, trials, workers, alpha_grid,
///   region_floor,
///   world { hours, regions, channels, horizon, base_level, base_amplitude,
///           bias_init, drift_std, noise_std, drift_spatial_share,
///           noise_region_scale, noise_family (gaussian|uniform),
///           shift_day, shift_amount },
///   verify { ema_form (linear_gain|squared_gain), closed_form_offset,
///            t3_alphas, standard_errors, ema_relative }
///
/// world.bias_init and world.shift_amount are scalars applied to every entry.
/// Unknown keys are rejected.
struct RunConfig {
    Strategy strategy = Strategy::foresee();
    EngineConfig engine{};
    std::uint64_t seed = 1;
    std::size_t trials = 200;
    unsigned workers = 0;
    WorldConfig world = default_world();
    std::optional<std::size_t> shift_day;
    double shift_amount = 0.0;
    std::vector<double> alpha_grid = default_alpha_grid();
    VerifyOptions verify{};
    std::vector<double> t3_alphas{0.3, 0.7, 0.9};
    std::optional<double> region_floor;

    /// Throws ConfigError when any field is out of range.
    void validate() const;

    /// world with its seed replaced by `seed`.
    WorldConfig seeded_world() const;
};

RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::filesystem::path& path);

/// JSON document that parse_run_config maps back onto an equal configuration.
std::string dump_run_config(const RunConfig& config);

} // namespace foresee
