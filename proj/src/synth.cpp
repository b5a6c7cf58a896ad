#include "foresee/synth.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "foresee/errors.hpp"
#include "foresee/random.hpp"

namespace foresee {

namespace {

constexpr std::uint64_t kDriftStream = 1;
constexpr std::uint64_t kNoiseStream = 2;

double draw(Rng& rng, NoiseFamily family)
{
    if (family == NoiseFamily::kUniform) {
        // Unit variance: U(-sqrt(3), sqrt(3)).
        return std::numbers::sqrt3 * (2.0 * rng.uniform01() - 1.0);
    }
    return rng.gaussian();
}

DayTensor draw_noise(const WorldConfig& cfg, Rng& rng)
{
    const auto& s = cfg.shape;
    std::vector<double> out(s.size());
    for (std::size_t h = 0; h < s.hours; ++h) {
        for (std::size_t r = 0; r < s.regions; ++r) {
            const double sd = cfg.noise_std * (cfg.noise_region_scale.empty() ? 1.0 : cfg.noise_region_scale[r]);
            for (std::size_t c = 0; c < s.channels; ++c) {
                out[(h * s.regions + r) * s.channels + c] = sd * draw(rng, cfg.family);
            }
        }
    }
    return DayTensor(s, std::move(out));
}

DayTensor draw_drift(const WorldConfig& cfg, Rng& rng)
{
    const auto& s = cfg.shape;
    const double shared_sd = cfg.drift_std * std::sqrt(cfg.drift_spatial_share);
    const double own_sd = cfg.drift_std * std::sqrt(1.0 - cfg.drift_spatial_share);
    std::vector<double> out(s.size());
    std::vector<double> shared(s.hours * s.channels, 0.0);
    if (cfg.drift_spatial_share > 0.0) {
        for (double& z : shared) {
            z = shared_sd * draw(rng, cfg.family);
        }
    }
    for (std::size_t h = 0; h < s.hours; ++h) {
        for (std::size_t r = 0; r < s.regions; ++r) {
            for (std::size_t c = 0; c < s.channels; ++c) {
                const double own = own_sd > 0.0 ? own_sd * draw(rng, cfg.family) : 0.0;
                out[(h * s.regions + r) * s.channels + c] = shared[h * s.channels + c] + own;
            }
        }
    }
    return DayTensor(s, std::move(out));
}

WorldTrace build(const WorldConfig& cfg, std::optional<std::size_t> shift_day, const DayTensor* shift_amount)
{
    cfg.validate();
    Rng drift_rng(derive_seed(cfg.seed, kDriftStream));
    Rng noise_rng(derive_seed(cfg.seed, kNoiseStream));

    WorldTrace trace;
    trace.records.reserve(cfg.horizon);
    trace.bias_path.reserve(cfg.horizon);
    trace.noise_path.reserve(cfg.horizon);
    trace.drift_path.reserve(cfg.horizon > 0 ? cfg.horizon - 1 : 0);
    if (shift_day) {
        trace.shift_day = shift_day;
        trace.shift_amount = *shift_amount;
    }

    DayTensor bias = cfg.initial_bias();
    for (std::size_t day = 1; day <= cfg.horizon; ++day) {
        if (shift_day && *shift_day == day) {
            bias = elementwise_add(bias, *shift_amount);
        }
        DayTensor base = base_signal(cfg, day);
        DayTensor noise = draw_noise(cfg, noise_rng);
        DayTensor actual = elementwise_add(elementwise_add(base, bias), noise);
        trace.records.push_back(DayRecord{static_cast<std::int64_t>(day), std::move(base), std::move(actual)});
        trace.bias_path.push_back(bias);
        trace.noise_path.push_back(std::move(noise));
        if (day < cfg.horizon) {
            DayTensor drift = draw_drift(cfg, drift_rng);
            bias = elementwise_add(bias, drift);
            trace.drift_path.push_back(std::move(drift));
        }
    }
    return trace;
}

} // namespace

void WorldConfig::validate() const
{
    shape.validate();
    if (horizon < 1) {
        throw ConfigError("world: horizon must be at least one day");
    }
    if (!(drift_std >= 0.0) || !(noise_std >= 0.0) || !std::isfinite(drift_std) || !std::isfinite(noise_std)) {
        throw ConfigError("world: drift_std and noise_std must be finite and non-negative");
    }
    if (!(drift_spatial_share >= 0.0 && drift_spatial_share <= 1.0)) {
        throw ConfigError("world: drift_spatial_share must lie in [0, 1]");
    }
    if (!noise_region_scale.empty()) {
        if (noise_region_scale.size() != shape.regions) {
            throw ConfigError("world: noise_region_scale needs one entry per region");
        }
        for (double s : noise_region_scale) {
            if (!(s >= 0.0) || !std::isfinite(s)) {
                throw ConfigError("world: noise_region_scale entries must be finite and non-negative");
            }
        }
    }
    if (!std::isfinite(base_level) || !std::isfinite(base_amplitude)) {
        throw ConfigError("world: base profile parameters must be finite");
    }
    if (bias_init && bias_init->shape() != shape) {
        throw ShapeError("world: bias_init shape " + bias_init->shape().str() + " differs from " + shape.str());
    }
}

DayTensor WorldConfig::initial_bias() const
{
    return bias_init ? *bias_init : DayTensor(shape);
}

double WorldConfig::noise_trace() const
{
    double per_hour_channel = 0.0;
    for (std::size_t r = 0; r < shape.regions; ++r) {
        const double scale = noise_region_scale.empty() ? 1.0 : noise_region_scale[r];
        per_hour_channel += scale * scale;
    }
    return noise_std * noise_std * per_hour_channel * static_cast<double>(shape.hours * shape.channels);
}

DayTensor base_signal(const WorldConfig& config, std::size_t day)
{
    const auto& s = config.shape;
    // Weekends run at 85% of weekday demand.
    const double weekday = ((day - 1) % 7) >= 5 ? 0.85 : 1.0;
    std::vector<double> out(s.size());
    for (std::size_t h = 0; h < s.hours; ++h) {
        const double phase = 2.0 * std::numbers::pi * (static_cast<double>(h) - 6.0) / static_cast<double>(s.hours);
        const double hourly = 1.0 + config.base_amplitude * std::sin(phase);
        for (std::size_t r = 0; r < s.regions; ++r) {
            const double regional = 1.0 + 0.5 * std::cos(static_cast<double>(r));
            for (std::size_t c = 0; c < s.channels; ++c) {
                const double channel = c == 0 ? 1.0 : 0.9;
                out[(h * s.regions + r) * s.channels + c] =
                    config.base_amplitude == 0.0 ? config.base_level
                                                 : config.base_level * hourly * regional * channel * weekday;
            }
        }
    }
    return DayTensor(s, std::move(out));
}

WorldTrace generate(const WorldConfig& config)
{
    return build(config, std::nullopt, nullptr);
}

WorldTrace regime_shift_world(const WorldConfig& config, std::size_t shift_day, const DayTensor& shift_amount)
{
    if (shift_day < 1 || shift_day > config.horizon) {
        std::ostringstream os;
        os << "regime_shift_world: shift day " << shift_day << " outside [1, " << config.horizon << "]";
        throw ConfigError(os.str());
    }
    if (shift_amount.shape() != config.shape) {
        throw ShapeError("regime_shift_world: shift shape " + shift_amount.shape().str() + " differs from " +
                         config.shape.str());
    }
    return build(config, shift_day, &shift_amount);
}

} // namespace foresee
