#include "foresee/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

#include "foresee/errors.hpp"

namespace foresee {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& object, std::string_view where, std::initializer_list<std::string_view> known)
{
    if (!object.is_object()) {
        throw ConfigError(std::string(where) + ": expected a JSON object");
    }
    for (const auto& item : object.items()) {
        bool found = false;
        for (auto k : known) {
            found = found || item.key() == k;
        }
        if (!found) {
            throw ConfigError(std::string(where) + ": unknown key '" + item.key() + "'");
        }
    }
}

template <typename T>
void read(const json& object, const char* key, T& out)
{
    if (const auto it = object.find(key); it != object.end()) {
        try {
            out = it->get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config key '") + key + "': " + e.what());
        }
    }
}

template <typename T>
std::optional<T> read_optional(const json& object, const char* key)
{
    std::optional<T> out;
    if (const auto it = object.find(key); it != object.end() && !it->is_null()) {
        T value{};
        read(object, key, value);
        out = value;
    }
    return out;
}

std::string lowercase(std::string s)
{
    for (auto& c : s) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return s;
}

template <typename Enum>
Enum read_enum(const json& object, const char* key, Enum fallback,
               std::initializer_list<std::pair<std::string_view, Enum>> choices)
{
    std::string text;
    read(object, key, text);
    if (text.empty()) {
        return fallback;
    }
    text = lowercase(text);
    for (const auto& [name, value] : choices) {
        if (text == name) {
            return value;
        }
    }
    throw ConfigError(std::string("config key '") + key + "': unsupported value '" + text + "'");
}

void parse_world(const json& j, RunConfig& cfg)
{
    reject_unknown_keys(j, "world",
                        {"hours", "regions", "channels", "horizon", "base_level", "base_amplitude", "bias_init",
                         "drift_std", "noise_std", "drift_spatial_share", "noise_region_scale", "noise_family",
                         "shift_day", "shift_amount"});
    auto& w = cfg.world;
    read(j, "hours", w.shape.hours);
    read(j, "regions", w.shape.regions);
    read(j, "channels", w.shape.channels);
    read(j, "horizon", w.horizon);
    read(j, "base_level", w.base_level);
    read(j, "base_amplitude", w.base_amplitude);
    read(j, "drift_std", w.drift_std);
    read(j, "noise_std", w.noise_std);
    read(j, "drift_spatial_share", w.drift_spatial_share);
    read(j, "noise_region_scale", w.noise_region_scale);
    w.family = read_enum(j, "noise_family", w.family,
                         {{"gaussian", NoiseFamily::kGaussian}, {"uniform", NoiseFamily::kUniform}});
    w.shape.validate();
    if (const auto bias = read_optional<double>(j, "bias_init")) {
        w.bias_init = DayTensor::filled(w.shape, *bias);
    } else {
        w.bias_init.reset();
    }
    cfg.shift_day = read_optional<std::size_t>(j, "shift_day");
    read(j, "shift_amount", cfg.shift_amount);
}

void parse_verify(const json& j, RunConfig& cfg)
{
    reject_unknown_keys(j, "verify",
                        {"ema_form", "closed_form_offset", "t3_alphas", "standard_errors", "ema_relative"});
    cfg.verify.ema_form =
        read_enum(j, "ema_form", cfg.verify.ema_form,
                  {{"linear_gain", EmaClosedForm::kLinearGain}, {"squared_gain", EmaClosedForm::kSquaredGain}});
    read(j, "closed_form_offset", cfg.verify.closed_form_offset);
    read(j, "t3_alphas", cfg.t3_alphas);
    read(j, "standard_errors", cfg.verify.tolerances.standard_errors);
    read(j, "ema_relative", cfg.verify.tolerances.ema_relative);
}

const char* padding_text(Padding p)
{
    return p == Padding::kZero ? "zero" : "circular";
}

} // namespace

WorldConfig default_world()
{
    WorldConfig w;
    w.shape = TensorShape{24, 16, 2};
    w.horizon = 500;
    w.drift_std = 0.2;
    w.noise_std = 1.0;
    return w;
}

std::vector<double> default_alpha_grid()
{
    std::vector<double> grid;
    for (int i = 0; i < 20; ++i) {
        grid.push_back(i * 0.05);
    }
    return grid;
}

void RunConfig::validate() const
{
    engine.validate();
    world.validate();
    if (trials < 1) {
        throw ConfigError("trials must be at least 1");
    }
    if (shift_day && (*shift_day < 1 || *shift_day > world.horizon)) {
        throw ConfigError("world.shift_day must lie in [1, horizon]");
    }
    if (!std::isfinite(shift_amount)) {
        throw ConfigError("world.shift_amount must be finite");
    }
    if (alpha_grid.empty()) {
        throw ConfigError("alpha_grid must not be empty");
    }
    for (double a : alpha_grid) {
        if (!(a >= 0.0 && a <= 1.0)) {
            throw ConfigError("alpha_grid values must lie in [0, 1]");
        }
    }
    for (double a : t3_alphas) {
        if (!(a >= 0.0 && a < 1.0)) {
            throw ConfigError("verify.t3_alphas values must lie in [0, 1)");
        }
    }
    if (!std::isfinite(verify.closed_form_offset)) {
        throw ConfigError("verify.closed_form_offset must be finite");
    }
    if (!(verify.tolerances.standard_errors > 0.0) || !(verify.tolerances.ema_relative > 0.0)) {
        throw ConfigError("verify tolerances must be positive");
    }
    if (region_floor && !std::isfinite(*region_floor)) {
        throw ConfigError("region_floor must be finite");
    }
}

WorldConfig RunConfig::seeded_world() const
{
    WorldConfig w = world;
    w.seed = seed;
    return w;
}

RunConfig parse_run_config(std::string_view json_text)
{
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    reject_unknown_keys(j, "config",
                        {"strategy", "alphas", "eta", "eta_gamma", "eta_kernel", "kernel_len", "gamma_init", "padding",
                         "loss_reduction", "ogd_order", "seed", "trials", "workers", "alpha_grid", "region_floor",
                         "world", "verify"});
    RunConfig cfg;
    if (const auto strategy = read_optional<std::string>(j, "strategy")) {
        try {
            cfg.strategy = Strategy::parse(*strategy);
        } catch (const Error& e) {
            throw ConfigError(std::string("config key 'strategy': ") + e.what());
        }
    }
    auto& e = cfg.engine;
    read(j, "alphas", e.alphas);
    read(j, "eta", e.eta);
    read(j, "eta_gamma", e.smoothing.eta_gamma);
    read(j, "eta_kernel", e.smoothing.eta_kernel);
    read(j, "gamma_init", e.smoothing.gamma);
    if (const auto len = read_optional<std::size_t>(j, "kernel_len")) {
        if (*len % 2 == 0) {
            throw ConfigError("config key 'kernel_len': must be odd");
        }
        e.smoothing.kernel = delta_kernel(*len);
    }
    e.smoothing.padding =
        read_enum(j, "padding", e.smoothing.padding, {{"zero", Padding::kZero}, {"circular", Padding::kCircular}});
    e.reduction = read_enum(j, "loss_reduction", e.reduction,
                            {{"mean", LossReduction::kMean}, {"sum", LossReduction::kSum}});
    e.ogd_order = read_enum(j, "ogd_order", e.ogd_order,
                            {{"literal", OgdOrder::kLiteral}, {"params_first", OgdOrder::kParamsFirst}});
    read(j, "seed", cfg.seed);
    read(j, "trials", cfg.trials);
    read(j, "workers", cfg.workers);
    read(j, "alpha_grid", cfg.alpha_grid);
    cfg.region_floor = read_optional<double>(j, "region_floor");
    if (const auto it = j.find("world"); it != j.end()) {
        parse_world(*it, cfg);
    }
    if (const auto it = j.find("verify"); it != j.end()) {
        parse_verify(*it, cfg);
    }
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_run_config(text.str());
}

std::string dump_run_config(const RunConfig& cfg)
{
    const auto& e = cfg.engine;
    const auto& w = cfg.world;
    json j;
    j["strategy"] = cfg.strategy.name();
    j["alphas"] = e.alphas;
    j["eta"] = e.eta;
    j["eta_gamma"] = e.smoothing.eta_gamma;
    j["eta_kernel"] = e.smoothing.eta_kernel;
    j["kernel_len"] = e.smoothing.kernel.size();
    j["gamma_init"] = e.smoothing.gamma;
    j["padding"] = padding_text(e.smoothing.padding);
    j["loss_reduction"] = e.reduction == LossReduction::kMean ? "mean" : "sum";
    j["ogd_order"] = e.ogd_order == OgdOrder::kLiteral ? "literal" : "params_first";
    j["seed"] = cfg.seed;
    j["trials"] = cfg.trials;
    j["workers"] = cfg.workers;
    j["alpha_grid"] = cfg.alpha_grid;
    j["region_floor"] = cfg.region_floor ? json(*cfg.region_floor) : json(nullptr);

    json world = {{"hours", w.shape.hours},
                  {"regions", w.shape.regions},
                  {"channels", w.shape.channels},
                  {"horizon", w.horizon},
                  {"base_level", w.base_level},
                  {"base_amplitude", w.base_amplitude},
                  {"drift_std", w.drift_std},
                  {"noise_std", w.noise_std},
                  {"drift_spatial_share", w.drift_spatial_share},
                  {"noise_region_scale", w.noise_region_scale},
                  {"noise_family", w.family == NoiseFamily::kGaussian ? "gaussian" : "uniform"},
                  {"shift_day", cfg.shift_day ? json(*cfg.shift_day) : json(nullptr)},
                  {"shift_amount", cfg.shift_amount}};
    // Only a uniform initial bias is expressible in the file format.
    world["bias_init"] = w.bias_init ? json(w.bias_init->values().empty() ? 0.0 : w.bias_init->values()[0]) : json(nullptr);
    j["world"] = std::move(world);
    j["verify"] = {{"ema_form", cfg.verify.ema_form == EmaClosedForm::kLinearGain ? "linear_gain" : "squared_gain"},
                   {"closed_form_offset", cfg.verify.closed_form_offset},
                   {"t3_alphas", cfg.t3_alphas},
                   {"standard_errors", cfg.verify.tolerances.standard_errors},
                   {"ema_relative", cfg.verify.tolerances.ema_relative}};
    return j.dump(2);
}

} // namespace foresee
