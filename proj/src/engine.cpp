#include "foresee/engine.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

#include "foresee/errors.hpp"

namespace foresee {

Strategy Strategy::fixed_ema(double alpha)
{
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw ConfigError("fixed_ema: alpha must lie in [0, 1]");
    }
    return {StrategyTag::kFixedEma, alpha};
}

Strategy Strategy::parse(std::string_view text)
{
    std::string key;
    for (char ch : text) {
        key.push_back(ch == '-' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
    if (key == "ori") {
        return ori();
    }
    if (key == "prev_day") {
        return prev_day();
    }
    if (key == "foresee") {
        return foresee();
    }
    if (key == "foresee_minus") {
        return foresee_minus();
    }
    constexpr std::string_view prefix = "fixed_ema:";
    if (key.starts_with(prefix)) {
        const std::string number = key.substr(prefix.size());
        double alpha = 0.0;
        const auto [ptr, ec] = std::from_chars(number.data(), number.data() + number.size(), alpha);
        if (ec != std::errc{} || ptr != number.data() + number.size()) {
            throw ConfigError("unparsable alpha in strategy '" + std::string(text) + "'");
        }
        return fixed_ema(alpha);
    }
    throw ConfigError("unknown strategy '" + std::string(text) + "'");
}

std::string Strategy::name() const
{
    switch (tag) {
    case StrategyTag::kOri:
        return "ori";
    case StrategyTag::kPrevDay:
        return "prev_day";
    case StrategyTag::kFixedEma: {
        std::ostringstream os;
        os << "fixed_ema:" << alpha;
        return os.str();
    }
    case StrategyTag::kForesee:
        return "foresee";
    case StrategyTag::kForeseeMinus:
        return "foresee_minus";
    }
    return "unknown";
}

void EngineConfig::validate() const
{
    if (alphas.empty()) {
        throw ConfigError("engine: at least one alpha is required");
    }
    for (double a : alphas) {
        if (!(a >= 0.0 && a <= 1.0)) {
            throw ConfigError("engine: alphas must lie in [0, 1]");
        }
    }
    if (!(eta > 0.0) || !std::isfinite(eta)) {
        throw ConfigError("engine: eta must be positive and finite");
    }
    smoothing.validate();
}

EngineConfig configure(const Strategy& strategy, const EngineConfig& base)
{
    EngineConfig cfg = base;
    auto plain = [&cfg](double alpha) {
        cfg.alphas = {alpha};
        cfg.smoothing_enabled = false;
        cfg.ogd_enabled = false;
    };
    switch (strategy.tag) {
    case StrategyTag::kOri:
        plain(1.0);
        break;
    case StrategyTag::kPrevDay:
        plain(0.0);
        break;
    case StrategyTag::kFixedEma:
        plain(strategy.alpha);
        break;
    case StrategyTag::kForesee:
        break;
    case StrategyTag::kForeseeMinus:
        cfg.smoothing_enabled = false;
        cfg.ogd_enabled = false;
        break;
    }
    return cfg;
}

EngineState init_engine(const EngineConfig& config, TensorShape shape, std::shared_ptr<const RegionGraph> graph)
{
    config.validate();
    shape.validate();
    if (config.smoothing.kernel.size() > shape.hours) {
        throw ConfigError("engine: kernel longer than the day");
    }
    EngineState state;
    state.config = config;
    state.ensemble = init_ensemble(config.alphas, config.eta, shape, config.reduction);
    state.smooth_params = config.smoothing;
    state.graph = graph ? std::move(graph) : std::make_shared<const RegionGraph>(shape.regions);
    if (state.graph->size() != shape.regions) {
        throw ShapeError("engine: graph has " + std::to_string(state.graph->size()) + " regions, stream has " +
                         std::to_string(shape.regions));
    }
    return state;
}

DayTensor predict(const EngineState& state, const DayTensor& base_pred)
{
    if (base_pred.shape() != state.shape()) {
        throw ShapeError("predict: base prediction shape " + base_pred.shape().str() + " differs from engine shape " +
                         state.shape().str());
    }
    // base + sum_i w_i delta_i equals sum_i w_i (base + delta_i) on the simplex,
    // and reproduces base exactly while every correction is zero.
    std::vector<double> out(base_pred.values().begin(), base_pred.values().end());
    std::vector<double> shift(out.size(), 0.0);
    const auto& ens = state.ensemble;
    for (std::size_t i = 0; i < ens.size(); ++i) {
        const double w = ens.weights[i];
        const auto delta = ens.experts[i].delta.values();
        for (std::size_t j = 0; j < shift.size(); ++j) {
            shift[j] += w * delta[j];
        }
    }
    for (std::size_t j = 0; j < out.size(); ++j) {
        out[j] += shift[j];
    }
    return DayTensor(base_pred.shape(), std::move(out));
}

namespace {

void gradient_step(EngineState& state, const DayRecord& record, const std::vector<double>& weights)
{
    if (!state.config.ogd_enabled || !state.cached_raw_err) {
        return;
    }
    EnsembleState previous = state.ensemble;
    previous.weights = weights;
    for (std::size_t i = 0; i < previous.size(); ++i) {
        previous.experts[i].delta = state.prev_deltas[i];
    }
    const auto grads = loss_gradients(*state.cached_raw_err, record.base_pred, record.actual, previous, *state.graph,
                                      state.smooth_params);
    state.smooth_params = ogd_step(state.smooth_params, grads);
}

} // namespace

EngineState observe(EngineState state, const DayRecord& record, const DayTensor& corrected_pred)
{
    if (record.base_pred.shape() != state.shape() || record.actual.shape() != state.shape()) {
        throw ShapeError("observe: day " + std::to_string(record.day_index) + " has shape " +
                         record.base_pred.shape().str() + "/" + record.actual.shape().str() + ", engine expects " +
                         state.shape().str());
    }
    require_same_shape(corrected_pred, record.actual, "observe");
    if (state.last_day_index && record.day_index <= *state.last_day_index) {
        throw DataError("observe: day " + std::to_string(record.day_index) + " does not follow day " +
                        std::to_string(*state.last_day_index));
    }

    const DayTensor raw_err = elementwise_sub(record.actual, record.base_pred);
    const auto preds = expert_predictions(state.ensemble, record.base_pred);
    const auto losses = expert_losses(state.ensemble, preds, record.actual);
    const std::vector<double> weights_today = state.ensemble.weights;

    if (state.config.ogd_order == OgdOrder::kParamsFirst) {
        gradient_step(state, record, weights_today);
    }

    const DayTensor smoothed =
        state.config.smoothing_enabled ? smooth(raw_err, *state.graph, state.smooth_params) : raw_err;

    std::vector<DayTensor> deltas_today;
    deltas_today.reserve(state.ensemble.size());
    for (const auto& expert : state.ensemble.experts) {
        deltas_today.push_back(expert.delta);
    }
    state.ensemble = update_deltas(state.ensemble, smoothed);

    if (state.config.ogd_order == OgdOrder::kLiteral) {
        gradient_step(state, record, weights_today);
    }

    state.ensemble.weights = hedge_update(weights_today, losses, state.ensemble.eta);

    state.cached_raw_err = raw_err;
    state.prev_deltas = std::move(deltas_today);
    state.last_expert_losses = losses;
    state.last_loss = reduced_loss(corrected_pred, record.actual, state.config.reduction);
    state.last_day_index = record.day_index;
    ++state.day_counter;
    return state;
}

void validate_stream(std::span<const DayRecord> records)
{
    if (records.empty()) {
        throw DataError("stream is empty");
    }
    const TensorShape shape = records.front().base_pred.shape();
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& rec = records[i];
        if (rec.base_pred.shape() != shape || rec.actual.shape() != shape) {
            throw DataError("stream: day " + std::to_string(rec.day_index) + " has shape " +
                            rec.base_pred.shape().str() + "/" + rec.actual.shape().str() + ", expected " +
                            shape.str());
        }
        if (i > 0 && rec.day_index <= records[i - 1].day_index) {
            throw DataError("stream: day " + std::to_string(rec.day_index) + " is out of order after day " +
                            std::to_string(records[i - 1].day_index));
        }
    }
}

StreamResult run_stream(std::span<const DayRecord> records, const Strategy& strategy, const EngineConfig& config,
                        std::shared_ptr<const RegionGraph> graph)
{
    validate_stream(records);
    EngineState state = init_engine(configure(strategy, config), records.front().base_pred.shape(), std::move(graph));

    StreamResult result;
    result.corrected.reserve(records.size());
    result.trace.reserve(records.size());
    MetricAccumulator total;
    for (const auto& record : records) {
        DayTensor corrected = predict(state, record.base_pred);
        state = observe(std::move(state), record, corrected);

        MetricAccumulator day;
        day.add(corrected, record.actual);
        total.add(corrected, record.actual);
        const auto day_report = day.report();

        TraceRow row;
        row.day_index = record.day_index;
        row.weights = state.ensemble.weights;
        row.gamma = state.smooth_params.gamma;
        row.kernel = state.smooth_params.kernel;
        row.mae = day_report.mae;
        row.rmse = day_report.rmse;
        row.loss = state.last_loss;
        row.expert_losses = state.last_expert_losses;
        result.trace.push_back(std::move(row));
        result.corrected.push_back(std::move(corrected));
    }
    result.report = total.report();
    result.final_state = std::move(state);
    return result;
}

} // namespace foresee
