#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "foresee/experts.hpp"
#include "foresee/smoothing.hpp"
#include "foresee/tensor.hpp"

namespace foresee {

/// One day of a stream: the base model's forecast and what actually happened.
struct DayRecord {
    std::int64_t day_index = 0;
    DayTensor base_pred;
    DayTensor actual;

    friend bool operator==(const DayRecord&, const DayRecord&) = default;
};

enum class StrategyTag { kOri, kPrevDay, kFixedEma, kForesee, kForeseeMinus };

/// Which corrector a stream is run with. FIXED_EMA carries its alpha.
struct Strategy {
    StrategyTag tag = StrategyTag::kForesee;
    double alpha = 0.0;

    static Strategy ori() { return {StrategyTag::kOri, 0.0}; }
    static Strategy prev_day() { return {StrategyTag::kPrevDay, 0.0}; }
    static Strategy fixed_ema(double alpha);
    static Strategy foresee() { return {StrategyTag::kForesee, 0.0}; }
    static Strategy foresee_minus() { return {StrategyTag::kForeseeMinus, 0.0}; }

    /// Accepts ori, prev_day, fixed_ema:<alpha>, foresee, foresee_minus (case-insensitive, '-' or '_').
    static Strategy parse(std::string_view text);
    std::string name() const;

    friend bool operator==(const Strategy&, const Strategy&) = default;
};

/// Within-day placement of the (gamma, K) gradient step.
///  kLiteral:     smooth today's error with the current parameters, then step.
///  kParamsFirst: step first, then smooth today's error with the new parameters.
enum class OgdOrder { kLiteral, kParamsFirst };

struct EngineConfig {
    std::vector<double> alphas = default_alphas();
    double eta = 10.0;
    LossReduction reduction = LossReduction::kMean;
    SmoothParams smoothing{};
    bool smoothing_enabled = true;
    bool ogd_enabled = true;
    OgdOrder ogd_order = OgdOrder::kLiteral;

    void validate() const;
};

/// Engine configuration that realises `strategy`, starting from `base`.
EngineConfig configure(const Strategy& strategy, const EngineConfig& base = {});

struct EngineState {
    EngineConfig config;
    EnsembleState ensemble;
    SmoothParams smooth_params;
    std::shared_ptr<const RegionGraph> graph;
    /// Raw error of the last observed day; absent before the first observation.
    std::optional<DayTensor> cached_raw_err;
    /// Expert corrections in force before cached_raw_err was folded in.
    std::vector<DayTensor> prev_deltas;
    std::int64_t day_counter = 0;
    std::optional<std::int64_t> last_day_index;
    /// Per-expert losses and the combined loss of the most recent observation.
    std::vector<double> last_expert_losses;
    double last_loss = 0.0;

    const TensorShape& shape() const { return ensemble.shape(); }
};

/// Fresh engine. A null graph means every region is isolated.
EngineState init_engine(const EngineConfig& config, TensorShape shape,
                        std::shared_ptr<const RegionGraph> graph = nullptr);

/// Corrected forecast base_pred + sum_i w_i delta_i. Does not touch the state.
DayTensor predict(const EngineState& state, const DayTensor& base_pred);

/// Folds in the realised day: error, smoothing, correction updates, the
/// (gamma, K) gradient step and the expert weight update.
EngineState observe(EngineState state, const DayRecord& record, const DayTensor& corrected_pred);

struct TraceRow {
    std::int64_t day_index = 0;
    std::vector<double> weights;
    double gamma = 0.0;
    std::vector<double> kernel;
    double mae = 0.0;
    double rmse = 0.0;
    double loss = 0.0;
    std::vector<double> expert_losses;
};

struct StreamResult {
    std::vector<DayTensor> corrected;
    MetricReport report;
    std::vector<TraceRow> trace;
    EngineState final_state;
};

/// Checks shape consistency and strictly increasing day indices.
void validate_stream(std::span<const DayRecord> records);

StreamResult run_stream(std::span<const DayRecord> records, const Strategy& strategy, const EngineConfig& config = {},
                        std::shared_ptr<const RegionGraph> graph = nullptr);

} // namespace foresee
