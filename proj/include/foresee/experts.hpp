#pragma once

#include <span>
#include <vector>

#include "foresee/tensor.hpp"

namespace foresee {

/// One exponential-moving-average corrector: delta <- alpha * delta + (1 - alpha) * err.
struct ExpertState {
    double alpha = 1.0;
    DayTensor delta;

    friend bool operator==(const ExpertState&, const ExpertState&) = default;
};

/// A set of EMA experts mixed with exponentially weighted (Hedge) weights.
struct EnsembleState {
    std::vector<ExpertState> experts;
    std::vector<double> weights;
    double eta = 10.0;
    LossReduction reduction = LossReduction::kMean;

    std::size_t size() const noexcept { return experts.size(); }
    const TensorShape& shape() const { return experts.front().delta.shape(); }

    friend bool operator==(const EnsembleState&, const EnsembleState&) = default;
};

inline const std::vector<double>& default_alphas()
{
    static const std::vector<double> alphas{0.7, 0.8, 0.9, 1.0};
    return alphas;
}

/// k experts with zero corrections and uniform weights.
EnsembleState init_ensemble(std::span<const double> alphas, double eta, TensorShape shape,
                            LossReduction reduction = LossReduction::kMean);

/// Per-expert corrected predictions base_pred + delta_i, in expert order.
std::vector<DayTensor> expert_predictions(const EnsembleState& ens, const DayTensor& base_pred);

/// Convex combination sum_i w_i * expert_preds[i].
DayTensor combine(const EnsembleState& ens, std::span<const DayTensor> expert_preds);

/// Per-expert losses against the realised day, using the ensemble's reduction.
std::vector<double> expert_losses(const EnsembleState& ens, std::span<const DayTensor> expert_preds,
                                  const DayTensor& actual);

/// Multiplicative-weights step w_i <- w_i exp(-eta L_i) / Z.
///
/// The smallest loss among positively weighted experts is subtracted before
/// exponentiation. This leaves the result unchanged mathematically and keeps
/// at least one numerator at its own w_i > 0.
std::vector<double> hedge_update(std::span<const double> weights, std::span<const double> losses, double eta);

EnsembleState update_weights(const EnsembleState& ens, std::span<const DayTensor> expert_preds,
                             const DayTensor& actual);

/// Applies the EMA recursion of every expert to the (smoothed) error. Weights are untouched.
EnsembleState update_deltas(const EnsembleState& ens, const DayTensor& smoothed_err);

} // namespace foresee
