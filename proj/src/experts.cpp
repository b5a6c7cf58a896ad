#include "foresee/experts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "foresee/errors.hpp"

namespace foresee {

namespace {

void require_expert_count(const EnsembleState& ens, std::size_t n, const char* context)
{
    if (n != ens.size()) {
        std::ostringstream os;
        os << context << ": expected " << ens.size() << " expert predictions, got " << n;
        throw ShapeError(os.str());
    }
}

} // namespace

EnsembleState init_ensemble(std::span<const double> alphas, double eta, TensorShape shape, LossReduction reduction)
{
    if (alphas.empty()) {
        throw ConfigError("init_ensemble: at least one alpha is required");
    }
    if (!(eta > 0.0) || !std::isfinite(eta)) {
        throw ConfigError("init_ensemble: eta must be a positive finite number");
    }
    EnsembleState ens;
    ens.eta = eta;
    ens.reduction = reduction;
    const DayTensor zero(shape);
    for (double alpha : alphas) {
        if (!(alpha >= 0.0 && alpha <= 1.0)) {
            std::ostringstream os;
            os << "init_ensemble: alpha " << alpha << " outside [0, 1]";
            throw ConfigError(os.str());
        }
        ens.experts.push_back(ExpertState{alpha, zero});
    }
    ens.weights.assign(alphas.size(), 1.0 / static_cast<double>(alphas.size()));
    return ens;
}

std::vector<DayTensor> expert_predictions(const EnsembleState& ens, const DayTensor& base_pred)
{
    std::vector<DayTensor> out;
    out.reserve(ens.size());
    for (const auto& expert : ens.experts) {
        out.push_back(elementwise_add(base_pred, expert.delta));
    }
    return out;
}

DayTensor combine(const EnsembleState& ens, std::span<const DayTensor> expert_preds)
{
    require_expert_count(ens, expert_preds.size(), "combine");
    const TensorShape shape = expert_preds.front().shape();
    std::vector<double> out(shape.size(), 0.0);
    for (std::size_t i = 0; i < expert_preds.size(); ++i) {
        if (expert_preds[i].shape() != shape) {
            throw ShapeError("combine: expert " + std::to_string(i) + " has shape " + expert_preds[i].shape().str() +
                             ", expected " + shape.str());
        }
        const double w = ens.weights[i];
        const auto values = expert_preds[i].values();
        for (std::size_t j = 0; j < out.size(); ++j) {
            out[j] += w * values[j];
        }
    }
    return DayTensor(shape, std::move(out));
}

std::vector<double> expert_losses(const EnsembleState& ens, std::span<const DayTensor> expert_preds,
                                  const DayTensor& actual)
{
    require_expert_count(ens, expert_preds.size(), "expert_losses");
    std::vector<double> losses;
    losses.reserve(expert_preds.size());
    for (const auto& pred : expert_preds) {
        losses.push_back(reduced_loss(pred, actual, ens.reduction));
    }
    return losses;
}

std::vector<double> hedge_update(std::span<const double> weights, std::span<const double> losses, double eta)
{
    if (weights.size() != losses.size()) {
        throw ShapeError("hedge_update: weight and loss counts differ");
    }
    for (std::size_t i = 0; i < losses.size(); ++i) {
        if (!std::isfinite(losses[i])) {
            throw Error("hedge_update: non-finite loss for expert " + std::to_string(i));
        }
    }
    // Shift by the smallest loss among experts that still carry weight, so the
    // best of them keeps numerator w_i * exp(0) = w_i > 0.
    double min_loss = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] > 0.0) {
            min_loss = std::min(min_loss, losses[i]);
        }
    }
    if (!std::isfinite(min_loss)) {
        throw Error("hedge_update: no expert carries positive weight");
    }
    std::vector<double> next(weights.size());
    double total = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        // Zero weight stays zero; exp of a negative shifted loss may overflow.
        next[i] = weights[i] > 0.0 ? weights[i] * std::exp(-eta * (losses[i] - min_loss)) : 0.0;
        total += next[i];
    }
    if (!(total > 0.0)) {
        throw Error("hedge_update: all weight vanished");
    }
    for (double& w : next) {
        w /= total;
    }
    return next;
}

EnsembleState update_weights(const EnsembleState& ens, std::span<const DayTensor> expert_preds,
                             const DayTensor& actual)
{
    EnsembleState next = ens;
    next.weights = hedge_update(ens.weights, expert_losses(ens, expert_preds, actual), ens.eta);
    return next;
}

EnsembleState update_deltas(const EnsembleState& ens, const DayTensor& smoothed_err)
{
    EnsembleState next = ens;
    for (auto& expert : next.experts) {
        require_same_shape(expert.delta, smoothed_err, "update_deltas");
        const double a = expert.alpha;
        const double b = 1.0 - a;
        std::vector<double> out(smoothed_err.size());
        const auto delta = expert.delta.values();
        const auto err = smoothed_err.values();
        for (std::size_t j = 0; j < out.size(); ++j) {
            out[j] = a * delta[j] + b * err[j];
        }
        expert.delta = DayTensor(smoothed_err.shape(), std::move(out));
    }
    return next;
}

} // namespace foresee
