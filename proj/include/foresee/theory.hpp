#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "foresee/synth.hpp"
#include "foresee/tensor.hpp"

namespace foresee {

/// Which expression predicts the cumulative squared error of a fixed-alpha EMA corrector.
///
///  kLinearGain:   V / (1 - a^2) + (2 + a) / (1 + a) * N
///  kSquaredGain:  V / (1 - a^2) + 2 / (1 + a) * N
///
/// with V the summed squared drift and N the summed noise trace over T - 1 days.
/// The correction error follows e_{t+1} = a e_t - v_t + (1 - a) eps_t. kLinearGain
/// weights the injected noise variance by (1 - a), kSquaredGain by (1 - a)^2, which
/// is the stationary variance of that recursion. The two agree at a = 0.
enum class EmaClosedForm { kLinearGain, kSquaredGain };

/// Pre-registered acceptance constants of the verifiers.
struct VerifyTolerances {
    double standard_errors = 3.0;
    double ema_relative = 0.05;
    /// Relative slack for floating-point rounding in exact (noiseless) cases.
    double rounding = 1e-9;
};

/// Knobs of a verification run. closed_form_offset exists for negative controls.
struct VerifyOptions {
    VerifyTolerances tolerances{};
    double closed_form_offset = 0.0;
    EmaClosedForm ema_form = EmaClosedForm::kLinearGain;
    unsigned workers = 0;
};

struct TheoremTarget {
    std::string theorem_id;
    std::optional<double> alpha;
    std::size_t trials = 0;
    double empirical = 0.0;
    double closed_form = 0.0;
    double standard_error = 0.0;
    /// Known expected gap between the simulated sum and the closed form (the uncorrected first day of PREV_DAY).
    double boundary_term = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::vector<double> per_trial_empirical;
    std::vector<double> per_trial_closed_form;
};

struct RegretAudit {
    double mixture_cum_loss = 0.0;
    double best_expert_cum_loss = 0.0;
    double bound = 0.0;
    double B = 0.0;
    bool satisfied = false;
};

struct AlphaCurvePoint {
    double alpha = 0.0;
    MetricReport report;
    double mae_standard_error = 0.0;
    std::vector<double> per_trial_mae;
};

struct SampleStats {
    double mean = 0.0;
    double standard_error = 0.0;
};

/// Pairwise (cascade) summation; fixed association order for a given length.
double pairwise_sum(std::span<const double> values);

SampleStats sample_stats(std::span<const double> values);

/// Statistics of a[i] - b[i].
SampleStats paired_difference(std::span<const double> a, std::span<const double> b);

/// sum_t ||g_t||^2 + T * Tr(Sigma).
double ori_closed_form(double sum_bias_sq, std::size_t horizon, double noise_trace);

/// EMA closed form over a horizon of T days; see EmaClosedForm.
double ema_closed_form(double alpha, double sum_drift_sq, std::size_t horizon, double noise_trace,
                       EmaClosedForm form);

/// sum ||v||^2 + Tr(Sigma_1) + Tr(Sigma_T) + 2 sum_{t=2}^{T-1} Tr(Sigma_t); identical to ema_closed_form at alpha 0.
double prev_day_closed_form(double sum_drift_sq, std::size_t horizon, double noise_trace);

/// Seed of trial i of a Monte Carlo run.
WorldConfig trial_world(const WorldConfig& config, std::size_t trial);

TheoremTarget verify_t1(const WorldConfig& config, std::size_t trials, const VerifyOptions& options = {});
TheoremTarget verify_t2(const WorldConfig& config, std::size_t trials, const VerifyOptions& options = {});
TheoremTarget verify_t3(const WorldConfig& config, double alpha, std::size_t trials,
                        const VerifyOptions& options = {});

/// Fixed-alpha EMA correction (alpha = 1 is the uncorrected model) across `trials` worlds.
std::vector<AlphaCurvePoint> alpha_ucurve(const WorldConfig& config, std::span<const double> alpha_grid,
                                          std::size_t trials, unsigned workers = 0);

/// Hedge regret of the unsmoothed expert mixture against its best member, one audit per world.
std::vector<RegretAudit> regret_audit(const WorldConfig& config, std::span<const double> alphas, double eta,
                                      std::size_t trials, unsigned workers = 0);

} // namespace foresee
