#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "foresee/experts.hpp"
#include "foresee/tensor.hpp"

namespace foresee {

/// Undirected region adjacency without self-loops; neighbour lists are sorted.
class RegionGraph {
public:
    RegionGraph() = default;

    /// n isolated regions.
    explicit RegionGraph(std::size_t n);

    /// Builds a graph from an edge list. Edges are symmetrised and deduplicated;
    /// self-loops are dropped and counted in `self_loops_dropped` when provided.
    static RegionGraph from_edges(std::size_t n, std::span<const std::pair<std::size_t, std::size_t>> edges,
                                  std::size_t* self_loops_dropped = nullptr);

    /// 4-neighbour lattice, regions numbered row-major.
    static RegionGraph grid(std::size_t rows, std::size_t cols);
    static RegionGraph path(std::size_t n);

    std::size_t size() const noexcept { return adjacency_.size(); }
    std::span<const std::size_t> neighbors(std::size_t region) const { return adjacency_.at(region); }
    std::size_t edge_count() const noexcept;

    friend bool operator==(const RegionGraph&, const RegionGraph&) = default;

private:
    std::vector<std::vector<std::size_t>> adjacency_;
};

/// Boundary handling of the hour-axis convolution.
enum class Padding { kZero, kCircular };

/// Spatial mixing factor and temporal kernel, both adapted online.
struct SmoothParams {
    double gamma = 0.1;
    std::vector<double> kernel{0.0, 1.0, 0.0};
    double eta_gamma = 0.01;
    double eta_kernel = 0.01;
    Padding padding = Padding::kZero;

    /// Throws ConfigError if gamma, kernel or rates are out of range.
    void validate() const;

    friend bool operator==(const SmoothParams&, const SmoothParams&) = default;
};

/// Identity kernel of the given odd length.
std::vector<double> delta_kernel(std::size_t length);

/// Per (hour, channel), the mean over each region's neighbours. Isolated
/// regions return their own value, so neighbor_mean - err vanishes there.
DayTensor neighbor_mean(const DayTensor& err, const RegionGraph& graph);

/// err'_i = (1 - gamma) err_i + gamma * mean_{j in N(i)} err_j.
DayTensor spatial_smooth(const DayTensor& err, const RegionGraph& graph, double gamma);

/// Same-length correlation along hours: out[h] = sum_j K[j] in[h + j - (len - 1) / 2].
DayTensor temporal_smooth(const DayTensor& err, std::span<const double> kernel, Padding padding = Padding::kZero);

/// Spatial smoothing followed by temporal smoothing.
DayTensor smooth(const DayTensor& err, const RegionGraph& graph, const SmoothParams& params);

/// out[h] = in[h + offset] along hours, zero (or wrapped) outside the day.
DayTensor shift_hours(const DayTensor& x, std::ptrdiff_t offset, Padding padding);

struct SmoothGradients {
    double d_gamma = 0.0;
    std::vector<double> d_kernel;
};

/// Gradient of the daily loss with respect to (gamma, K).
///
/// The prediction is modelled as base_pred + sum_i w_i (alpha_i delta_i +
/// (1 - alpha_i) smooth(raw_err_prev)), where `ens` carries the corrections
/// from before yesterday's error was folded in. Corrections and weights are
/// constants; only the most recent smoothing is differentiated.
SmoothGradients loss_gradients(const DayTensor& raw_err_prev, const DayTensor& base_pred, const DayTensor& actual,
                               const EnsembleState& ens, const RegionGraph& graph, const SmoothParams& params);

/// Loss whose gradient loss_gradients returns, evaluated at `params`.
double smoothing_loss(const DayTensor& raw_err_prev, const DayTensor& base_pred, const DayTensor& actual,
                      const EnsembleState& ens, const RegionGraph& graph, const SmoothParams& params);

/// Projected gradient step: gamma is clipped to [0, 1], the kernel moves freely.
SmoothParams ogd_step(const SmoothParams& params, const SmoothGradients& grads);

} // namespace foresee
