#include "foresee/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "foresee/errors.hpp"

namespace foresee {

RegionGraph::RegionGraph(std::size_t n) : adjacency_(n) {}

RegionGraph RegionGraph::from_edges(std::size_t n, std::span<const std::pair<std::size_t, std::size_t>> edges,
                                    std::size_t* self_loops_dropped)
{
    RegionGraph g(n);
    std::size_t loops = 0;
    for (const auto& [a, b] : edges) {
        if (a >= n || b >= n) {
            std::ostringstream os;
            os << "edge (" << a << ", " << b << ") references a region outside [0, " << n << ")";
            throw DataError(os.str());
        }
        if (a == b) {
            ++loops;
            continue;
        }
        g.adjacency_[a].push_back(b);
        g.adjacency_[b].push_back(a);
    }
    for (auto& list : g.adjacency_) {
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
    }
    if (self_loops_dropped != nullptr) {
        *self_loops_dropped = loops;
    }
    return g;
}

RegionGraph RegionGraph::grid(std::size_t rows, std::size_t cols)
{
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t id = r * cols + c;
            if (c + 1 < cols) {
                edges.emplace_back(id, id + 1);
            }
            if (r + 1 < rows) {
                edges.emplace_back(id, id + cols);
            }
        }
    }
    return from_edges(rows * cols, edges);
}

RegionGraph RegionGraph::path(std::size_t n)
{
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        edges.emplace_back(i, i + 1);
    }
    return from_edges(n, edges);
}

std::size_t RegionGraph::edge_count() const noexcept
{
    std::size_t total = 0;
    for (const auto& list : adjacency_) {
        total += list.size();
    }
    return total / 2;
}

void SmoothParams::validate() const
{
    if (!(gamma >= 0.0 && gamma <= 1.0)) {
        throw ConfigError("smoothing: gamma must lie in [0, 1]");
    }
    if (kernel.empty() || kernel.size() % 2 == 0) {
        throw ConfigError("smoothing: kernel length must be odd and at least 1");
    }
    for (double k : kernel) {
        if (!std::isfinite(k)) {
            throw ConfigError("smoothing: kernel entries must be finite");
        }
    }
    if (!(eta_gamma > 0.0) || !(eta_kernel > 0.0) || !std::isfinite(eta_gamma) || !std::isfinite(eta_kernel)) {
        throw ConfigError("smoothing: learning rates must be positive and finite");
    }
}

std::vector<double> delta_kernel(std::size_t length)
{
    if (length % 2 == 0) {
        throw ConfigError("kernel length must be odd");
    }
    std::vector<double> k(length, 0.0);
    k[length / 2] = 1.0;
    return k;
}

namespace {

void require_graph_match(const DayTensor& err, const RegionGraph& graph)
{
    if (err.shape().regions != graph.size()) {
        std::ostringstream os;
        os << "spatial smoothing: tensor has " << err.shape().regions << " regions, graph has " << graph.size();
        throw ShapeError(os.str());
    }
}

void require_kernel(std::span<const double> kernel, std::size_t hours)
{
    if (kernel.empty() || kernel.size() % 2 == 0) {
        throw ConfigError("temporal smoothing: kernel length must be odd");
    }
    if (kernel.size() > hours) {
        std::ostringstream os;
        os << "temporal smoothing: kernel length " << kernel.size() << " exceeds " << hours << " hours";
        throw ConfigError(os.str());
    }
}

// Position along the hour axis, or -1 when it falls into zero padding.
std::ptrdiff_t source_hour(std::ptrdiff_t h, std::ptrdiff_t hours, Padding padding)
{
    if (h >= 0 && h < hours) {
        return h;
    }
    if (padding == Padding::kCircular) {
        return ((h % hours) + hours) % hours;
    }
    return -1;
}

} // namespace

DayTensor neighbor_mean(const DayTensor& err, const RegionGraph& graph)
{
    require_graph_match(err, graph);
    const auto& s = err.shape();
    std::vector<double> out(err.size());
    for (std::size_t r = 0; r < s.regions; ++r) {
        const auto nbrs = graph.neighbors(r);
        const double inv_m = nbrs.empty() ? 0.0 : 1.0 / static_cast<double>(nbrs.size());
        for (std::size_t h = 0; h < s.hours; ++h) {
            for (std::size_t c = 0; c < s.channels; ++c) {
                if (nbrs.empty()) {
                    out[err.index(h, r, c)] = err[err.index(h, r, c)];
                    continue;
                }
                double total = 0.0;
                for (std::size_t j : nbrs) {
                    total += err[err.index(h, j, c)];
                }
                out[err.index(h, r, c)] = total * inv_m;
            }
        }
    }
    return DayTensor(s, std::move(out));
}

DayTensor spatial_smooth(const DayTensor& err, const RegionGraph& graph, double gamma)
{
    if (!(gamma >= 0.0 && gamma <= 1.0)) {
        throw ConfigError("spatial_smooth: gamma must lie in [0, 1]");
    }
    const DayTensor mean = neighbor_mean(err, graph);
    const auto& s = err.shape();
    std::vector<double> out(err.size());
    for (std::size_t r = 0; r < s.regions; ++r) {
        const bool isolated = graph.neighbors(r).empty();
        for (std::size_t h = 0; h < s.hours; ++h) {
            for (std::size_t c = 0; c < s.channels; ++c) {
                const std::size_t i = err.index(h, r, c);
                out[i] = isolated ? err[i] : (1.0 - gamma) * err[i] + gamma * mean[i];
            }
        }
    }
    return DayTensor(s, std::move(out));
}

DayTensor temporal_smooth(const DayTensor& err, std::span<const double> kernel, Padding padding)
{
    const auto& s = err.shape();
    require_kernel(kernel, s.hours);
    const auto half = static_cast<std::ptrdiff_t>(kernel.size() / 2);
    const auto hours = static_cast<std::ptrdiff_t>(s.hours);
    std::vector<double> out(err.size());
    for (std::ptrdiff_t h = 0; h < hours; ++h) {
        for (std::size_t r = 0; r < s.regions; ++r) {
            for (std::size_t c = 0; c < s.channels; ++c) {
                double total = 0.0;
                for (std::size_t j = 0; j < kernel.size(); ++j) {
                    const auto src = source_hour(h + static_cast<std::ptrdiff_t>(j) - half, hours, padding);
                    if (src >= 0) {
                        total += kernel[j] * err[err.index(static_cast<std::size_t>(src), r, c)];
                    }
                }
                out[err.index(static_cast<std::size_t>(h), r, c)] = total;
            }
        }
    }
    return DayTensor(s, std::move(out));
}

DayTensor smooth(const DayTensor& err, const RegionGraph& graph, const SmoothParams& params)
{
    return temporal_smooth(spatial_smooth(err, graph, params.gamma), params.kernel, params.padding);
}

DayTensor shift_hours(const DayTensor& x, std::ptrdiff_t offset, Padding padding)
{
    const auto& s = x.shape();
    const auto hours = static_cast<std::ptrdiff_t>(s.hours);
    std::vector<double> out(x.size(), 0.0);
    for (std::ptrdiff_t h = 0; h < hours; ++h) {
        const auto src = source_hour(h + offset, hours, padding);
        if (src < 0) {
            continue;
        }
        for (std::size_t r = 0; r < s.regions; ++r) {
            for (std::size_t c = 0; c < s.channels; ++c) {
                out[x.index(static_cast<std::size_t>(h), r, c)] = x[x.index(static_cast<std::size_t>(src), r, c)];
            }
        }
    }
    return DayTensor(s, std::move(out));
}

namespace {

struct Linearisation {
    double correction_gain = 0.0;  // sum_i w_i (1 - alpha_i)
    DayTensor residual;            // prediction - actual
    double loss_scale = 1.0;       // 1/N for mean reduction, 1 for sum
};

Linearisation linearise(const DayTensor& raw_err_prev, const DayTensor& base_pred, const DayTensor& actual,
                        const EnsembleState& ens, const RegionGraph& graph, const SmoothParams& params)
{
    require_same_shape(raw_err_prev, base_pred, "loss_gradients");
    require_same_shape(base_pred, actual, "loss_gradients");
    const DayTensor smoothed = smooth(raw_err_prev, graph, params);

    std::vector<double> pred(base_pred.values().begin(), base_pred.values().end());
    double gain = 0.0;
    for (std::size_t i = 0; i < ens.size(); ++i) {
        const auto& expert = ens.experts[i];
        require_same_shape(expert.delta, base_pred, "loss_gradients");
        const double w = ens.weights[i];
        const double a = expert.alpha;
        gain += w * (1.0 - a);
        for (std::size_t j = 0; j < pred.size(); ++j) {
            pred[j] += w * (a * expert.delta[j] + (1.0 - a) * smoothed[j]);
        }
    }
    for (std::size_t j = 0; j < pred.size(); ++j) {
        pred[j] -= actual[j];
    }
    Linearisation lin;
    lin.correction_gain = gain;
    lin.residual = DayTensor(base_pred.shape(), std::move(pred));
    lin.loss_scale = ens.reduction == LossReduction::kMean ? 1.0 / static_cast<double>(base_pred.size()) : 1.0;
    return lin;
}

double dot(const DayTensor& a, const DayTensor& b)
{
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        total += a[i] * b[i];
    }
    return total;
}

} // namespace

double smoothing_loss(const DayTensor& raw_err_prev, const DayTensor& base_pred, const DayTensor& actual,
                      const EnsembleState& ens, const RegionGraph& graph, const SmoothParams& params)
{
    const auto lin = linearise(raw_err_prev, base_pred, actual, ens, graph, params);
    return lin.loss_scale * squared_norm(lin.residual);
}

SmoothGradients loss_gradients(const DayTensor& raw_err_prev, const DayTensor& base_pred, const DayTensor& actual,
                               const EnsembleState& ens, const RegionGraph& graph, const SmoothParams& params)
{
    const auto lin = linearise(raw_err_prev, base_pred, actual, ens, graph, params);
    const double outer = 2.0 * lin.loss_scale * lin.correction_gain;

    SmoothGradients grads;
    grads.d_kernel.assign(params.kernel.size(), 0.0);
    if (outer == 0.0) {
        return grads;
    }

    // d smooth / d gamma = T_K(neighbor_mean(e) - e), by linearity of the temporal pass.
    const DayTensor spread = elementwise_sub(neighbor_mean(raw_err_prev, graph), raw_err_prev);
    grads.d_gamma = outer * dot(lin.residual, temporal_smooth(spread, params.kernel, params.padding));

    // d smooth / d K_j = the spatially smoothed error shifted onto tap j.
    const DayTensor spatial = spatial_smooth(raw_err_prev, graph, params.gamma);
    const auto half = static_cast<std::ptrdiff_t>(params.kernel.size() / 2);
    for (std::size_t j = 0; j < params.kernel.size(); ++j) {
        const DayTensor tap = shift_hours(spatial, static_cast<std::ptrdiff_t>(j) - half, params.padding);
        grads.d_kernel[j] = outer * dot(lin.residual, tap);
    }
    return grads;
}

SmoothParams ogd_step(const SmoothParams& params, const SmoothGradients& grads)
{
    if (!std::isfinite(grads.d_gamma)) {
        throw Error("ogd_step: non-finite gamma gradient");
    }
    if (grads.d_kernel.size() != params.kernel.size()) {
        throw ShapeError("ogd_step: kernel gradient length differs from kernel length");
    }
    for (double g : grads.d_kernel) {
        if (!std::isfinite(g)) {
            throw Error("ogd_step: non-finite kernel gradient");
        }
    }
    SmoothParams next = params;
    next.gamma = std::clamp(params.gamma - params.eta_gamma * grads.d_gamma, 0.0, 1.0);
    for (std::size_t j = 0; j < next.kernel.size(); ++j) {
        next.kernel[j] = params.kernel[j] - params.eta_kernel * grads.d_kernel[j];
    }
    return next;
}

} // namespace foresee
