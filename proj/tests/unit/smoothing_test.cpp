#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "foresee/errors.hpp"
#include "foresee/smoothing.hpp"
#include "test_util.hpp"

using namespace foresee;
using foresee::testing::random_tensor;

namespace {

DayTensor regions_row(std::vector<double> values)
{
    const auto n = values.size();
    return DayTensor(TensorShape{1, n, 1}, std::move(values));
}

RegionGraph random_graph(Rng& rng, std::size_t n)
{
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (rng.uniform01() < 0.4) {
                edges.emplace_back(i, j);
            }
        }
    }
    return RegionGraph::from_edges(n, edges);
}

/// Loss written out from its definition, independent of smoothing_loss.
double direct_loss(const DayTensor& err_prev, const DayTensor& base, const DayTensor& actual, const EnsembleState& ens,
                   const RegionGraph& graph, const SmoothParams& p)
{
    const auto s = smooth(err_prev, graph, p);
    DayTensor pred = base;
    for (std::size_t i = 0; i < ens.size(); ++i) {
        const auto& e = ens.experts[i];
        const auto delta = elementwise_add(scale(e.delta, e.alpha), scale(s, 1.0 - e.alpha));
        pred = axpy(pred, ens.weights[i], delta);
    }
    return reduced_loss(pred, actual, ens.reduction);
}

struct Instance {
    DayTensor err_prev;
    DayTensor base;
    DayTensor actual;
    EnsembleState ens;
    RegionGraph graph;
    SmoothParams params;
};

Instance random_instance(Rng& rng, TensorShape shape, RegionGraph graph, std::size_t kernel_len, LossReduction red)
{
    Instance in{random_tensor(rng, shape, 3.0), random_tensor(rng, shape, 10.0), random_tensor(rng, shape, 10.0),
                {}, std::move(graph), {}};
    std::vector<double> alphas;
    const std::size_t k = 1 + rng.next_u64() % 4;
    for (std::size_t i = 0; i < k; ++i) {
        alphas.push_back(0.95 * rng.uniform01());
    }
    in.ens = init_ensemble(alphas, 10.0, shape, red);
    double z = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        in.ens.experts[i].delta = random_tensor(rng, shape, 2.0);
        in.ens.weights[i] = 0.05 + rng.uniform01();
        z += in.ens.weights[i];
    }
    for (auto& w : in.ens.weights) {
        w /= z;
    }
    in.params.gamma = 0.1 + 0.8 * rng.uniform01();
    in.params.kernel.resize(kernel_len);
    for (auto& v : in.params.kernel) {
        v = rng.gaussian();
    }
    in.params.padding = rng.uniform01() < 0.5 ? Padding::kZero : Padding::kCircular;
    return in;
}

void expect_gradient_close(double analytic, double numeric)
{
    const double mag = std::max(std::abs(analytic), std::abs(numeric));
    if (mag < 1e-3) {
        EXPECT_LE(std::abs(analytic - numeric), 1e-8);
    } else {
        EXPECT_LE(std::abs(analytic - numeric) / mag, 1e-5) << analytic << " vs " << numeric;
    }
}

} // namespace

TEST(RegionGraph, FromEdgesSymmetrisesDedupsAndDropsLoops)
{
    std::size_t loops = 0;
    const std::vector<std::pair<std::size_t, std::size_t>> edges{{0, 1}, {1, 0}, {0, 1}, {2, 2}, {1, 2}};
    const auto g = RegionGraph::from_edges(3, edges, &loops);
    EXPECT_EQ(loops, 1u);
    EXPECT_EQ(g.edge_count(), 2u);
    EXPECT_EQ(std::vector<std::size_t>(g.neighbors(0).begin(), g.neighbors(0).end()), (std::vector<std::size_t>{1}));
    EXPECT_EQ(std::vector<std::size_t>(g.neighbors(1).begin(), g.neighbors(1).end()),
              (std::vector<std::size_t>{0, 2}));
    const std::vector<std::pair<std::size_t, std::size_t>> bad{{0, 3}};
    EXPECT_THROW(RegionGraph::from_edges(3, bad), DataError);
}

TEST(RegionGraph, GridAndPath)
{
    const auto g = RegionGraph::grid(4, 4);
    EXPECT_EQ(g.size(), 16u);
    EXPECT_EQ(g.edge_count(), 24u);
    EXPECT_EQ(g.neighbors(0).size(), 2u);
    EXPECT_EQ(g.neighbors(5).size(), 4u);
    EXPECT_EQ(RegionGraph::path(3).edge_count(), 2u);
    EXPECT_EQ(RegionGraph(5).edge_count(), 0u);
}

TEST(SpatialSmooth, Examples)
{
    Rng rng(31);
    const auto g = RegionGraph::path(4);
    const auto x = random_tensor(rng, TensorShape{24, 4, 2});
    EXPECT_EQ(spatial_smooth(x, g, 0.0), x);

    const auto two = spatial_smooth(regions_row({0, 6}), RegionGraph::path(2), 0.5);
    EXPECT_EQ(two, regions_row({3, 3}));

    // Region 2 is isolated.
    const std::vector<std::pair<std::size_t, std::size_t>> edges{{0, 1}};
    const auto partial = RegionGraph::from_edges(3, edges);
    const auto y = spatial_smooth(regions_row({1, 5, 9}), partial, 0.7);
    EXPECT_EQ(y[2], 9.0);

    EXPECT_THROW(spatial_smooth(x, RegionGraph::path(3), 0.5), ShapeError);
    EXPECT_THROW(spatial_smooth(x, g, 1.5), ConfigError);
}

TEST(TemporalSmooth, Examples)
{
    Rng rng(32);
    const TensorShape s{24, 2, 2};
    const auto x = random_tensor(rng, s);
    EXPECT_EQ(temporal_smooth(x, std::vector<double>{0, 1, 0}), x);
    EXPECT_EQ(temporal_smooth(x, std::vector<double>{1}), x);

    const double c = 6.0;
    const auto flat = DayTensor::filled(TensorShape{24, 1, 1}, c);
    const double third = 1.0 / 3.0;
    const auto out = temporal_smooth(flat, std::vector<double>{third, third, third});
    EXPECT_NEAR(out[0], 2.0 * c / 3.0, 1e-14);
    EXPECT_NEAR(out[23], 2.0 * c / 3.0, 1e-14);
    for (std::size_t h = 1; h < 23; ++h) {
        EXPECT_NEAR(out[h], c, 1e-14);
    }
    const auto wrapped = temporal_smooth(flat, std::vector<double>{third, third, third}, Padding::kCircular);
    EXPECT_NEAR(wrapped[0], c, 1e-14);

    EXPECT_THROW(temporal_smooth(x, std::vector<double>{0.5, 0.5}), ConfigError);
    EXPECT_THROW(temporal_smooth(x, std::vector<double>(25, 0.0)), ConfigError);
}

TEST(TemporalSmooth, IsCorrelationNotConvolution)
{
    // out[h] = K[0] in[h-1] + K[1] in[h] + K[2] in[h+1]
    std::vector<double> ramp(5);
    for (std::size_t h = 0; h < 5; ++h) {
        ramp[h] = static_cast<double>(h + 1);
    }
    const DayTensor x(TensorShape{5, 1, 1}, ramp);
    const auto out = temporal_smooth(x, std::vector<double>{1, 0, 0});
    EXPECT_EQ(out[0], 0.0);
    EXPECT_EQ(out[1], 1.0);
    EXPECT_EQ(out[4], 4.0);
}

TEST(Smooth, IdentityCases)
{
    Rng rng(33);
    const auto x = random_tensor(rng, TensorShape{24, 4, 2});
    SmoothParams p;
    p.gamma = 0.0;
    EXPECT_EQ(smooth(x, RegionGraph::grid(2, 2), p), x);
    const auto single = random_tensor(rng, TensorShape{24, 1, 2});
    p.gamma = 0.8;
    EXPECT_EQ(smooth(single, RegionGraph(1), p), single);
}

TEST(Smooth, SpatialThenTemporal)
{
    Rng rng(34);
    const auto x = random_tensor(rng, TensorShape{24, 3, 1});
    SmoothParams p;
    p.gamma = 0.4;
    p.kernel = {0.2, 0.5, 0.3};
    const auto g = RegionGraph::path(3);
    EXPECT_EQ(smooth(x, g, p), temporal_smooth(spatial_smooth(x, g, 0.4), p.kernel));
}

TEST(SmoothingProperties, Linearity)
{
    Rng rng(35);
    for (int i = 0; i < 2000; ++i) {
        const TensorShape s{6 + rng.next_u64() % 19, 1 + rng.next_u64() % 5, 1 + rng.next_u64() % 2};
        const auto g = random_graph(rng, s.regions);
        SmoothParams p;
        p.gamma = rng.uniform01();
        p.kernel = {rng.gaussian(), rng.gaussian(), rng.gaussian()};
        p.padding = i % 2 == 0 ? Padding::kZero : Padding::kCircular;
        const auto x = random_tensor(rng, s);
        const auto y = random_tensor(rng, s);
        const double a = 3.0 * rng.gaussian();
        const double b = 3.0 * rng.gaussian();
        const auto lhs = smooth(elementwise_add(scale(x, a), scale(y, b)), g, p);
        const auto rhs = elementwise_add(scale(smooth(x, g, p), a), scale(smooth(y, g, p), b));
        const auto sx = smooth(x, g, p);
        const auto sy = smooth(y, g, p);
        for (std::size_t k = 0; k < lhs.size(); ++k) {
            const double mag = std::max({1.0, std::abs(a * sx[k]), std::abs(b * sy[k])});
            ASSERT_NEAR(lhs[k], rhs[k], 1e-12 * mag * 8.0);
        }
    }
}

TEST(SmoothingProperties, SpatialConstantIsFixedPoint)
{
    Rng rng(36);
    for (int i = 0; i < 1000; ++i) {
        const std::size_t n = 1 + rng.next_u64() % 8;
        const auto g = random_graph(rng, n);
        std::vector<double> v(4 * n * 2);
        for (std::size_t h = 0; h < 4; ++h) {
            for (std::size_t c = 0; c < 2; ++c) {
                const double value = rng.gaussian();
                for (std::size_t r = 0; r < n; ++r) {
                    v[(h * n + r) * 2 + c] = value;
                }
            }
        }
        const DayTensor x(TensorShape{4, n, 2}, v);
        const auto y = spatial_smooth(x, g, rng.uniform01());
        for (std::size_t k = 0; k < x.size(); ++k) {
            ASSERT_NEAR(y[k], x[k], 1e-15 * std::max(1.0, std::abs(x[k])));
        }
    }
}

TEST(SmoothingProperties, SpatialAveragingBound)
{
    Rng rng(37);
    for (int i = 0; i < 1000; ++i) {
        const std::size_t n = 2 + rng.next_u64() % 8;
        const auto g = random_graph(rng, n);
        const TensorShape s{3, n, 2};
        const auto x = random_tensor(rng, s);
        const auto y = spatial_smooth(x, g, rng.uniform01());
        for (std::size_t h = 0; h < s.hours; ++h) {
            for (std::size_t c = 0; c < s.channels; ++c) {
                for (std::size_t r = 0; r < n; ++r) {
                    double lo = x.at(h, r, c);
                    double hi = lo;
                    for (std::size_t j : g.neighbors(r)) {
                        lo = std::min(lo, x.at(h, j, c));
                        hi = std::max(hi, x.at(h, j, c));
                    }
                    ASSERT_GE(y.at(h, r, c), lo - 1e-12);
                    ASSERT_LE(y.at(h, r, c), hi + 1e-12);
                }
            }
        }
    }
}

TEST(LossGradients, ZeroCases)
{
    Rng rng(38);
    const TensorShape s{6, 3, 1};
    auto in = random_instance(rng, s, RegionGraph::path(3), 3, LossReduction::kMean);
    auto g = loss_gradients(DayTensor(s), in.base, in.actual, in.ens, in.graph, in.params);
    EXPECT_EQ(g.d_gamma, 0.0);
    for (double v : g.d_kernel) {
        EXPECT_EQ(v, 0.0);
    }
    for (auto& e : in.ens.experts) {
        e.alpha = 1.0;
    }
    g = loss_gradients(in.err_prev, in.base, in.actual, in.ens, in.graph, in.params);
    EXPECT_EQ(g.d_gamma, 0.0);
    for (double v : g.d_kernel) {
        EXPECT_EQ(v, 0.0);
    }
}

TEST(LossGradients, SmoothingLossMatchesDefinition)
{
    Rng rng(39);
    for (int i = 0; i < 100; ++i) {
        const auto in = random_instance(rng, TensorShape{6, 3, 2}, RegionGraph::path(3), 3,
                                        i % 2 ? LossReduction::kSum : LossReduction::kMean);
        const double a = smoothing_loss(in.err_prev, in.base, in.actual, in.ens, in.graph, in.params);
        const double b = direct_loss(in.err_prev, in.base, in.actual, in.ens, in.graph, in.params);
        ASSERT_NEAR(a, b, 1e-12 * std::max(1.0, b));
    }
}

TEST(LossGradients, MatchCentralDifferences)
{
    Rng rng(40);
    const double h = 1e-6;
    int instances = 0;
    for (int i = 0; i < 150; ++i) {
        const bool small = i < 100;
        const TensorShape s = small ? TensorShape{6, 3, 1} : TensorShape{24, 1 + rng.next_u64() % 6, 2};
        const auto graph = small ? RegionGraph::path(3) : random_graph(rng, s.regions);
        const std::size_t len = small ? 3 : 1 + 2 * (rng.next_u64() % 3);
        const auto in = random_instance(rng, s, graph, len, i % 3 == 0 ? LossReduction::kSum : LossReduction::kMean);
        const auto g = loss_gradients(in.err_prev, in.base, in.actual, in.ens, in.graph, in.params);

        auto at = [&](const SmoothParams& p) { return direct_loss(in.err_prev, in.base, in.actual, in.ens, in.graph, p); };
        SmoothParams up = in.params;
        SmoothParams down = in.params;
        up.gamma += h;
        down.gamma -= h;
        expect_gradient_close(g.d_gamma, (at(up) - at(down)) / (2.0 * h));
        ASSERT_EQ(g.d_kernel.size(), len);
        for (std::size_t j = 0; j < len; ++j) {
            up = in.params;
            down = in.params;
            up.kernel[j] += h;
            down.kernel[j] -= h;
            expect_gradient_close(g.d_kernel[j], (at(up) - at(down)) / (2.0 * h));
        }
        ++instances;
    }
    EXPECT_GE(instances, 100);
}

TEST(OgdStep, Examples)
{
    SmoothParams p;
    EXPECT_EQ(p.eta_gamma, 0.01);
    EXPECT_EQ(p.eta_kernel, 0.01);
    const SmoothGradients zero{0.0, {0.0, 0.0, 0.0}};
    EXPECT_EQ(ogd_step(p, zero), p);

    p.gamma = 0.01;
    const SmoothGradients push{10.0, {0.0, 0.0, 0.0}};
    EXPECT_EQ(ogd_step(p, push).gamma, 0.0);
    p.gamma = 0.99;
    EXPECT_EQ(ogd_step(p, SmoothGradients{-10.0, {0.0, 0.0, 0.0}}).gamma, 1.0);

    const auto moved = ogd_step(SmoothParams{}, SmoothGradients{0.0, {1.0, -2.0, 0.5}});
    EXPECT_DOUBLE_EQ(moved.kernel[0], -0.01);
    EXPECT_DOUBLE_EQ(moved.kernel[1], 1.02);
    EXPECT_DOUBLE_EQ(moved.kernel[2], -0.005);

    EXPECT_THROW(ogd_step(p, SmoothGradients{std::nan(""), {0.0, 0.0, 0.0}}), Error);
    EXPECT_THROW(ogd_step(p, SmoothGradients{0.0, {0.0, std::nan(""), 0.0}}), Error);
}

TEST(SmoothParams, Validation)
{
    SmoothParams p;
    EXPECT_NO_THROW(p.validate());
    p.kernel = {1.0, 0.0};
    EXPECT_THROW(p.validate(), ConfigError);
    p = SmoothParams{};
    p.gamma = -0.1;
    EXPECT_THROW(p.validate(), ConfigError);
    EXPECT_EQ(delta_kernel(5), (std::vector<double>{0, 0, 1, 0, 0}));
}
