#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "foresee/errors.hpp"
#include "foresee/experts.hpp"
#include "test_util.hpp"

using namespace foresee;
using foresee::testing::column;
using foresee::testing::random_tensor;

namespace {

double dyadic(Rng& rng)
{
    // Multiples of 2^-10 in [0, 64): sums and differences of these are exact.
    return static_cast<double>(rng.next_u64() % (64 * 1024)) / 1024.0;
}

} // namespace

TEST(InitEnsemble, DefaultGridIsUniform)
{
    const auto ens = init_ensemble(default_alphas(), 10.0, TensorShape{24, 3, 2});
    ASSERT_EQ(ens.size(), 4u);
    for (double w : ens.weights) {
        EXPECT_EQ(w, 0.25);
    }
    for (const auto& e : ens.experts) {
        EXPECT_EQ(e.delta, DayTensor(TensorShape{24, 3, 2}));
    }
    EXPECT_EQ(ens.eta, 10.0);
}

TEST(InitEnsemble, RejectsBadInputs)
{
    const TensorShape s{24, 1, 2};
    EXPECT_THROW(init_ensemble(std::vector<double>{0.5, 1.5}, 10.0, s), ConfigError);
    EXPECT_THROW(init_ensemble(std::vector<double>{}, 10.0, s), ConfigError);
    EXPECT_THROW(init_ensemble(std::vector<double>{0.5}, 0.0, s), ConfigError);
    EXPECT_THROW(init_ensemble(std::vector<double>{-0.1}, 1.0, s), ConfigError);
}

TEST(InitEnsemble, SingleFrozenExpertReproducesBase)
{
    const TensorShape s{2, 1, 1};
    auto ens = init_ensemble(std::vector<double>{1.0}, 10.0, s);
    for (int day = 0; day < 5; ++day) {
        const auto base = column({1.0 + day, -2.0});
        const auto preds = expert_predictions(ens, base);
        EXPECT_EQ(combine(ens, preds), base);
        ens = update_deltas(ens, column({3.0, 4.0}));
    }
}

TEST(ExpertPredictions, Examples)
{
    const TensorShape s{1, 1, 1};
    auto ens = init_ensemble(std::vector<double>{0.5, 0.5}, 10.0, s);
    const auto base = column({5});
    for (const auto& p : expert_predictions(ens, base)) {
        EXPECT_EQ(p, base);
    }
    ens.experts[0].delta = column({1});
    ens.experts[1].delta = column({-1});
    const auto preds = expert_predictions(ens, base);
    EXPECT_EQ(preds[0], column({6}));
    EXPECT_EQ(preds[1], column({4}));

    auto single = init_ensemble(std::vector<double>{0.5}, 10.0, s);
    single.experts[0].delta = column({2});
    EXPECT_EQ(expert_predictions(single, column({3}))[0], column({5}));
    EXPECT_THROW(expert_predictions(single, column({3, 4})), ShapeError);
}

TEST(Combine, Examples)
{
    const TensorShape s{1, 1, 1};
    auto ens = init_ensemble(std::vector<double>{0.5, 0.5}, 10.0, s);
    std::vector<DayTensor> preds{column({2}), column({4})};
    EXPECT_EQ(combine(ens, preds), column({3}));

    ens.weights = {1.0, 0.0};
    EXPECT_EQ(combine(ens, preds), column({2}));

    ens.weights = {0.25, 0.75};
    preds = {column({0}), column({4})};
    EXPECT_EQ(combine(ens, preds), column({3}));

    std::vector<DayTensor> too_few{column({1})};
    EXPECT_THROW(combine(ens, too_few), ShapeError);
}

TEST(HedgeUpdate, Examples)
{
    auto w = hedge_update(std::vector<double>{0.2, 0.3, 0.5}, std::vector<double>{1.7, 1.7, 1.7}, 10.0);
    EXPECT_DOUBLE_EQ(w[0], 0.2);
    EXPECT_DOUBLE_EQ(w[1], 0.3);
    EXPECT_DOUBLE_EQ(w[2], 0.5);

    w = hedge_update(std::vector<double>{0.5, 0.5}, std::vector<double>{0.0, 0.1}, 10.0);
    EXPECT_NEAR(w[0], 0.731059, 1e-6);
    EXPECT_NEAR(w[1], 0.268941, 1e-6);
    EXPECT_DOUBLE_EQ(w[0], 1.0 / (1.0 + std::exp(-1.0)));

    for (const auto& losses : {std::vector<double>{0.0, 5.0}, std::vector<double>{5.0, 0.0},
                               std::vector<double>{1e4, 0.0}, std::vector<double>{0.0, 1e4}}) {
        w = hedge_update(std::vector<double>{1.0, 0.0}, losses, 10.0);
        EXPECT_EQ(w[0], 1.0);
        EXPECT_EQ(w[1], 0.0);
    }
}

TEST(HedgeUpdate, HugeLossGapsDoNotUnderflowToNaN)
{
    const auto w = hedge_update(std::vector<double>{0.25, 0.25, 0.25, 0.25},
                                std::vector<double>{1e6, 2e6, 3e6, 4e6}, 10.0);
    EXPECT_EQ(w[0], 1.0);
    EXPECT_EQ(w[1] + w[2] + w[3], 0.0);
}

TEST(HedgeUpdate, RejectsNonFiniteLossNamingExpert)
{
    try {
        hedge_update(std::vector<double>{0.5, 0.5}, std::vector<double>{0.0, std::nan("")}, 1.0);
        FAIL() << "expected rejection";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("expert 1"), std::string::npos) << e.what();
    }
}

TEST(UpdateDeltas, Examples)
{
    const TensorShape s{1, 1, 1};
    auto ens = init_ensemble(std::vector<double>{1.0, 0.0, 0.9}, 10.0, s);
    ens.experts[0].delta = column({7});
    ens.experts[1].delta = column({7});
    const auto weights = ens.weights;
    const auto next = update_deltas(ens, column({10}));
    EXPECT_EQ(next.experts[0].delta, column({7}));
    EXPECT_EQ(next.experts[1].delta, column({10}));
    EXPECT_NEAR(next.experts[2].delta[0], 0.9 * 0.0 + 0.1 * 10.0, 1e-15);
    EXPECT_EQ(next.weights, weights);
    EXPECT_THROW(update_deltas(ens, column({1, 2})), ShapeError);
}

TEST(UpdateWeights, UsesExpertLossesAgainstActual)
{
    const TensorShape s{2, 1, 1};
    auto ens = init_ensemble(std::vector<double>{0.5, 0.5}, 10.0, s);
    const std::vector<DayTensor> preds{column({1, 1}), column({0, 0})};
    const auto actual = column({1, 1});
    const auto next = update_weights(ens, preds, actual);
    // losses 0 and 1 (mean reduction)
    EXPECT_DOUBLE_EQ(next.weights[0], 1.0 / (1.0 + std::exp(-10.0)));
    ens.reduction = LossReduction::kSum;
    EXPECT_EQ(expert_losses(ens, preds, actual), (std::vector<double>{0.0, 2.0}));
}

TEST(ExpertProperties, SimplexPreserved)
{
    Rng rng(21);
    for (int i = 0; i < 5000; ++i) {
        const std::size_t k = 1 + rng.next_u64() % 8;
        std::vector<double> w(k);
        std::vector<double> losses(k);
        for (std::size_t j = 0; j < k; ++j) {
            w[j] = rng.uniform01() + 1e-3;
            losses[j] = 50.0 * rng.uniform01();
        }
        const double z = std::accumulate(w.begin(), w.end(), 0.0);
        for (auto& x : w) {
            x /= z;
        }
        const auto next = hedge_update(w, losses, 0.1 + 20.0 * rng.uniform01());
        double total = 0.0;
        for (double x : next) {
            ASSERT_GE(x, 0.0);
            total += x;
        }
        ASSERT_NEAR(total, 1.0, 1e-12);
    }
}

TEST(ExpertProperties, LossShiftBitIdenticalOnExactArithmetic)
{
    Rng rng(22);
    for (int i = 0; i < 5000; ++i) {
        const std::size_t k = 2 + rng.next_u64() % 6;
        std::vector<double> w(k, 1.0 / static_cast<double>(k));
        std::vector<double> losses(k);
        std::vector<double> shifted(k);
        const double c = dyadic(rng) - 32.0;
        for (std::size_t j = 0; j < k; ++j) {
            losses[j] = dyadic(rng);
            shifted[j] = losses[j] + c;
        }
        ASSERT_EQ(hedge_update(w, losses, 10.0), hedge_update(w, shifted, 10.0));
    }
}

TEST(ExpertProperties, LossShiftInvariantForGeneralReals)
{
    Rng rng(23);
    for (int i = 0; i < 5000; ++i) {
        const std::size_t k = 2 + rng.next_u64() % 6;
        std::vector<double> w(k, 1.0 / static_cast<double>(k));
        std::vector<double> losses(k);
        std::vector<double> shifted(k);
        const double c = 100.0 * (rng.uniform01() - 0.5);
        for (std::size_t j = 0; j < k; ++j) {
            losses[j] = 3.0 * rng.uniform01();
            shifted[j] = losses[j] + c;
        }
        const auto a = hedge_update(w, losses, 10.0);
        const auto b = hedge_update(w, shifted, 10.0);
        for (std::size_t j = 0; j < k; ++j) {
            ASSERT_NEAR(a[j], b[j], 1e-12);
        }
    }
}

TEST(ExpertProperties, LowerLossGainsRelativeWeight)
{
    Rng rng(24);
    for (int i = 0; i < 5000; ++i) {
        const std::vector<double> w{0.1 + rng.uniform01(), 0.1 + rng.uniform01()};
        const double la = 2.0 * rng.uniform01();
        const double lb = la + 1e-3 + rng.uniform01();
        const auto next = hedge_update(w, std::vector<double>{la, lb}, 5.0);
        ASSERT_GT(next[0] / next[1], w[0] / w[1]);
    }
}

TEST(ExpertProperties, DeltaRecursionUnrolls)
{
    Rng rng(25);
    const TensorShape s{6, 2, 1};
    for (int trial = 0; trial < 200; ++trial) {
        const double alpha = rng.uniform01();
        auto ens = init_ensemble(std::vector<double>{alpha}, 1.0, s);
        std::vector<DayTensor> errs;
        const std::size_t t_max = 1 + rng.next_u64() % 30;
        for (std::size_t t = 0; t < t_max; ++t) {
            errs.push_back(random_tensor(rng, s, 4.0));
            ens = update_deltas(ens, errs.back());
        }
        for (std::size_t k = 0; k < s.size(); ++k) {
            double direct = 0.0;
            for (std::size_t t = 0; t < t_max; ++t) {
                direct += std::pow(alpha, static_cast<double>(t_max - 1 - t)) * errs[t][k];
            }
            direct *= 1.0 - alpha;
            ASSERT_NEAR(ens.experts[0].delta[k], direct, 1e-10 * std::max(1.0, std::abs(direct)));
        }
    }
}

TEST(ExpertProperties, DominantFrozenExpertGivesBase)
{
    const TensorShape s{4, 1, 1};
    Rng rng(26);
    auto ens = init_ensemble(std::vector<double>{0.5, 0.8, 1.0}, 10.0, s);
    for (int t = 0; t < 10; ++t) {
        ens = update_deltas(ens, random_tensor(rng, s));
    }
    ens.weights = {0.0, 0.0, 1.0};
    const auto base = random_tensor(rng, s, 10.0);
    EXPECT_EQ(combine(ens, expert_predictions(ens, base)), base);
}
