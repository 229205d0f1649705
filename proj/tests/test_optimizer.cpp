#include <algorithm>
#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "mumab/optimizer.hpp"
#include "mumab/random.hpp"

using namespace mumab;

namespace {

MeansTable tiny() { return MeansTable(2, 2, {0.9, 0.3, 0.8, 0.2}); }

// Independent enumeration: odometer over {0..N}^M, keeping vectors that sum
// to K. Visits vectors in lexicographic order.
struct Enumerated {
    std::vector<int> best;
    double j1 = -std::numeric_limits<double>::infinity();
    double j2 = -std::numeric_limits<double>::infinity();
};

Enumerated enumerate(const MeansTable& mu, int users)
{
    const int M = mu.channels(), N = mu.max_occupancy();
    std::vector<int> k(static_cast<std::size_t>(M), 0);
    std::vector<double> values;
    std::vector<std::vector<int>> configs;
    while (true) {
        int sum = 0;
        for (int v : k)
            sum += v;
        if (sum == users) {
            double value = 0.0;
            for (int m = 0; m < M; ++m)
                if (k[m] > 0)
                    value += k[m] * mu(m + 1, k[m]);
            values.push_back(value);
            configs.push_back(k);
        }
        int pos = M - 1;
        while (pos >= 0 && k[pos] == N)
            k[pos--] = 0;
        if (pos < 0)
            break;
        ++k[pos];
    }
    Enumerated out;
    out.j1 = *std::max_element(values.begin(), values.end());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] >= out.j1 - kValueTolerance) {
            out.best = configs[i];
            break;
        }
    }
    for (double v : values)
        if (v < out.j1 - kValueTolerance)
            out.j2 = std::max(out.j2, v);
    return out;
}

MeansTable random_table(Rng& rng, int M, int N)
{
    MeansTable t = MeansTable::zeros(M, N);
    for (ChannelId m = 1; m <= M; ++m)
        for (int n = 1; n <= N; ++n)
            t.at(m, n) = uniform01(rng);
    return t;
}

} // namespace

TEST(Optimizer, TinyModel)
{
    const auto best = optimal_config(tiny(), 2);
    EXPECT_EQ(best.k, Configuration({1, 1}));
    EXPECT_NEAR(best.value, 1.7, 1e-12);
    const auto two = top_two_values(tiny(), 2);
    EXPECT_NEAR(two.best, 1.7, 1e-12);
    EXPECT_NEAR(two.second, 0.6, 1e-12);
    EXPECT_NEAR(gap_params(tiny(), 2).delta, 0.1375, 1e-12);
}

TEST(Optimizer, SingleUserTakesBestSingleOccupancyArm)
{
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const auto mu = random_table(rng, 5, 3);
        int arg = 1;
        for (ChannelId m = 2; m <= 5; ++m)
            if (mu(m, 1) > mu(arg, 1))
                arg = m;
        const auto best = optimal_config(mu, 1);
        std::vector<int> expected(5, 0);
        expected[static_cast<std::size_t>(arg - 1)] = 1;
        EXPECT_EQ(best.k, Configuration(expected));
        EXPECT_EQ(best.value, mu(arg, 1));
    }
}

TEST(Optimizer, FullSystemIsSaturated)
{
    Rng rng(4);
    const auto mu = random_table(rng, 4, 3);
    EXPECT_EQ(optimal_config(mu, 12).k, Configuration({3, 3, 3, 3}));
    EXPECT_THROW(top_two_values(mu, 12), DegenerateGapError);
}

TEST(Optimizer, InfeasibleAndEmpty)
{
    EXPECT_THROW(optimal_config(tiny(), 5), InfeasibleError);
    EXPECT_THROW(brute_force_oracle(tiny(), 5), InfeasibleError);
    EXPECT_THROW(optimal_config(tiny(), -1), UsageError);
}

TEST(Optimizer, ZeroUsers)
{
    const auto best = optimal_config(tiny(), 0);
    EXPECT_EQ(best.k, Configuration::zeros(2));
    EXPECT_EQ(best.value, 0.0);
    const auto oracle = brute_force_oracle(tiny(), 0);
    EXPECT_EQ(oracle.k, Configuration::zeros(2));
    ASSERT_EQ(oracle.values.size(), 1u);
    EXPECT_EQ(oracle.values[0], 0.0);
}

TEST(Optimizer, ConstantMeansAreDegenerate)
{
    const MeansTable mu(3, 2, std::vector<double>(6, 0.4));
    EXPECT_THROW(top_two_values(mu, 3), DegenerateGapError);
    EXPECT_THROW(gap_params(mu, 3), DegenerateGapError);
}

TEST(Optimizer, SingleFeasiblePointIsDegenerate)
{
    const MeansTable mu(1, 3, {0.9, 0.4, 0.1});
    EXPECT_EQ(optimal_config(mu, 2).k, Configuration({2}));
    EXPECT_THROW(top_two_values(mu, 2), DegenerateGapError);
}

TEST(Optimizer, UnitGapWhenSeparationIsTwoMN)
{
    // The optimizer accepts any finite table; J1 - J2 = 2MN = 4 here.
    const MeansTable mu(2, 1, {4.0, 0.0});
    const auto g = gap_params(mu, 1);
    EXPECT_EQ(g.best - g.second, 4.0);
    EXPECT_EQ(g.delta, 1.0);
}

TEST(Optimizer, FrozenTableMatchesEnumeration)
{
    const MeansTable mu(6, 3, {0.718, 0.388, 0.778, 0.826, 0.174, 0.326, 0.415, 0.826, 0.227,
                               0.825, 0.175, 0.183, 0.824, 0.176, 0.315, 0.405, 0.824, 0.222});
    EXPECT_LT(count_configurations(6, 3, 10), 100'000u);
    const auto oracle = brute_force_oracle(mu, 10);
    const auto reference = enumerate(mu, 10);
    EXPECT_EQ(oracle.k, Configuration(reference.best));
    EXPECT_EQ(optimal_config(mu, 10).k, Configuration({3, 1, 2, 1, 1, 2}));
    const auto g = gap_params(mu, 10);
    EXPECT_NEAR(g.best, 8.109, 1e-12);
    EXPECT_NEAR(g.second, 6.812, 1e-12);
    EXPECT_NEAR(g.delta, 1.297 / 36.0, 1e-12);
}

TEST(Optimizer, ScalingMeansScalesValues)
{
    Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        const auto mu = random_table(rng, 4, 3);
        MeansTable half = mu;
        for (ChannelId m = 1; m <= 4; ++m)
            for (int n = 1; n <= 3; ++n)
                half.at(m, n) = mu(m, n) / 2;
        const int users = 1 + static_cast<int>(uniform_below(rng, 12));
        const auto a = optimal_config(mu, users);
        const auto b = optimal_config(half, users);
        EXPECT_NEAR(b.value, a.value / 2, 1e-12);
        EXPECT_EQ(b.k, a.k);
    }
}

TEST(Optimizer, TieBreakPicksLexicographicallySmallest)
{
    // Both (1,0) and (0,1) are worth 0.5.
    const MeansTable mu(2, 1, {0.5, 0.5});
    EXPECT_EQ(optimal_config(mu, 1).k, Configuration({0, 1}));
    EXPECT_EQ(brute_force_oracle(mu, 1).k, Configuration({0, 1}));
}

TEST(Optimizer, CountConfigurations)
{
    EXPECT_EQ(count_configurations(2, 2, 2), 3u);
    EXPECT_EQ(count_configurations(1, 3, 2), 1u);
    EXPECT_EQ(count_configurations(3, 1, 4), 0u);
}

TEST(Optimizer, OracleCapIsEnforced)
{
    Rng rng(1);
    const auto mu = random_table(rng, 6, 4);
    EXPECT_THROW(brute_force_oracle(mu, 12, 100), OracleTooLargeError);
}

TEST(Optimizer, DynamicProgramMatchesEnumeration)
{
    Rng rng(20240);
    for (int trial = 0; trial < 500; ++trial) {
        const int M = 1 + static_cast<int>(uniform_below(rng, 6));
        const int N = 1 + static_cast<int>(uniform_below(rng, 4));
        const int K = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(M * N + 1)));
        const auto mu = random_table(rng, M, N);
        const auto reference = enumerate(mu, K);
        const auto best = optimal_config(mu, K);
        ASSERT_EQ(best.k, Configuration(reference.best)) << "trial " << trial;
        ASSERT_NEAR(best.value, reference.j1, 1e-12);
        if (std::isinf(reference.j2)) {
            EXPECT_THROW(top_two_values(mu, K), DegenerateGapError);
        } else {
            const auto two = top_two_values(mu, K);
            ASSERT_NEAR(two.second, reference.j2, 1e-12) << "trial " << trial;
        }
    }
}
