#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"
#include "means_table.hpp"

namespace mumab {

// Values closer than this are the same system value: ties for the argmax,
// one entry in the distinct-value list.
inline constexpr double kValueTolerance = 1e-12;

struct OptimalConfig {
    Configuration k;
    double value = 0.0; // J1
};

struct TopTwo {
    double best = 0.0;   // J1
    double second = 0.0; // J2, largest value strictly below J1
};

struct GapParams {
    double best = 0.0;
    double second = 0.0;
    double delta = 0.0; // (J1 - J2) / (2 M N)
};

struct OracleResult {
    Configuration k;
    std::vector<double> values; // distinct system values, descending
};

namespace detail {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline void check_problem(const MeansTable& means, int users)
{
    if (means.empty())
        throw UsageError("empty means table");
    if (users < 0)
        throw UsageError("user count must be non-negative, got " + std::to_string(users));
    if (users > means.channels() * means.max_occupancy())
        throw InfeasibleError(std::to_string(users) + " users exceed capacity M*N = "
                              + std::to_string(means.channels() * means.max_occupancy()));
}

// Best two distinct values reachable from one DP cell.
struct Best2 {
    double first = kNegInf;
    double second = kNegInf;

    void offer(double v)
    {
        if (v == kNegInf)
            return;
        if (v > first + kValueTolerance) {
            second = first;
            first = v;
        } else if (v >= first - kValueTolerance) {
            first = std::max(first, v);
        } else if (v > second) {
            second = v;
        }
    }
};

// suffix[i][u]: top-two distinct values of channels i..M-1 (0-based) holding u users.
inline std::vector<std::vector<Best2>> suffix_table(const MeansTable& means, int users)
{
    const int M = means.channels();
    const int N = means.max_occupancy();
    std::vector<std::vector<Best2>> suffix(static_cast<std::size_t>(M) + 1,
                                           std::vector<Best2>(static_cast<std::size_t>(users) + 1));
    suffix[M][0].first = 0.0;
    for (int i = M - 1; i >= 0; --i) {
        const ChannelId m = i + 1;
        for (int u = 0; u <= users; ++u) {
            Best2& cell = suffix[i][u];
            for (int k = 0; k <= std::min(N, u); ++k) {
                const Best2& rest = suffix[i + 1][u - k];
                const double here = k * means(m, k);
                if (rest.first != kNegInf)
                    cell.offer(here + rest.first);
                if (rest.second != kNegInf)
                    cell.offer(here + rest.second);
            }
        }
    }
    return suffix;
}

} // namespace detail

// Optimal occupancy vector by bounded-knapsack DP over channels, O(M K N).
// Among maximizers the lexicographically smallest (k(1), ..., k(M)) wins,
// so agents holding identical tables agree on the result.
inline OptimalConfig optimal_config(const MeansTable& means, int users)
{
    detail::check_problem(means, users);
    const int M = means.channels();
    const int N = means.max_occupancy();

    // best[i][u]: max value of channels i..M-1 holding exactly u users.
    std::vector<std::vector<double>> best(static_cast<std::size_t>(M) + 1,
                                          std::vector<double>(static_cast<std::size_t>(users) + 1, detail::kNegInf));
    best[M][0] = 0.0;
    for (int i = M - 1; i >= 0; --i) {
        for (int u = 0; u <= users; ++u) {
            for (int k = 0; k <= std::min(N, u); ++k) {
                const double rest = best[i + 1][u - k];
                if (rest != detail::kNegInf)
                    best[i][u] = std::max(best[i][u], k * means(i + 1, k) + rest);
            }
        }
    }

    std::vector<int> counts(static_cast<std::size_t>(M), 0);
    int left = users;
    for (int i = 0; i < M; ++i) {
        for (int k = 0; k <= std::min(N, left); ++k) {
            const double rest = best[i + 1][left - k];
            if (rest != detail::kNegInf && k * means(i + 1, k) + rest >= best[i][left] - kValueTolerance) {
                counts[i] = k;
                left -= k;
                break;
            }
        }
    }
    Configuration k(std::move(counts));
    const double value = system_value(means, k);
    return {std::move(k), value};
}

// J1 and the largest system value strictly below it.
inline TopTwo top_two_values(const MeansTable& means, int users)
{
    detail::check_problem(means, users);
    const auto suffix = detail::suffix_table(means, users);
    const detail::Best2& root = suffix[0][users];
    if (root.second == detail::kNegInf)
        throw DegenerateGapError("all feasible configurations for K=" + std::to_string(users)
                                 + " share one system value; the gap is undefined");
    return {optimal_config(means, users).value, root.second};
}

inline GapParams gap_params(const MeansTable& means, int users)
{
    const TopTwo top = top_two_values(means, users);
    const double scale = 2.0 * means.channels() * means.max_occupancy();
    return {top.best, top.second, (top.best - top.second) / scale};
}

// Number of vectors of M entries in 0..N summing to K (saturates at UINT64_MAX).
inline std::uint64_t count_configurations(int channels, int max_occupancy, int users)
{
    if (users < 0)
        return 0;
    std::vector<std::uint64_t> ways(static_cast<std::size_t>(users) + 1, 0);
    ways[0] = 1;
    for (int i = 0; i < channels; ++i) {
        std::vector<std::uint64_t> next(ways.size(), 0);
        for (int u = 0; u <= users; ++u) {
            for (int k = 0; k <= std::min(max_occupancy, u); ++k) {
                const std::uint64_t add = ways[u - k];
                next[u] = next[u] > UINT64_MAX - add ? UINT64_MAX : next[u] + add;
            }
        }
        ways = std::move(next);
    }
    return ways[users];
}

// Visits every feasible configuration in lexicographic order.
inline void for_each_configuration(int channels, int max_occupancy, int users,
                                   const std::function<void(const Configuration&)>& visit)
{
    std::vector<int> counts(static_cast<std::size_t>(channels), 0);
    Configuration scratch;
    std::function<void(int, int)> rec = [&](int i, int left) {
        if (i == channels) {
            if (left == 0) {
                scratch = Configuration(counts);
                visit(scratch);
            }
            return;
        }
        const int remaining_capacity = (channels - i - 1) * max_occupancy;
        for (int k = std::max(0, left - remaining_capacity); k <= std::min(max_occupancy, left); ++k) {
            counts[i] = k;
            rec(i + 1, left - k);
        }
        counts[i] = 0;
    };
    rec(0, users);
}

// Exhaustive enumeration: the verification oracle for the DP routes.
inline OracleResult brute_force_oracle(const MeansTable& means, int users, std::uint64_t cap = 10'000'000)
{
    detail::check_problem(means, users);
    const std::uint64_t count = count_configurations(means.channels(), means.max_occupancy(), users);
    if (count > cap)
        throw OracleTooLargeError(std::to_string(count) + " configurations exceed the oracle cap of "
                                  + std::to_string(cap));

    std::vector<double> values;
    values.reserve(count);
    for_each_configuration(means.channels(), means.max_occupancy(), users,
                           [&](const Configuration& k) { values.push_back(system_value(means, k)); });

    // Visiting order is lexicographic, so the first near-maximal entry is
    // the lexicographically smallest maximizer.
    const double best = *std::max_element(values.begin(), values.end());
    const auto first_best = static_cast<std::size_t>(
        std::find_if(values.begin(), values.end(), [&](double v) { return v >= best - kValueTolerance; })
        - values.begin());
    Configuration best_k;
    std::size_t visited = 0;
    for_each_configuration(means.channels(), means.max_occupancy(), users, [&](const Configuration& k) {
        if (visited++ == first_best)
            best_k = k;
    });

    std::sort(values.begin(), values.end(), std::greater<>());
    std::vector<double> distinct;
    for (double v : values) {
        if (distinct.empty() || v < distinct.back() - kValueTolerance)
            distinct.push_back(v);
    }
    return {std::move(best_k), std::move(distinct)};
}

} // namespace mumab
