#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "means_table.hpp"
#include "random.hpp"

namespace mumab {

enum class Family { Uniform, Bernoulli, PointMass };

inline std::string to_string(Family f)
{
    switch (f) {
    case Family::Uniform: return "uniform";
    case Family::Bernoulli: return "bernoulli";
    case Family::PointMass: return "point-mass";
    }
    return "?";
}

inline std::optional<Family> parse_family(const std::string& s)
{
    if (s == "uniform") return Family::Uniform;
    if (s == "bernoulli") return Family::Bernoulli;
    if (s == "point-mass") return Family::PointMass;
    return std::nullopt;
}

// Reward distribution for one (channel, occupancy) cell.
//   Uniform:   support [lo, hi]
//   Bernoulli: P(1) = lo (hi unused)
//   PointMass: always lo
struct Distribution {
    Family family = Family::PointMass;
    double lo = 0.0;
    double hi = 0.0;

    static Distribution uniform(double lo, double hi) { return {Family::Uniform, lo, hi}; }
    static Distribution bernoulli(double p) { return {Family::Bernoulli, p, p}; }
    static Distribution point_mass(double v) { return {Family::PointMass, v, v}; }

    double mean() const noexcept
    {
        return family == Family::Uniform ? 0.5 * (lo + hi) : lo;
    }

    double support_min() const noexcept { return family == Family::Bernoulli ? 0.0 : lo; }
    double support_max() const noexcept { return family == Family::Bernoulli ? 1.0 : hi; }

    double sample(Rng& rng) const
    {
        switch (family) {
        case Family::Uniform: return lo + (hi - lo) * uniform01(rng);
        case Family::Bernoulli: return uniform01(rng) < lo ? 1.0 : 0.0;
        case Family::PointMass: return lo;
        }
        return 0.0;
    }

    bool operator==(const Distribution&) const = default;
};

// Ground-truth environment: means table plus a sampling distribution per
// (channel, occupancy) cell. Immutable once built; construction rejects any
// cell whose support leaves [0,1] or whose analytic mean disagrees with the
// table, so sampling never clamps.
class RewardModel {
public:
    static constexpr double kMeanTolerance = 1e-12;

    RewardModel(MeansTable means, std::vector<Distribution> dists, Family family, double variance = 0.0,
                std::optional<std::uint64_t> seed = std::nullopt)
        : means_(std::move(means))
        , dists_(std::move(dists))
        , family_(family)
        , variance_(variance)
        , seed_(seed)
    {
        if (means_.empty())
            throw UsageError("reward model needs a non-empty means table");
        const std::size_t cells = static_cast<std::size_t>(means_.channels()) * means_.max_occupancy();
        if (dists_.size() != cells)
            throw ModelError("expected " + std::to_string(cells) + " distributions, got "
                             + std::to_string(dists_.size()));
        for (ChannelId m = 1; m <= channels(); ++m) {
            for (int n = 1; n <= max_occupancy(); ++n) {
                const double mu = means_(m, n);
                const Distribution& d = distribution(m, n);
                if (!(mu >= 0.0 && mu <= 1.0))
                    throw ModelError(cell_name(m, n) + ": mean " + std::to_string(mu) + " outside [0,1]");
                if (!(d.support_min() >= 0.0 && d.support_max() <= 1.0 && d.support_min() <= d.support_max()))
                    throw ModelError(cell_name(m, n) + ": support [" + std::to_string(d.support_min()) + ", "
                                     + std::to_string(d.support_max()) + "] not inside [0,1]");
                if (std::abs(d.mean() - mu) > kMeanTolerance)
                    throw ModelError(cell_name(m, n) + ": distribution mean " + std::to_string(d.mean())
                                     + " differs from table mean " + std::to_string(mu));
            }
        }
    }

    int channels() const noexcept { return means_.channels(); }
    int max_occupancy() const noexcept { return means_.max_occupancy(); }
    const MeansTable& means() const noexcept { return means_; }
    Family family() const noexcept { return family_; }
    double variance() const noexcept { return variance_; }
    std::optional<std::uint64_t> seed() const noexcept { return seed_; }

    const Distribution& distribution(ChannelId m, int n) const
    {
        check_channel(m);
        if (n < 1 || n > max_occupancy())
            throw UsageError("occupancy " + std::to_string(n) + " has no distribution (1.."
                             + std::to_string(max_occupancy()) + ")");
        return dists_[static_cast<std::size_t>(m - 1) * max_occupancy() + (n - 1)];
    }

    // mu(m, n), zero for n > N.
    double mean_reward(ChannelId m, int n) const
    {
        check_channel(m);
        if (n < 1)
            throw UsageError("occupancy must be at least 1, got " + std::to_string(n));
        return means_(m, n);
    }

    // One draw of r(m, n); exactly 0 when n > N.
    double sample_reward(ChannelId m, int n, Rng& rng) const
    {
        check_channel(m);
        if (n < 1)
            throw UsageError("occupancy must be at least 1, got " + std::to_string(n));
        if (n > max_occupancy())
            return 0.0;
        return dists_[static_cast<std::size_t>(m - 1) * max_occupancy() + (n - 1)].sample(rng);
    }

    bool operator==(const RewardModel&) const = default;

    static std::string cell_name(ChannelId m, int n)
    {
        return "(m=" + std::to_string(m) + ", n=" + std::to_string(n) + ")";
    }

private:
    void check_channel(ChannelId m) const
    {
        if (m < 1 || m > channels())
            throw UsageError("channel " + std::to_string(m) + " outside 1.." + std::to_string(channels()));
    }

    MeansTable means_;
    std::vector<Distribution> dists_;
    Family family_;
    double variance_;
    std::optional<std::uint64_t> seed_;
};

// Half-width of a uniform interval with the given variance: sqrt(3 * var).
inline double uniform_half_width(double variance) { return std::sqrt(3.0 * variance); }

inline RewardModel build_point_mass_model(MeansTable means, std::optional<std::uint64_t> seed = std::nullopt)
{
    std::vector<Distribution> dists;
    for (double mu : means.row_major())
        dists.push_back(Distribution::point_mass(mu));
    return RewardModel(std::move(means), std::move(dists), Family::PointMass, 0.0, seed);
}

inline RewardModel build_bernoulli_model(MeansTable means, std::optional<std::uint64_t> seed = std::nullopt)
{
    std::vector<Distribution> dists;
    for (double mu : means.row_major())
        dists.push_back(Distribution::bernoulli(mu));
    return RewardModel(std::move(means), std::move(dists), Family::Bernoulli, 0.0, seed);
}

// Uniform rewards on [mu - h, mu + h], h = sqrt(3 var). Variance 0 yields a
// point-mass model.
inline RewardModel build_uniform_model(MeansTable means, double variance,
                                       std::optional<std::uint64_t> seed = std::nullopt)
{
    if (!(variance >= 0.0))
        throw ModelError("variance must be non-negative");
    if (variance == 0.0)
        return build_point_mass_model(std::move(means), seed);
    const double h = uniform_half_width(variance);
    std::vector<Distribution> dists;
    for (ChannelId m = 1; m <= means.channels(); ++m) {
        for (int n = 1; n <= means.max_occupancy(); ++n) {
            const double mu = means(m, n);
            const double lo = mu - h;
            const double hi = mu + h;
            if (!(lo >= 0.0 && hi <= 1.0))
                throw ModelError(RewardModel::cell_name(m, n) + ": mean " + std::to_string(mu)
                                 + " too close to the boundary for variance " + std::to_string(variance)
                                 + " (uniform support [" + std::to_string(lo) + ", " + std::to_string(hi)
                                 + "] leaves [0,1])");
            dists.push_back(Distribution::uniform(lo, hi));
        }
    }
    return RewardModel(std::move(means), std::move(dists), Family::Uniform, variance, seed);
}

// Seeded variant: means drawn uniformly on [0,1], then clamped so every
// uniform support fits inside [0,1].
inline RewardModel build_uniform_model(int channels, int max_occupancy, double variance, std::uint64_t seed)
{
    const double h = uniform_half_width(variance);
    if (!(h <= 0.5))
        throw ModelError("variance " + std::to_string(variance) + " admits no uniform support inside [0,1]");
    Rng rng(seed);
    MeansTable means = MeansTable::zeros(channels, max_occupancy);
    for (ChannelId m = 1; m <= channels; ++m) {
        for (int n = 1; n <= max_occupancy; ++n) {
            double mu = std::clamp(uniform01(rng), h, 1.0 - h);
            while (mu - h < 0.0)
                mu = std::nextafter(mu, 1.0);
            while (mu + h > 1.0)
                mu = std::nextafter(mu, 0.0);
            means.at(m, n) = mu;
        }
    }
    return build_uniform_model(std::move(means), variance, seed);
}

} // namespace mumab
