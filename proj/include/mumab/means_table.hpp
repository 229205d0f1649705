#pragma once

#include <cstddef>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"

namespace mumab {

// Channels are numbered 1..M and occupancies 1..N throughout the public API.
using ChannelId = int;

// Mean reward per (channel, occupancy) for M channels and occupancies 1..N,
// stored row-major by channel. Occupancies above N read as 0.
class MeansTable {
public:
    MeansTable() = default;

    MeansTable(int channels, int max_occupancy, std::vector<double> row_major)
        : channels_(channels)
        , max_occupancy_(max_occupancy)
        , values_(std::move(row_major))
    {
        if (channels_ <= 0 || max_occupancy_ <= 0)
            throw UsageError("means table needs at least one channel and one occupancy level");
        if (values_.size() != static_cast<std::size_t>(channels_) * static_cast<std::size_t>(max_occupancy_))
            throw UsageError("means table has " + std::to_string(values_.size()) + " entries, expected "
                             + std::to_string(channels_ * max_occupancy_));
    }

    static MeansTable zeros(int channels, int max_occupancy)
    {
        if (channels <= 0 || max_occupancy <= 0)
            throw UsageError("means table needs at least one channel and one occupancy level");
        return MeansTable(channels, max_occupancy,
                          std::vector<double>(static_cast<std::size_t>(channels) * max_occupancy, 0.0));
    }

    int channels() const noexcept { return channels_; }
    int max_occupancy() const noexcept { return max_occupancy_; }
    bool empty() const noexcept { return values_.empty(); }

    // mu(m, n); zero for n == 0 and for every n > N.
    double operator()(ChannelId m, int n) const
    {
        check_channel(m);
        if (n < 0)
            throw UsageError("negative occupancy " + std::to_string(n));
        if (n == 0 || n > max_occupancy_)
            return 0.0;
        return values_[index(m, n)];
    }

    double& at(ChannelId m, int n)
    {
        check_channel(m);
        if (n < 1 || n > max_occupancy_)
            throw UsageError("occupancy " + std::to_string(n) + " outside 1.." + std::to_string(max_occupancy_));
        return values_[index(m, n)];
    }

    std::span<const double> row_major() const noexcept { return values_; }

    bool operator==(const MeansTable&) const = default;

private:
    void check_channel(ChannelId m) const
    {
        if (m < 1 || m > channels_)
            throw UsageError("channel " + std::to_string(m) + " outside 1.." + std::to_string(channels_));
    }

    std::size_t index(ChannelId m, int n) const noexcept
    {
        return static_cast<std::size_t>(m - 1) * max_occupancy_ + static_cast<std::size_t>(n - 1);
    }

    int channels_ = 0;
    int max_occupancy_ = 0;
    std::vector<double> values_;
};

// Occupancy vector k: number of users per channel.
class Configuration {
public:
    Configuration() = default;
    explicit Configuration(std::vector<int> counts)
        : counts_(std::move(counts))
    {
    }

    static Configuration zeros(int channels) { return Configuration(std::vector<int>(channels, 0)); }

    int channels() const noexcept { return static_cast<int>(counts_.size()); }

    int count(ChannelId m) const
    {
        if (m < 1 || m > channels())
            throw UsageError("channel " + std::to_string(m) + " outside 1.." + std::to_string(channels()));
        return counts_[static_cast<std::size_t>(m - 1)];
    }

    int users() const noexcept { return std::accumulate(counts_.begin(), counts_.end(), 0); }

    const std::vector<int>& counts() const noexcept { return counts_; }

    bool operator==(const Configuration&) const = default;
    auto operator<=>(const Configuration&) const = default;

    std::string to_string() const
    {
        std::ostringstream os;
        os << '(';
        for (std::size_t i = 0; i < counts_.size(); ++i)
            os << (i ? "," : "") << counts_[i];
        os << ')';
        return os.str();
    }

private:
    std::vector<int> counts_;
};

// System value sum_m k(m) * mu(m, k(m)), summed in channel order. Every
// component that reports a configuration's value goes through this function
// so equal configurations produce bit-identical values.
inline double system_value(const MeansTable& means, const Configuration& k)
{
    if (k.channels() != means.channels())
        throw UsageError("configuration has " + std::to_string(k.channels()) + " channels, table has "
                         + std::to_string(means.channels()));
    double total = 0.0;
    for (ChannelId m = 1; m <= k.channels(); ++m) {
        const int n = k.count(m);
        if (n > 0)
            total += n * means(m, n);
    }
    return total;
}

} // namespace mumab
