#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "means_table.hpp"

namespace mumab {

// Slots each (channel, occupancy) cell is sampled per estimation phase:
// ceil(1 / (2 delta^2)) for a lower bound delta on the gap.
inline std::int64_t samples_per_cell(double delta_lb)
{
    if (!(delta_lb > 0.0) || !std::isfinite(delta_lb))
        throw UsageError("gap lower bound must be positive and finite");
    const double t0 = std::ceil(1.0 / (2.0 * delta_lb * delta_lb));
    if (t0 > 1e15)
        throw UsageError("gap lower bound " + std::to_string(delta_lb) + " gives an unusable sample count");
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(t0));
}

// One group of users measuring one arm for T0 consecutive slots.
struct Segment {
    int group_size = 0;       // n
    std::vector<int> members; // user IDs, exactly group_size of them
    ChannelId arm = 0;
    std::int64_t start = 0;   // offset within the estimation phase
    std::int64_t duration = 0;

    bool contains(int id) const { return std::find(members.begin(), members.end(), id) != members.end(); }
};

// Deterministic estimation-phase timetable shared by every agent. For each
// group size n, users are cut into groups of n by ID; groups take turns
// playing arms 1..M for T0 slots each while everyone else idles. A short
// last group is topped up with the lowest IDs of group 1.
class EstimationSchedule {
public:
    EstimationSchedule() = default;

    EstimationSchedule(std::vector<Segment> segments, std::int64_t samples_per_cell)
        : segments_(std::move(segments))
        , samples_per_cell_(samples_per_cell)
    {
    }

    std::span<const Segment> segments() const noexcept { return segments_; }
    std::int64_t samples_per_cell() const noexcept { return samples_per_cell_; }
    std::int64_t length() const noexcept
    {
        return static_cast<std::int64_t>(segments_.size()) * samples_per_cell_;
    }

    // Segment active at the given offset into the phase.
    const Segment& at(std::int64_t offset) const
    {
        if (offset < 0 || offset >= length())
            throw UsageError("offset " + std::to_string(offset) + " outside estimation phase of length "
                             + std::to_string(length()));
        return segments_[static_cast<std::size_t>(offset / samples_per_cell_)];
    }

    std::size_t segment_index(std::int64_t offset) const noexcept
    {
        return static_cast<std::size_t>(offset / samples_per_cell_);
    }

private:
    std::vector<Segment> segments_;
    std::int64_t samples_per_cell_ = 0;
};

// Group sizes larger than K cannot be formed from distinct users; those
// occupancies are never needed by the optimizer with K users and are skipped.
inline EstimationSchedule build_schedule(int users, int channels, int max_occupancy, std::int64_t t0)
{
    if (users < 1)
        throw UsageError("schedule needs at least one user");
    if (channels < 1 || max_occupancy < 1)
        throw UsageError("schedule needs M >= 1 and N >= 1");
    if (t0 < 1)
        throw UsageError("samples per cell must be positive");
    if (users > channels * max_occupancy)
        throw InfeasibleError(std::to_string(users) + " users exceed capacity M*N = "
                              + std::to_string(channels * max_occupancy));

    std::vector<Segment> segments;
    std::int64_t start = 0;
    for (int n = 1; n <= std::min(max_occupancy, users); ++n) {
        const int groups = (users + n - 1) / n;
        for (int g = 0; g < groups; ++g) {
            std::vector<int> members;
            for (int id = g * n + 1; id <= std::min(users, (g + 1) * n); ++id)
                members.push_back(id);
            for (int filler = 1; static_cast<int>(members.size()) < n; ++filler)
                members.push_back(filler);
            for (ChannelId m = 1; m <= channels; ++m) {
                segments.push_back({n, members, m, start, t0});
                start += t0;
            }
        }
    }
    return EstimationSchedule(std::move(segments), t0);
}

} // namespace mumab
