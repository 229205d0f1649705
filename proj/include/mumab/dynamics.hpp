#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "errors.hpp"
#include "random.hpp"
#include "schedule.hpp"

namespace mumab {

enum class ChurnKind { Arrive, Depart };

// Users are tracked by persistent handles (0, 1, ...); the per-super-epoch
// IDs 1..K_t are derived from handle order at each boundary.
struct ChurnEvent {
    std::int64_t slot = 0; // 1-based slot at whose start the event applies
    ChurnKind kind = ChurnKind::Arrive;
    int user = 0;          // handle that arrives or departs

    bool operator==(const ChurnEvent&) const = default;
};

struct ChurnSchedule {
    std::vector<ChurnEvent> events; // ordered by slot
    double zeta = 0.0;
    double c = 0.0;
    int initial_users = 1; // handles 0..initial_users-1 are present at slot 1

    bool operator==(const ChurnSchedule&) const = default;
};

// kappa_t budget c * t^zeta.
inline double churn_budget(double c, double zeta, std::int64_t t)
{
    return t <= 0 ? 0.0 : c * std::pow(static_cast<double>(t), zeta);
}

// Checks kappa_t <= c t^zeta for every slot 1..horizon.
inline bool respects_budget(const ChurnSchedule& schedule, std::int64_t horizon)
{
    std::size_t next = 0;
    std::int64_t kappa = 0;
    for (std::int64_t t = 1; t <= horizon; ++t) {
        while (next < schedule.events.size() && schedule.events[next].slot <= t) {
            ++kappa;
            ++next;
        }
        if (static_cast<double>(kappa) > churn_budget(schedule.c, schedule.zeta, t))
            return false;
    }
    return next == schedule.events.size() || schedule.events[next].slot > horizon;
}

// Active user handles. Arrivals wait (idle) until the next super-epoch
// boundary; departures take effect immediately.
class Population {
public:
    struct Member {
        int handle = 0;
        bool pending = false;
    };

    Population(int initial_users, int capacity)
        : capacity_(capacity)
    {
        if (initial_users < 1 || initial_users > capacity)
            throw InfeasibleError("initial population " + std::to_string(initial_users) + " outside 1.."
                                  + std::to_string(capacity));
        for (int h = 0; h < initial_users; ++h)
            members_.push_back({h, false});
    }

    const std::vector<Member>& members() const noexcept { return members_; }
    int size() const noexcept { return static_cast<int>(members_.size()); }

    // Boundary: pending arrivals join; IDs follow handle order.
    void begin_super_epoch()
    {
        for (Member& m : members_)
            m.pending = false;
    }

    void apply(const ChurnEvent& event)
    {
        auto it = std::find_if(members_.begin(), members_.end(),
                               [&](const Member& m) { return m.handle == event.user; });
        if (event.kind == ChurnKind::Depart) {
            if (it == members_.end())
                throw ContractViolation("churn schedule departs unknown user " + std::to_string(event.user)
                                        + " at slot " + std::to_string(event.slot));
            if (size() == 1)
                throw ContractViolation("churn schedule empties the system at slot " + std::to_string(event.slot));
            members_.erase(it);
        } else {
            if (it != members_.end())
                throw ContractViolation("churn schedule re-adds active user " + std::to_string(event.user));
            if (size() == capacity_)
                throw ContractViolation("churn schedule exceeds capacity at slot " + std::to_string(event.slot));
            Member joined{event.user, true};
            members_.insert(std::upper_bound(members_.begin(), members_.end(), joined,
                                             [](const Member& a, const Member& b) { return a.handle < b.handle; }),
                            joined);
        }
    }

private:
    int capacity_;
    std::vector<Member> members_; // sorted by handle
};

inline void apply_churn(Population& population, const ChurnEvent& event) { population.apply(event); }

// Random churn whose cumulative count never exceeds c t^zeta. Event k is
// placed uniformly in [t_k, t_{k+1}), where t_k is the first slot with
// c t_k^zeta >= k. Each event is an arrival or a departure with equal
// probability among the feasible kinds; departures pick a uniform active user.
inline ChurnSchedule generate_churn(double zeta, double c, std::int64_t horizon, int channels, int max_occupancy,
                                   int initial_users, Rng& rng)
{
    if (!(zeta >= 0.0 && zeta < 0.5))
        throw UsageError("zeta must lie in [0, 1/2)");
    if (!(c >= 0.0))
        throw UsageError("churn budget constant must be non-negative");
    const int capacity = channels * max_occupancy;
    if (initial_users < 1 || initial_users > capacity)
        throw InfeasibleError("initial population " + std::to_string(initial_users) + " outside 1.."
                              + std::to_string(capacity));

    ChurnSchedule schedule{{}, zeta, c, initial_users};
    if (horizon < 1 || c == 0.0)
        return schedule;

    // Earliest slot at which the k-th event fits the budget.
    auto earliest = [&](std::int64_t k) -> std::int64_t {
        double t = std::ceil(std::pow(static_cast<double>(k) / c, 1.0 / zeta));
        if (t > static_cast<double>(horizon))
            return horizon + 1;
        auto slot = std::max<std::int64_t>(1, static_cast<std::int64_t>(t));
        while (slot > 1 && churn_budget(c, zeta, slot - 1) >= static_cast<double>(k))
            --slot;
        while (churn_budget(c, zeta, slot) < static_cast<double>(k))
            ++slot;
        return slot;
    };

    std::vector<std::int64_t> times;
    if (zeta == 0.0) {
        // Constant budget: floor(c) events anywhere in the horizon.
        const auto count = static_cast<std::int64_t>(std::floor(c));
        for (std::int64_t k = 0; k < count; ++k)
            times.push_back(1 + static_cast<std::int64_t>(uniform_below(rng, static_cast<std::uint64_t>(horizon))));
        std::sort(times.begin(), times.end());
    } else {
        for (std::int64_t k = 1;; ++k) {
            const std::int64_t lo = earliest(k);
            if (lo > horizon)
                break;
            const std::int64_t hi = std::min(horizon, std::max(lo, earliest(k + 1) - 1));
            times.push_back(lo + static_cast<std::int64_t>(uniform_below(rng, static_cast<std::uint64_t>(hi - lo + 1))));
        }
    }

    std::vector<int> active;
    for (int h = 0; h < initial_users; ++h)
        active.push_back(h);
    int next_handle = initial_users;
    for (std::int64_t slot : times) {
        const bool can_arrive = static_cast<int>(active.size()) < capacity;
        const bool can_depart = active.size() > 1;
        if (!can_arrive && !can_depart)
            break;
        const bool arrive = can_arrive && (!can_depart || uniform_below(rng, 2) == 0);
        if (arrive) {
            schedule.events.push_back({slot, ChurnKind::Arrive, next_handle});
            active.push_back(next_handle++);
        } else {
            const auto pick = static_cast<std::size_t>(uniform_below(rng, active.size()));
            schedule.events.push_back({slot, ChurnKind::Depart, active[pick]});
            active.erase(active.begin() + static_cast<std::ptrdiff_t>(pick));
        }
    }
    return schedule;
}

// Last slot of super-epoch r (1-based): tau * r (r + 1) / 2.
inline std::int64_t super_epoch_end(int r, std::int64_t tau)
{
    return tau * static_cast<std::int64_t>(r) * (r + 1) / 2;
}

// Shortest valid tau: strictly longer than the estimation schedule of a
// full system (K = M N), the longest any super-epoch can need.
inline std::int64_t worst_case_estimation_length(int channels, int max_occupancy, std::int64_t t0)
{
    return build_schedule(channels * max_occupancy, channels, max_occupancy, t0).length();
}

} // namespace mumab
