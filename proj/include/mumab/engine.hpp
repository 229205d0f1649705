#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "agent.hpp"
#include "dynamics.hpp"
#include "errors.hpp"
#include "optimizer.hpp"
#include "random.hpp"
#include "reward_model.hpp"

namespace mumab {

enum class PolicyKind { EpochPolicy, RandomBaseline };

inline std::string to_string(PolicyKind p)
{
    return p == PolicyKind::EpochPolicy ? "paper-algorithm" : "random-baseline";
}

inline std::optional<PolicyKind> parse_policy(const std::string& s)
{
    if (s == "paper-algorithm") return PolicyKind::EpochPolicy;
    if (s == "random-baseline") return PolicyKind::RandomBaseline;
    return std::nullopt;
}

// Which slots get a trace row. Linear: every `stride` slots (0 picks
// horizon/1000). Geometric: powers of two. Slot 0 and the horizon are
// always included; an empty horizon logs nothing.
struct LogSpacing {
    enum class Kind { Linear, Geometric };
    Kind kind = Kind::Linear;
    std::int64_t stride = 0;

    bool operator==(const LogSpacing&) const = default;
};

inline std::vector<std::int64_t> log_points(std::int64_t horizon, const LogSpacing& spacing)
{
    if (horizon <= 0)
        return {};
    std::vector<std::int64_t> points{0};
    if (spacing.kind == LogSpacing::Kind::Geometric) {
        for (std::int64_t t = 1; t < horizon; t *= 2)
            points.push_back(t);
    } else {
        const std::int64_t stride = spacing.stride > 0 ? spacing.stride : std::max<std::int64_t>(1, horizon / 1000);
        for (std::int64_t t = stride; t < horizon; t += stride)
            points.push_back(t);
    }
    points.push_back(horizon);
    return points;
}

struct TracePoint {
    std::int64_t t = 0;
    double regret = 0.0; // cumulative pseudo-regret after slot t
    int epoch = 0;
    Phase phase = Phase::None;

    bool operator==(const TracePoint&) const = default;
};

struct RegretTrace {
    std::vector<TracePoint> points;

    double final_regret() const { return points.empty() ? 0.0 : points.back().regret; }
    std::int64_t horizon() const { return points.empty() ? 0 : points.back().t; }
};

// Regret split of one epoch into its estimation and allocation phases.
struct EpochRegret {
    int super_epoch = 1;
    int epoch = 1;
    double estimation_regret = 0.0;
    double allocation_regret = 0.0;
    std::int64_t estimation_slots = 0;
    std::int64_t allocation_slots = 0;
    std::int64_t allocation_regret_slots = 0; // allocation slots with non-zero regret
    bool complete = false;                    // allocation phase ran its full 2^l slots
    bool changed = false;                     // its super-epoch saw an arrival or departure
};

// Full record of one slot, indexed by active user in handle order.
struct SlotOutcome {
    std::int64_t t = 0;
    std::vector<int> users; // handles
    std::vector<Action> actions;
    std::vector<double> rewards;
    std::vector<std::optional<CellLabel>> samples;
    std::vector<int> occupancy; // per channel
    double expected_system_reward = 0.0;
    double optimal_value = 0.0; // J1(K_t)
    double regret_increment = 0.0;
};

struct RunSpec {
    const RewardModel* model = nullptr;
    PolicyKind policy = PolicyKind::EpochPolicy;
    int users = 1; // K, or K0 with churn
    std::int64_t horizon = 0;
    std::int64_t fairness_window = 1;
    double delta_lb = 0.0; // used by the epoch policy only
    std::uint64_t seed = 0;
    std::int64_t tau = 0;                // > 0 enables super-epochs of length tau, 2 tau, ...
    std::optional<ChurnSchedule> churn;  // requires tau > 0
    LogSpacing logging;
    bool full_log = false;
};

struct RunResult {
    RegretTrace trace;
    std::vector<EpochRegret> epochs;
    std::vector<SlotOutcome> log; // filled in full-log mode without an on_slot hook
    std::vector<bool> changed_super_epochs;
    std::int64_t samples_checked = 0;
    std::int64_t sample_violations = 0; // labeled (m,n) while k_t(m) != n
    std::int64_t samples_per_cell = 0;
};

template <class P>
struct RunHooks {
    std::function<void(const SlotOutcome&)> on_slot;                   // before agents observe
    std::function<void(std::int64_t, std::span<const P>)> after_slot; // after agents observe
};

namespace detail {

// Sum of k(m) mu(m, k(m)) in channel order, matching system_value().
inline double occupancy_value(const MeansTable& means, const std::vector<int>& occupancy)
{
    double total = 0.0;
    for (std::size_t i = 0; i < occupancy.size(); ++i) {
        const int n = occupancy[i];
        if (n > 0)
            total += n * means(static_cast<ChannelId>(i + 1), n);
    }
    return total;
}

inline void validate(const RunSpec& spec)
{
    if (spec.model == nullptr)
        throw UsageError("run needs a reward model");
    const int capacity = spec.model->channels() * spec.model->max_occupancy();
    if (spec.users < 1 || spec.users > capacity)
        throw InfeasibleError(std::to_string(spec.users) + " users outside 1.." + std::to_string(capacity));
    if (spec.horizon < 0)
        throw UsageError("horizon must be non-negative");
    if (spec.fairness_window < 1)
        throw UsageError("fairness window must be at least one slot");
    if (spec.tau < 0)
        throw UsageError("tau must be non-negative");
    if (spec.churn) {
        if (spec.tau == 0)
            throw UsageError("churn requires super-epochs (tau > 0)");
        if (spec.churn->initial_users != spec.users)
            throw UsageError("churn schedule starts from " + std::to_string(spec.churn->initial_users)
                             + " users, run from " + std::to_string(spec.users));
    }
}

} // namespace detail

// Synchronous slot loop. Each slot: apply churn, restart agents at
// super-epoch boundaries, collect one action per active user, form the
// occupancy vector, draw each transmitter's reward from (m, k_t(m)), deliver
// it to that user only, and add J1(K_t) minus the expected system reward of
// the realized occupancy to the pseudo-regret.
template <SlotPolicy P>
RunResult simulate(const RunSpec& spec, const RunHooks<P>& hooks = {})
{
    detail::validate(spec);
    const RewardModel& model = *spec.model;
    const MeansTable& means = model.means();
    const int channels = model.channels();
    const int capacity = channels * model.max_occupancy();
    const std::int64_t t0 = spec.policy == PolicyKind::EpochPolicy ? samples_per_cell(spec.delta_lb) : 1;

    std::vector<double> best_value(static_cast<std::size_t>(capacity) + 1);
    for (int k = 0; k <= capacity; ++k)
        best_value[k] = optimal_config(means, k).value;

    RunResult result;
    result.samples_per_cell = t0;
    Population population(spec.users, capacity);
    auto init_for = [&](int handle, int id, int users) {
        return PolicyInit{channels, model.max_occupancy(), t0, spec.fairness_window, id, users,
                          derive_seed(spec.seed, 2, static_cast<std::uint64_t>(handle))};
    };
    std::vector<P> policies;
    policies.reserve(static_cast<std::size_t>(capacity));
    for (int h = 0; h < spec.users; ++h)
        policies.emplace_back(init_for(h, h + 1, spec.users));

    Rng env(derive_seed(spec.seed, 1));
    const auto points = log_points(spec.horizon, spec.logging);
    std::size_t next_point = 0;

    int super_epoch = 1;
    std::int64_t boundary = spec.tau > 0 ? super_epoch_end(1, spec.tau) : std::numeric_limits<std::int64_t>::max();
    result.changed_super_epochs.push_back(false);
    std::size_t next_event = 0;

    auto reference = [&]() -> const P* {
        const auto& members = population.members();
        for (std::size_t i = 0; i < members.size(); ++i)
            if (!members[i].pending)
                return &policies[i];
        return nullptr;
    };

    double regret = 0.0;
    if (next_point < points.size() && points[next_point] == 0) {
        const P* ref = reference();
        result.trace.points.push_back({0, 0.0, ref ? ref->epoch() : 0, ref ? ref->phase() : Phase::None});
        ++next_point;
    }

    std::vector<Action> actions;
    std::vector<double> rewards;
    std::vector<int> occupancy(static_cast<std::size_t>(channels));
    const bool want_outcome = spec.full_log || static_cast<bool>(hooks.on_slot);

    for (std::int64_t t = 1; t <= spec.horizon; ++t) {
        const bool at_boundary = spec.tau > 0 && t - 1 == boundary;
        if (spec.churn) {
            const auto& events = spec.churn->events;
            for (; next_event < events.size() && events[next_event].slot <= t; ++next_event) {
                const ChurnEvent& e = events[next_event];
                const auto& members = population.members();
                if (e.kind == ChurnKind::Depart) {
                    auto it = std::find_if(members.begin(), members.end(),
                                           [&](const Population::Member& m) { return m.handle == e.user; });
                    const auto index = it - members.begin();
                    population.apply(e);
                    policies.erase(policies.begin() + index);
                } else {
                    population.apply(e);
                    const auto& after = population.members();
                    auto it = std::find_if(after.begin(), after.end(),
                                           [&](const Population::Member& m) { return m.handle == e.user; });
                    policies.insert(policies.begin() + (it - after.begin()), P(init_for(e.user, 1, 1)));
                }
                if (!at_boundary)
                    result.changed_super_epochs.back() = true;
            }
        }
        if (at_boundary) {
            ++super_epoch;
            boundary = super_epoch_end(super_epoch, spec.tau);
            result.changed_super_epochs.push_back(false);
            population.begin_super_epoch();
            const int k = population.size();
            for (int i = 0; i < k; ++i)
                policies[static_cast<std::size_t>(i)].restart(i + 1, k, super_epoch);
        }

        const auto& members = population.members();
        const std::size_t active = members.size();
        actions.assign(active, Action::idle());
        rewards.assign(active, 0.0);
        std::fill(occupancy.begin(), occupancy.end(), 0);
        for (std::size_t i = 0; i < active; ++i) {
            if (members[i].pending)
                continue;
            const Action a = policies[i].act();
            if (a.transmits()) {
                if (a.channel() < 1 || a.channel() > channels)
                    throw ContractViolation("user " + std::to_string(members[i].handle) + " chose channel "
                                            + std::to_string(a.channel()) + " at slot " + std::to_string(t)
                                            + "; valid channels are 1.." + std::to_string(channels));
                ++occupancy[static_cast<std::size_t>(a.channel() - 1)];
            }
            actions[i] = a;
        }
        for (std::size_t i = 0; i < active; ++i) {
            if (actions[i].transmits())
                rewards[i] = model.sample_reward(actions[i].channel(),
                                                 occupancy[static_cast<std::size_t>(actions[i].channel() - 1)], env);
        }

        std::vector<std::optional<CellLabel>> labels;
        if (want_outcome)
            labels.assign(active, std::nullopt);
        for (std::size_t i = 0; i < active; ++i) {
            if (members[i].pending)
                continue;
            if (const auto label = policies[i].sample_label()) {
                ++result.samples_checked;
                if (occupancy[static_cast<std::size_t>(label->channel - 1)] != label->occupancy)
                    ++result.sample_violations;
                if (want_outcome)
                    labels[i] = label;
            }
        }

        const double expected = detail::occupancy_value(means, occupancy);
        const double optimum = best_value[static_cast<std::size_t>(active)];
        const double increment = optimum - expected;
        // J1 bounds every configuration that places all K_t users within the
        // N-per-channel limit; idle users or overfull channels fall outside it.
        if (increment < -kValueTolerance) {
            int placed = 0;
            bool within_limit = true;
            for (int n : occupancy) {
                placed += n;
                within_limit = within_limit && n <= model.max_occupancy();
            }
            if (placed == static_cast<int>(active) && within_limit)
                throw ContractViolation("negative regret increment " + std::to_string(increment) + " at slot "
                                        + std::to_string(t) + ": optimizer returned a non-maximal J1");
        }
        regret += increment;

        const P* ref = reference();
        const int epoch = ref ? ref->epoch() : 0;
        const Phase phase = ref ? ref->phase() : Phase::None;
        if (ref && phase != Phase::None) {
            if (result.epochs.empty() || result.epochs.back().super_epoch != super_epoch
                || result.epochs.back().epoch != epoch)
                result.epochs.push_back({super_epoch, epoch});
            EpochRegret& e = result.epochs.back();
            if (phase == Phase::Estimation) {
                e.estimation_regret += increment;
                ++e.estimation_slots;
            } else {
                e.allocation_regret += increment;
                ++e.allocation_slots;
                if (increment != 0.0)
                    ++e.allocation_regret_slots;
                e.complete = e.allocation_slots == allocation_length(epoch);
            }
        }

        if (want_outcome) {
            SlotOutcome outcome;
            outcome.t = t;
            for (const auto& m : members)
                outcome.users.push_back(m.handle);
            outcome.actions = actions;
            outcome.rewards = rewards;
            outcome.samples = std::move(labels);
            outcome.occupancy = occupancy;
            outcome.expected_system_reward = expected;
            outcome.optimal_value = optimum;
            outcome.regret_increment = increment;
            if (hooks.on_slot)
                hooks.on_slot(outcome);
            else
                result.log.push_back(std::move(outcome));
        }

        for (std::size_t i = 0; i < active; ++i) {
            if (!members[i].pending)
                policies[i].observe(rewards[i]);
        }
        if (hooks.after_slot)
            hooks.after_slot(t, std::span<const P>(policies));

        if (next_point < points.size() && points[next_point] == t) {
            result.trace.points.push_back({t, regret, epoch, phase});
            ++next_point;
        }
    }

    for (EpochRegret& e : result.epochs)
        e.changed = result.changed_super_epochs[static_cast<std::size_t>(e.super_epoch - 1)];
    return result;
}

inline RunResult run(const RunSpec& spec)
{
    if (spec.policy == PolicyKind::EpochPolicy)
        return simulate<Agent>(spec);
    return simulate<RandomChannelPolicy>(spec);
}

struct AggregatePoint {
    std::int64_t t = 0;
    double mean = 0.0;
    double std = 0.0; // population standard deviation across runs
};

// Pointwise mean and standard deviation over runs sharing one log grid.
inline std::vector<AggregatePoint> aggregate_runs(std::span<const RegretTrace> traces)
{
    if (traces.empty())
        throw UsageError("aggregate_runs needs at least one trace");
    const auto& grid = traces.front().points;
    for (const RegretTrace& tr : traces) {
        if (tr.points.size() != grid.size() || tr.horizon() != traces.front().horizon())
            throw UsageError("cannot aggregate traces with different horizons or log grids");
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (tr.points[i].t != grid[i].t)
                throw UsageError("cannot aggregate traces logged at different slots");
    }
    std::vector<AggregatePoint> out;
    out.reserve(grid.size());
    const double runs = static_cast<double>(traces.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double sum = 0.0;
        for (const RegretTrace& tr : traces)
            sum += tr.points[i].regret;
        const double mean = sum / runs;
        double sq = 0.0;
        for (const RegretTrace& tr : traces) {
            const double d = tr.points[i].regret - mean;
            sq += d * d;
        }
        out.push_back({grid[i].t, mean, std::sqrt(sq / runs)});
    }
    return out;
}

} // namespace mumab
