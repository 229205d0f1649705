#pragma once

#include <concepts>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "allocation.hpp"
#include "errors.hpp"
#include "means_table.hpp"
#include "optimizer.hpp"
#include "random.hpp"
#include "schedule.hpp"

namespace mumab {

// Transmit on a channel (1..M) or stay silent for the slot.
class Action {
public:
    static constexpr Action idle() noexcept { return Action(0); }
    static constexpr Action transmit(ChannelId m) noexcept { return Action(m); }

    constexpr bool transmits() const noexcept { return channel_ != 0; }
    constexpr ChannelId channel() const noexcept { return channel_; }

    constexpr bool operator==(const Action&) const = default;

private:
    constexpr explicit Action(ChannelId m) noexcept
        : channel_(m)
    {
    }
    ChannelId channel_ = 0;
};

enum class Phase { None, Estimation, Allocation };

inline const char* to_string(Phase p)
{
    switch (p) {
    case Phase::None: return "none";
    case Phase::Estimation: return "estimation";
    case Phase::Allocation: return "allocation";
    }
    return "?";
}

// The (channel, occupancy) cell an agent attributes a reward sample to.
struct CellLabel {
    ChannelId channel = 0;
    int occupancy = 0;

    bool operator==(const CellLabel&) const = default;
};

// Everything a policy instance needs at creation.
struct PolicyInit {
    int channels = 0;
    int max_occupancy = 0;
    std::int64_t samples_per_cell = 1; // T0
    std::int64_t fairness_window = 1;  // Tx
    int id = 1;
    int users = 1;
    std::uint64_t seed = 0;
};

// Interface the simulation engine drives once per slot: act(), then
// observe() with the reward of that slot (0 when idle).
template <class P>
concept SlotPolicy = requires(P p, const P cp, const PolicyInit& init, double reward, int id, int users, int r) {
    P(init);
    { p.act() } -> std::same_as<Action>;
    { cp.sample_label() } -> std::same_as<std::optional<CellLabel>>;
    p.observe(reward);
    p.restart(id, users, r);
    { cp.epoch() } -> std::convertible_to<int>;
    { cp.phase() } -> std::same_as<Phase>;
};

// Allocation phase length of epoch l: 2^l slots.
inline std::int64_t allocation_length(int epoch)
{
    if (epoch < 1 || epoch > 62)
        throw UsageError("epoch " + std::to_string(epoch) + " outside 1..62");
    return std::int64_t{1} << epoch;
}

// One user's decentralized policy. Epoch l runs the shared estimation
// schedule, recomputes k_hat from estimates pooled over all epochs so far,
// then holds its round-robin slot of k_hat for 2^l slots. Decisions depend
// only on the agent's own rewards and the common slot clock.
class Agent {
public:
    explicit Agent(const PolicyInit& init)
        : channels_(init.channels)
        , max_occupancy_(init.max_occupancy)
        , samples_per_cell_(init.samples_per_cell)
        , fairness_window_(init.fairness_window)
    {
        if (channels_ < 1 || max_occupancy_ < 1)
            throw UsageError("agent needs M >= 1 and N >= 1");
        if (fairness_window_ < 1)
            throw UsageError("fairness window must be at least one slot");
        restart(init.id, init.users, 1);
    }

    // Fresh start with a new ID and population size: estimates, epoch counter
    // and phase are all discarded.
    void restart(int id, int users, int super_epoch)
    {
        if (users > channels_ * max_occupancy_)
            throw InfeasibleError(std::to_string(users) + " users exceed capacity M*N = "
                                  + std::to_string(channels_ * max_occupancy_));
        if (users < 1 || id < 1 || id > users)
            throw UsageError("agent id " + std::to_string(id) + " outside 1.." + std::to_string(users));
        id_ = id;
        users_ = users;
        super_epoch_ = super_epoch;
        schedule_ = build_schedule(users, channels_, max_occupancy_, samples_per_cell_);
        member_.assign(schedule_.segments().size(), 0);
        for (std::size_t s = 0; s < member_.size(); ++s)
            member_[s] = schedule_.segments()[s].contains(id) ? 1 : 0;
        const std::size_t cells = static_cast<std::size_t>(channels_) * max_occupancy_;
        est_sum_.assign(cells, 0.0);
        est_count_.assign(cells, 0);
        epoch_ = 1;
        phase_ = Phase::Estimation;
        clock_ = 0;
        k_hat_ = Configuration::zeros(channels_);
        positions_.clear();
    }

    Action act() const
    {
        if (phase_ == Phase::Estimation) {
            const std::size_t s = schedule_.segment_index(clock_);
            return member_[s] ? Action::transmit(schedule_.segments()[s].arm) : Action::idle();
        }
        return Action::transmit(positions_[static_cast<std::size_t>(
            rotated_position(id_, clock_, fairness_window_, users_))]);
    }

    std::optional<CellLabel> sample_label() const
    {
        if (phase_ != Phase::Estimation)
            return std::nullopt;
        const std::size_t s = schedule_.segment_index(clock_);
        if (!member_[s])
            return std::nullopt;
        const Segment& seg = schedule_.segments()[s];
        return CellLabel{seg.arm, seg.group_size};
    }

    void observe(double reward)
    {
        if (!(reward >= 0.0 && reward <= 1.0))
            throw ContractViolation("agent " + std::to_string(id_) + " observed reward " + std::to_string(reward)
                                    + " outside [0,1]");
        if (phase_ == Phase::Estimation) {
            if (const auto label = sample_label()) {
                const std::size_t c = cell(label->channel, label->occupancy);
                est_sum_[c] += reward;
                ++est_count_[c];
            }
            if (++clock_ == schedule_.length())
                finish_estimation();
        } else {
            if (++clock_ == allocation_length(epoch_)) {
                ++epoch_;
                phase_ = Phase::Estimation;
                clock_ = 0;
            }
        }
    }

    // Pooled sample means; cells never sampled read 0.
    MeansTable estimates() const
    {
        MeansTable table = MeansTable::zeros(channels_, max_occupancy_);
        for (ChannelId m = 1; m <= channels_; ++m) {
            for (int n = 1; n <= max_occupancy_; ++n) {
                const std::size_t c = cell(m, n);
                if (est_count_[c] > 0)
                    table.at(m, n) = est_sum_[c] / static_cast<double>(est_count_[c]);
            }
        }
        return table;
    }

    std::int64_t sample_count(ChannelId m, int n) const { return est_count_.at(cell(m, n)); }

    int id() const noexcept { return id_; }
    int users() const noexcept { return users_; }
    int super_epoch() const noexcept { return super_epoch_; }
    int epoch() const noexcept { return epoch_; }
    Phase phase() const noexcept { return phase_; }
    std::int64_t phase_clock() const noexcept { return clock_; }
    std::int64_t samples_per_cell() const noexcept { return samples_per_cell_; }
    const Configuration& estimated_optimum() const noexcept { return k_hat_; }
    const EstimationSchedule& schedule() const noexcept { return schedule_; }

private:
    std::size_t cell(ChannelId m, int n) const
    {
        return static_cast<std::size_t>(m - 1) * max_occupancy_ + static_cast<std::size_t>(n - 1);
    }

    void finish_estimation()
    {
        k_hat_ = optimal_config(estimates(), users_).k;
        positions_ = flatten_positions(k_hat_);
        if (static_cast<int>(positions_.size()) != users_)
            throw ContractViolation("estimated optimum " + k_hat_.to_string() + " does not place "
                                    + std::to_string(users_) + " users");
        phase_ = Phase::Allocation;
        clock_ = 0;
    }

    int channels_;
    int max_occupancy_;
    std::int64_t samples_per_cell_;
    std::int64_t fairness_window_;

    int id_ = 1;
    int users_ = 1;
    int super_epoch_ = 1;
    EstimationSchedule schedule_;
    std::vector<char> member_; // per segment: does this agent transmit
    std::vector<double> est_sum_;
    std::vector<std::int64_t> est_count_;
    int epoch_ = 1;
    Phase phase_ = Phase::Estimation;
    std::int64_t clock_ = 0;
    Configuration k_hat_;
    std::vector<ChannelId> positions_;
};

// Super-epoch boundary: the agent takes its freshly broadcast ID and user
// count and restarts the epoch loop from scratch.
inline void super_epoch_reset(Agent& agent, int id, int users, int super_epoch)
{
    agent.restart(id, users, super_epoch);
}

// Baseline: every slot, transmit on a channel drawn uniformly from 1..M.
class RandomChannelPolicy {
public:
    explicit RandomChannelPolicy(const PolicyInit& init)
        : channels_(init.channels)
        , rng_(init.seed)
    {
        if (channels_ < 1)
            throw UsageError("random policy needs at least one channel");
    }

    Action act() { return Action::transmit(static_cast<ChannelId>(uniform_below(rng_, channels_)) + 1); }
    std::optional<CellLabel> sample_label() const { return std::nullopt; }
    void observe(double) {}
    void restart(int, int, int) {}
    int epoch() const noexcept { return 0; }
    Phase phase() const noexcept { return Phase::None; }

private:
    int channels_;
    Rng rng_;
};

static_assert(SlotPolicy<Agent>);
static_assert(SlotPolicy<RandomChannelPolicy>);

} // namespace mumab
