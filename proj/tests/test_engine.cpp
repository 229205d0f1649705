#include <cmath>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "mumab/csv.hpp"
#include "mumab/engine.hpp"

using namespace mumab;

namespace {

const RewardModel& tiny()
{
    static const RewardModel model = build_point_mass_model(MeansTable(2, 2, {0.9, 0.3, 0.8, 0.2}));
    return model;
}

const RewardModel& frozen()
{
    static const RewardModel model = build_uniform_model(
        MeansTable(6, 3, {0.718, 0.388, 0.778, 0.826, 0.174, 0.326, 0.415, 0.826, 0.227, 0.825, 0.175, 0.183,
                          0.824, 0.176, 0.315, 0.405, 0.824, 0.222}),
        0.01);
    return model;
}

RunSpec spec_for(const RewardModel& model, int users, std::int64_t horizon, double delta, std::uint64_t seed,
                 PolicyKind policy = PolicyKind::EpochPolicy)
{
    RunSpec spec;
    spec.model = &model;
    spec.policy = policy;
    spec.users = users;
    spec.horizon = horizon;
    spec.delta_lb = delta;
    spec.seed = seed;
    spec.logging = {LogSpacing::Kind::Linear, 1};
    return spec;
}

// Always transmits on a channel that does not exist.
struct OutOfRangePolicy {
    explicit OutOfRangePolicy(const PolicyInit& init) : channels(init.channels) {}
    Action act() const { return Action::transmit(channels + 1); }
    std::optional<CellLabel> sample_label() const { return std::nullopt; }
    void observe(double) {}
    void restart(int, int, int) {}
    int epoch() const { return 0; }
    Phase phase() const { return Phase::None; }
    int channels;
};

} // namespace

TEST(Engine, EmptyHorizon)
{
    const auto r = run(spec_for(tiny(), 2, 0, 0.1, 1));
    EXPECT_TRUE(r.trace.points.empty());
    EXPECT_EQ(r.trace.final_regret(), 0.0);
}

TEST(Engine, HandComputedPointMassRegret)
{
    // M=2, N=1, K=2, means 0.8 / 0.2: J1 = 1.0. delta_lb = 0.1 gives T0 = 50.
    // Estimation: groups {1} and {2} each play arm 1 then arm 2 alone, so each
    // group costs 50 * 0.2 + 50 * 0.8 = 50 and the phase costs 100. The
    // allocation phase plays (1,1) and costs nothing.
    const auto model = build_point_mass_model(MeansTable(2, 1, {0.8, 0.2}));
    const auto r = run(spec_for(model, 2, 200 + 2 + 200 + 4 + 100, 0.1, 5));
    const auto& pts = r.trace.points;
    EXPECT_NEAR(pts[200].regret, 100.0, 1e-9);
    EXPECT_NEAR(pts[202].regret, 100.0, 1e-9);
    EXPECT_NEAR(pts[402].regret, 200.0, 1e-9);
    EXPECT_NEAR(pts[406].regret, 200.0, 1e-9);
    EXPECT_NEAR(pts[456].regret, 210.0, 1e-9); // 50 slots of group {1} on arm 1
    ASSERT_GE(r.epochs.size(), 2u);
    EXPECT_NEAR(r.epochs[0].estimation_regret, 100.0, 1e-9);
    EXPECT_EQ(r.epochs[0].allocation_regret, 0.0);
    EXPECT_TRUE(r.epochs[0].complete);
    EXPECT_EQ(r.epochs[1].allocation_slots, 4);
    EXPECT_EQ(pts[200].phase, Phase::Estimation);
    EXPECT_EQ(pts[201].phase, Phase::Allocation);
}

TEST(Engine, Deterministic)
{
    const auto spec = spec_for(frozen(), 10, 60'000, gap_params(frozen().means(), 10).delta, 99);
    const auto a = run(spec);
    const auto b = run(spec);
    ASSERT_EQ(a.trace.points.size(), b.trace.points.size());
    for (std::size_t i = 0; i < a.trace.points.size(); ++i)
        ASSERT_EQ(a.trace.points[i], b.trace.points[i]);
    // Estimation-phase regret is seed-independent; the baseline's is not.
    auto random = spec;
    random.policy = PolicyKind::RandomBaseline;
    auto other = random;
    other.seed = 100;
    EXPECT_EQ(run(random).trace.final_regret(), run(random).trace.final_regret());
    EXPECT_NE(run(other).trace.final_regret(), run(random).trace.final_regret());
}

TEST(Engine, EstimationSamplesMatchOccupancy)
{
    const auto r = run(spec_for(frozen(), 10, 100'000, 0.05, 3));
    EXPECT_GT(r.samples_checked, 0);
    EXPECT_EQ(r.sample_violations, 0);
}

TEST(Engine, EpochSplitSumsToTotal)
{
    const auto r = run(spec_for(frozen(), 10, 200'000, gap_params(frozen().means(), 10).delta, 4));
    double total = 0.0;
    for (const EpochRegret& e : r.epochs)
        total += e.estimation_regret + e.allocation_regret;
    EXPECT_NEAR(total, r.trace.final_regret(), 1e-6 * r.trace.final_regret());
}

TEST(Engine, RandomBaselineChannelFrequencies)
{
    auto spec = spec_for(frozen(), 10, 20'000, 1.0, 8, PolicyKind::RandomBaseline);
    std::vector<std::int64_t> counts(6, 0);
    RunHooks<RandomChannelPolicy> hooks;
    hooks.on_slot = [&](const SlotOutcome& s) {
        for (const Action& a : s.actions)
            ++counts[static_cast<std::size_t>(a.channel() - 1)];
    };
    simulate<RandomChannelPolicy>(spec, hooks);
    const double n = 20'000.0 * 10;
    for (auto c : counts)
        EXPECT_NEAR(c / n, 1.0 / 6, 4.0 * std::sqrt((1.0 / 6) * (5.0 / 6) / n));
}

TEST(Engine, RandomBaselineRegretIsLinear)
{
    // Two users on the tiny model: same channel w.p. 1/2 (values 0.6 or 0.4),
    // split w.p. 1/2 (1.7). Expected value 1.1, so regret grows at 0.6 per slot.
    const auto r = run(spec_for(tiny(), 2, 100'000, 1.0, 2, PolicyKind::RandomBaseline));
    EXPECT_NEAR(r.trace.final_regret() / 100'000, 0.6, 0.01);
}

TEST(Engine, InvalidChannelAborts)
{
    auto spec = spec_for(tiny(), 2, 10, 1.0, 1);
    EXPECT_THROW(simulate<OutOfRangePolicy>(spec), ContractViolation);
}

TEST(Engine, PartialPlacementMayBeatFullOptimum)
{
    // K=4 fills both channels: J1 = 2*0.1 + 2*0.1 = 0.4. A lone estimation
    // transmitter on channel 1 earns 0.9, so the increment is -0.5.
    const auto model = build_point_mass_model(MeansTable(2, 2, {0.9, 0.1, 0.1, 0.1}));
    std::vector<double> increments;
    RunHooks<Agent> hooks;
    hooks.on_slot = [&](const SlotOutcome& s) { increments.push_back(s.regret_increment); };
    EXPECT_NO_THROW(simulate<Agent>(spec_for(model, 4, 200, 0.2, 1), hooks));
    EXPECT_NEAR(increments.front(), -0.5, 1e-12);
}

TEST(Engine, RejectsBadSpecs)
{
    EXPECT_THROW(run(spec_for(tiny(), 5, 10, 0.1, 1)), InfeasibleError);
    auto spec = spec_for(tiny(), 2, 10, 0.1, 1);
    spec.churn = ChurnSchedule{{}, 0.3, 1.0, 2};
    EXPECT_THROW(run(spec), UsageError);
}

TEST(Engine, PointMassAllocationIsRegretFree)
{
    const auto model = build_point_mass_model(frozen().means());
    const auto r = run(spec_for(model, 10, 300'000, gap_params(model.means(), 10).delta, 6));
    for (const EpochRegret& e : r.epochs)
        EXPECT_EQ(e.allocation_regret_slots, 0) << "epoch " << e.epoch;
}

TEST(Engine, ArrivalWaitsForBoundaryAndDepartureMarksChange)
{
    const auto model = build_point_mass_model(MeansTable(2, 1, {0.8, 0.2}));
    auto spec = spec_for(model, 1, 700, 0.1, 1);
    spec.tau = 100; // boundaries after slots 100, 300, 600
    spec.churn = ChurnSchedule{{{50, ChurnKind::Arrive, 1}, {301, ChurnKind::Depart, 0}, {450, ChurnKind::Arrive, 2}},
                               0.3, 1.0, 1};
    std::map<std::int64_t, SlotOutcome> seen;
    RunHooks<Agent> hooks;
    hooks.on_slot = [&](const SlotOutcome& s) { seen[s.t] = s; };
    const auto r = simulate<Agent>(spec, hooks);
    // Pending arrival idles until slot 101.
    ASSERT_EQ(seen[60].users.size(), 2u);
    EXPECT_FALSE(seen[60].actions[1].transmits());
    EXPECT_EQ(seen[60].optimal_value, 1.0); // J1 counts the waiting user
    // T0 = 50: in super-epoch 2, ID 2 first transmits in the third segment.
    EXPECT_FALSE(seen[101].actions[1].transmits());
    EXPECT_EQ(seen[201].actions[1], Action::transmit(1));
    // The departure at the first slot of super-epoch 3 happens before the reset.
    EXPECT_EQ(seen[301].users, std::vector<int>{1});
    ASSERT_EQ(r.changed_super_epochs.size(), 4u);
    EXPECT_TRUE(r.changed_super_epochs[0]);
    EXPECT_FALSE(r.changed_super_epochs[1]);
    EXPECT_TRUE(r.changed_super_epochs[2]);
    EXPECT_FALSE(r.changed_super_epochs[3]);
}

TEST(Aggregate, SingleRunIsItself)
{
    const auto r = run(spec_for(tiny(), 2, 500, 0.2, 1));
    const std::vector<RegretTrace> traces{r.trace};
    const auto agg = aggregate_runs(traces);
    ASSERT_EQ(agg.size(), r.trace.points.size());
    for (std::size_t i = 0; i < agg.size(); ++i) {
        EXPECT_EQ(agg[i].mean, r.trace.points[i].regret);
        EXPECT_EQ(agg[i].std, 0.0);
    }
}

TEST(Aggregate, IdenticalSeedsHaveZeroSpread)
{
    const auto spec = spec_for(frozen(), 10, 5000, 0.05, 9);
    const std::vector<RegretTrace> traces{run(spec).trace, run(spec).trace};
    for (const auto& p : aggregate_runs(traces))
        EXPECT_EQ(p.std, 0.0);
}

TEST(Aggregate, PopulationStandardDeviation)
{
    RegretTrace a{{{0, 0.0}, {1, 1.0}}};
    RegretTrace b{{{0, 0.0}, {1, 3.0}}};
    const std::vector<RegretTrace> traces{a, b};
    const auto agg = aggregate_runs(traces);
    EXPECT_EQ(agg[1].mean, 2.0);
    EXPECT_EQ(agg[1].std, 1.0);
}

TEST(Aggregate, MismatchedHorizons)
{
    RegretTrace a{{{0, 0.0}, {1, 1.0}}};
    RegretTrace b{{{0, 0.0}, {2, 3.0}}};
    const std::vector<RegretTrace> traces{a, b};
    EXPECT_THROW(aggregate_runs(traces), UsageError);
}

TEST(LogPoints, Spacing)
{
    EXPECT_EQ(log_points(10, {LogSpacing::Kind::Linear, 4}), (std::vector<std::int64_t>{0, 4, 8, 10}));
    EXPECT_EQ(log_points(10, {LogSpacing::Kind::Geometric, 0}), (std::vector<std::int64_t>{0, 1, 2, 4, 8, 10}));
    EXPECT_EQ(log_points(5000, {}).size(), 1001u);
}

TEST(Csv, TraceSchema)
{
    RegretTrace t{{{0, 0.0, 1, Phase::Estimation}, {5, 0.1, 1, Phase::Allocation}}};
    std::ostringstream os;
    write_trace_csv(os, t);
    EXPECT_EQ(os.str(), "t,cumulative_regret,epoch,phase\n0,0,1,estimation\n5,0.1,1,allocation\n");
}
