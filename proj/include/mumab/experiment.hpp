#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <cstdio>
#include <string>
#include <thread>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "bounds.hpp"
#include "config.hpp"
#include "csv.hpp"
#include "dynamics.hpp"
#include "engine.hpp"
#include "optimizer.hpp"

namespace mumab {

struct RunOptions {
    std::optional<std::filesystem::path> output_dir; // overrides the config's output.dir
    unsigned jobs = 0;                               // 0 = hardware concurrency
    bool write_files = true;
};

// Mean regret split of epoch l across runs (static populations only).
struct EpochSummary {
    int epoch = 0;
    int runs = 0; // runs that reached this epoch
    double mean_estimation_regret = 0.0;
    double mean_allocation_regret = 0.0;
    int complete_runs = 0;              // runs whose allocation phase ran to the end
    int zero_allocation_regret_runs = 0; // of those, runs with zero regret in every allocation slot
};

struct PolicyReport {
    PolicyKind policy = PolicyKind::EpochPolicy;
    std::vector<AggregatePoint> aggregate;
    std::vector<RegretTrace> traces;
    std::vector<std::vector<EpochRegret>> epochs; // per run
    double final_mean = 0.0;
    double final_std = 0.0;
    double mean_estimation_regret = 0.0;
    double mean_allocation_regret = 0.0;
    std::vector<EpochSummary> epoch_summary;
    std::int64_t sample_violations = 0;
    std::int64_t samples_checked = 0;
    double changed_super_epoch_fraction = 0.0;
    // Static epoch policy only: the analytical envelope at every logged t.
    bool bound_checked = false;
    bool bound_holds = true;
    double max_bound_ratio = 0.0; // max over t of mean R(t) / bound(t)
};

struct ExperimentReport {
    std::optional<GapParams> gap; // for the initial user count
    std::optional<double> delta_lb;
    std::int64_t samples_per_cell = 0;
    Configuration optimum;
    std::vector<PolicyReport> policies;
    std::vector<std::filesystem::path> files;
};

// Seed of run r: every policy sees the same environment and churn streams.
inline std::uint64_t run_seed(std::uint64_t base, int run)
{
    return derive_seed(base, 0x72756eULL, static_cast<std::uint64_t>(run));
}

inline std::optional<double> resolve_delta(const ExperimentConfig& cfg)
{
    if (cfg.delta_lb)
        return cfg.delta_lb;
    return true_gap(*cfg.model, cfg.users, cfg.churn.has_value());
}

inline std::optional<ChurnSchedule> churn_for_run(const ExperimentConfig& cfg, int run)
{
    if (!cfg.churn)
        return std::nullopt;
    Rng rng(derive_seed(run_seed(cfg.seed, run), 3));
    return generate_churn(cfg.churn->zeta, cfg.churn->c, cfg.horizon, cfg.model->channels(),
                          cfg.model->max_occupancy(), cfg.users, rng);
}

inline RunSpec run_spec(const ExperimentConfig& cfg, PolicyKind policy, int run, double delta)
{
    RunSpec spec;
    spec.model = &*cfg.model;
    spec.policy = policy;
    spec.users = cfg.users;
    spec.horizon = cfg.horizon;
    spec.fairness_window = cfg.fairness_window;
    spec.delta_lb = delta;
    spec.seed = run_seed(cfg.seed, run);
    if (cfg.churn) {
        spec.tau = cfg.churn->tau;
        spec.churn = churn_for_run(cfg, run);
    }
    spec.logging = cfg.logging;
    spec.full_log = cfg.full_log;
    return spec;
}

// Runs tasks 0..count-1 on a pool of worker threads.
template <class Task>
void parallel_for(int count, unsigned jobs, Task&& task)
{
    if (jobs == 0)
        jobs = std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min<unsigned>(jobs, static_cast<unsigned>(std::max(count, 1)));
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (int i = next++; i < count; i = next++) {
            try {
                task(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
                next = count;
            }
        }
    };
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned j = 0; j < jobs; ++j)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }
    if (failure)
        std::rethrow_exception(failure);
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << text;
}

inline PolicyReport summarize(PolicyKind policy, std::vector<RunResult>& results, const ExperimentConfig& cfg,
                              std::optional<double> delta)
{
    PolicyReport rep;
    rep.policy = policy;
    for (RunResult& r : results) {
        rep.traces.push_back(std::move(r.trace));
        rep.epochs.push_back(std::move(r.epochs));
        rep.sample_violations += r.sample_violations;
        rep.samples_checked += r.samples_checked;
    }
    rep.aggregate = aggregate_runs(rep.traces);
    rep.final_mean = rep.aggregate.back().mean;
    rep.final_std = rep.aggregate.back().std;

    const double runs = static_cast<double>(results.size());
    std::size_t changed = 0;
    std::size_t super_epochs = 0;
    for (const RunResult& r : results) {
        super_epochs += r.changed_super_epochs.size();
        changed += static_cast<std::size_t>(std::count(r.changed_super_epochs.begin(), r.changed_super_epochs.end(), true));
    }
    rep.changed_super_epoch_fraction = super_epochs ? static_cast<double>(changed) / super_epochs : 0.0;

    for (const auto& epochs : rep.epochs) {
        for (const EpochRegret& e : epochs) {
            rep.mean_estimation_regret += e.estimation_regret / runs;
            rep.mean_allocation_regret += e.allocation_regret / runs;
            if (cfg.churn)
                continue;
            if (static_cast<int>(rep.epoch_summary.size()) < e.epoch)
                rep.epoch_summary.resize(static_cast<std::size_t>(e.epoch));
            EpochSummary& s = rep.epoch_summary[static_cast<std::size_t>(e.epoch - 1)];
            s.epoch = e.epoch;
            ++s.runs;
            s.mean_estimation_regret += e.estimation_regret / runs;
            s.mean_allocation_regret += e.allocation_regret / runs;
            if (e.complete) {
                ++s.complete_runs;
                if (e.allocation_regret_slots == 0)
                    ++s.zero_allocation_regret_runs;
            }
        }
    }

    if (policy == PolicyKind::EpochPolicy && !cfg.churn && delta) {
        rep.bound_checked = true;
        const auto& m = *cfg.model;
        for (const AggregatePoint& p : rep.aggregate) {
            if (p.t < 1)
                continue;
            const double bound = static_regret_bound(cfg.users, m.channels(), m.max_occupancy(), *delta,
                                                     static_cast<double>(p.t));
            rep.max_bound_ratio = std::max(rep.max_bound_ratio, p.mean / bound);
            if (p.mean > bound)
                rep.bound_holds = false;
        }
    }
    return rep;
}

inline std::string summary_yaml(const ExperimentConfig& cfg, const ExperimentReport& report)
{
    YAML::Emitter out;
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << cfg.name;
    out << YAML::Key << "users" << YAML::Value << cfg.users;
    out << YAML::Key << "channels" << YAML::Value << cfg.model->channels();
    out << YAML::Key << "max_occupancy" << YAML::Value << cfg.model->max_occupancy();
    out << YAML::Key << "horizon" << YAML::Value << cfg.horizon;
    out << YAML::Key << "runs" << YAML::Value << cfg.runs;
    out << YAML::Key << "seed" << YAML::Value << cfg.seed;
    out << YAML::Key << "optimum" << YAML::Value << report.optimum.to_string();
    if (report.gap) {
        out << YAML::Key << "J1" << YAML::Value << format_double(report.gap->best);
        out << YAML::Key << "J2" << YAML::Value << format_double(report.gap->second);
        out << YAML::Key << "delta" << YAML::Value << format_double(report.gap->delta);
    } else {
        out << YAML::Key << "delta" << YAML::Value << "degenerate";
    }
    if (report.delta_lb) {
        out << YAML::Key << "delta_lb" << YAML::Value << format_double(*report.delta_lb);
        out << YAML::Key << "samples_per_cell" << YAML::Value << report.samples_per_cell;
    }
    if (cfg.churn) {
        out << YAML::Key << "churn" << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "zeta" << YAML::Value << format_double(cfg.churn->zeta);
        out << YAML::Key << "c" << YAML::Value << format_double(cfg.churn->c);
        out << YAML::Key << "tau" << YAML::Value << cfg.churn->tau;
        out << YAML::Key << "regret_baseline" << YAML::Value
            << "per-slot J1(K_t) including users waiting for the next super-epoch";
        out << YAML::EndMap;
    }
    out << YAML::Key << "policies" << YAML::Value << YAML::BeginSeq;
    for (const PolicyReport& p : report.policies) {
        out << YAML::BeginMap;
        out << YAML::Key << "policy" << YAML::Value << to_string(p.policy);
        out << YAML::Key << "final_regret_mean" << YAML::Value << format_double(p.final_mean);
        out << YAML::Key << "final_regret_std" << YAML::Value << format_double(p.final_std);
        if (p.policy == PolicyKind::EpochPolicy) {
            out << YAML::Key << "estimation_regret_mean" << YAML::Value << format_double(p.mean_estimation_regret);
            out << YAML::Key << "allocation_regret_mean" << YAML::Value << format_double(p.mean_allocation_regret);
            out << YAML::Key << "samples_checked" << YAML::Value << p.samples_checked;
            out << YAML::Key << "sample_violations" << YAML::Value << p.sample_violations;
        }
        if (cfg.churn)
            out << YAML::Key << "changed_super_epoch_fraction" << YAML::Value
                << format_double(p.changed_super_epoch_fraction);
        if (p.bound_checked) {
            out << YAML::Key << "static_bound_holds" << YAML::Value << p.bound_holds;
            out << YAML::Key << "max_regret_to_bound_ratio" << YAML::Value << format_double(p.max_bound_ratio);
        }
        if (!p.epoch_summary.empty()) {
            out << YAML::Key << "epochs" << YAML::Value << YAML::BeginSeq;
            for (const EpochSummary& e : p.epoch_summary) {
                out << YAML::Flow << YAML::BeginMap;
                out << YAML::Key << "epoch" << YAML::Value << e.epoch;
                out << YAML::Key << "runs" << YAML::Value << e.runs;
                out << YAML::Key << "R_e" << YAML::Value << format_double(e.mean_estimation_regret);
                out << YAML::Key << "R_a" << YAML::Value << format_double(e.mean_allocation_regret);
                out << YAML::Key << "complete" << YAML::Value << e.complete_runs;
                out << YAML::Key << "zero_allocation_regret" << YAML::Value << e.zero_allocation_regret_runs;
                out << YAML::EndMap;
            }
            out << YAML::EndSeq;
        }
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

} // namespace detail

// Executes every configured policy for `runs` seeded runs and, when asked,
// writes <dir>/<policy>/run_NNN.csv, <dir>/<policy>/aggregate.csv and
// <dir>/summary.yaml.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {})
{
    const auto diags = validate(cfg);
    for (const Diagnostic& d : diags)
        if (d.severity == Diagnostic::Severity::Error)
            throw ConfigError(d.message, d.line);

    ExperimentReport report;
    const RewardModel& model = *cfg.model;
    report.optimum = optimal_config(model.means(), cfg.users).k;
    try {
        report.gap = gap_params(model.means(), cfg.users);
    } catch (const DegenerateGapError&) {
    }
    report.delta_lb = resolve_delta(cfg);
    if (report.delta_lb)
        report.samples_per_cell = samples_per_cell(*report.delta_lb);

    const std::filesystem::path dir = options.output_dir.value_or(cfg.output_dir);
    if (options.write_files)
        std::filesystem::create_directories(dir);

    for (PolicyKind policy : cfg.policies) {
        const std::filesystem::path policy_dir = dir / to_string(policy);
        if (options.write_files)
            std::filesystem::create_directories(policy_dir);
        const double delta = report.delta_lb.value_or(1.0);
        std::vector<RunResult> results(static_cast<std::size_t>(cfg.runs));
        parallel_for(cfg.runs, options.jobs, [&](int r) {
            RunSpec spec = run_spec(cfg, policy, r, delta);
            char stem[32];
            std::snprintf(stem, sizeof(stem), "run_%03d", r);
            if (spec.full_log && options.write_files) {
                std::ofstream slots(policy_dir / (std::string(stem) + "_slots.csv"), std::ios::binary);
                write_slot_header(slots);
                RunHooks<Agent> agent_hooks{[&](const SlotOutcome& s) { write_slot_rows(slots, s); }, {}};
                RunHooks<RandomChannelPolicy> random_hooks{[&](const SlotOutcome& s) { write_slot_rows(slots, s); }, {}};
                results[r] = policy == PolicyKind::EpochPolicy ? simulate<Agent>(spec, agent_hooks)
                                                                  : simulate<RandomChannelPolicy>(spec, random_hooks);
            } else {
                spec.full_log = false;
                results[r] = run(spec);
            }
        });

        if (options.write_files) {
            for (int r = 0; r < cfg.runs; ++r) {
                char name[32];
                std::snprintf(name, sizeof(name), "run_%03d.csv", r);
                std::ostringstream os;
                write_trace_csv(os, results[static_cast<std::size_t>(r)].trace);
                detail::write_file(policy_dir / name, os.str());
                report.files.push_back(policy_dir / name);
            }
        }
        PolicyReport rep = detail::summarize(policy, results, cfg, report.delta_lb);
        if (options.write_files) {
            std::ostringstream os;
            write_aggregate_csv(os, rep.aggregate);
            detail::write_file(policy_dir / "aggregate.csv", os.str());
            report.files.push_back(policy_dir / "aggregate.csv");
        }
        report.policies.push_back(std::move(rep));
    }

    if (options.write_files) {
        detail::write_file(dir / "summary.yaml", detail::summary_yaml(cfg, report));
        report.files.push_back(dir / "summary.yaml");
    }
    return report;
}

} // namespace mumab
