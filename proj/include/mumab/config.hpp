#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "csv.hpp"
#include "dynamics.hpp"
#include "engine.hpp"
#include "errors.hpp"
#include "optimizer.hpp"
#include "reward_model.hpp"
#include "schedule.hpp"

namespace mumab {

// ---------------------------------------------------------------------------
// Reward model documents
//
//   M: 6
//   N: 3
//   family: uniform          # uniform | bernoulli | point-mass
//   variance: 0.01           # uniform only
//   means:                   # M rows of N entries, row m = channel m
//     - [0.718, 0.388, 0.778]
//     ...
//   seed: 7                  # optional; with no means, draws them (uniform only)
// ---------------------------------------------------------------------------

namespace detail {

inline int line_of(const YAML::Node& node) { return node.Mark().line >= 0 ? node.Mark().line + 1 : 0; }

template <class T>
T scalar(const YAML::Node& node, const std::string& what)
{
    if (!node.IsScalar())
        throw ConfigError(what + " must be a scalar", line_of(node));
    try {
        return node.as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError(what + " has an invalid value '" + node.Scalar() + "'", line_of(node));
    }
}

inline YAML::Node require(const YAML::Node& map, const std::string& key)
{
    const YAML::Node node = map[key];
    if (!node)
        throw ConfigError("missing required key '" + key + "'", line_of(map));
    return node;
}

inline void reject_unknown(const YAML::Node& map, std::initializer_list<const char*> known)
{
    for (const auto& kv : map) {
        const std::string key = kv.first.as<std::string>();
        if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; }))
            throw ConfigError("unknown key '" + key + "'", line_of(kv.first));
    }
}

inline YAML::Node number(double v) { return YAML::Node(format_double(v)); }

} // namespace detail

inline RewardModel parse_model(const YAML::Node& doc)
{
    using namespace detail;
    if (!doc.IsMap())
        throw ConfigError("model document must be a mapping", line_of(doc));
    reject_unknown(doc, {"M", "N", "family", "variance", "means", "seed"});
    const YAML::Node m_node = require(doc, "M");
    const YAML::Node n_node = require(doc, "N");
    const int channels = scalar<int>(m_node, "M");
    const int max_occ = scalar<int>(n_node, "N");
    if (channels < 1)
        throw ConfigError("M must be at least 1", line_of(m_node));
    if (max_occ < 1)
        throw ConfigError("N must be at least 1", line_of(n_node));

    const YAML::Node fam_node = require(doc, "family");
    const auto family = parse_family(scalar<std::string>(fam_node, "family"));
    if (!family)
        throw ConfigError("family must be uniform, bernoulli or point-mass", line_of(fam_node));

    double variance = 0.0;
    if (const YAML::Node v = doc["variance"]) {
        if (*family != Family::Uniform)
            throw ConfigError("variance applies to the uniform family only", line_of(v));
        variance = scalar<double>(v, "variance");
        if (!(variance >= 0.0))
            throw ConfigError("variance must be non-negative", line_of(v));
    } else if (*family == Family::Uniform) {
        throw ConfigError("uniform family requires 'variance'", line_of(doc));
    }

    std::optional<std::uint64_t> seed;
    if (const YAML::Node s = doc["seed"])
        seed = scalar<std::uint64_t>(s, "seed");

    const YAML::Node means_node = doc["means"];
    try {
        if (!means_node) {
            if (!seed)
                throw ConfigError("model needs 'means' or a 'seed' to draw them", line_of(doc));
            if (*family != Family::Uniform)
                throw ConfigError("seeded means are supported for the uniform family only", line_of(doc));
            return build_uniform_model(channels, max_occ, variance, *seed);
        }
        if (!means_node.IsSequence() || static_cast<int>(means_node.size()) != channels)
            throw ConfigError("means must be a list of M = " + std::to_string(channels) + " rows",
                              line_of(means_node));
        MeansTable table = MeansTable::zeros(channels, max_occ);
        for (int m = 0; m < channels; ++m) {
            const YAML::Node row = means_node[m];
            if (!row.IsSequence() || static_cast<int>(row.size()) != max_occ)
                throw ConfigError("means row " + std::to_string(m + 1) + " must have N = " + std::to_string(max_occ)
                                      + " entries",
                                  line_of(row));
            for (int n = 0; n < max_occ; ++n)
                table.at(m + 1, n + 1) = scalar<double>(row[n], "means entry");
        }
        switch (*family) {
        case Family::Uniform: return build_uniform_model(std::move(table), variance, seed);
        case Family::Bernoulli: return build_bernoulli_model(std::move(table), seed);
        case Family::PointMass: return build_point_mass_model(std::move(table), seed);
        }
    } catch (const ModelError& e) {
        throw ConfigError(e.what(), line_of(means_node ? means_node : doc));
    }
    throw ConfigError("unreachable model family");
}

inline YAML::Node model_to_yaml(const RewardModel& model)
{
    YAML::Node doc;
    doc["M"] = model.channels();
    doc["N"] = model.max_occupancy();
    doc["family"] = to_string(model.family());
    if (model.family() == Family::Uniform)
        doc["variance"] = detail::number(model.variance());
    YAML::Node means;
    for (ChannelId m = 1; m <= model.channels(); ++m) {
        YAML::Node row;
        row.SetStyle(YAML::EmitterStyle::Flow);
        for (int n = 1; n <= model.max_occupancy(); ++n)
            row.push_back(detail::number(model.means()(m, n)));
        means.push_back(row);
    }
    doc["means"] = means;
    if (model.seed())
        doc["seed"] = *model.seed();
    return doc;
}

inline std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline YAML::Node load_yaml(const std::string& text)
{
    try {
        return YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(e.msg, e.mark.line >= 0 ? e.mark.line + 1 : 0);
    }
}

inline RewardModel load_model(const std::filesystem::path& path)
{
    try {
        return parse_model(load_yaml(read_text(path)));
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

inline std::string serialize_model(const RewardModel& model)
{
    YAML::Emitter out;
    out << model_to_yaml(model);
    return std::string(out.c_str()) + "\n";
}

// ---------------------------------------------------------------------------
// Experiment configs
// ---------------------------------------------------------------------------

struct ChurnParams {
    double zeta = 0.0;
    double c = 0.0;
    std::int64_t tau = 0;

    bool operator==(const ChurnParams&) const = default;
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::optional<std::string> model_file; // as written, relative to the config file
    std::optional<RewardModel> model;      // resolved model
    int users = 1;
    std::vector<PolicyKind> policies{PolicyKind::EpochPolicy};
    std::int64_t horizon = 1;
    std::int64_t fairness_window = 1;
    std::optional<double> delta_lb; // empty = auto (true gap of the model)
    int runs = 1;
    std::uint64_t seed = 0;
    std::optional<ChurnParams> churn;
    std::string output_dir = "out";
    LogSpacing logging;
    bool full_log = false;

    bool operator==(const ExperimentConfig&) const = default;
};

// Source line of each top-level key, for diagnostics.
using KeyLines = std::map<std::string, int>;

struct ParsedConfig {
    ExperimentConfig config;
    KeyLines lines;
};

inline ParsedConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".")
{
    using namespace detail;
    const YAML::Node doc = load_yaml(text);
    if (!doc.IsMap())
        throw ConfigError("experiment config must be a mapping", line_of(doc));
    reject_unknown(doc, {"name", "model", "model_file", "users", "policy", "policies", "horizon", "fairness_window",
                         "delta_lb", "runs", "seed", "churn", "output"});
    ParsedConfig parsed;
    ExperimentConfig& cfg = parsed.config;
    for (const auto& kv : doc)
        parsed.lines[kv.first.as<std::string>()] = line_of(kv.first);

    if (const YAML::Node n = doc["name"])
        cfg.name = scalar<std::string>(n, "name");

    const YAML::Node inline_model = doc["model"];
    const YAML::Node model_file = doc["model_file"];
    if (inline_model && model_file)
        throw ConfigError("give either 'model' or 'model_file', not both", line_of(model_file));
    if (inline_model) {
        cfg.model = parse_model(inline_model);
    } else if (model_file) {
        cfg.model_file = scalar<std::string>(model_file, "model_file");
        const auto path = base_dir / *cfg.model_file;
        try {
            cfg.model = parse_model(load_yaml(read_text(path)));
        } catch (const ConfigError& e) {
            throw ConfigError("model_file " + path.string() + ": " + e.what(), line_of(model_file));
        }
    } else {
        throw ConfigError("missing 'model' or 'model_file'", line_of(doc));
    }

    const YAML::Node users = require(doc, "users");
    cfg.users = scalar<int>(users, "users");
    if (cfg.users < 1)
        throw ConfigError("users must be at least 1", line_of(users));

    if (doc["policy"] && doc["policies"])
        throw ConfigError("give either 'policy' or 'policies'", line_of(doc["policies"]));
    if (const YAML::Node p = doc["policy"] ? doc["policy"] : doc["policies"]) {
        cfg.policies.clear();
        auto add = [&](const YAML::Node& item) {
            const auto kind = parse_policy(scalar<std::string>(item, "policy"));
            if (!kind)
                throw ConfigError("policy must be paper-algorithm or random-baseline", line_of(item));
            cfg.policies.push_back(*kind);
        };
        if (p.IsSequence()) {
            for (const auto& item : p)
                add(item);
        } else {
            add(p);
        }
        if (cfg.policies.empty())
            throw ConfigError("at least one policy is required", line_of(p));
    }

    const YAML::Node horizon = require(doc, "horizon");
    cfg.horizon = scalar<std::int64_t>(horizon, "horizon");
    if (cfg.horizon < 1)
        throw ConfigError("horizon must be at least 1", line_of(horizon));

    if (const YAML::Node tx = doc["fairness_window"]) {
        cfg.fairness_window = scalar<std::int64_t>(tx, "fairness_window");
        if (cfg.fairness_window < 1)
            throw ConfigError("fairness_window must be at least 1", line_of(tx));
    }

    if (const YAML::Node d = doc["delta_lb"]) {
        if (scalar<std::string>(d, "delta_lb") != "auto") {
            const double v = scalar<double>(d, "delta_lb");
            if (!(v > 0.0) || !std::isfinite(v))
                throw ConfigError("delta_lb must be positive or 'auto'", line_of(d));
            cfg.delta_lb = v;
        }
    }

    if (const YAML::Node r = doc["runs"]) {
        cfg.runs = scalar<int>(r, "runs");
        if (cfg.runs < 1)
            throw ConfigError("runs must be at least 1", line_of(r));
    }
    if (const YAML::Node s = doc["seed"])
        cfg.seed = scalar<std::uint64_t>(s, "seed");

    if (const YAML::Node ch = doc["churn"]) {
        if (!ch.IsMap())
            throw ConfigError("churn must be a mapping", line_of(ch));
        reject_unknown(ch, {"zeta", "c", "tau"});
        ChurnParams p;
        p.zeta = scalar<double>(require(ch, "zeta"), "churn.zeta");
        p.c = scalar<double>(require(ch, "c"), "churn.c");
        p.tau = scalar<std::int64_t>(require(ch, "tau"), "churn.tau");
        if (!(p.zeta >= 0.0 && p.zeta < 0.5))
            throw ConfigError("churn.zeta must lie in [0, 0.5)", line_of(ch["zeta"]));
        if (!(p.c >= 0.0))
            throw ConfigError("churn.c must be non-negative", line_of(ch["c"]));
        if (p.tau < 1)
            throw ConfigError("churn.tau must be at least 1", line_of(ch["tau"]));
        cfg.churn = p;
    }

    if (const YAML::Node out = doc["output"]) {
        if (!out.IsMap())
            throw ConfigError("output must be a mapping", line_of(out));
        reject_unknown(out, {"dir", "log_spacing", "log_stride", "full_log"});
        if (const YAML::Node d = out["dir"])
            cfg.output_dir = scalar<std::string>(d, "output.dir");
        if (const YAML::Node s = out["log_spacing"]) {
            const auto kind = scalar<std::string>(s, "output.log_spacing");
            if (kind == "linear")
                cfg.logging.kind = LogSpacing::Kind::Linear;
            else if (kind == "geometric")
                cfg.logging.kind = LogSpacing::Kind::Geometric;
            else
                throw ConfigError("output.log_spacing must be linear or geometric", line_of(s));
        }
        if (const YAML::Node s = out["log_stride"]) {
            cfg.logging.stride = scalar<std::int64_t>(s, "output.log_stride");
            if (cfg.logging.stride < 0)
                throw ConfigError("output.log_stride must be non-negative", line_of(s));
        }
        if (const YAML::Node f = out["full_log"])
            cfg.full_log = scalar<bool>(f, "output.full_log");
    }
    return parsed;
}

inline ParsedConfig load_config(const std::filesystem::path& path)
{
    return parse_config(read_text(path), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

inline std::string serialize_config(const ExperimentConfig& cfg)
{
    YAML::Node doc;
    doc["name"] = cfg.name;
    if (cfg.model_file)
        doc["model_file"] = *cfg.model_file;
    else if (cfg.model)
        doc["model"] = model_to_yaml(*cfg.model);
    doc["users"] = cfg.users;
    YAML::Node policies;
    policies.SetStyle(YAML::EmitterStyle::Flow);
    for (PolicyKind p : cfg.policies)
        policies.push_back(to_string(p));
    doc["policies"] = policies;
    doc["horizon"] = cfg.horizon;
    doc["fairness_window"] = cfg.fairness_window;
    doc["delta_lb"] = cfg.delta_lb ? detail::number(*cfg.delta_lb) : YAML::Node("auto");
    doc["runs"] = cfg.runs;
    doc["seed"] = cfg.seed;
    if (cfg.churn) {
        YAML::Node ch;
        ch["zeta"] = detail::number(cfg.churn->zeta);
        ch["c"] = detail::number(cfg.churn->c);
        ch["tau"] = cfg.churn->tau;
        doc["churn"] = ch;
    }
    YAML::Node out;
    out["dir"] = cfg.output_dir;
    out["log_spacing"] = cfg.logging.kind == LogSpacing::Kind::Geometric ? "geometric" : "linear";
    out["log_stride"] = cfg.logging.stride;
    out["full_log"] = cfg.full_log;
    doc["output"] = out;
    YAML::Emitter emitter;
    emitter << doc;
    return std::string(emitter.c_str()) + "\n";
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct Diagnostic {
    enum class Severity { Warning, Error };
    Severity severity = Severity::Error;
    int line = 0;
    std::string message;
};

inline bool has_errors(const std::vector<Diagnostic>& diags)
{
    return std::any_of(diags.begin(), diags.end(),
                       [](const Diagnostic& d) { return d.severity == Diagnostic::Severity::Error; });
}

// Smallest defined gap over the user counts a run can see: K alone when the
// population is static, every K in 1..M*N under churn. Empty when no count
// has two distinct system values.
inline std::optional<double> true_gap(const RewardModel& model, int users, bool dynamic)
{
    const int capacity = model.channels() * model.max_occupancy();
    std::optional<double> smallest;
    const int lo = dynamic ? 1 : users;
    const int hi = dynamic ? capacity : users;
    for (int k = lo; k <= hi; ++k) {
        try {
            const double d = gap_params(model.means(), k).delta;
            smallest = smallest ? std::min(*smallest, d) : d;
        } catch (const DegenerateGapError&) {
        }
    }
    return smallest;
}

inline std::vector<Diagnostic> validate(const ExperimentConfig& cfg, const KeyLines& lines = {})
{
    using Sev = Diagnostic::Severity;
    std::vector<Diagnostic> diags;
    auto line = [&](const std::string& key) {
        const auto it = lines.find(key);
        return it == lines.end() ? 0 : it->second;
    };
    if (!cfg.model) {
        diags.push_back({Sev::Error, 0, "no reward model"});
        return diags;
    }
    const RewardModel& model = *cfg.model;
    const int capacity = model.channels() * model.max_occupancy();
    const bool needs_gap = std::find(cfg.policies.begin(), cfg.policies.end(), PolicyKind::EpochPolicy)
                           != cfg.policies.end();

    if (cfg.users > capacity) {
        diags.push_back({Sev::Error, line("users"),
                         "users = " + std::to_string(cfg.users) + " exceeds capacity M*N = " + std::to_string(capacity)});
        return diags;
    }
    if (cfg.horizon < 1)
        diags.push_back({Sev::Error, line("horizon"), "horizon must be at least 1"});
    if (cfg.runs < 1)
        diags.push_back({Sev::Error, line("runs"), "runs must be at least 1"});

    const auto gap = true_gap(model, cfg.users, cfg.churn.has_value());
    if (needs_gap) {
        if (!gap) {
            diags.push_back({Sev::Error, line("users"),
                             "degenerate gap: every feasible configuration has the same system value, "
                             "so no gap lower bound exists"});
        } else if (cfg.delta_lb && *cfg.delta_lb > *gap) {
            diags.push_back({Sev::Warning, line("delta_lb"),
                             "delta_lb = " + format_double(*cfg.delta_lb) + " exceeds the true gap "
                                 + format_double(*gap) + "; the regret guarantees no longer apply"});
        }
    }

    if (cfg.churn) {
        const ChurnParams& ch = *cfg.churn;
        if (!(ch.zeta >= 0.0 && ch.zeta < 0.5))
            diags.push_back({Sev::Error, line("churn"), "churn.zeta must lie in [0, 0.5) for sub-linear regret"});
        if (!(ch.c >= 0.0))
            diags.push_back({Sev::Error, line("churn"), "churn.c must be non-negative"});
        if (needs_gap && gap) {
            const double delta = cfg.delta_lb.value_or(*gap);
            const std::int64_t t0 = samples_per_cell(delta);
            const std::int64_t worst = worst_case_estimation_length(model.channels(), model.max_occupancy(), t0);
            if (ch.tau <= worst)
                diags.push_back({Sev::Error, line("churn"),
                                 "churn.tau = " + std::to_string(ch.tau)
                                     + " must exceed the estimation phase length " + std::to_string(worst)
                                     + " of a full system (K = M*N = " + std::to_string(capacity) + ", T0 = "
                                     + std::to_string(t0) + ")"});
            const double mn = static_cast<double>(capacity);
            const double loose = mn * mn * mn / (2.0 * delta * delta) * std::log(static_cast<double>(ch.tau));
            if (static_cast<double>(ch.tau) <= loose)
                diags.push_back({Sev::Warning, line("churn"),
                                 "churn.tau = " + std::to_string(ch.tau) + " is below the analytical estimation bound "
                                     "(MN)^3 ln(tau) / (2 delta^2) = " + format_double(loose)
                                     + "; the constructed schedule is shorter and is what the run uses"});
        }
        if (cfg.users == capacity && ch.c > 0.0 && capacity == 1)
            diags.push_back({Sev::Warning, line("churn"), "a single-slot system admits no churn events"});
    }
    return diags;
}

} // namespace mumab
