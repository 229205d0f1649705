#include <filesystem>

#include <gtest/gtest.h>

#include "mumab/config.hpp"
#include "mumab/experiment.hpp"

using namespace mumab;

namespace {

const std::string kTiny = R"(name: t
model:
  M: 2
  N: 2
  family: point-mass
  means:
    - [0.9, 0.3]
    - [0.8, 0.2]
users: 2
policy: paper-algorithm
horizon: 1000
runs: 2
seed: 3
)";

std::vector<Diagnostic> check(const std::string& text)
{
    const auto parsed = parse_config(text);
    return validate(parsed.config, parsed.lines);
}

bool mentions(const std::vector<Diagnostic>& diags, Diagnostic::Severity sev, const std::string& needle)
{
    for (const auto& d : diags)
        if (d.severity == sev && d.message.find(needle) != std::string::npos)
            return true;
    return false;
}

} // namespace

TEST(Config, ParsesTinyConfig)
{
    const auto cfg = parse_config(kTiny).config;
    EXPECT_EQ(cfg.users, 2);
    EXPECT_EQ(cfg.horizon, 1000);
    EXPECT_EQ(cfg.runs, 2);
    EXPECT_FALSE(cfg.delta_lb);
    EXPECT_EQ(cfg.model->mean_reward(1, 1), 0.9);
    EXPECT_TRUE(check(kTiny).empty());
}

TEST(Config, RoundTrip)
{
    auto cfg = parse_config(kTiny).config;
    cfg.delta_lb = 0.07;
    cfg.churn = ChurnParams{0.3, 1.5, 500};
    cfg.policies = {PolicyKind::EpochPolicy, PolicyKind::RandomBaseline};
    cfg.logging = {LogSpacing::Kind::Geometric, 0};
    cfg.full_log = true;
    const std::string text = serialize_config(cfg);
    EXPECT_EQ(parse_config(text).config, cfg) << text;
}

TEST(Config, ShippedConfigsRoundTrip)
{
    const std::filesystem::path dir = std::filesystem::path(MUMAB_SOURCE_DIR) / "configs";
    for (const char* name : {"six_channel_experiment.yaml", "dynamic_experiment.yaml", "tiny_experiment.yaml"}) {
        const auto cfg = load_config(dir / name).config;
        EXPECT_EQ(parse_config(serialize_config(cfg), dir).config, cfg) << name;
        EXPECT_FALSE(has_errors(validate(cfg))) << name;
    }
}

TEST(Config, UnknownKeyReportsLine)
{
    try {
        parse_config(kTiny + "horizn: 5\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.line(), 14);
    }
}

TEST(Config, SupportErrorPointsAtMeans)
{
    const std::string text = R"(model:
  M: 1
  N: 1
  family: uniform
  variance: 0.01
  means:
    - [0.05]
users: 1
horizon: 10
)";
    try {
        parse_config(text);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.line(), 7);
        EXPECT_NE(std::string(e.what()).find("(m=1, n=1)"), std::string::npos) << e.what();
    }
}

TEST(Config, SyntaxErrorReportsLine)
{
    try {
        parse_config("users: 2\nhorizon: [1\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_GT(e.line(), 0);
    }
}

TEST(Config, TooManyUsers)
{
    std::string text = kTiny;
    text.replace(text.find("users: 2"), 8, "users: 5");
    const auto diags = check(text);
    ASSERT_TRUE(has_errors(diags));
    EXPECT_EQ(diags.front().line, 9);
}

TEST(Config, DeltaAboveTrueGapWarns)
{
    const auto diags = check(kTiny + "delta_lb: 0.5\n");
    EXPECT_FALSE(has_errors(diags));
    EXPECT_TRUE(mentions(diags, Diagnostic::Severity::Warning, "exceeds the true gap"));
}

TEST(Config, DegenerateGapIsAnError)
{
    std::string text = kTiny;
    text.replace(text.find("users: 2"), 8, "users: 4");
    EXPECT_TRUE(mentions(check(text), Diagnostic::Severity::Error, "degenerate gap"));
}

TEST(Config, TauMustExceedEstimationLength)
{
    // delta_lb 0.1 -> T0 = 50; full system K = 4 on 2x2: (4 + 2) * 2 * 50 = 600.
    const auto diags = check(kTiny + "delta_lb: 0.1\nchurn: {zeta: 0.3, c: 1, tau: 600}\n");
    EXPECT_TRUE(mentions(diags, Diagnostic::Severity::Error, "estimation phase length 600"));
    EXPECT_FALSE(has_errors(check(kTiny + "delta_lb: 0.1\nchurn: {zeta: 0.3, c: 1, tau: 601}\n")));
}

TEST(Config, ChurnRangeChecked)
{
    EXPECT_THROW(parse_config(kTiny + "churn: {zeta: 0.5, c: 1, tau: 601}\n"), ConfigError);
    EXPECT_THROW(parse_config(kTiny + "churn: {zeta: 0.3, c: -1, tau: 601}\n"), ConfigError);
}

TEST(Config, ModelFileResolvedRelativeToConfig)
{
    const std::filesystem::path dir = std::filesystem::path(MUMAB_SOURCE_DIR) / "configs";
    const auto cfg = load_config(dir / "six_channel_experiment.yaml").config;
    EXPECT_EQ(cfg.model->channels(), 6);
    EXPECT_EQ(cfg.model->max_occupancy(), 3);
    EXPECT_EQ(cfg.model->variance(), 0.01);
    EXPECT_EQ(optimal_config(cfg.model->means(), cfg.users).k, Configuration({3, 1, 2, 1, 1, 2}));
}

TEST(Experiment, WritesDeterministicFiles)
{
    auto cfg = parse_config(kTiny).config;
    cfg.policies = {PolicyKind::EpochPolicy, PolicyKind::RandomBaseline};
    const auto base = std::filesystem::temp_directory_path() / "mumab_experiment_test";
    std::filesystem::remove_all(base);
    RunOptions a{base / "a", 1, true};
    RunOptions b{base / "b", 2, true};
    const auto ra = run_experiment(cfg, a);
    const auto rb = run_experiment(cfg, b);
    ASSERT_EQ(ra.files.size(), rb.files.size());
    for (std::size_t i = 0; i < ra.files.size(); ++i)
        EXPECT_EQ(read_text(ra.files[i]), read_text(rb.files[i])) << ra.files[i];
    EXPECT_TRUE(std::filesystem::exists(base / "a" / "paper-algorithm" / "run_001.csv"));
    EXPECT_TRUE(std::filesystem::exists(base / "a" / "random-baseline" / "aggregate.csv"));
    EXPECT_TRUE(std::filesystem::exists(base / "a" / "summary.yaml"));
    std::filesystem::remove_all(base);
}
