#include "evtfair/error.hpp"
#include "evtfair/tailsampler.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace evtfair;

namespace {

const GroupSpec kGroup = fixtures::race_group();

// score = 0.3 + x1 * 1[White]: an unprivileged row's CD is exactly its x1.
ModelPtr x1_gap_model() {
    return std::make_shared<FunctionModel>("test:x1-gap", [](const Record& r) {
        return 0.3 + (std::get<std::string>(r[2]) == "White" ? std::get<double>(r[0]) : 0.0);
    });
}

Dataset cd_dataset(const std::vector<double>& black_x1, std::size_t white_rows, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 0.1);
    std::vector<Record> rows;
    for (double x : black_x1) rows.push_back({x, u(rng), std::string("Black"), std::string("yes")});
    for (std::size_t i = 0; i < white_rows; ++i)
        rows.push_back({u(rng), u(rng), std::string("White"), std::string(i % 2 ? "yes" : "no")});
    return Dataset(fixtures::task_schema(), std::move(rows));
}

// Emits fresh rows whose x1 comes from a scaled draw of `dist`.
class DrawGenerator final : public TabularGenerator {
public:
    using Draw = std::function<double(std::mt19937_64&)>;
    DrawGenerator(std::string value, Draw draw) : value_(std::move(value)), draw_(std::move(draw)) {}
    std::vector<Record> sample(std::size_t n, std::uint64_t seed) const override {
        std::mt19937_64 rng(seed);
        std::vector<Record> out;
        for (std::size_t i = 0; i < n; ++i) out.push_back({draw_(rng), 0.05, value_, std::string("yes")});
        return out;
    }

private:
    std::string value_;
    Draw draw_;
};

std::vector<double> scaled(std::vector<double> v, double c) {
    for (auto& x : v) x *= c;
    return v;
}

}  // namespace

TEST(SamplerConfig, Validation) {
    SamplerConfig c;
    EXPECT_NO_THROW(c.validate());
    c.k_min = 50;
    EXPECT_THROW(c.validate(), Error);
    c = {};
    c.k_min = 1;
    EXPECT_THROW(c.validate(), Error);
    c = {};
    c.m = 0;
    EXPECT_THROW(c.validate(), Error);
    c = {};
    c.timeout_secs = 0;
    EXPECT_THROW(c.validate(), Error);
}

TEST(GenerateTailSamples, IndependentModelIsDegenerate) {
    const auto ds = fixtures::labelled_task(200, 1);
    const auto gen = fit_generator(ds, kGroup, "Black");
    const auto rep = generate_tail_samples(*fixtures::fair_scorer(), ds, kGroup, "Black", gen, {});
    EXPECT_EQ(rep.status, TailStatus::Degenerate);
    EXPECT_FALSE(rep.passed_cv);
    EXPECT_FALSE(rep.fit);
    EXPECT_EQ(rep.acd, 0.0);
    EXPECT_EQ(rep.n_synthetic, 0u);
}

TEST(GenerateTailSamples, ExponentialNoisePassesImmediately) {
    const auto ds = cd_dataset(scaled(fixtures::exponential(1000, 1.0, 11), 0.05), 300, 2);
    const auto gen = fit_generator(ds, kGroup, "Black");
    auto rep = generate_tail_samples(*x1_gap_model(), ds, kGroup, "Black", gen, {});
    EXPECT_TRUE(rep.passed_cv);
    EXPECT_EQ(rep.iterations, 0u);
    EXPECT_EQ(rep.n_synthetic, 0u);
    AuditConfig cfg;
    cfg.bootstrap_resamples = 50;
    fit_group_tail(rep, cfg, 1);
    ASSERT_EQ(rep.status, TailStatus::Fitted);
    ASSERT_TRUE(rep.fit);
    EXPECT_EQ(rep.exceedances.size(), 50u);
    EXPECT_EQ(rep.return_levels.size(), 3u);
}

TEST(GenerateTailSamples, ParetoNoiseTimesOut) {
    // Scaled far enough down that the 0.6 clamp (scores must stay in [0, 1])
    // is never reached; clamped ties would make the top-k constant.
    const auto ds = cd_dataset(scaled(fixtures::pareto_draws(1000, 0.8, 12), 1e-12), 300, 3);
    const DrawGenerator gen("Black", [](std::mt19937_64& rng) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        return std::min(0.6, 1e-12 * std::pow(1.0 - u(rng), -1.0 / 0.8));
    });
    SamplerConfig cfg;
    cfg.timeout_secs = 2.0;
    cfg.max_iterations = std::size_t{1} << 40;
    cfg.m = 50;
    const auto rep = generate_tail_samples(*x1_gap_model(), ds, kGroup, "Black", gen, cfg);
    EXPECT_EQ(rep.status, TailStatus::Failed);
    EXPECT_EQ(rep.failure, "timeout");
    EXPECT_FALSE(rep.passed_cv);
    EXPECT_GT(rep.n_synthetic, 0u);
}

TEST(GenerateTailSamples, IterationCapIsDeterministic) {
    const auto ds = cd_dataset(scaled(fixtures::pareto_draws(100, 0.8, 13), 1e-7), 100, 3);
    const DrawGenerator gen("Black", [](std::mt19937_64& rng) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        return std::min(0.6, 1e-7 * std::pow(1.0 - u(rng), -1.0 / 0.8));
    });
    SamplerConfig cfg;
    cfg.max_iterations = 200;
    cfg.seed = 4;
    const auto a = generate_tail_samples(*x1_gap_model(), ds, kGroup, "Black", gen, cfg);
    const auto b = generate_tail_samples(*x1_gap_model(), ds, kGroup, "Black", gen, cfg);
    EXPECT_EQ(a.status, TailStatus::Failed);
    EXPECT_EQ(a.failure, "iteration-cap");
    EXPECT_EQ(a.iterations, 200u);
    EXPECT_EQ(a.cd_values(), b.cd_values());
}

TEST(GenerateTailSamples, AugmentsUntilPassing) {
    // 30 real rows cannot satisfy k_max = 50, so synthetic rows are needed.
    const auto ds = cd_dataset(scaled(fixtures::exponential(30, 1.0, 14), 0.05), 100, 4);
    const DrawGenerator gen("Black", [](std::mt19937_64& rng) {
        return 0.05 * std::exponential_distribution<double>(1.0)(rng);
    });
    SamplerConfig cfg;
    cfg.m = 3;
    cfg.seed = 8;
    const auto rep = generate_tail_samples(*x1_gap_model(), ds, kGroup, "Black", gen, cfg);
    ASSERT_TRUE(rep.passed_cv);
    EXPECT_GT(rep.n_synthetic, 0u);
    EXPECT_EQ(rep.iterations * cfg.m, rep.n_synthetic);
    EXPECT_EQ(rep.n_real + rep.n_synthetic, rep.cds.size());
    EXPECT_GE(rep.cds.size(), 50u);

    // Real samples are the group's rows, unmodified and first.
    const auto real = rows_with_value(ds, "race", "Black");
    ASSERT_EQ(rep.n_real, real.size());
    for (std::size_t i = 0; i < real.size(); ++i) {
        EXPECT_EQ(rep.cds[i].row, real[i]);
        EXPECT_FALSE(rep.cds[i].synthetic);
    }
    for (std::size_t i = real.size(); i < rep.cds.size(); ++i) EXPECT_TRUE(rep.cds[i].synthetic);

    // ACD and CVaR use the real rows only.
    std::vector<double> rv;
    for (std::size_t i = 0; i < rep.n_real; ++i) rv.push_back(rep.cds[i].cd);
    EXPECT_DOUBLE_EQ(rep.acd, mean_cd(rv));
    EXPECT_DOUBLE_EQ(rep.cvar, cvar(rv, 0.95));
}

TEST(GenerateTailSamples, TargetOutsideGroup) {
    const auto ds = fixtures::labelled_task(20, 1);
    const auto gen = fit_generator(ds, kGroup, "Black");
    EXPECT_THROW(generate_tail_samples(*fixtures::fair_scorer(), ds, kGroup, "Asian", gen, {}), Error);
}

TEST(ComputeEcd, Examples) {
    EvtFit u, p;
    u.gev.mu = 0.28;
    p.gev.mu = 0.15;
    auto r = compute_ecd(u, p);
    EXPECT_NEAR(r.ecd, 0.13, 1e-12);
    EXPECT_TRUE(r.discriminates);
    EXPECT_FALSE(r.degenerate);

    p.gev.mu = 0.28;
    r = compute_ecd(u, p);
    EXPECT_EQ(r.ecd, 0.0);
    EXPECT_FALSE(r.discriminates);

    u.gev.mu = 0.05;
    p.gev.mu = 0.02;
    r = compute_ecd(u, p);
    EXPECT_NEAR(r.ecd, 0.03, 1e-12);
    EXPECT_FALSE(r.discriminates);
}

TEST(ComputeEcd, DegenerateSideCountsAsZero) {
    EvtFit u;
    u.gev.mu = 0.2;
    const auto r = compute_ecd(u, std::nullopt);
    EXPECT_DOUBLE_EQ(r.ecd, 0.2);
    EXPECT_TRUE(r.degenerate);
    EXPECT_TRUE(r.discriminates);
    const auto both = compute_ecd(std::nullopt, std::nullopt);
    EXPECT_EQ(both.ecd, 0.0);
    EXPECT_FALSE(both.discriminates);
}

TEST(Audit, FairModelIsDegenerateEndToEnd) {
    const auto ds = fixtures::labelled_task(200, 5);
    const auto rep = audit(*fixtures::fair_scorer(), ds, kGroup, {}, copula_factory(ds, kGroup));
    EXPECT_EQ(rep.acd_diff, 0.0);
    ASSERT_TRUE(rep.ecd);
    EXPECT_EQ(*rep.ecd, 0.0);
    EXPECT_FALSE(rep.discriminates);
    EXPECT_EQ(rep.unprivileged.status, TailStatus::Degenerate);
    EXPECT_EQ(rep.privileged.status, TailStatus::Degenerate);
    EXPECT_EQ(rep.metadata.model_id, "test:fair");
}

TEST(Audit, PrivilegeGapIsDetected) {
    const auto ds = fixtures::copula_task(2000, 6);
    const auto model = fixtures::tail_bias_scorer(ds);
    AuditConfig cfg;
    cfg.bootstrap_resamples = 50;
    cfg.sampler.seed = 2;
    const auto rep = audit(*model, ds, kGroup, cfg, copula_factory(ds, kGroup));
    ASSERT_EQ(rep.unprivileged.status, TailStatus::Fitted);
    EXPECT_EQ(rep.privileged.status, TailStatus::Degenerate);
    EXPECT_TRUE(rep.ecd_degenerate);
    ASSERT_TRUE(rep.ecd);
    EXPECT_GT(*rep.ecd, 0.05);
    EXPECT_TRUE(rep.discriminates);
    EXPECT_LT(rep.acd_diff, 0.05);
    EXPECT_NEAR(rep.acd_diff, rep.unprivileged.acd - rep.privileged.acd, 1e-15);
    EXPECT_NEAR(rep.cvar_diff, rep.unprivileged.cvar - rep.privileged.cvar, 1e-15);
    for (auto m : {500u, 1000u, 2000u}) EXPECT_TRUE(rep.unprivileged.return_levels.count(m));
}

TEST(Audit, DeterministicUnderIterationCap) {
    const auto ds = fixtures::copula_task(300, 7);
    const auto model = fixtures::tail_bias_scorer(ds);
    AuditConfig cfg;
    cfg.bootstrap_resamples = 50;
    cfg.sampler.seed = 3;
    const auto a = audit(*model, ds, kGroup, cfg, copula_factory(ds, kGroup));
    const auto b = audit(*model, ds, kGroup, cfg, copula_factory(ds, kGroup));
    EXPECT_EQ(a.ecd, b.ecd);
    EXPECT_EQ(a.unprivileged.cd_values(), b.unprivileged.cd_values());
    ASSERT_EQ(a.unprivileged.fit.has_value(), b.unprivileged.fit.has_value());
    if (a.unprivileged.fit) EXPECT_EQ(a.unprivileged.fit->se, b.unprivileged.fit->se);
}

TEST(TailStatus, StringRoundTrip) {
    for (auto s : {TailStatus::Sampled, TailStatus::Fitted, TailStatus::Degenerate, TailStatus::Failed})
        EXPECT_EQ(tail_status_from_string(to_string(s)), s);
    EXPECT_THROW(tail_status_from_string("Nope"), Error);
}
