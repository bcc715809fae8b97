// Runs the nine acceptance checks and prints one PASS/FAIL line each.
// Exit status is the number of failed checks.

#include "evtfair/cli.hpp"
#include "evtfair/evt.hpp"
#include "evtfair/mitigation.hpp"
#include "evtfair/statcompare.hpp"
#include "evtfair/tailsampler.hpp"

#include "fixtures.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace evtfair;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Outcome return_levels() {
    const double u = 0.12, zeta = 50.0 / 25658.0;
    const GpdParams gpd{0.03, -0.08};
    const double want[] = {0.12, 0.14, 0.16};
    const double ms[] = {500, 1000, 2000};
    double got[3];
    const auto t0 = Clock::now();
    for (int i = 0; i < 3; ++i) got[i] = return_level(u, gpd, zeta, ms[i]);
    const double elapsed = seconds_since(t0);
    bool ok = elapsed < 1e-3;
    for (int i = 0; i < 3; ++i) ok = ok && std::abs(got[i] - want[i]) <= 0.01;
    return {ok, fmt("RL(500,1000,2000) = %.4f %.4f %.4f in %.3f ms", got[0], got[1], got[2], elapsed * 1e3)};
}

Outcome gpd_recovery() {
    const auto t0 = Clock::now();
    const auto e = fit_gpd(fixtures::exponential(10000, 2.0, 101)).params;
    const auto g = fit_gpd(fixtures::gpd_draws(10000, 1.0, -0.2, 102)).params;
    const double elapsed = seconds_since(t0);
    const bool ok = std::abs(e.xi) <= 0.05 && e.sigma_hat >= 0.48 && e.sigma_hat <= 0.52 &&
                    std::abs(g.sigma_hat - 1.0) <= 0.05 && std::abs(g.xi + 0.2) <= 0.05 && elapsed < 5.0;
    return {ok, fmt("exp(2): sigma %.4f xi %.4f; GPD(1,-0.2): sigma %.4f xi %.4f in %.2f s", e.sigma_hat, e.xi,
                    g.sigma_hat, g.xi, elapsed)};
}

Outcome gev_recovery() {
    const auto t0 = Clock::now();
    const auto p = fit_gev(fixtures::gumbel_draws(5000, 0.15, 0.03, 103)).params;
    const double elapsed = seconds_since(t0);
    const bool ok = std::abs(p.mu - 0.15) <= 0.005 && std::abs(p.sigma - 0.03) <= 0.005 && std::abs(p.xi) <= 0.05 &&
                    elapsed < 5.0;
    return {ok, fmt("mu %.4f sigma %.4f xi %.4f in %.2f s", p.mu, p.sigma, p.xi, elapsed)};
}

Outcome cv_calibration() {
    const auto t0 = Clock::now();
    int exp_pass = 0, pareto_fail = 0;
    for (std::uint64_t t = 0; t < 200; ++t) {
        if (cv_test(fixtures::exponential(1000, 1.0, 1000 + t), 10, 50).passed) ++exp_pass;
        if (!cv_test(fixtures::pareto_draws(1000, 0.8, 5000 + t), 10, 50).passed) ++pareto_fail;
    }
    const double elapsed = seconds_since(t0);
    const bool ok = exp_pass >= 180 && pareto_fail >= 190 && elapsed < 10.0;
    return {ok, fmt("exponential passes %d/200, Pareto(0.8) fails %d/200 in %.2f s", exp_pass, pareto_fail, elapsed)};
}

Outcome injected_bias() {
    const auto ds = fixtures::copula_task(5000, 11);
    const auto model = fixtures::tail_bias_scorer(ds);
    const auto group = fixtures::race_group();
    AuditConfig cfg;
    cfg.sampler.seed = 5;
    const auto t0 = Clock::now();
    const auto rep = audit(*model, ds, group, cfg, copula_factory(ds, group));
    const double elapsed = seconds_since(t0);
    const auto& u = rep.unprivileged;
    const bool typed = u.fit && (u.fit->tail_type == TailType::TypeI || u.fit->tail_type == TailType::TypeIII);
    const bool ok = rep.acd_diff < 0.05 && rep.ecd && *rep.ecd > 0.05 && rep.discriminates && typed && elapsed < 60.0;
    return {ok, fmt("acd_diff %.4f ecd %.4f discriminates %s tail %s in %.1f s", rep.acd_diff,
                    rep.ecd ? *rep.ecd : NAN, rep.discriminates ? "true" : "false",
                    u.fit ? std::string(to_string(u.fit->tail_type)).c_str() : "none", elapsed)};
}

Outcome degenerate_fairness() {
    const auto ds = fixtures::copula_task(5000, 12);
    const auto group = fixtures::race_group();
    AuditConfig cfg;
    cfg.sampler.seed = 6;
    const auto rep = audit(*fixtures::fair_scorer(), ds, group, cfg, copula_factory(ds, group));
    const bool ok = rep.acd_diff == 0.0 && rep.ecd && *rep.ecd == 0.0 && !rep.discriminates &&
                    rep.unprivileged.status == TailStatus::Degenerate && rep.privileged.status == TailStatus::Degenerate;
    return {ok, fmt("acd_diff %g ecd %g discriminates %s statuses %s/%s", rep.acd_diff, rep.ecd ? *rep.ecd : NAN,
                    rep.discriminates ? "true" : "false", std::string(to_string(rep.unprivileged.status)).c_str(),
                    std::string(to_string(rep.privileged.status)).c_str())};
}

Outcome mitigation_no_regression() {
    const auto t0 = Clock::now();
    int no_worse = 0, within_eps = 0;
    double worst_test_loss = -INFINITY;
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto ds = fixtures::copula_task(5000, 20 + s);
        const auto [train, valid, test] = split(ds, {}, s);
        MitigationConfig cfg;
        cfg.n_trials = 50;
        cfg.seed = s;
        const auto r = mitigate(train, valid, test, fixtures::race_group(), cfg);
        const auto& best = r.trials[r.best_trial];
        const auto& base = r.trials[0];
        if (best.feasible && best.objective <= base.objective) ++no_worse;
        if (best.feasible && base.valid.accuracy - best.valid.accuracy <= cfg.eps_acc) ++within_eps;
        worst_test_loss = std::max(worst_test_loss, r.baseline.accuracy - r.best.accuracy);
    }
    const double elapsed = seconds_since(t0);
    return {no_worse == 5 && within_eps == 5,
            fmt("|ecd| no worse %d/5, validation accuracy loss <= 0.02 %d/5 (worst test loss %.4f) in %.1f s", no_worse,
                within_eps, worst_test_loss, elapsed)};
}

Outcome statistical_primitives() {
    using V = std::vector<double>;
    const double hi = cliffs_delta(V{4, 5, 6}, V{1, 2, 3});
    const double lo = cliffs_delta(V{1, 2, 3}, V{4, 5, 6});
    const double overlap = cliffs_delta(V{1, 2}, V{2, 3});
    const V c(200, 0.3);
    const auto t = bootstrap_test(c, c, 1000, 0.05, 1);
    const bool ok = hi == 1.0 && lo == -1.0 && overlap == -0.5 && !t.significant;
    return {ok, fmt("disjoint %+g/%+g, {1,2} vs {2,3} = %g (expected -0.5), constants significant %s", hi, lo, overlap,
                    t.significant ? "true" : "false")};
}

Outcome determinism() {
    fixtures::TempDir dir;
    const auto ds = fixtures::copula_task(1000, 30);
    {
        std::ofstream d(dir / "data.csv");
        write_csv(d, ds);
        std::ofstream s(dir / "schema.json");
        s << ds.schema().to_json_text();
    }
    // Same file name in separate directories: sidecar names follow the report name.
    const auto run_once = [&](const std::string& sub) {
        std::filesystem::create_directories(dir / sub);
        const auto name = sub + "/report.json";
        std::ostringstream out, err;
        const int rc = run({"audit", "--data", (dir / "data.csv").string(), "--schema", (dir / "schema.json").string(),
                            "--attr", "race", "--privileged", "White", "--unprivileged", "Black", "--out",
                            (dir / name).string(), "--seed", "17"},
                           out, err);
        std::ifstream f(dir / name, std::ios::binary);
        std::ostringstream bytes;
        bytes << f.rdbuf();
        return std::pair{rc, bytes.str()};
    };
    const auto a = run_once("first");
    const auto b = run_once("second");
    const bool ok = a.first == 0 && b.first == 0 && !a.second.empty() && a.second == b.second;
    return {ok, fmt("exit %d/%d, %zu vs %zu bytes, identical %s", a.first, b.first, a.second.size(), b.second.size(),
                    a.second == b.second ? "true" : "false")};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> checks{
        {"return-level reproduction", return_levels},
        {"GPD recovery", gpd_recovery},
        {"GEV recovery", gev_recovery},
        {"CV-test calibration", cv_calibration},
        {"injected tail bias audit", injected_bias},
        {"degenerate fairness", degenerate_fairness},
        {"mitigation no-regression", mitigation_no_regression},
        {"statistical primitives", statistical_primitives},
        {"determinism", determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < checks.size(); ++i) {
        Outcome o;
        try {
            o = checks[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::printf("[%s] %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, checks[i].first, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu/%zu passed\n", checks.size() - failed, checks.size());
    return failed;
}
