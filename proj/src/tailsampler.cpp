#include "evtfair/tailsampler.hpp"

#include "evtfair/error.hpp"
#include "evtfair/parallel.hpp"
#include "evtfair/version.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace evtfair {

void SamplerConfig::validate() const {
    if (k_min < 2 || k_min >= k_max) fail(ErrorCode::InvalidArgument, "sampler needs 2 <= k_min < k_max");
    if (m < 1) fail(ErrorCode::InvalidArgument, "sampler needs m >= 1");
    if (!(timeout_secs > 0)) fail(ErrorCode::InvalidArgument, "sampler timeout must be positive");
    if (max_iterations < 1) fail(ErrorCode::InvalidArgument, "sampler max_iterations must be >= 1");
}

std::string_view to_string(TailStatus s) noexcept {
    switch (s) {
        case TailStatus::Sampled: return "Sampled";
        case TailStatus::Fitted: return "Fitted";
        case TailStatus::Degenerate: return "Degenerate";
        case TailStatus::Failed: return "Failed";
    }
    return "Failed";
}

TailStatus tail_status_from_string(std::string_view s) {
    for (auto t : {TailStatus::Sampled, TailStatus::Fitted, TailStatus::Degenerate, TailStatus::Failed})
        if (to_string(t) == s) return t;
    fail(ErrorCode::InvalidArgument, "unknown tail status '" + std::string(s) + "'");
}

std::vector<double> GroupTailReport::cd_values() const {
    std::vector<double> v;
    v.reserve(cds.size());
    for (const auto& s : cds) v.push_back(s.cd);
    return v;
}

namespace {

// Keeps the largest `cap` values in descending order.
void push_top(std::vector<double>& top, double x, std::size_t cap) {
    if (top.size() == cap && x <= top.back()) return;
    top.insert(std::upper_bound(top.begin(), top.end(), x, std::greater<>()), x);
    if (top.size() > cap) top.pop_back();
}

}  // namespace

GroupTailReport generate_tail_samples(const ScoreModel& model, const Dataset& dataset, const GroupSpec& group,
                                      const std::string& target_value, const TabularGenerator& generator,
                                      const SamplerConfig& cfg, double cvar_alpha) {
    cfg.validate();
    if (!group.contains(target_value))
        fail(ErrorCode::ValueNotInGroup, "target '" + target_value + "' is not one of the group values");
    const auto start = std::chrono::steady_clock::now();
    const auto& schema = dataset.schema();

    GroupTailReport rep;
    rep.group_value = target_value;
    const auto real_rows = rows_with_value(dataset, group.attribute, target_value);
    if (real_rows.empty()) fail(ErrorCode::MissingGroup, "no rows with '" + target_value + "'");
    rep.cds = compute_cd(model, schema, real_rows, group, false);
    rep.n_real = rep.cds.size();

    std::vector<double> real_values = rep.cd_values();
    rep.acd = mean_cd(real_values);
    rep.cvar = cvar(real_values, cvar_alpha);

    std::vector<double> top;
    top.reserve(cfg.k_max + 1);
    for (double v : real_values) push_top(top, v, cfg.k_max);

    // Only newly generated rows are scored each round; earlier scores are fixed.
    for (;;) {
        const auto cv = cv_test_top(top, rep.cds.size(), cfg.k_min, cfg.k_max);
        if (cv.degenerate) {
            rep.status = TailStatus::Degenerate;
            break;
        }
        if (cv.passed) {
            rep.passed_cv = true;
            rep.status = TailStatus::Sampled;
            break;
        }
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (elapsed >= cfg.timeout_secs) {
            rep.status = TailStatus::Failed;
            rep.failure = "timeout";
            break;
        }
        if (rep.iterations >= cfg.max_iterations) {
            rep.status = TailStatus::Failed;
            rep.failure = "iteration-cap";
            break;
        }
        auto fresh = generator.sample(cfg.m, derive_seed(cfg.seed, rep.iterations));
        auto fresh_cds = compute_cd(model, schema, fresh, group, true);
        for (auto& s : fresh_cds) {
            push_top(top, s.cd, cfg.k_max);
            rep.cds.push_back(std::move(s));
        }
        rep.n_synthetic += fresh_cds.size();
        ++rep.iterations;
    }
    return rep;
}

EcdResult compute_ecd(const std::optional<EvtFit>& unprivileged, const std::optional<EvtFit>& privileged) {
    EcdResult r;
    const double mu_u = unprivileged ? unprivileged->gev.mu : 0.0;
    const double mu_p = privileged ? privileged->gev.mu : 0.0;
    r.degenerate = !unprivileged || !privileged;
    r.ecd = mu_u - mu_p;
    r.discriminates = std::abs(r.ecd) > kEcdThreshold;
    return r;
}

GeneratorFactory copula_factory(const Dataset& train, const GroupSpec& group) {
    return [train, group](const std::string& target) -> GeneratorPtr {
        return std::make_shared<CopulaGenerator>(fit_generator(train, group, target));
    };
}

void fit_group_tail(GroupTailReport& report, const AuditConfig& cfg, std::uint64_t seed) {
    if (report.status != TailStatus::Sampled) return;
    try {
        TailAnalysisOptions opts;
        opts.k_max = cfg.sampler.k_max;
        opts.bootstrap_resamples = cfg.bootstrap_resamples;
        opts.seed = seed;
        const auto values = report.cd_values();
        auto analysis = analyze_tail(values, opts);
        for (auto m : cfg.return_periods)
            report.return_levels[m] = return_level(analysis.fit, static_cast<double>(m));
        report.fit = std::move(analysis.fit);
        report.qq = std::move(analysis.qq);
        report.exceedances = std::move(analysis.exceedances);
        report.status = TailStatus::Fitted;
    } catch (const Error& e) {
        report.status = TailStatus::Failed;
        report.failure = std::string(to_string(e.code()));
    }
}

AuditReport audit(const ScoreModel& model, const Dataset& dataset, const GroupSpec& group, const AuditConfig& cfg,
                  const GeneratorFactory& generators) {
    cfg.sampler.validate();
    group.validate(dataset);

    AuditReport report;
    report.metadata.tool_version = kVersion;
    report.metadata.model_id = model.id();
    report.group = group;
    report.config = cfg;

    const std::array<std::string, 2> targets{group.unprivileged_value, group.privileged_value};
    std::array<GroupTailReport, 2> reps;
    // The two groups are independent; each derives its own seed stream.
    parallel_for(2, [&](std::size_t i) {
        SamplerConfig sc = cfg.sampler;
        sc.seed = derive_seed(cfg.sampler.seed, 2 * i);
        const auto gen = generators(targets[i]);
        reps[i] = generate_tail_samples(model, dataset, group, targets[i], *gen, sc, cfg.cvar_alpha);
        fit_group_tail(reps[i], cfg, derive_seed(cfg.sampler.seed, 2 * i + 1));
    });
    report.unprivileged = std::move(reps[0]);
    report.privileged = std::move(reps[1]);

    report.acd_diff = report.unprivileged.acd - report.privileged.acd;
    report.cvar_diff = report.unprivileged.cvar - report.privileged.cvar;

    const bool failed =
        report.unprivileged.status == TailStatus::Failed || report.privileged.status == TailStatus::Failed;
    if (!failed) {
        const auto e = compute_ecd(report.unprivileged.fit, report.privileged.fit);
        report.ecd = e.ecd;
        report.ecd_degenerate = e.degenerate;
        report.discriminates = e.discriminates;
    }
    return report;
}

}  // namespace evtfair
