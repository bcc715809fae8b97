#include "evtfair/mitigation.hpp"

#include "evtfair/discrimination.hpp"
#include "evtfair/error.hpp"
#include "evtfair/parallel.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <mutex>

namespace evtfair {

void SearchSpace::validate() const {
    const bool ok = 0 < lr_min && lr_min <= lr_max && 0 < l2_min && l2_min <= l2_max && 1 <= epochs_min &&
                    epochs_min <= epochs_max && 0 < cw_min && cw_min <= cw_max;
    if (!ok) fail(ErrorCode::InvalidArgument, "invalid search space bounds");
}

TrainConfig SearchSpace::sample(std::mt19937_64& rng) const {
    const auto log_uniform = [&rng](double lo, double hi) {
        std::uniform_real_distribution<double> d(std::log(lo), std::log(hi));
        return std::exp(d(rng));
    };
    TrainConfig c;
    c.learning_rate = log_uniform(lr_min, lr_max);
    c.l2 = log_uniform(l2_min, l2_max);
    c.epochs = std::uniform_int_distribution<int>(epochs_min, epochs_max)(rng);
    c.class_weight = log_uniform(cw_min, cw_max);
    return c;
}

bool SearchSpace::contains(const TrainConfig& c) const {
    return c.learning_rate >= lr_min && c.learning_rate <= lr_max && c.l2 >= l2_min && c.l2 <= l2_max &&
           c.epochs >= epochs_min && c.epochs <= epochs_max && c.class_weight >= cw_min && c.class_weight <= cw_max;
}

AuditConfig MitigationConfig::default_audit() {
    AuditConfig a;
    a.sampler.timeout_secs = 120.0;
    a.bootstrap_resamples = 50;
    return a;
}

void MitigationConfig::validate() const {
    space.validate();
    if (n_trials < 1) fail(ErrorCode::InvalidArgument, "mitigate needs n_trials >= 1");
    if (!(eps_acc >= 0.0)) fail(ErrorCode::InvalidArgument, "eps_acc must be >= 0");
    audit.sampler.validate();
}

ModelMetrics measure(const ScoreModel& model, const Dataset& data, const GroupSpec& group, const AuditConfig& audit_cfg,
                     const GeneratorFactory& generators) {
    const auto scores = score(model, data.rows());
    const auto cls = evaluate_scores(data, scores);
    const auto gm = group_metrics_from_scores(data, scores, group);
    const auto rep = audit(model, data, group, audit_cfg, generators);
    ModelMetrics m;
    m.accuracy = cls.accuracy;
    m.aod = gm.aod;
    m.eod = gm.eod;
    m.spd = gm.spd;
    m.di = gm.di;
    m.ecd = rep.ecd;
    m.acd_diff = rep.acd_diff;
    return m;
}

namespace {

// Generators depend only on the training data, so each group value is fitted once.
GeneratorFactory cached_factory(const Dataset& train, const GroupSpec& group) {
    auto base = copula_factory(train, group);
    auto cache = std::make_shared<std::map<std::string, GeneratorPtr>>();
    auto mu = std::make_shared<std::mutex>();
    for (const auto& v : {group.unprivileged_value, group.privileged_value}) (*cache)[v] = base(v);
    return [cache, mu](const std::string& target) {
        std::lock_guard lock(*mu);
        return cache->at(target);
    };
}

bool better(const Trial& a, const Trial& b) {
    if (a.objective != b.objective) return a.objective < b.objective;
    if (a.valid.aod != b.valid.aod) return a.valid.aod < b.valid.aod;
    return a.index < b.index;
}

}  // namespace

MitigationResult mitigate(const Dataset& train, const Dataset& valid, const Dataset& test, const GroupSpec& group,
                          const MitigationConfig& cfg) {
    cfg.validate();
    group.validate(train);

    // Configurations are drawn up front so the result does not depend on scheduling.
    std::vector<Trial> trials(cfg.n_trials);
    std::mt19937_64 rng(cfg.seed);
    for (std::size_t i = 0; i < trials.size(); ++i) {
        trials[i].index = i;
        trials[i].config = i == 0 ? TrainConfig{} : cfg.space.sample(rng);
        trials[i].config.seed = derive_seed(cfg.seed, i);
    }

    const auto generators = cached_factory(train, group);
    AuditConfig audit_cfg = cfg.audit;
    audit_cfg.sampler.seed = derive_seed(cfg.seed, 0x5eedULL);

    parallel_for(trials.size(), [&](std::size_t i) {
        auto& t = trials[i];
        const auto model = train_logreg(train, t.config);
        t.valid = measure(*model, valid, group, audit_cfg, generators);
        t.objective = t.valid.ecd ? std::abs(*t.valid.ecd) : std::numeric_limits<double>::infinity();
    });

    const double floor_acc = trials[0].valid.accuracy - cfg.eps_acc;
    const Trial* best = nullptr;
    for (auto& t : trials) {
        t.feasible = t.valid.accuracy >= floor_acc;
        if (t.feasible && (best == nullptr || better(t, *best))) best = &t;
    }

    MitigationResult r;
    r.baseline_config = trials[0].config;
    r.no_feasible_candidate = best == nullptr;
    if (best == nullptr) best = &trials[0];
    r.best_trial = best->index;
    r.best_config = best->config;

    const auto baseline_model = train_logreg(train, r.baseline_config);
    r.baseline = measure(*baseline_model, test, group, audit_cfg, generators);
    if (r.best_trial == 0) {
        r.best = r.baseline;
    } else {
        const auto best_model = train_logreg(train, r.best_config);
        r.best = measure(*best_model, test, group, audit_cfg, generators);
    }
    r.trials = std::move(trials);
    return r;
}

MitigationResult mitigate(const Dataset& train, const Dataset& valid, const Dataset& test, const GroupSpec& group,
                          std::size_t n_trials, double eps_acc, std::uint64_t seed) {
    MitigationConfig cfg;
    cfg.n_trials = n_trials;
    cfg.eps_acc = eps_acc;
    cfg.seed = seed;
    return mitigate(train, valid, test, group, cfg);
}

}  // namespace evtfair
