#pragma once

#include "evtfair/scoring.hpp"
#include "evtfair/tabular.hpp"
#include "evtfair/tailsampler.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace evtfair {

struct SearchSpace {
    double lr_min = 1e-4, lr_max = 1.0;  // log-uniform
    double l2_min = 1e-6, l2_max = 10.0;  // log-uniform
    int epochs_min = 10, epochs_max = 200;
    double cw_min = 0.25, cw_max = 4.0;  // log-uniform

    void validate() const;
    TrainConfig sample(std::mt19937_64& rng) const;
    bool contains(const TrainConfig& cfg) const;
};

struct ModelMetrics {
    double accuracy = 0.0;
    double aod = 0.0;
    double eod = 0.0;
    double spd = 0.0;
    std::optional<double> di;
    std::optional<double> ecd;  // empty when the audit failed
    double acd_diff = 0.0;
};

struct Trial {
    std::size_t index = 0;
    TrainConfig config;
    ModelMetrics valid;  // metrics on the validation set
    double objective = 0.0;  // |ecd| on validation, +inf when unavailable
    bool feasible = false;
};

struct MitigationConfig {
    SearchSpace space;
    std::size_t n_trials = 50;  // includes the baseline as trial 0
    double eps_acc = 0.02;
    std::uint64_t seed = 0;
    AuditConfig audit = default_audit();

    void validate() const;
    static AuditConfig default_audit();
};

struct MitigationResult {
    TrainConfig baseline_config;
    TrainConfig best_config;
    std::size_t best_trial = 0;
    bool no_feasible_candidate = false;
    ModelMetrics baseline;  // on test
    ModelMetrics best;      // on test
    std::vector<Trial> trials;
};

// Random search over trainer hyperparameters minimizing |ecd| on the
// validation set subject to accuracy >= baseline - eps_acc. Ties go to the
// lower AOD, then the lower trial index.
MitigationResult mitigate(const Dataset& train, const Dataset& valid, const Dataset& test, const GroupSpec& group,
                          const MitigationConfig& cfg);
MitigationResult mitigate(const Dataset& train, const Dataset& valid, const Dataset& test, const GroupSpec& group,
                          std::size_t n_trials, double eps_acc = 0.02, std::uint64_t seed = 0);

// Accuracy and group metrics of `model` on `data`, plus an ECD audit.
ModelMetrics measure(const ScoreModel& model, const Dataset& data, const GroupSpec& group, const AuditConfig& audit,
                     const GeneratorFactory& generators);

}  // namespace evtfair
