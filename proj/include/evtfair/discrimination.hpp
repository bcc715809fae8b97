#pragma once

#include "evtfair/scoring.hpp"
#include "evtfair/tabular.hpp"

#include <optional>
#include <span>
#include <vector>

namespace evtfair {

// One counterfactual measurement: score(flip(row)) - score(row).
// Positive values mean the model disadvantages the row's own group.
struct CdSample {
    Record row;
    double cd = 0.0;
    bool synthetic = false;
};

struct GroupMetrics {
    double aod = 0.0;
    double eod = 0.0;
    double spd = 0.0;
    std::optional<double> di;  // empty when the privileged favorable rate is 0
};

// Scores the rows and their flipped counterparts in two batched calls.
std::vector<CdSample> compute_cd(const ScoreModel& model, const Schema& schema, std::span<const Record> rows,
                                 const GroupSpec& group, bool synthetic = false);

double acd(std::span<const CdSample> samples);
double mean_cd(std::span<const double> cds);

// Mean of every value >= the empirical alpha-quantile. The quantile is the
// "higher" order statistic: sorted[ceil((n - 1) * alpha)].
double cvar(std::span<const double> values, double alpha);
double empirical_quantile_higher(std::span<const double> values, double alpha);

GroupMetrics group_metrics(const ScoreModel& model, const Dataset& test, const GroupSpec& group);
GroupMetrics group_metrics_from_scores(const Dataset& test, std::span<const double> scores, const GroupSpec& group);

}  // namespace evtfair
