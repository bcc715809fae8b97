#include "evtfair/discrimination.hpp"

#include "evtfair/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace evtfair {

std::vector<CdSample> compute_cd(const ScoreModel& model, const Schema& schema, std::span<const Record> rows,
                                 const GroupSpec& group, bool synthetic) {
    std::vector<Record> flipped;
    flipped.reserve(rows.size());
    for (const auto& r : rows) flipped.push_back(flip_protected(r, schema, group));
    const auto original = score(model, rows);
    const auto counterfactual = score(model, flipped);
    std::vector<CdSample> out;
    out.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        out.push_back({rows[i], counterfactual[i] - original[i], synthetic});
    return out;
}

double mean_cd(std::span<const double> cds) {
    if (cds.empty()) fail(ErrorCode::EmptySamples, "no CD samples");
    return std::accumulate(cds.begin(), cds.end(), 0.0) / static_cast<double>(cds.size());
}

double acd(std::span<const CdSample> samples) {
    if (samples.empty()) fail(ErrorCode::EmptySamples, "no CD samples");
    double sum = 0.0;
    for (const auto& s : samples) sum += s.cd;
    return sum / static_cast<double>(samples.size());
}

double empirical_quantile_higher(std::span<const double> values, double alpha) {
    if (values.empty()) fail(ErrorCode::EmptyValues, "no values");
    if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorCode::InvalidArgument, "alpha must lie in (0,1)");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double pos = static_cast<double>(sorted.size() - 1) * alpha;
    // Guard against 0.1 * 30 = 3.0000000000000004 style round-up.
    const auto idx = static_cast<std::size_t>(std::ceil(pos - 1e-9));
    return sorted[std::min(idx, sorted.size() - 1)];
}

double cvar(std::span<const double> values, double alpha) {
    const double q = empirical_quantile_higher(values, alpha);
    double sum = 0.0;
    std::size_t count = 0;
    for (double v : values) {
        if (v >= q) {
            sum += v;
            ++count;
        }
    }
    return sum / static_cast<double>(count);
}

GroupMetrics group_metrics_from_scores(const Dataset& test, std::span<const double> scores, const GroupSpec& group) {
    const auto idx = test.schema().index_of(group.attribute);
    struct Counts {
        double n = 0, fav_pred = 0, pos = 0, tp = 0, neg = 0, fp = 0;
    } priv, unpriv;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const auto& row = test.rows()[i];
        const auto& v = std::get<std::string>(row[idx]);
        Counts* c = v == group.privileged_value ? &priv : v == group.unprivileged_value ? &unpriv : nullptr;
        if (c == nullptr) continue;
        const bool pred = scores[i] >= 0.5;
        const bool actual = test.is_favorable(row);
        c->n += 1;
        c->fav_pred += pred ? 1 : 0;
        if (actual) {
            c->pos += 1;
            c->tp += pred ? 1 : 0;
        } else {
            c->neg += 1;
            c->fp += pred ? 1 : 0;
        }
    }
    if (priv.n == 0) fail(ErrorCode::MissingGroup, "no rows with '" + group.privileged_value + "'");
    if (unpriv.n == 0) fail(ErrorCode::MissingGroup, "no rows with '" + group.unprivileged_value + "'");

    const auto rate = [](double num, double den) { return den > 0 ? num / den : 0.0; };
    const double tpr_gap = std::abs(rate(unpriv.tp, unpriv.pos) - rate(priv.tp, priv.pos));
    const double fpr_gap = std::abs(rate(unpriv.fp, unpriv.neg) - rate(priv.fp, priv.neg));
    const double fav_u = unpriv.fav_pred / unpriv.n;
    const double fav_p = priv.fav_pred / priv.n;

    GroupMetrics m;
    m.eod = tpr_gap;
    m.aod = 0.5 * (tpr_gap + fpr_gap);
    m.spd = std::abs(fav_u - fav_p);
    if (fav_p > 0) m.di = fav_u / fav_p;
    return m;
}

GroupMetrics group_metrics(const ScoreModel& model, const Dataset& test, const GroupSpec& group) {
    const auto s = score(model, test.rows());
    return group_metrics_from_scores(test, s, group);
}

}  // namespace evtfair
