#include "evtfair/synthgen.hpp"

#include "evtfair/error.hpp"
#include "evtfair/scoring.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

namespace evtfair {

namespace {

constexpr std::size_t kMinGroupRows = 5;
constexpr int kHistogramBins = 20;
constexpr int kDetectionFolds = 5;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_quantile(double p) {
    static const boost::math::normal_distribution<double> standard;
    return boost::math::quantile(standard, std::clamp(p, 1e-12, 1.0 - 1e-12));
}

// Average 1-based ranks; ties share the mean of their positions.
std::vector<double> average_ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

Eigen::MatrixXd nearest_correlation(const Eigen::MatrixXd& c) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
    Eigen::MatrixXd psd = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    Eigen::VectorXd d = psd.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd out = d.asDiagonal() * psd * d.asDiagonal();
    out = 0.5 * (out + out.transpose());
    out.diagonal().setOnes();
    return out;
}

}  // namespace

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
    const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

CopulaGenerator::CopulaGenerator(Schema schema, std::size_t fixed_column, std::string target_value,
                                 std::vector<Marginal> marginals, Eigen::MatrixXd correlation)
    : schema_(std::move(schema)),
      fixed_column_(fixed_column),
      target_(std::move(target_value)),
      marginals_(std::move(marginals)),
      correlation_(std::move(correlation)) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(correlation_);
    factor_ = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

std::vector<Record> CopulaGenerator::sample(std::size_t n, std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto dim = static_cast<Eigen::Index>(marginals_.size());
    Eigen::VectorXd g(dim);
    std::vector<Record> out;
    out.reserve(n);
    for (std::size_t r = 0; r < n; ++r) {
        for (Eigen::Index j = 0; j < dim; ++j) g[j] = gauss(rng);
        const Eigen::VectorXd z = factor_ * g;
        Record row(schema_.size());
        row[fixed_column_] = target_;
        for (Eigen::Index j = 0; j < dim; ++j) {
            const auto& m = marginals_[static_cast<std::size_t>(j)];
            const double u = normal_cdf(z[j]);
            if (m.kind == ColumnKind::Numeric) {
                const auto& s = m.sorted_values;
                const double pos = u * static_cast<double>(s.size() - 1);
                const auto lo = static_cast<std::size_t>(std::floor(pos));
                const auto hi = std::min(lo + 1, s.size() - 1);
                const double frac = pos - static_cast<double>(lo);
                row[m.column] = s[lo] + frac * (s[hi] - s[lo]);
            } else {
                double cum = 0.0;
                std::size_t pick = m.categories.size() - 1;
                for (std::size_t k = 0; k < m.categories.size(); ++k) {
                    cum += m.frequencies[k];
                    if (u <= cum) {
                        pick = k;
                        break;
                    }
                }
                row[m.column] = m.categories[pick];
            }
        }
        out.push_back(std::move(row));
    }
    return out;
}

CopulaGenerator fit_generator(const Dataset& train, const GroupSpec& group, const std::string& target_value) {
    const auto& schema = train.schema();
    const std::size_t fixed = schema.index_of(group.attribute);
    const auto rows = rows_with_value(train, group.attribute, target_value);
    if (rows.size() < kMinGroupRows)
        fail(ErrorCode::GroupTooSmall, "group '" + target_value + "' has " + std::to_string(rows.size()) +
                                           " rows; at least 5 required");
    const auto n = rows.size();

    std::vector<CopulaGenerator::Marginal> marginals;
    std::vector<std::vector<double>> scores;
    for (std::size_t c = 0; c < schema.size(); ++c) {
        if (c == fixed) continue;
        CopulaGenerator::Marginal m;
        m.column = c;
        m.kind = schema.columns()[c].kind;
        std::vector<double> z(n);
        if (m.kind == ColumnKind::Numeric) {
            std::vector<double> v(n);
            for (std::size_t i = 0; i < n; ++i) v[i] = std::get<double>(rows[i][c]);
            const auto ranks = average_ranks(v);
            for (std::size_t i = 0; i < n; ++i) z[i] = normal_quantile(ranks[i] / static_cast<double>(n + 1));
            std::sort(v.begin(), v.end());
            m.sorted_values = std::move(v);
        } else {
            std::map<std::string, std::size_t> counts;
            for (const auto& r : rows) ++counts[std::get<std::string>(r[c])];
            std::map<std::string, double> midpoint;
            double cum = 0.0;
            for (const auto& [cat, cnt] : counts) {
                const double f = static_cast<double>(cnt) / static_cast<double>(n);
                m.categories.push_back(cat);
                m.frequencies.push_back(f);
                midpoint[cat] = normal_quantile(cum + 0.5 * f);
                cum += f;
            }
            for (std::size_t i = 0; i < n; ++i) z[i] = midpoint[std::get<std::string>(rows[i][c])];
        }
        marginals.push_back(std::move(m));
        scores.push_back(std::move(z));
    }

    const auto d = static_cast<Eigen::Index>(scores.size());
    Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(d, d);
    std::vector<double> mean(scores.size()), sd(scores.size());
    for (std::size_t j = 0; j < scores.size(); ++j) {
        mean[j] = std::accumulate(scores[j].begin(), scores[j].end(), 0.0) / static_cast<double>(n);
        double ss = 0.0;
        for (double x : scores[j]) ss += (x - mean[j]) * (x - mean[j]);
        sd[j] = std::sqrt(ss);
    }
    for (std::size_t a = 0; a < scores.size(); ++a) {
        for (std::size_t b = a + 1; b < scores.size(); ++b) {
            if (sd[a] <= 1e-12 || sd[b] <= 1e-12) continue;
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += (scores[a][i] - mean[a]) * (scores[b][i] - mean[b]);
            const double r = std::clamp(s / (sd[a] * sd[b]), -1.0, 1.0);
            corr(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = r;
            corr(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = r;
        }
    }
    if (d > 0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(corr, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < 0.0) corr = nearest_correlation(corr);
    }
    return CopulaGenerator(schema, fixed, target_value, std::move(marginals), std::move(corr));
}

namespace {

void require_same_schema(const Dataset& a, const Dataset& b) {
    if (!(a.schema() == b.schema())) fail(ErrorCode::SchemaMismatch, "datasets have different schemas");
}

double kl_counts(const std::vector<double>& p_counts, const std::vector<double>& q_counts, double n_p, double n_q) {
    const auto bins = static_cast<double>(p_counts.size());
    double kl = 0.0;
    for (std::size_t i = 0; i < p_counts.size(); ++i) {
        const double p = (p_counts[i] + 1.0) / (n_p + bins);
        const double q = (q_counts[i] + 1.0) / (n_q + bins);
        kl += p * std::log(p / q);
    }
    return kl;
}

}  // namespace

double kl_similarity(const Dataset& real, const Dataset& synth) {
    require_same_schema(real, synth);
    if (real.empty() || synth.empty()) fail(ErrorCode::EmptyDataset, "kl_similarity needs non-empty inputs");
    const auto& schema = real.schema();
    const auto n_p = static_cast<double>(real.size());
    const auto n_q = static_cast<double>(synth.size());
    double total = 0.0;
    for (std::size_t c = 0; c < schema.size(); ++c) {
        if (schema.columns()[c].kind == ColumnKind::Numeric) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -lo;
            for (const auto* ds : {&real, &synth})
                for (const auto& r : ds->rows()) {
                    lo = std::min(lo, std::get<double>(r[c]));
                    hi = std::max(hi, std::get<double>(r[c]));
                }
            const auto bin_of = [&](double x) {
                if (!(hi > lo)) return 0;
                return std::min(kHistogramBins - 1, static_cast<int>(std::floor((x - lo) / (hi - lo) * kHistogramBins)));
            };
            std::vector<double> p(kHistogramBins, 0.0), q(kHistogramBins, 0.0);
            for (const auto& r : real.rows()) p[static_cast<std::size_t>(bin_of(std::get<double>(r[c])))] += 1;
            for (const auto& r : synth.rows()) q[static_cast<std::size_t>(bin_of(std::get<double>(r[c])))] += 1;
            total += kl_counts(p, q, n_p, n_q);
        } else {
            std::map<std::string, std::pair<double, double>> table;
            for (const auto& r : real.rows()) table[std::get<std::string>(r[c])].first += 1;
            for (const auto& r : synth.rows()) table[std::get<std::string>(r[c])].second += 1;
            std::vector<double> p, q;
            for (const auto& [cat, pq] : table) {
                p.push_back(pq.first);
                q.push_back(pq.second);
            }
            total += kl_counts(p, q, n_p, n_q);
        }
    }
    return std::exp(-total / static_cast<double>(schema.size()));
}

double frechet_distance(const Dataset& real, const Dataset& synth) {
    require_same_schema(real, synth);
    if (real.size() < 2 || synth.size() < 2) fail(ErrorCode::EmptyDataset, "frechet_distance needs >= 2 rows each");
    std::vector<Record> both = real.rows();
    both.insert(both.end(), synth.rows().begin(), synth.rows().end());
    const auto enc = FeatureEncoder::fit(real.schema(), both, {});
    const Eigen::MatrixXd a = enc.encode(real.rows());
    const Eigen::MatrixXd b = enc.encode(synth.rows());

    const auto moments = [](const Eigen::MatrixXd& x) {
        const Eigen::VectorXd mu = x.colwise().mean().transpose();
        const Eigen::MatrixXd centered = x.rowwise() - mu.transpose();
        const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(x.rows() - 1);
        return std::pair{mu, cov};
    };
    const auto [m1, c1] = moments(a);
    const auto [m2, c2] = moments(b);
    // tr sqrt(C1 C2) via either factor; rank-deficient one-hot blocks make the
    // two orders differ slightly, so take both and average.
    const auto tr_sqrt_of = [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
        const Eigen::MatrixXd sx = psd_sqrt(x);
        const Eigen::MatrixXd inner = sx * y * sx;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (inner + inner.transpose()), Eigen::EigenvaluesOnly);
        const Eigen::VectorXd ev = es.eigenvalues();
        const double floor = 1e-12 * std::max(ev.maxCoeff(), 0.0);
        double sum = 0.0;
        for (double e : ev)
            if (e > floor) sum += std::sqrt(e);
        return sum;
    };
    const double tr_sqrt = 0.5 * (tr_sqrt_of(c1, c2) + tr_sqrt_of(c2, c1));
    const double fd = (m1 - m2).squaredNorm() + c1.trace() + c2.trace() - 2.0 * tr_sqrt;
    return std::max(0.0, fd);
}

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    const auto ranks = average_ranks(scores);
    double pos = 0, neg = 0, rank_sum = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] == 1) {
            pos += 1;
            rank_sum += ranks[i];
        } else {
            neg += 1;
        }
    }
    if (pos == 0 || neg == 0) return 0.5;
    return (rank_sum - pos * (pos + 1) / 2.0) / (pos * neg);
}

double detection_auc(const Dataset& real, const Dataset& synth, std::uint64_t seed) {
    require_same_schema(real, synth);
    if (real.size() < 10 || synth.size() < 10) fail(ErrorCode::EmptyDataset, "detection_auc needs >= 10 rows each");

    // Canonical order first so the result does not depend on input row order.
    struct Item {
        std::string key;
        const Record* row;
        int label;
    };
    std::vector<Item> items;
    const auto key_of = [](const Record& r) {
        std::string k;
        for (const auto& v : r) {
            k += value_to_string(v);
            k += '\x1f';
        }
        return k;
    };
    for (const auto& r : real.rows()) items.push_back({key_of(r), &r, 1});
    for (const auto& r : synth.rows()) items.push_back({key_of(r), &r, 0});
    std::sort(items.begin(), items.end(),
              [](const Item& a, const Item& b) { return std::tie(a.key, a.label) < std::tie(b.key, b.label); });
    std::mt19937_64 rng(seed);
    std::shuffle(items.begin(), items.end(), rng);

    double auc_sum = 0.0;
    int folds_used = 0;
    for (int fold = 0; fold < kDetectionFolds; ++fold) {
        std::vector<Record> train_rows, test_rows;
        std::vector<int> train_y, test_y;
        for (std::size_t i = 0; i < items.size(); ++i) {
            const bool held_out = static_cast<int>(i % kDetectionFolds) == fold;
            (held_out ? test_rows : train_rows).push_back(*items[i].row);
            (held_out ? test_y : train_y).push_back(items[i].label);
        }
        const auto enc = FeatureEncoder::fit(real.schema(), train_rows, {});
        const Eigen::MatrixXd x = enc.encode(train_rows);
        Eigen::VectorXd y(static_cast<Eigen::Index>(train_y.size()));
        for (std::size_t i = 0; i < train_y.size(); ++i) y[static_cast<Eigen::Index>(i)] = train_y[i];
        const auto sol = fit_logistic(x, y, TrainConfig{});
        const Eigen::VectorXd z = (enc.encode(test_rows) * sol.weights).array() + sol.bias;
        std::vector<double> s(z.data(), z.data() + z.size());
        const bool both_classes = std::count(test_y.begin(), test_y.end(), 1) > 0 &&
                                  std::count(test_y.begin(), test_y.end(), 0) > 0;
        if (!both_classes) continue;
        auc_sum += roc_auc(s, test_y);
        ++folds_used;
    }
    return folds_used == 0 ? 0.5 : std::clamp(auc_sum / folds_used, 0.0, 1.0);
}

double downstream_f1_loss(const Dataset& real_train, const Dataset& synth_train, const Dataset& test) {
    require_same_schema(real_train, synth_train);
    require_same_schema(real_train, test);
    const auto real_model = train_logreg(real_train, TrainConfig{});
    const auto synth_model = train_logreg(synth_train, TrainConfig{});
    return std::abs(evaluate(*real_model, test).f1 - evaluate(*synth_model, test).f1);
}

}  // namespace evtfair
