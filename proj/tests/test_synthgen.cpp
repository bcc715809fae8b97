#include "evtfair/error.hpp"
#include "evtfair/synthgen.hpp"

#include "fixtures.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <random>
#include <set>

using namespace evtfair;

namespace {

Schema num_schema(int cols) {
    std::vector<Column> c;
    for (int i = 0; i < cols; ++i) c.push_back({"x" + std::to_string(i), ColumnKind::Numeric});
    c.push_back({"g", ColumnKind::Categorical});
    c.push_back({"y", ColumnKind::Categorical});
    return Schema(c, {"g"}, "y", std::string("1"));
}

// Gaussian rows with per-column mean shift.
Dataset gaussian(std::size_t n, int cols, double shift, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d;
    std::vector<Record> rows;
    for (std::size_t i = 0; i < n; ++i) {
        Record r;
        for (int c = 0; c < cols; ++c) r.emplace_back(d(rng) + shift);
        r.emplace_back(std::string(i % 2 ? "a" : "b"));
        r.emplace_back(std::string(d(rng) > 0 ? "1" : "0"));
        rows.push_back(std::move(r));
    }
    return Dataset(num_schema(cols), std::move(rows));
}

}  // namespace

TEST(FitGenerator, GroupTooSmall) {
    auto ds = fixtures::labelled_task(20, 1);
    std::vector<Record> rows;
    int black = 0;
    for (const auto& r : ds.rows())
        if (std::get<std::string>(r[2]) == "White" || black++ < 4) rows.push_back(r);
    const Dataset small = ds.with_rows(rows);
    try {
        fit_generator(small, fixtures::race_group(), "Black");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::GroupTooSmall);
    }
}

TEST(FitGenerator, SingleFreeColumnHasUnitCorrelation) {
    const Schema s({{"g", ColumnKind::Categorical}, {"y", ColumnKind::Numeric}}, {"g"}, "y", 1.0);
    std::vector<Record> rows;
    for (int i = 0; i < 10; ++i) rows.push_back({std::string(i % 2 ? "a" : "b"), double(i % 3 == 0)});
    const auto gen = fit_generator(Dataset(s, rows), {"g", "a", "b"}, "a");
    ASSERT_EQ(gen.correlation().rows(), 1);
    EXPECT_DOUBLE_EQ(gen.correlation()(0, 0), 1.0);
}

TEST(FitGenerator, PerfectlyCorrelatedColumns) {
    const Schema s({{"x", ColumnKind::Numeric},
                    {"x2", ColumnKind::Numeric},
                    {"g", ColumnKind::Categorical},
                    {"y", ColumnKind::Numeric}},
                   {"g"}, "y", 1.0);
    std::mt19937_64 rng(11);
    std::normal_distribution<double> d;
    std::vector<Record> rows;
    for (int i = 0; i < 1000; ++i) {
        const double x = d(rng);
        rows.push_back({x, 2 * x, std::string(i % 2 ? "a" : "b"), double(d(rng) > 0)});
    }
    const auto gen = fit_generator(Dataset(s, rows), {"g", "a", "b"}, "a");
    const auto& c = gen.correlation();
    EXPECT_GE(c(0, 1), 0.99);
    for (Eigen::Index i = 0; i < c.rows(); ++i) EXPECT_NEAR(c(i, i), 1.0, 1e-12);
    EXPECT_TRUE(c.isApprox(c.transpose(), 1e-12));
}

TEST(Sample, FixesProtectedValueAndStaysInDomain) {
    const auto ds = fixtures::labelled_task(300, 2);
    const auto gen = fit_generator(ds, fixtures::race_group(), "Black");
    double lo = 1e300, hi = -1e300;
    for (const auto& r : rows_with_value(ds, "race", "Black")) {
        lo = std::min(lo, std::get<double>(r[0]));
        hi = std::max(hi, std::get<double>(r[0]));
    }
    const auto rows = gen.sample(2000, 5);
    ASSERT_EQ(rows.size(), 2000u);
    for (const auto& r : rows) {
        EXPECT_EQ(std::get<std::string>(r[2]), "Black");
        EXPECT_GE(std::get<double>(r[0]), lo);
        EXPECT_LE(std::get<double>(r[0]), hi);
        const auto& y = std::get<std::string>(r[3]);
        EXPECT_TRUE(y == "yes" || y == "no");
    }
    EXPECT_EQ(gen.sample(3, 1).size(), 3u);
}

TEST(Sample, Deterministic) {
    const auto ds = fixtures::labelled_task(100, 2);
    const auto gen = fit_generator(ds, fixtures::race_group(), "White");
    EXPECT_EQ(gen.sample(50, 9), gen.sample(50, 9));
    EXPECT_NE(gen.sample(50, 9), gen.sample(50, 10));
}

TEST(Sample, MeanWithinThreeStandardErrors) {
    const auto ds = fixtures::labelled_task(500, 3);
    const auto gen = fit_generator(ds, fixtures::race_group(), "White");
    const auto real = rows_with_value(ds, "race", "White");
    double m = 0, v = 0;
    for (const auto& r : real) m += std::get<double>(r[0]);
    m /= static_cast<double>(real.size());
    for (const auto& r : real) v += std::pow(std::get<double>(r[0]) - m, 2);
    const double sd = std::sqrt(v / static_cast<double>(real.size() - 1));
    const auto rows = gen.sample(10000, 4);
    double sm = 0;
    for (const auto& r : rows) sm += std::get<double>(r[0]);
    sm /= 10000.0;
    EXPECT_LT(std::abs(sm - m), 3 * sd / std::sqrt(10000.0));
}

TEST(Sample, CategoryFrequenciesSumToOne) {
    const auto ds = fixtures::labelled_task(100, 2);
    const auto gen = fit_generator(ds, fixtures::race_group(), "White");
    for (const auto& mg : gen.marginals()) {
        if (mg.kind != ColumnKind::Categorical) continue;
        double s = 0;
        for (double f : mg.frequencies) s += f;
        EXPECT_NEAR(s, 1.0, 1e-12);
    }
}

TEST(KlSimilarity, IdenticalIsOne) {
    const auto ds = fixtures::labelled_task(100, 1);
    EXPECT_DOUBLE_EQ(kl_similarity(ds, ds), 1.0);
}

TEST(KlSimilarity, DisjointCategoriesMatchHandComputation) {
    const Schema s({{"c", ColumnKind::Categorical}, {"y", ColumnKind::Categorical}}, {}, "y", std::string("1"));
    std::vector<Record> a, b;
    for (int i = 0; i < 100; ++i) {
        a.push_back({std::string("a"), std::string("1")});
        b.push_back({std::string("b"), std::string("1")});
    }
    const double score = kl_similarity(Dataset(s, a), Dataset(s, b));
    // Column c over categories {a, b}: p = (101, 1)/102, q = (1, 101)/102.
    const double p1 = 101.0 / 102, p2 = 1.0 / 102;
    const double kl_c = p1 * std::log(p1 / p2) + p2 * std::log(p2 / p1);
    // Column y is identical: KL 0.
    EXPECT_NEAR(score, std::exp(-kl_c / 2.0), 1e-12);
    EXPECT_LT(std::exp(-kl_c), 0.1);
}

TEST(KlSimilarity, PermutationInvariant) {
    const auto a = fixtures::labelled_task(100, 1);
    const auto b = fixtures::labelled_task(100, 2);
    auto rows = b.rows();
    std::mt19937_64 rng(3);
    std::shuffle(rows.begin(), rows.end(), rng);
    EXPECT_DOUBLE_EQ(kl_similarity(a, b), kl_similarity(a, b.with_rows(rows)));
}

TEST(KlSimilarity, SchemaMismatch) {
    EXPECT_THROW(kl_similarity(fixtures::labelled_task(5, 1), gaussian(5, 2, 0, 1)), Error);
}

TEST(FrechetDistance, IdentityIsZero) {
    const auto ds = gaussian(100, 3, 0, 1);
    EXPECT_NEAR(frechet_distance(ds, ds), 0.0, 1e-9);
}

TEST(FrechetDistance, SymmetricAndNonNegative) {
    const auto a = gaussian(100, 3, 0, 1), b = gaussian(120, 3, 0.5, 2);
    EXPECT_NEAR(frechet_distance(a, b), frechet_distance(b, a), 1e-9);
    EXPECT_GE(frechet_distance(a, b), 0.0);
}

TEST(FrechetDistance, MeanShiftOnly) {
    // b is a shifted copy of a: the covariance term vanishes and the
    // encoded mean gap is the shift divided by the pooled stddev.
    const auto a = gaussian(200, 2, 0, 5);
    std::vector<Record> rows = a.rows();
    for (auto& r : rows) r[0] = std::get<double>(r[0]) + 1.0;
    const auto b = a.with_rows(rows);
    double m = 0, v = 0;
    std::vector<double> all;
    for (const auto* d : {&a, &b})
        for (const auto& r : d->rows()) all.push_back(std::get<double>(r[0]));
    for (double x : all) m += x;
    m /= static_cast<double>(all.size());
    for (double x : all) v += (x - m) * (x - m);
    const double sd = std::sqrt(v / static_cast<double>(all.size()));
    EXPECT_NEAR(frechet_distance(a, b), std::pow(1.0 / sd, 2), 1e-6);
}

TEST(FrechetDistance, MatchesGeneralEigenOracle) {
    const auto a = gaussian(100, 3, 0, 21), b = gaussian(100, 3, 0.3, 22);
    // Oracle: encode with the same union-fitted encoder, then take the trace
    // of sqrt(C1 C2) from the eigenvalues of the (non-symmetric) product.
    std::vector<Record> all = a.rows();
    all.insert(all.end(), b.rows().begin(), b.rows().end());
    const auto enc = FeatureEncoder::fit(a.schema(), all, {});
    const auto stats = [&](const Dataset& d) {
        const Eigen::MatrixXd x = enc.encode(d.rows());
        const Eigen::VectorXd mu = x.colwise().mean();
        const Eigen::MatrixXd c = x.rowwise() - mu.transpose();
        return std::make_pair(mu, Eigen::MatrixXd(c.transpose() * c / double(x.rows() - 1)));
    };
    const auto [m1, c1] = stats(a);
    const auto [m2, c2] = stats(b);
    Eigen::EigenSolver<Eigen::MatrixXd> es(c1 * c2);
    double tr_sqrt = 0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        tr_sqrt += std::sqrt(std::max(0.0, es.eigenvalues()[i].real()));
    const double oracle = (m1 - m2).squaredNorm() + c1.trace() + c2.trace() - 2 * tr_sqrt;
    EXPECT_NEAR(frechet_distance(a, b), oracle, 1e-6);
}

TEST(DetectionAuc, ShuffledCopyIsIndistinguishable) {
    const auto real = fixtures::labelled_task(200, 7);
    auto rows = real.rows();
    std::mt19937_64 rng(1);
    std::shuffle(rows.begin(), rows.end(), rng);
    const double auc = detection_auc(real, real.with_rows(rows), 3);
    EXPECT_GE(auc, 0.4);
    EXPECT_LE(auc, 0.6);
}

TEST(DetectionAuc, SeparableFeature) {
    const auto a = gaussian(100, 2, 0, 1);
    auto rows = gaussian(100, 2, 0, 2).rows();
    for (auto& r : rows) r[0] = 1000.0;
    for (const auto& r : a.rows()) ASSERT_LT(std::get<double>(r[0]), 100.0);
    EXPECT_GE(detection_auc(a, a.with_rows(rows), 1), 0.95);
}

TEST(DetectionAuc, RangeAndPermutationInvariance) {
    const auto a = gaussian(60, 2, 0, 1), b = gaussian(60, 2, 0.2, 2);
    const double auc = detection_auc(a, b, 4);
    EXPECT_GE(auc, 0.0);
    EXPECT_LE(auc, 1.0);
    auto rows = b.rows();
    std::reverse(rows.begin(), rows.end());
    EXPECT_DOUBLE_EQ(auc, detection_auc(a, b.with_rows(rows), 4));
}

TEST(DownstreamF1Loss, IdenticalTrainingIsZero) {
    const auto tr = fixtures::labelled_task(200, 1), te = fixtures::labelled_task(100, 2);
    EXPECT_NEAR(downstream_f1_loss(tr, tr, te), 0.0, 1e-9);
}

TEST(DownstreamF1Loss, InvertedLabels) {
    const Schema s({{"x", ColumnKind::Numeric}, {"y", ColumnKind::Categorical}}, {}, "y", std::string("1"));
    std::vector<Record> good, bad;
    for (int i = 0; i < 100; ++i) {
        const double x = i - 49.5;
        good.push_back({x, std::string(x > 0 ? "1" : "0")});
        bad.push_back({x, std::string(x > 0 ? "0" : "1")});
    }
    const Dataset tr(s, good);
    const double loss = downstream_f1_loss(tr, Dataset(s, bad), tr);
    EXPECT_GE(loss, 0.5);
}

TEST(RocAuc, TiesGetAverageRank) {
    EXPECT_DOUBLE_EQ(roc_auc({0.5, 0.5}, {1, 0}), 0.5);
    EXPECT_DOUBLE_EQ(roc_auc({0.9, 0.1}, {1, 0}), 1.0);
    EXPECT_DOUBLE_EQ(roc_auc({0.1, 0.9}, {1, 0}), 0.0);
}

TEST(PsdSqrt, SquaresBack) {
    Eigen::MatrixXd m(2, 2);
    m << 4, 1, 1, 3;
    const auto r = psd_sqrt(m);
    EXPECT_TRUE((r * r).isApprox(m, 1e-12));
}
