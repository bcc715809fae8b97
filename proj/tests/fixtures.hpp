#pragma once

#include "evtfair/scoring.hpp"
#include "evtfair/synthgen.hpp"
#include "evtfair/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace fixtures {

using namespace evtfair;

inline Schema task_schema() {
    return Schema({{"x1", ColumnKind::Numeric},
                   {"x2", ColumnKind::Numeric},
                   {"race", ColumnKind::Categorical},
                   {"y", ColumnKind::Categorical}},
                  {"race"}, "y", std::string("yes"));
}

inline GroupSpec race_group() { return {"race", "White", "Black"}; }

// Gaussian features; labels 1[x1 + 0.5 x2 + 0.8 priv + noise > 0].
inline Dataset labelled_task(std::size_t per_group, std::uint64_t seed, double priv_shift = 0.8) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01;
    std::vector<Record> rows;
    for (const char* race : {"White", "Black"}) {
        const double priv = std::string(race) == "White" ? 1.0 : 0.0;
        for (std::size_t i = 0; i < per_group; ++i) {
            const double x1 = n01(rng), x2 = n01(rng);
            const bool fav = x1 + 0.5 * x2 + priv_shift * priv + 0.5 * n01(rng) > 0.0;
            rows.push_back({x1, x2, std::string(race), std::string(fav ? "yes" : "no")});
        }
    }
    return Dataset(task_schema(), std::move(rows));
}

// `per_group` copula draws for each group value, fitted on a labelled seed set.
inline Dataset copula_task(std::size_t per_group, std::uint64_t seed) {
    const auto base = labelled_task(1000, seed);
    std::vector<Record> rows;
    std::uint64_t s = seed;
    for (const auto& v : {std::string("White"), std::string("Black")}) {
        const auto gen = fit_generator(base, race_group(), v);
        auto part = gen.sample(per_group, ++s * 7919);
        rows.insert(rows.end(), part.begin(), part.end());
    }
    return Dataset(task_schema(), std::move(rows));
}

// Scorer 0.5 + delta(x) 1[privileged]: unprivileged rows get CD = +delta,
// privileged rows CD = -delta. delta = 0.27 + 0.01 z2 above the pooled
// 95th percentile of x1 and 0.01 elsewhere.
inline ModelPtr tail_bias_scorer(const Dataset& ds) {
    std::vector<double> x1, x2;
    for (const auto& r : ds.rows()) {
        x1.push_back(std::get<double>(r[0]));
        x2.push_back(std::get<double>(r[1]));
    }
    std::sort(x1.begin(), x1.end());
    const double p95 = x1[static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(x1.size() - 1)))];
    double m = 0, sd = 0;
    for (double v : x2) m += v;
    m /= static_cast<double>(x2.size());
    for (double v : x2) sd += (v - m) * (v - m);
    sd = std::sqrt(sd / static_cast<double>(x2.size()));
    return std::make_shared<FunctionModel>("test:tail-bias", [=](const Record& r) {
        const double a = std::get<double>(r[0]);
        const double z2 = (std::get<double>(r[1]) - m) / sd;
        const double delta = a > p95 ? 0.27 + 0.01 * z2 : 0.01;
        return 0.5 + (std::get<std::string>(r[2]) == "White" ? delta : 0.0);
    });
}

// Depends on x1 only.
inline ModelPtr fair_scorer() {
    return std::make_shared<FunctionModel>("test:fair",
                                           [](const Record& r) { return 1.0 / (1.0 + std::exp(-std::get<double>(r[0]))); });
}

inline std::vector<double> exponential(std::size_t n, double rate, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> d(rate);
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

// Inverse CDF of the GPD: t = sigma/xi ((1-p)^(-xi) - 1).
inline std::vector<double> gpd_draws(std::size_t n, double sigma, double xi, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) {
        const double p = u(rng);
        x = std::abs(xi) < 1e-12 ? -sigma * std::log1p(-p) : sigma / xi * (std::pow(1.0 - p, -xi) - 1.0);
    }
    return v;
}

// Inverse CDF of the Gumbel: mu - sigma ln(-ln p).
inline std::vector<double> gumbel_draws(std::size_t n, double mu, double sigma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) {
        double p = u(rng);
        while (p <= 0.0) p = u(rng);
        x = mu - sigma * std::log(-std::log(p));
    }
    return v;
}

// Classical Pareto with x_m = 1: (1-p)^(-1/alpha).
inline std::vector<double> pareto_draws(std::size_t n, double alpha, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = std::pow(1.0 - u(rng), -1.0 / alpha);
    return v;
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        std::random_device rd;
        path = std::filesystem::temp_directory_path() / ("evtfair-test-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

}  // namespace fixtures
