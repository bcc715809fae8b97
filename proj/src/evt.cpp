#include "evtfair/evt.hpp"

#include "evtfair/error.hpp"
#include "evtfair/optimize.hpp"
#include "evtfair/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>

namespace evtfair {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Below xi = -1 both likelihoods are unbounded near the endpoint.
constexpr double kMinXi = -1.0;
constexpr double kMaxXi = 10.0;
constexpr double kEulerGamma = 0.57721566490153286;
constexpr int kMaxRestarts = 4;
constexpr double kBootstrapMinSuccess = 0.8;

bool all_equal(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

NelderMeadResult minimize_with_restarts(const std::function<double(std::span<const double>)>& f,
                                        std::vector<double> x0, const std::vector<double>& step) {
    auto best = nelder_mead(f, std::move(x0), step);
    for (int r = 0; r < kMaxRestarts; ++r) {
        auto next = nelder_mead(f, best.x, step);
        const bool improved = next.value < best.value - 1e-12;
        if (next.value <= best.value) best = std::move(next);
        if (!improved) break;
    }
    return best;
}

double sample_stddev(const std::vector<double>& v) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
}

}  // namespace

ThresholdSelection select_threshold(std::span<const double> values, std::size_t k_max) {
    if (k_max < 2 || values.size() <= k_max)
        fail(ErrorCode::TooFewSamples, "need more than k_max=" + std::to_string(k_max) + " values, got " +
                                           std::to_string(values.size()));
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    if (sorted.front() == sorted.back()) fail(ErrorCode::AllEqual, "all values are equal");

    double u = sorted[k_max];
    if (sorted[k_max - 1] == u) {
        // Tie across the boundary: step down to the next distinct value.
        const auto it = std::find_if(sorted.begin() + static_cast<std::ptrdiff_t>(k_max), sorted.end(),
                                     [&](double x) { return x < u; });
        if (it != sorted.end()) u = *it;
    }
    ThresholdSelection sel;
    sel.u = u;
    for (double x : sorted) {
        if (x > u)
            sel.exceedances.push_back(x);
        else
            break;
    }
    if (sel.exceedances.empty()) fail(ErrorCode::AllEqual, "no value exceeds the threshold");
    return sel;
}

CvResult cv_test_top(std::span<const double> top_desc, std::size_t total, std::size_t k_min, std::size_t k_max) {
    if (k_min < 2 || k_max < k_min) fail(ErrorCode::InvalidArgument, "cv_test requires 2 <= k_min <= k_max");
    CvResult res;
    res.enough_samples = total >= k_max;
    if (!res.enough_samples) return res;
    if (top_desc.size() < k_max) fail(ErrorCode::InvalidArgument, "cv_test_top needs the top k_max values");

    // Welford accumulation over the descending prefix.
    double mean = 0.0;
    double m2 = 0.0;
    bool passed = true;
    for (std::size_t i = 0; i < k_max; ++i) {
        const double x = top_desc[i];
        const double delta = x - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (x - mean);
        const std::size_t k = i + 1;
        if (k < k_min) continue;
        if (mean <= kDegenerateMean) {
            res.degenerate = true;
            res.passed = false;
            return res;
        }
        const double sd = std::sqrt(std::max(0.0, m2 / static_cast<double>(k - 1)));
        const double cv = sd / mean;
        const double bound = 1.0 + 1.0 / (4.0 * static_cast<double>(k));
        res.per_k.push_back({k, cv, bound});
        if (cv >= bound) {
            passed = false;
            break;
        }
    }
    res.passed = passed;
    return res;
}

CvResult cv_test(std::span<const double> values, std::size_t k_min, std::size_t k_max) {
    std::vector<double> sorted(values.begin(), values.end());
    const std::size_t keep = std::min(sorted.size(), k_max);
    std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(keep), sorted.end(),
                      std::greater<>());
    sorted.resize(keep);
    return cv_test_top(sorted, values.size(), k_min, k_max);
}

double gpd_log_likelihood(const GpdParams& p, std::span<const double> excesses) {
    if (!(p.sigma_hat > 0) || !std::isfinite(p.sigma_hat) || !std::isfinite(p.xi)) return -kInf;
    const double k = static_cast<double>(excesses.size());
    if (std::abs(p.xi) < kXiZero) {
        double s = 0.0;
        for (double t : excesses) s += t;
        return -k * std::log(p.sigma_hat) - s / p.sigma_hat;
    }
    double s = 0.0;
    for (double t : excesses) {
        const double a = 1.0 + p.xi * t / p.sigma_hat;
        if (!(a > 0)) return -kInf;
        s += std::log(a);
    }
    return -k * std::log(p.sigma_hat) - (1.0 + 1.0 / p.xi) * s;
}

double gev_log_likelihood(const GevParams& p, std::span<const double> values) {
    if (!(p.sigma > 0) || !std::isfinite(p.sigma) || !std::isfinite(p.mu) || !std::isfinite(p.xi)) return -kInf;
    const double k = static_cast<double>(values.size());
    double ll = -k * std::log(p.sigma);
    if (std::abs(p.xi) < kXiZero) {
        for (double x : values) {
            const double z = (x - p.mu) / p.sigma;
            ll -= z + std::exp(-z);
        }
        return ll;
    }
    for (double x : values) {
        const double a = 1.0 + p.xi * (x - p.mu) / p.sigma;
        if (!(a > 0)) return -kInf;
        const double la = std::log(a);
        ll -= (1.0 + 1.0 / p.xi) * la + std::exp(-la / p.xi);
    }
    return std::isfinite(ll) ? ll : -kInf;
}

GpdParams gpd_pwm_estimate(std::span<const double> excesses) {
    std::vector<double> x(excesses.begin(), excesses.end());
    std::sort(x.begin(), x.end());
    const auto n = static_cast<double>(x.size());
    double a0 = 0.0;
    double a1 = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double p = (static_cast<double>(j + 1) - 0.35) / n;
        a0 += x[j];
        a1 += (1.0 - p) * x[j];
    }
    a0 /= n;
    a1 /= n;
    const double denom = a0 - 2.0 * a1;
    if (!(denom > 0)) return {a0, 0.0};
    // Hosking-Wallis shape k relates to xi by xi = -k.
    const double k = a0 / denom - 2.0;
    return {2.0 * a0 * a1 / denom, -k};
}

GpdFit fit_gpd(std::span<const double> excesses) {
    if (excesses.size() < 2) fail(ErrorCode::DegenerateExcesses, "need at least 2 excesses");
    for (double t : excesses)
        if (!(t > 0) || !std::isfinite(t)) fail(ErrorCode::DegenerateExcesses, "excesses must be positive and finite");
    if (all_equal(excesses)) fail(ErrorCode::DegenerateExcesses, "all excesses are equal");

    const double mean = std::accumulate(excesses.begin(), excesses.end(), 0.0) / static_cast<double>(excesses.size());
    GpdParams start = gpd_pwm_estimate(excesses);
    start.xi = std::clamp(start.xi, kMinXi + 0.05, kMaxXi - 0.05);
    if (!std::isfinite(gpd_log_likelihood(start, excesses))) start = {mean, 0.0};
    start.sigma_hat = std::exp(std::log(start.sigma_hat));  // the optimizer works in log-scale

    const auto nll = [&](std::span<const double> th) {
        if (th[1] <= kMinXi || th[1] >= kMaxXi) return kInf;
        const double ll = gpd_log_likelihood({std::exp(th[0]), th[1]}, excesses);
        return std::isfinite(ll) ? -ll : kInf;
    };
    const auto res = minimize_with_restarts(nll, {std::log(start.sigma_hat), start.xi}, {0.1, 0.1});
    GpdFit fit;
    fit.params = {std::exp(res.x[0]), res.x[1]};
    fit.log_likelihood = -res.value;
    fit.initial_log_likelihood = gpd_log_likelihood(start, excesses);
    if (!std::isfinite(fit.log_likelihood) || !(fit.params.sigma_hat > 0))
        fail(ErrorCode::FitDiverged, "GPD fit left the feasible region");
    return fit;
}

GevFit fit_gev(std::span<const double> values) {
    if (values.size() < 5) fail(ErrorCode::DegenerateExceedances, "need at least 5 values");
    for (double x : values)
        if (!std::isfinite(x)) fail(ErrorCode::DegenerateExceedances, "values must be finite");
    if (all_equal(values)) fail(ErrorCode::DegenerateExceedances, "all values are equal");

    const auto n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : values) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    // Gumbel moments: mean = mu + gamma sigma, var = pi^2 sigma^2 / 6.
    const double sigma0 = std::sqrt(6.0) * sd / M_PI;
    const double mu0 = mean - kEulerGamma * sigma0;

    const auto nll = [&](std::span<const double> th) {
        if (th[2] <= kMinXi || th[2] >= kMaxXi) return kInf;
        const double ll = gev_log_likelihood({th[0], std::exp(th[1]), th[2]}, values);
        return std::isfinite(ll) ? -ll : kInf;
    };
    const auto res = minimize_with_restarts(nll, {mu0, std::log(sigma0), 0.0}, {0.5 * sigma0, 0.2, 0.1});
    GevFit fit;
    fit.params = {res.x[0], std::exp(res.x[1]), res.x[2]};
    fit.log_likelihood = -res.value;
    if (!std::isfinite(fit.log_likelihood) || !(fit.params.sigma > 0))
        fail(ErrorCode::FitDiverged, "GEV fit left the feasible region");
    return fit;
}

double gev_cdf(const GevParams& p, double z) {
    const double s = (z - p.mu) / p.sigma;
    if (std::abs(p.xi) < kXiZero) return std::exp(-std::exp(-s));
    const double a = 1.0 + p.xi * s;
    if (!(a > 0)) return p.xi > 0 ? 0.0 : 1.0;
    return std::exp(-std::pow(a, -1.0 / p.xi));
}

double gev_pdf(const GevParams& p, double z) {
    const double s = (z - p.mu) / p.sigma;
    if (std::abs(p.xi) < kXiZero) return std::exp(-s - std::exp(-s)) / p.sigma;
    const double a = 1.0 + p.xi * s;
    if (!(a > 0)) return 0.0;
    const double t = std::pow(a, -1.0 / p.xi);
    return t * std::pow(a, -1.0) * std::exp(-t) / p.sigma;
}

double gev_quantile(const GevParams& p, double prob) {
    const double y = -std::log(prob);
    if (std::abs(p.xi) < kXiZero) return p.mu - p.sigma * std::log(y);
    return p.mu + p.sigma / p.xi * (std::pow(y, -p.xi) - 1.0);
}

double gpd_quantile(const GpdParams& p, double prob) {
    if (std::abs(p.xi) < kXiZero) return -p.sigma_hat * std::log1p(-prob);
    return p.sigma_hat / p.xi * (std::pow(1.0 - prob, -p.xi) - 1.0);
}

std::string_view to_string(TailType t) noexcept {
    switch (t) {
        case TailType::TypeI: return "TypeI";
        case TailType::TypeII: return "TypeII";
        case TailType::TypeIII: return "TypeIII";
    }
    return "TypeI";
}

std::string_view to_string(QqClass c) noexcept {
    switch (c) {
        case QqClass::Linear: return "Linear";
        case QqClass::SkewedLeft: return "SkewedLeft";
        case QqClass::SkewedRight: return "SkewedRight";
        case QqClass::HeavyTail: return "HeavyTail";
    }
    return "Linear";
}

TailType tail_type_from_string(std::string_view s) {
    for (auto t : {TailType::TypeI, TailType::TypeII, TailType::TypeIII})
        if (to_string(t) == s) return t;
    fail(ErrorCode::InvalidFit, "unknown tail type '" + std::string(s) + "'");
}

QqClass qq_class_from_string(std::string_view s) {
    for (auto c : {QqClass::Linear, QqClass::SkewedLeft, QqClass::SkewedRight, QqClass::HeavyTail})
        if (to_string(c) == s) return c;
    fail(ErrorCode::InvalidFit, "unknown Q-Q class '" + std::string(s) + "'");
}

TailType classify_tail(double xi, double se_xi) {
    if (xi + 2.0 * se_xi < 0.0) return TailType::TypeIII;
    if (xi - 2.0 * se_xi > 0.0) return TailType::TypeII;
    return TailType::TypeI;
}

std::string Horizon::to_string() const {
    switch (kind) {
        case Kind::Infinite: return "Infinite";
        case Kind::Zero: return "Zero";
        case Kind::Finite: break;
    }
    return std::to_string(interactions);
}

Horizon Horizon::parse(std::string_view s) {
    if (s == "Infinite") return {Kind::Infinite, 0};
    if (s == "Zero") return {Kind::Zero, 0};
    try {
        return {Kind::Finite, static_cast<std::uint64_t>(std::stoull(std::string(s)))};
    } catch (...) {
        fail(ErrorCode::InvalidFit, "unknown horizon '" + std::string(s) + "'");
    }
}

QqDiagnostic qq_diagnostic(const GevParams& gev, TailType tail_type, std::span<const double> exceedances) {
    std::vector<double> e(exceedances.begin(), exceedances.end());
    std::sort(e.begin(), e.end());
    const std::size_t k = e.size();
    QqDiagnostic qq;
    qq.points.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        const double p = (static_cast<double>(i) + 0.5) / static_cast<double>(k);
        qq.points.emplace_back(e[i], gev_quantile(gev, p));
    }

    // Least-squares line theoretical = a + b * empirical.
    double mx = 0, my = 0;
    for (const auto& [x, y] : qq.points) {
        mx += x;
        my += y;
    }
    mx /= static_cast<double>(k);
    my /= static_cast<double>(k);
    double sxx = 0, syy = 0, sxy = 0;
    for (const auto& [x, y] : qq.points) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    qq.r2 = (sxx > 0 && syy > 0) ? (sxy * sxy) / (sxx * syy) : 0.0;
    const double slope = sxx > 0 ? sxy / sxx : 0.0;
    const double intercept = my - slope * mx;

    if (tail_type == TailType::TypeII) {
        qq.cls = QqClass::HeavyTail;
    } else if (qq.r2 >= 0.99) {
        qq.cls = QqClass::Linear;
    } else {
        double resid = 0.0;
        std::size_t count = 0;
        for (std::size_t i = (3 * k) / 4; i < k; ++i) {
            const auto& [x, y] = qq.points[i];
            resid += y - (intercept + slope * x);
            ++count;
        }
        qq.cls = (count > 0 && resid / static_cast<double>(count) < 0) ? QqClass::SkewedLeft : QqClass::SkewedRight;
    }
    return qq;
}

Horizon horizon(TailType tail_type, QqClass qq_class, double zeta_u) {
    if (!(zeta_u > 0.0 && zeta_u <= 1.0)) fail(ErrorCode::InvalidArgument, "zeta_u must lie in (0,1]");
    if (tail_type == TailType::TypeII || qq_class == QqClass::HeavyTail) return {Horizon::Kind::Zero, 0};
    if (tail_type == TailType::TypeIII && qq_class == QqClass::Linear) return {Horizon::Kind::Infinite, 0};
    constexpr std::array<std::uint64_t, 5> kSteps{500, 1000, 2000, 5000, 10000};
    const double target = 10.0 / zeta_u;
    std::uint64_t best = kSteps.front();
    for (auto s : kSteps)
        if (std::abs(static_cast<double>(s) - target) < std::abs(static_cast<double>(best) - target)) best = s;
    return {Horizon::Kind::Finite, best};
}

double return_level(double u, const GpdParams& gpd, double zeta_u, double m) {
    if (!(gpd.sigma_hat > 0) || !std::isfinite(gpd.xi) || !std::isfinite(u) || !(zeta_u > 0.0 && zeta_u <= 1.0))
        fail(ErrorCode::InvalidFit, "return_level needs sigma_hat > 0 and zeta_u in (0,1]");
    if (!(m >= 1.0)) fail(ErrorCode::InvalidArgument, "return period m must be >= 1");
    const double mz = m * zeta_u;
    if (std::abs(gpd.xi) < kXiZero) return u + gpd.sigma_hat * std::log(mz);
    return u + gpd.sigma_hat / gpd.xi * (std::pow(mz, gpd.xi) - 1.0);
}

double return_level(const EvtFit& fit, double m) { return return_level(fit.u, fit.gpd, fit.zeta_u, m); }

namespace {

std::vector<double> bootstrap_spread(int n_resamples, std::size_t n_params,
                                     const std::function<std::vector<double>(std::mt19937_64&)>& refit,
                                     std::uint64_t seed) {
    if (n_resamples < 50) fail(ErrorCode::InvalidArgument, "bootstrap needs at least 50 resamples");
    std::vector<std::optional<std::vector<double>>> results(static_cast<std::size_t>(n_resamples));
    parallel_for(results.size(), [&](std::size_t r) {
        std::mt19937_64 rng(derive_seed(seed, r));
        try {
            results[r] = refit(rng);
        } catch (const Error&) {
            results[r].reset();
        }
    });
    std::vector<std::vector<double>> per_param(n_params);
    std::size_t ok = 0;
    for (const auto& r : results) {
        if (!r) continue;
        ++ok;
        for (std::size_t j = 0; j < n_params; ++j) per_param[j].push_back((*r)[j]);
    }
    if (static_cast<double>(ok) < kBootstrapMinSuccess * n_resamples)
        fail(ErrorCode::BootstrapUnstable, std::to_string(ok) + " of " + std::to_string(n_resamples) +
                                               " bootstrap refits converged");
    std::vector<double> se(n_params);
    for (std::size_t j = 0; j < n_params; ++j) se[j] = sample_stddev(per_param[j]);
    return se;
}

double open_unit(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = 0.0;
    while (u <= 0.0) u = unif(rng);
    return u;
}

}  // namespace

std::vector<double> bootstrap_gpd_se(const GpdParams& fitted, std::size_t k, int n_resamples, std::uint64_t seed) {
    return bootstrap_spread(
        n_resamples, 2,
        [&](std::mt19937_64& rng) {
            std::vector<double> draw(k);
            for (auto& t : draw) t = gpd_quantile(fitted, 1.0 - open_unit(rng));
            const auto f = fit_gpd(draw);
            return std::vector<double>{f.params.sigma_hat, f.params.xi};
        },
        seed);
}

std::vector<double> bootstrap_gev_se(const GevParams& fitted, std::size_t k, int n_resamples, std::uint64_t seed) {
    return bootstrap_spread(
        n_resamples, 3,
        [&](std::mt19937_64& rng) {
            std::vector<double> draw(k);
            for (auto& x : draw) x = gev_quantile(fitted, open_unit(rng));
            const auto f = fit_gev(draw);
            return std::vector<double>{f.params.mu, f.params.sigma, f.params.xi};
        },
        seed);
}

std::vector<double> bootstrap_se(std::span<const double> data, FitKind kind, int n_resamples, std::uint64_t seed) {
    if (kind == FitKind::Gpd) return bootstrap_gpd_se(fit_gpd(data).params, data.size(), n_resamples, seed);
    return bootstrap_gev_se(fit_gev(data).params, data.size(), n_resamples, seed);
}

TailAnalysis analyze_tail(std::span<const double> values, const TailAnalysisOptions& options) {
    auto sel = select_threshold(values, options.k_max);
    const std::size_t k = sel.exceedances.size();
    if (k < 2) fail(ErrorCode::TooFewSamples, "fewer than 2 exceedances");
    std::vector<double> excesses(k);
    for (std::size_t i = 0; i < k; ++i) excesses[i] = sel.exceedances[i] - sel.u;

    TailAnalysis out;
    EvtFit& fit = out.fit;
    fit.u = sel.u;
    fit.k = k;
    fit.n = values.size();
    fit.zeta_u = static_cast<double>(k) / static_cast<double>(values.size());
    fit.gpd = fit_gpd(excesses).params;
    fit.gev = fit_gev(sel.exceedances).params;

    const auto se_gpd = bootstrap_gpd_se(fit.gpd, k, options.bootstrap_resamples, derive_seed(options.seed, 1));
    const auto se_gev = bootstrap_gev_se(fit.gev, k, options.bootstrap_resamples, derive_seed(options.seed, 2));
    fit.se = {se_gpd[0], se_gpd[1], se_gev[0], se_gev[1], se_gev[2]};

    fit.tail_type = classify_tail(fit.gpd.xi, fit.se.gpd_xi);
    out.qq = qq_diagnostic(fit.gev, fit.tail_type, sel.exceedances);
    fit.qq_class = out.qq.cls;
    fit.qq_r2 = out.qq.r2;
    fit.horizon = horizon(fit.tail_type, fit.qq_class, fit.zeta_u);
    out.exceedances = std::move(sel.exceedances);
    return out;
}

}  // namespace evtfair
