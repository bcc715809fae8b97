#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace evtfair {

// Excess-over-threshold model: P(T - u <= t | T > u) = 1 - (1 + xi t / sigma_hat)^(-1/xi).
struct GpdParams {
    double sigma_hat = 1.0;
    double xi = 0.0;
};

struct GevParams {
    double mu = 0.0;
    double sigma = 1.0;
    double xi = 0.0;
};

struct GpdFit {
    GpdParams params;
    double log_likelihood = 0.0;
    double initial_log_likelihood = 0.0;  // at the probability-weighted-moments start
};

struct GevFit {
    GevParams params;
    double log_likelihood = 0.0;
};

// |xi| below this is treated as the exponential / Gumbel limit.
inline constexpr double kXiZero = 1e-9;
inline constexpr double kDegenerateMean = 1e-12;

struct ThresholdSelection {
    double u = 0.0;
    std::vector<double> exceedances;  // descending
};

// u is the (k_max+1)-th largest value; exceedances are the values strictly
// above it. Boundary ties lower u to the next distinct value below.
ThresholdSelection select_threshold(std::span<const double> values, std::size_t k_max);

struct CvEntry {
    std::size_t k = 0;
    double cv = 0.0;
    double bound = 0.0;
};

struct CvResult {
    bool passed = false;
    bool degenerate = false;  // some top-k mean <= kDegenerateMean
    bool enough_samples = false;
    std::vector<CvEntry> per_k;
};

// Exponentiality check over the top-k values for k in [k_min, k_max]:
// CV_k = sample stddev / mean must stay below 1 + 1/(4k) for every k.
CvResult cv_test(std::span<const double> values, std::size_t k_min, std::size_t k_max);
// Same test given only the largest values in descending order (at least
// min(total, k_max) of them) and the total sample count.
CvResult cv_test_top(std::span<const double> top_desc, std::size_t total, std::size_t k_min, std::size_t k_max);

double gpd_log_likelihood(const GpdParams& p, std::span<const double> excesses);
double gev_log_likelihood(const GevParams& p, std::span<const double> values);
GpdParams gpd_pwm_estimate(std::span<const double> excesses);

GpdFit fit_gpd(std::span<const double> excesses);
GevFit fit_gev(std::span<const double> values);

double gev_cdf(const GevParams& p, double z);
double gev_pdf(const GevParams& p, double z);
double gev_quantile(const GevParams& p, double prob);
double gpd_quantile(const GpdParams& p, double prob);

enum class TailType { TypeI, TypeII, TypeIII };
enum class QqClass { Linear, SkewedLeft, SkewedRight, HeavyTail };

std::string_view to_string(TailType t) noexcept;
std::string_view to_string(QqClass c) noexcept;
TailType tail_type_from_string(std::string_view s);
QqClass qq_class_from_string(std::string_view s);

TailType classify_tail(double xi, double se_xi);

struct Horizon {
    enum class Kind { Finite, Infinite, Zero };
    Kind kind = Kind::Finite;
    std::uint64_t interactions = 0;  // meaningful for Finite only

    std::string to_string() const;
    static Horizon parse(std::string_view s);
    bool operator==(const Horizon&) const = default;
};

struct StandardErrors {
    double gpd_sigma_hat = 0.0;
    double gpd_xi = 0.0;
    double gev_mu = 0.0;
    double gev_sigma = 0.0;
    double gev_xi = 0.0;
    bool operator==(const StandardErrors&) const = default;
};

struct EvtFit {
    double u = 0.0;
    double zeta_u = 1.0;
    std::size_t k = 0;
    std::size_t n = 0;
    GpdParams gpd;
    GevParams gev;
    StandardErrors se;
    TailType tail_type = TailType::TypeI;
    QqClass qq_class = QqClass::Linear;
    double qq_r2 = 0.0;
    Horizon horizon;
};

struct QqDiagnostic {
    std::vector<std::pair<double, double>> points;  // (empirical, theoretical)
    QqClass cls = QqClass::Linear;
    double r2 = 0.0;
};

// Theoretical quantiles of the fitted GEV at plotting positions (i - 0.5)/k.
QqDiagnostic qq_diagnostic(const GevParams& gev, TailType tail_type, std::span<const double> exceedances);

Horizon horizon(TailType tail_type, QqClass qq_class, double zeta_u);

// Level exceeded on average once in m observations, from the GPD
// exceedance model.
double return_level(double u, const GpdParams& gpd, double zeta_u, double m);
double return_level(const EvtFit& fit, double m);

enum class FitKind { Gpd, Gev };

// Parametric bootstrap: draw from the fitted model, refit, report the
// standard deviation of each parameter ({sigma_hat, xi} or {mu, sigma, xi}).
std::vector<double> bootstrap_se(std::span<const double> data, FitKind kind, int n_resamples, std::uint64_t seed);
std::vector<double> bootstrap_gpd_se(const GpdParams& fitted, std::size_t k, int n_resamples, std::uint64_t seed);
std::vector<double> bootstrap_gev_se(const GevParams& fitted, std::size_t k, int n_resamples, std::uint64_t seed);

struct TailAnalysisOptions {
    std::size_t k_max = 50;
    int bootstrap_resamples = 200;
    std::uint64_t seed = 0;
};

struct TailAnalysis {
    EvtFit fit;
    QqDiagnostic qq;
    std::vector<double> exceedances;
};

// Threshold, both fits, bootstrap errors, tail class, Q-Q and horizon.
TailAnalysis analyze_tail(std::span<const double> values, const TailAnalysisOptions& options);

}  // namespace evtfair
