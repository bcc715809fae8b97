#include "evtfair/statcompare.hpp"

#include "evtfair/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace evtfair {

std::string_view to_string(Magnitude m) noexcept {
    switch (m) {
        case Magnitude::Negligible: return "negligible";
        case Magnitude::Small: return "small";
        case Magnitude::Medium: return "medium";
        case Magnitude::Large: return "large";
    }
    return "negligible";
}

Magnitude magnitude_from_string(std::string_view s) {
    for (auto m : {Magnitude::Negligible, Magnitude::Small, Magnitude::Medium, Magnitude::Large})
        if (to_string(m) == s) return m;
    fail(ErrorCode::InvalidArgument, "unknown magnitude '" + std::string(s) + "'");
}

Magnitude cliffs_magnitude(double delta) {
    const double d = std::abs(delta);
    if (d < 0.147) return Magnitude::Negligible;
    if (d < 0.33) return Magnitude::Small;
    if (d < 0.474) return Magnitude::Medium;
    return Magnitude::Large;
}

double cliffs_delta(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) fail(ErrorCode::EmptyInput, "cliffs_delta needs two non-empty samples");
    // Sort b once, then count strictly smaller / larger entries per a_i.
    std::vector<double> sb(b.begin(), b.end());
    std::sort(sb.begin(), sb.end());
    long long greater = 0, less = 0;
    for (double x : a) {
        greater += std::lower_bound(sb.begin(), sb.end(), x) - sb.begin();
        less += sb.end() - std::upper_bound(sb.begin(), sb.end(), x);
    }
    return static_cast<double>(greater - less) / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

namespace {

double resampled_mean(std::span<const double> v, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, v.size() - 1);
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += v[pick(rng)];
    return s / static_cast<double>(v.size());
}

// Linear interpolation between order statistics.
double percentile(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

ComparisonResult bootstrap_test(std::span<const double> a, std::span<const double> b, int n_resamples, double alpha,
                                std::uint64_t seed) {
    if (a.empty() || b.empty()) fail(ErrorCode::EmptyInput, "bootstrap_test needs two non-empty samples");
    if (n_resamples < 100) fail(ErrorCode::InvalidArgument, "bootstrap_test needs at least 100 resamples");
    if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorCode::InvalidArgument, "alpha must lie in (0,1)");

    ComparisonResult r;
    r.cliffs_delta = cliffs_delta(a, b);
    r.magnitude = cliffs_magnitude(r.cliffs_delta);

    std::mt19937_64 rng(seed);
    std::vector<double> diffs(static_cast<std::size_t>(n_resamples));
    for (auto& d : diffs) {
        const double ma = resampled_mean(a, rng);
        d = ma - resampled_mean(b, rng);
    }
    std::sort(diffs.begin(), diffs.end());
    r.bootstrap_ci = {percentile(diffs, alpha / 2), percentile(diffs, 1 - alpha / 2)};
    r.significant = r.bootstrap_ci.first > 0.0 || r.bootstrap_ci.second < 0.0;
    return r;
}

}  // namespace evtfair
