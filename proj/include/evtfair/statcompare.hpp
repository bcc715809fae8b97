#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

namespace evtfair {

enum class Magnitude { Negligible, Small, Medium, Large };

std::string_view to_string(Magnitude m) noexcept;
Magnitude magnitude_from_string(std::string_view s);

// |d| < 0.147 negligible, < 0.33 small, < 0.474 medium, else large.
Magnitude cliffs_magnitude(double delta);

// (#{a_i > b_j} - #{a_i < b_j}) / (|a| |b|)
double cliffs_delta(std::span<const double> a, std::span<const double> b);

struct ComparisonResult {
    double cliffs_delta = 0.0;
    Magnitude magnitude = Magnitude::Negligible;
    std::pair<double, double> bootstrap_ci{0.0, 0.0};  // of mean(a) - mean(b)
    bool significant = false;
};

// Percentile bootstrap of the mean difference; a and b are resampled
// independently. Significant iff 0 lies outside the (1 - alpha) interval.
ComparisonResult bootstrap_test(std::span<const double> a, std::span<const double> b, int n_resamples = 1000,
                                double alpha = 0.05, std::uint64_t seed = 0);

}  // namespace evtfair
