#include "evtfair/optimize.hpp"

#include "evtfair/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace evtfair {

namespace {

using Point = std::vector<double>;

Point affine(const Point& a, const Point& b, double t) {
    // a + t * (b - a)
    Point out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + t * (b[i] - a[i]);
    return out;
}

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& objective, Point x0,
                             Point step, const NelderMeadOptions& options) {
    const std::size_t n = x0.size();
    const double f0 = objective(x0);
    if (!std::isfinite(f0)) fail(ErrorCode::FitDiverged, "optimizer start point is infeasible");

    std::vector<Point> simplex{x0};
    std::vector<double> values{f0};
    for (std::size_t i = 0; i < n; ++i) {
        Point v = x0;
        double h = step[i];
        double fv = std::numeric_limits<double>::infinity();
        // Shrink the initial edge until the vertex is feasible.
        for (int tries = 0; tries < 60; ++tries) {
            v[i] = x0[i] + h;
            fv = objective(v);
            if (std::isfinite(fv)) break;
            h = tries % 2 == 0 ? -h : -0.5 * h;
        }
        simplex.push_back(v);
        values.push_back(fv);
    }

    std::vector<std::size_t> order(n + 1);
    NelderMeadResult result;
    int it = 0;
    for (; it < options.max_iterations; ++it) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second = order[n - 1];

        double diameter = 0.0;
        for (std::size_t v = 0; v <= n; ++v)
            for (std::size_t i = 0; i < n; ++i)
                diameter = std::max(diameter, std::abs(simplex[v][i] - simplex[best][i]));
        if (diameter < options.diameter_tol) {
            result.converged = true;
            break;
        }

        Point centroid(n, 0.0);
        for (std::size_t v = 0; v <= n; ++v) {
            if (v == worst) continue;
            for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[v][i] / static_cast<double>(n);
        }

        const Point reflected = affine(centroid, simplex[worst], -1.0);
        const double fr = objective(reflected);
        if (fr < values[best]) {
            const Point expanded = affine(centroid, simplex[worst], -2.0);
            const double fe = objective(expanded);
            if (fe < fr) {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
            continue;
        }
        if (fr < values[second]) {
            simplex[worst] = reflected;
            values[worst] = fr;
            continue;
        }
        const bool outside = fr < values[worst];
        const Point contracted = outside ? affine(centroid, simplex[worst], -0.5) : affine(centroid, simplex[worst], 0.5);
        const double fc = objective(contracted);
        if (fc < std::min(fr, values[worst])) {
            simplex[worst] = contracted;
            values[worst] = fc;
            continue;
        }
        for (std::size_t v = 0; v <= n; ++v) {
            if (v == best) continue;
            simplex[v] = affine(simplex[best], simplex[v], 0.5);
            values[v] = objective(simplex[v]);
        }
    }

    const auto best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
    result.x = simplex[best];
    result.value = values[best];
    result.iterations = it;
    return result;
}

}  // namespace evtfair
