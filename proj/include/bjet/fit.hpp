#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace bjet {

struct FitError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/** Ordinary least squares y = slope * x + intercept. */
struct LineFit {
    double slope = 0;
    double intercept = 0;
    double r2 = 0;
    double slope_stderr = 0;
    std::size_t count = 0;
};

/// Points are sorted before summation so the result does not depend on input order.
inline LineFit least_squares(std::vector<std::pair<double, double>> pts)
{
    if (pts.size() < 2) throw FitError("need at least two points");
    std::sort(pts.begin(), pts.end());
    const double n = double(pts.size());
    double mx = 0, my = 0;
    for (auto& [x, y] : pts) { mx += x; my += y; }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (auto& [x, y] : pts) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if (sxx <= 0) throw FitError("degenerate abscissae");
    LineFit f;
    f.count = pts.size();
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double sse = 0;
    for (auto& [x, y] : pts) {
        double r = y - (f.slope * x + f.intercept);
        sse += r * r;
    }
    f.r2 = syy > 0 ? 1.0 - sse / syy : 1.0;
    f.slope_stderr = pts.size() > 2 ? std::sqrt(sse / (n - 2) / sxx) : 0.0;
    return f;
}

inline std::size_t distinct_count(std::vector<double> xs, double tol = 1e-12)
{
    std::sort(xs.begin(), xs.end());
    std::size_t c = 0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (i == 0 || xs[i] - xs[i - 1] > tol * std::max(1.0, std::abs(xs[i]))) ++c;
    return c;
}

} // namespace bjet
