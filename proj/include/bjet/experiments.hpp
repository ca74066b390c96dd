#pragma once

#include "bjet/analysis.hpp"
#include "bjet/parallel.hpp"
#include "bjet/projective_lab.hpp"
#include "bjet/report.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace bjet::experiments {

using report::Criterion;
using report::json;
using report::make_row;
using report::Report;
using lab::SubmanifoldSpec;

struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/** Desk-scale caps on p, per projective dimension. */
inline int p_cap(int n) { return n == 1 ? 40 : 24; }

struct RunConfig {
    std::string experiment;
    int n = 1;
    int m = 0;
    int k = 0;
    int p_lo = 8;
    int p_hi = 40;
    int p_step = 1;
    std::string y_kind = "point";
    double eps = 0.85;
    double radius = 3.0;
    int per_axis = 9;
    double distance = 0.4;
    unsigned seed = 1;
    unsigned threads = 0;
    double jet_tol = 1e-10;
    double slope_target = -1.0;
    double slope_tol = 0.3;
    double r2_min = 0.95;
    double norm_final_tol = 0.2;
    double contrast_gap = 0.3;
};

inline json to_json(const RunConfig& c)
{
    return {{"experiment", c.experiment},
            {"n", c.n},
            {"m", c.m},
            {"k", c.k},
            {"p", std::to_string(c.p_lo) + ".." + std::to_string(c.p_hi) + (c.p_step != 1 ? ":" + std::to_string(c.p_step) : "")},
            {"y_kind", c.y_kind},
            {"eps", c.eps},
            {"radius", c.radius},
            {"per_axis", c.per_axis},
            {"distance", c.distance},
            {"seed", c.seed},
            {"jet_tol", c.jet_tol},
            {"slope_target", c.slope_target},
            {"slope_tol", c.slope_tol},
            {"r2_min", c.r2_min},
            {"norm_final_tol", c.norm_final_tol},
            {"contrast_gap", c.contrast_gap}};
}

/** "a..b" or "a..b:step". */
inline void parse_p_range(const std::string& s, RunConfig& c)
{
    auto dots = s.find("..");
    if (dots == std::string::npos) throw UsageError("p-range must look like a..b or a..b:step");
    auto colon = s.find(':', dots);
    try {
        std::size_t u1 = 0, u2 = 0, u3 = 0;
        std::string a = s.substr(0, dots);
        std::string b = s.substr(dots + 2, colon == std::string::npos ? std::string::npos : colon - dots - 2);
        c.p_lo = std::stoi(a, &u1);
        c.p_hi = std::stoi(b, &u2);
        if (u1 != a.size() || u2 != b.size()) throw std::invalid_argument(s);
        if (colon != std::string::npos) {
            std::string st = s.substr(colon + 1);
            c.p_step = std::stoi(st, &u3);
            if (u3 != st.size()) throw std::invalid_argument(s);
        }
    } catch (const UsageError&) {
        throw;
    } catch (const std::exception&) {
        throw UsageError("p-range must look like a..b or a..b:step");
    }
}

inline std::vector<int> p_values(const RunConfig& c)
{
    if (c.p_step < 1) throw UsageError("p step must be positive");
    std::vector<int> ps;
    for (int p = c.p_lo; p <= c.p_hi; p += c.p_step) ps.push_back(p);
    if (ps.empty()) throw UsageError("empty p-range");
    if (c.p_lo < 1) throw UsageError("p must be positive");
    return ps;
}

inline void check_cap(int n, const std::vector<int>& ps)
{
    if (ps.back() > p_cap(n))
        throw UsageError("p up to " + std::to_string(ps.back()) + " exceeds the cap of " + std::to_string(p_cap(n)) + " on CP" +
                         std::to_string(n) + "; narrow --p (for example --p " + std::to_string(std::min(ps.front(), p_cap(n))) +
                         ".." + std::to_string(p_cap(n)) + ")");
}

inline json fit_json(const analysis::TrendFit& f)
{
    return {{"model", "power law"}, {"exponent", f.exponent}, {"stderr", f.stderr_}, {"r2", f.r2}, {"count", f.count}};
}

inline std::string fmt(double v) { return report::format_number(v); }

namespace detail {

inline analysis::TrendFit fit_rows(const Report& r, const std::string& q)
{
    std::vector<std::pair<double, double>> s;
    for (auto& row : r.rows)
        if (row.quantity == q) s.push_back({double(row.p), row.value});
    return analysis::trend_fit(s);
}

inline bool slope_ok(const analysis::TrendFit& f, const RunConfig& c)
{
    return std::abs(f.exponent - c.slope_target) <= c.slope_tol;
}

} // namespace detail

// ---------------------------------------------------------------------------
// peak-cp1

inline Report peak_cp1(const RunConfig& c)
{
    auto ps = p_values(c);
    check_cap(1, ps);
    if (c.k < 0 || c.k > 3) throw UsageError("peak-cp1 takes 0 <= k <= 3");
    auto res = parallel_map<lab::PeakResult>(ps.size(), [&](std::size_t i) {
        return lab::peak_section(1, c.k, ps[i], lab::Vec::Ones(1));
    }, c.threads);
    Report r;
    r.command = "experiment peak-cp1";
    r.config = to_json(c);
    double worst = 0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        r.rows.push_back(make_row(ps[i], "jet_error", res[i].jet_error, 0, "peak section k-jet matches the datum"));
        r.rows.push_back(make_row(ps[i], "lower_jet", res[i].lower_jet, 0, "peak section vanishes to order k"));
        r.rows.push_back(make_row(ps[i], "profile_deviation", res[i].profile_deviation, 0,
                                  "peak section against the rescaled Gaussian profile"));
        worst = std::max({worst, res[i].jet_error, res[i].lower_jet});
    }
    auto f = detail::fit_rows(r, "profile_deviation");
    r.fits["profile_deviation"] = fit_json(f);
    bool ok = worst <= c.jet_tol && detail::slope_ok(f, c);
    r.criteria.push_back({4, "CP1 peak sections k=" + std::to_string(c.k), ok, false,
                          "max jet error " + fmt(worst) + " (<= " + fmt(c.jet_tol) + "), profile exponent " + fmt(f.exponent) +
                              " (target " + fmt(c.slope_target) + " +- " + fmt(c.slope_tol) + ", R2 " + fmt(f.r2) + ")"});
    return r;
}

// ---------------------------------------------------------------------------
// line-cp2, conic-cp2, isometry

struct SubmanifoldPoint {
    double norm_ratio = 0;
    double defect_deviation = 0;
    double iso_lo = 0, iso_hi = 0;
    double profile = std::nan("");
    double linear_profile = std::nan("");
};

inline SubmanifoldPoint submanifold_point(const SubmanifoldSpec& Y, int k, int p, const analysis::ProfileGrid& g,
                                          bool profiles, bool contrast)
{
    SubmanifoldPoint out;
    lab::HomogSpace X = lab::homog_space(Y.n, p);
    std::vector<lab::JetLevel> levels;
    for (int r = 0; r <= k; ++r) levels.push_back(lab::jet_level(X, Y, r));
    const lab::JetLevel& L = levels.back();
    out.norm_ratio = lab::extension_norm(L) * std::pow(double(p), 0.5 * (Y.codim() + k)) *
                     std::sqrt(factorial_d(k) * std::pow(2 * lab::kPi, k));
    out.defect_deviation = lab::multiplicative_defect(L).normalized_deviation;
    auto [lo, hi] = lab::jet_isometry_extremes(levels, lab::vanishing_subspace(X, Y, k + 1));
    out.iso_lo = lo;
    out.iso_hi = hi;
    const double reach = g.radius / std::sqrt(double(p));
    if (profiles && reach <= g.eps) {
        out.profile = analysis::profile_compare(analysis::ProfileOp::Extension, Y, k, p, g).sup;
        if (contrast)
            out.linear_profile =
                analysis::profile_compare(analysis::ProfileOp::Extension, SubmanifoldSpec::linear(2, 1), k, p, g).sup;
    }
    return out;
}

inline analysis::ProfileGrid grid_of(const RunConfig& c)
{
    analysis::ProfileGrid g;
    g.eps = c.eps;
    g.radius = c.radius;
    g.per_axis = c.per_axis;
    return g;
}

/** Top-half monotone approach of the ratio to 1 and the final deviation. */
inline std::pair<bool, double> monotone_top_half(const std::vector<double>& ratios)
{
    std::size_t start = ratios.size() / 2;
    bool mono = true;
    for (std::size_t i = start + 1; i < ratios.size(); ++i)
        if (std::abs(ratios[i] - 1) > std::abs(ratios[i - 1] - 1) + 1e-15) mono = false;
    return {mono, std::abs(ratios.back() - 1)};
}

inline Report submanifold_experiment(const RunConfig& c, const SubmanifoldSpec& Y, const std::string& name)
{
    auto ps = p_values(c);
    check_cap(Y.n, ps);
    if (c.k < 0 || c.k > 2) throw UsageError(name + " takes 0 <= k <= 2");
    if (ps.size() < 5) throw UsageError("power-law fits need at least five p values");
    const bool conic = Y.kind == lab::YKind::Conic;
    analysis::ProfileGrid g = grid_of(c);
    auto res = parallel_map<SubmanifoldPoint>(ps.size(), [&](std::size_t i) {
        return submanifold_point(Y, c.k, ps[i], g, name != "isometry", conic && c.k == 0);
    }, c.threads);

    Report r;
    r.command = "experiment " + name;
    r.config = to_json(c);
    std::vector<double> ratios;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        const int p = ps[i];
        const auto& s = res[i];
        double iso_dev = std::max(std::abs(s.iso_lo - 1), std::abs(s.iso_hi - 1));
        if (name != "isometry") {
            r.rows.push_back(make_row(p, "norm_ratio", s.norm_ratio, conic ? std::nan("") : 1.0,
                                      conic ? "extension norm, normalized; kappa_N is not constant on the conic"
                                            : "extension norm asymptotics with kappa_N = 1"));
            r.rows.push_back(make_row(p, "defect_deviation", s.defect_deviation, 0, "multiplicative defect leading term"));
        }
        r.rows.push_back(make_row(p, "isometry_ratio_min", s.iso_lo, 1, "jet map isometry"));
        r.rows.push_back(make_row(p, "isometry_ratio_max", s.iso_hi, 1, "jet map isometry"));
        r.rows.push_back(make_row(p, "isometry_deviation", iso_dev, 0, "jet map isometry"));
        if (std::isfinite(s.profile))
            r.rows.push_back(make_row(p, "profile_deviation", s.profile, 0, "extension kernel against the model profile"));
        if (std::isfinite(s.linear_profile))
            r.rows.push_back(make_row(p, "linear_profile_deviation", s.linear_profile, 0,
                                      "linear reference for the geodesic contrast (qualitative)"));
        ratios.push_back(s.norm_ratio);
    }

    auto iso = detail::fit_rows(r, "isometry_deviation");
    r.fits["isometry_deviation"] = fit_json(iso);
    if (name != "isometry") r.fits["defect_deviation"] = fit_json(detail::fit_rows(r, "defect_deviation"));

    std::size_t nprof = 0;
    for (auto& s : res) nprof += std::isfinite(s.profile);
    analysis::TrendFit prof{};
    bool have_prof = nprof >= 5;
    if (have_prof) {
        prof = detail::fit_rows(r, "profile_deviation");
        r.fits["profile_deviation"] = fit_json(prof);
    }

    if (name == "line-cp2") {
        auto [mono, final_dev] = monotone_top_half(ratios);
        auto def = detail::fit_rows(r, "defect_deviation");
        bool ok = mono && final_dev < c.norm_final_tol && detail::slope_ok(def, c) && detail::slope_ok(iso, c);
        r.criteria.push_back({5, "CP2 linear Y k=" + std::to_string(c.k), ok, false,
                              std::string("norm ratio ") + (mono ? "monotone" : "not monotone") + " on the top half, final deviation " +
                                  fmt(final_dev) + " (< " + fmt(c.norm_final_tol) + "); defect exponent " + fmt(def.exponent) +
                                  ", isometry exponent " + fmt(iso.exponent) + " (target " + fmt(c.slope_target) + " +- " +
                                  fmt(c.slope_tol) + ")"});
    }
    if (name == "isometry") {
        bool ok = detail::slope_ok(iso, c);
        r.criteria.push_back({5, "jet isometry on " + Y.name() + " k=" + std::to_string(c.k), ok, false,
                              "isometry deviation exponent " + fmt(iso.exponent) + " (target " + fmt(c.slope_target) + " +- " +
                                  fmt(c.slope_tol) + "), final ratios [" + fmt(res.back().iso_lo) + ", " +
                                  fmt(res.back().iso_hi) + "]"});
    }
    if (conic && c.k == 0) {
        Criterion cr{7, "geodesic contrast", false, true, ""};
        if (!have_prof) {
            cr.summary = "fewer than five p values admit the profile grid (need radius/sqrt(p) <= eps)";
        } else {
            auto lin = detail::fit_rows(r, "linear_profile_deviation");
            r.fits["linear_profile_deviation"] = fit_json(lin);
            double gap = prof.exponent - lin.exponent;
            cr.passed = gap >= c.contrast_gap;
            cr.summary = "linear exponent " + fmt(lin.exponent) + ", conic exponent " + fmt(prof.exponent) + ", gap " + fmt(gap) +
                         " (>= " + fmt(c.contrast_gap) + ")";
        }
        r.criteria.push_back(cr);
    }
    return r;
}

// ---------------------------------------------------------------------------
// logbk-decay

/**
 * On CP1 with Y the origin, x_d the point at distance d. For k >= 1 the sample is
 * |(B^{X,kY} - B^X)(x_d, x_d)|; for k = 0 that difference vanishes and the sample is the
 * off-diagonal |B^X(y, x_d)|.
 */
inline Report logbk_decay(const RunConfig& c)
{
    auto ps = p_values(c);
    check_cap(1, ps);
    if (c.k < 0 || c.k > 3) throw UsageError("logbk-decay takes 0 <= k <= 3");
    if (!(c.distance > 0) || c.distance >= lab::kSqrtPi / 2) throw UsageError("distance must lie in (0, sqrt(pi)/2)");
    const SubmanifoldSpec Y = SubmanifoldSpec::point(1);
    lab::Point y{0.0}, x{std::tan(lab::kSqrtPi * c.distance)};
    auto vals = parallel_map<double>(ps.size(), [&](std::size_t i) {
        lab::KernelValues kv = c.k == 0 ? lab::bergman_and_logbk_eval(Y, 0, ps[i], y, x) : lab::bergman_and_logbk_eval(Y, c.k, ps[i], x, x);
        return std::abs(c.k == 0 ? kv.logbk : kv.difference);
    }, c.threads);
    Report r;
    r.command = "experiment logbk-decay";
    r.config = to_json(c);
    std::vector<lab::DecaySample> s;
    const double d = lab::fs_distance(x, y);
    for (std::size_t i = 0; i < ps.size(); ++i) {
        r.rows.push_back(make_row(ps[i], c.k == 0 ? "log_bk_offdiag" : "log_bk_difference", vals[i], std::nan(""),
                                  "logarithmic Bergman kernel decay away from Y"));
        r.rows.push_back(make_row(ps[i], "log_magnitude", std::log(vals[i]), std::nan(""), "logarithmic Bergman kernel decay away from Y"));
        s.push_back({double(ps[i]), d, vals[i]});
    }
    lab::DecayFit f = lab::decay_fit(s);
    r.fits["decay"] = {{"model", "log|K| linear in sqrt(p) dist"}, {"slope", f.slope}, {"c", f.c}, {"r2", f.r2}, {"count", f.count}, {"distance", d}};
    bool ok = f.slope < 0 && f.r2 > c.r2_min;
    r.criteria.push_back({6, "log Bergman decay k=" + std::to_string(c.k), ok, false,
                          "slope " + fmt(f.slope) + " (< 0), R2 " + fmt(f.r2) + " (> " + fmt(c.r2_min) + ") at distance " + fmt(d)});
    return r;
}

// ---------------------------------------------------------------------------

inline const std::vector<std::string>& experiment_names()
{
    static const std::vector<std::string> names{"peak-cp1", "line-cp2", "conic-cp2", "logbk-decay", "isometry"};
    return names;
}

inline Report run_experiment(const RunConfig& c)
{
    if (c.experiment == "peak-cp1") return peak_cp1(c);
    if (c.experiment == "line-cp2") return submanifold_experiment(c, SubmanifoldSpec::linear(2, 1), "line-cp2");
    if (c.experiment == "conic-cp2") return submanifold_experiment(c, SubmanifoldSpec::conic(), "conic-cp2");
    if (c.experiment == "logbk-decay") return logbk_decay(c);
    if (c.experiment == "isometry") {
        SubmanifoldSpec Y;
        try {
            Y = SubmanifoldSpec::make(lab::parse_y_kind(c.y_kind), c.n, c.m);
            Y.validate();
        } catch (const std::exception& e) {
            throw UsageError(std::string("bad submanifold: ") + e.what());
        }
        return submanifold_experiment(c, Y, "isometry");
    }
    throw UsageError("unknown experiment '" + c.experiment + "'");
}

/** Defaults per experiment before command-line overrides. */
inline RunConfig defaults_for(const std::string& name)
{
    RunConfig c;
    c.experiment = name;
    if (name == "peak-cp1" || name == "logbk-decay") {
        c.n = 1; c.m = 0; c.y_kind = "point"; c.p_lo = 8; c.p_hi = 40;
    } else if (name == "line-cp2") {
        c.n = 2; c.m = 1; c.y_kind = "linear"; c.p_lo = 6; c.p_hi = 24;
    } else if (name == "conic-cp2") {
        c.n = 2; c.m = 1; c.y_kind = "conic"; c.p_lo = 6; c.p_hi = 24;
    } else if (name == "isometry") {
        c.n = 2; c.m = 1; c.y_kind = "linear"; c.p_lo = 6; c.p_hi = 24;
    }
    return c;
}

} // namespace bjet::experiments
