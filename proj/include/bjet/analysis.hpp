#pragma once

#include "bjet/fit.hpp"
#include "bjet/model_kernels.hpp"
#include "bjet/projective_lab.hpp"

#include <functional>
#include <string>
#include <vector>

namespace bjet::analysis {

using lab::Mat;
using lab::Point;
using lab::SubmanifoldSpec;
using lab::Vec;
using lab::kPi;
using lab::kSqrtPi;

enum class ProfileOp { Bergman, Perp, Extension };

inline std::string to_string(ProfileOp op)
{
    switch (op) {
    case ProfileOp::Bergman: return "bergman";
    case ProfileOp::Perp: return "perp";
    case ProfileOp::Extension: return "extension";
    }
    return "?";
}

/**
 * Rescaled sample grid. Every real coordinate plane of R^{2n} gets per_axis x per_axis points on
 * [-radius, radius]^2, clipped to the disc. `partner` is the fixed second point, also rescaled.
 */
struct ProfileGrid {
    int per_axis = 9;
    double radius = 3.0;
    double eps = 0.85;
    Point partner;
    bool swap = false;
};

struct ProfileSample {
    Point Z;  ///< sqrt(p) Z
    Point Zp; ///< sqrt(p) Z'
    cplx computed = 0; ///< kernel / p^power
    cplx model = 0;
    double weight = 0;
};

struct ProfileStats {
    ProfileOp op = ProfileOp::Bergman;
    int p = 0;
    double power = 0;
    double sup = 0;        ///< max |computed - model| / max |model|
    double l2 = 0;         ///< Gaussian-weighted RMS of the same ratio
    double model_sup = 0;
    std::vector<ProfileSample> samples;
};

inline std::vector<Point> grid_points(int n, const ProfileGrid& g)
{
    if (g.per_axis < 2) throw std::invalid_argument("grid needs at least two points per axis");
    if (!(g.radius > 0)) throw std::invalid_argument("grid radius must be positive");
    std::vector<Point> out;
    const int d = 2 * n;
    for (int a = 0; a < d; ++a)
        for (int b = a + 1; b < d; ++b)
            for (int i = 0; i < g.per_axis; ++i)
                for (int j = 0; j < g.per_axis; ++j) {
                    double x = -g.radius + 2 * g.radius * i / (g.per_axis - 1);
                    double y = -g.radius + 2 * g.radius * j / (g.per_axis - 1);
                    if (x * x + y * y > g.radius * g.radius * (1 + 1e-12)) continue;
                    std::vector<double> r(std::size_t(d), 0.0);
                    r[std::size_t(a)] = x;
                    r[std::size_t(b)] = y;
                    out.push_back(from_real(r));
                }
    if (n == 1) return out;
    // the origin and axis points repeat across planes
    std::vector<Point> uniq;
    for (auto& z : out) {
        bool seen = false;
        for (auto& u : uniq)
            if (u == z) { seen = true; break; }
        if (!seen) uniq.push_back(z);
    }
    return uniq;
}

namespace detail {

inline double norm2(const Point& z)
{
    double s = 0;
    for (auto& x : z) s += std::norm(x);
    return s;
}

inline Point scaled(const Point& z, double f)
{
    Point r = z;
    for (auto& x : r) x *= f;
    return r;
}

} // namespace detail

/**
 * Deviation statistics of computed against model values on a list of sample pairs. The weight is
 * the Gaussian envelope exp(-pi (|Z|^2 + |Z'|^2) / 2).
 */
inline ProfileStats summarize(std::vector<ProfileSample> samples)
{
    ProfileStats st;
    if (samples.empty()) throw std::invalid_argument("empty profile grid");
    double wsum = 0, acc = 0, sup = 0;
    for (auto& s : samples) {
        s.weight = std::exp(-kPi * (detail::norm2(s.Z) + detail::norm2(s.Zp)) / 2);
        st.model_sup = std::max(st.model_sup, std::abs(s.model));
    }
    double ref = st.model_sup > 0 ? st.model_sup : 1.0;
    for (auto& s : samples) {
        double d = std::abs(s.computed - s.model) / ref;
        sup = std::max(sup, d);
        acc += s.weight * d * d;
        wsum += s.weight;
    }
    st.sup = sup;
    st.l2 = std::sqrt(acc / wsum);
    st.samples = std::move(samples);
    return st;
}

/** Model profile F_{k,0} at a rescaled pair. For E the datum is dZ_N^{(.)beta}, giving beta! times the column. */
inline cplx model_profile(ProfileOp op, const SubmanifoldSpec& Y, int k, const Point& Z, const Point& Zp,
                          std::size_t beta_index = 0)
{
    switch (op) {
    case ProfileOp::Bergman: return kernel_eval(model_P(Y.n), Z, Zp)(0, 0);
    case ProfileOp::Perp: return kernel_eval(model_Pperp(Y.n, Y.m, k), Z, Zp)(0, 0);
    case ProfileOp::Extension: {
        auto betas = IndexSet::sym(Y.codim(), k).betas;
        return kernel_eval(model_E(Y.n, Y.m, k), Z, Zp)(0, Eigen::Index(beta_index)) *
               beta_factorial(betas[beta_index]).get_d();
    }
    }
    throw std::invalid_argument("unknown profile operator");
}

/** p^n for projectors, p^{m - k/2} for the extension operator. */
inline double profile_power(ProfileOp op, const SubmanifoldSpec& Y, int k)
{
    return op == ProfileOp::Extension ? Y.m - 0.5 * k : double(Y.n);
}

/**
 * Rescaled comparison of B_p, B_p^{perp,k} or E_{k,p}(., y0) with the model profiles, in Fermi
 * coordinates along Y at the chart origin. Kernels are taken in the unit frames at both points.
 * The extension kernel is sampled with y0 at the base point, one column per normal multi-index.
 */
inline ProfileStats profile_compare(ProfileOp op, const SubmanifoldSpec& Y, int k, int p, const ProfileGrid& g = {})
{
    Y.validate();
    if (k < 0) throw std::invalid_argument("negative jet order");
    if (op == ProfileOp::Bergman && k != 0) throw std::invalid_argument("the Bergman profile has no jet order");
    const int n = Y.n;
    Point partner = g.partner.empty() ? Point(n, 0.0) : g.partner;
    if (int(partner.size()) != n) throw DimensionError("partner point has the wrong length");
    const double rs = 1 / std::sqrt(double(p));
    const double reach = (g.radius + std::sqrt(detail::norm2(partner))) * rs;
    if (!(g.eps > 0) || g.eps >= kSqrtPi / 2) throw lab::ChartError("eps must lie inside the injectivity radius");
    if (reach > g.eps) throw lab::ChartError("profile grid leaves the chart region |Z| <= eps");
    if (op == ProfileOp::Extension && (detail::norm2(partner) > 0 || g.swap))
        throw lab::PreconditionError("extension profiles are sampled at the base point of Y");

    lab::HomogSpace X = lab::homog_space(n, p);
    const double scale = std::pow(double(p), profile_power(op, Y, k));
    std::vector<Point> pts = grid_points(n, g);
    std::vector<ProfileSample> out;

    if (op == ProfileOp::Extension) {
        lab::JetLevel L = lab::jet_level(X, Y, k);
        auto betas = IndexSet::sym(Y.codim(), k).betas;
        for (std::size_t b = 0; b < betas.size(); ++b) {
            Vec s = lab::extension_kernel_section(L, lab::unit_normal_datum(Y, k, betas[b]), 0.0);
            for (auto& Z : pts) {
                ProfileSample smp{Z, partner, X.eval(s, lab::fermi_chart(Y, detail::scaled(Z, rs))) / scale,
                                  model_profile(op, Y, k, Z, partner, b), 0};
                out.push_back(std::move(smp));
            }
        }
        ProfileStats st = summarize(std::move(out));
        st.op = op;
        st.p = p;
        st.power = profile_power(op, Y, k);
        return st;
    }

    Mat P;
    if (op == ProfileOp::Bergman) {
        P = Mat::Identity(Eigen::Index(X.size()), Eigen::Index(X.size()));
    } else {
        lab::VanishingSubspace a = lab::vanishing_subspace(X, Y, k), b = lab::vanishing_subspace(X, Y, k + 1);
        P = a.projector() - b.projector();
    }
    Vec s2 = X.frame_values(lab::fermi_chart(Y, detail::scaled(partner, rs)));
    for (auto& Z : pts) {
        Vec s1 = X.frame_values(lab::fermi_chart(Y, detail::scaled(Z, rs)));
        cplx v = (s1.transpose() * P * s2.conjugate())(0, 0);
        cplx vs = (s2.transpose() * P * s1.conjugate())(0, 0);
        ProfileSample smp = g.swap ? ProfileSample{partner, Z, vs / scale, model_profile(op, Y, k, partner, Z), 0}
                                   : ProfileSample{Z, partner, v / scale, model_profile(op, Y, k, Z, partner), 0};
        out.push_back(std::move(smp));
    }
    ProfileStats st = summarize(std::move(out));
    st.op = op;
    st.p = p;
    st.power = profile_power(op, Y, k);
    return st;
}

/** Profile deviation of a model kernel against itself through the same evaluation path. */
inline ProfileStats model_self_test(ProfileOp op, const SubmanifoldSpec& Y, int k, const ProfileGrid& g = {})
{
    Point partner = g.partner.empty() ? Point(Y.n, 0.0) : g.partner;
    std::vector<ProfileSample> out;
    for (auto& Z : grid_points(Y.n, g)) {
        cplx m = model_profile(op, Y, k, Z, partner);
        out.push_back({Z, partner, m, m, 0});
    }
    ProfileStats st = summarize(std::move(out));
    st.op = op;
    st.power = profile_power(op, Y, k);
    return st;
}

// ---------------------------------------------------------------------------------------------
// Trend fits

struct TrendFit {
    double exponent = 0;
    double stderr_ = 0;
    double r2 = 0;
    double prefactor = 0;
    std::size_t count = 0;
};

/** Power law value = C p^exponent by least squares in log-log. */
inline TrendFit trend_fit(const std::vector<std::pair<double, double>>& series)
{
    if (series.size() < 5) throw FitError("trend fit needs at least five points");
    std::vector<std::pair<double, double>> pts;
    std::vector<double> xs;
    for (auto& [p, v] : series) {
        if (!(p > 0)) throw FitError("p must be positive");
        if (!(v > 0)) throw FitError("trend fit needs positive values");
        pts.push_back({std::log(p), std::log(v)});
        xs.push_back(std::log(p));
    }
    if (distinct_count(xs) < 2) throw FitError("trend fit needs distinct p values");
    LineFit f = least_squares(pts);
    return {f.slope, f.slope_stderr, f.r2, std::exp(f.intercept), f.count};
}

} // namespace bjet::analysis
