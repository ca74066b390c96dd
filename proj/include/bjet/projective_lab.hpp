#pragma once

/**
 * @file projective_lab.hpp
 * @brief H^0(CP^n, O(p)) with the Fubini-Study metric normalized by omega = (i/2pi) R^L.
 *
 * Sections are handled in the chart Z_0 = 1, where the monomial z^a stands for Z_0^{p-|a|} Z^a and
 * |e_0^p|^2 = (1 + |z|^2)^{-p}. Coefficient vectors are "raw" in the monomial basis and "whitened"
 * after multiplication by the square root of the (diagonal) Gram, so whitened coordinates are
 * orthonormal. Jets along Y live in a finite basis with a Gram computed by quadrature on Y.
 */

#include "bjet/fit.hpp"
#include "bjet/fock_oracle.hpp"
#include "bjet/quadrature.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace bjet::lab {

using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;
using Point = std::vector<cplx>;

constexpr double kPi = std::numbers::pi;
inline const double kSqrtPi = std::sqrt(std::numbers::pi);
constexpr double kPinvTol = 1e-12;
constexpr double kJetTol = 1e-10;

struct LabError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct QuadratureError : LabError {
    using LabError::LabError;
};
struct PreconditionError : LabError {
    using LabError::LabError;
};
struct ExtensionNotGuaranteed : LabError {
    using LabError::LabError;
};
struct ChartError : LabError {
    using LabError::LabError;
};

// ---------------------------------------------------------------------------------------------
// Fubini-Study geometry in the chart Z_0 = 1

/** F_{ij} = d_i dbar_j log(1 + |z|^2); omega = (i/2pi) sum F_{ij} dz_i ^ dzbar_j. */
inline Mat fs_matrix(const Point& z)
{
    const int n = int(z.size());
    double r2 = 0;
    for (auto& x : z) r2 += std::norm(x);
    Mat F(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) F(i, j) = ((i == j ? 1.0 + r2 : 0.0) - std::conj(z[i]) * z[j]) / ((1 + r2) * (1 + r2));
    return F;
}

/** Hermitian metric on (1,0)-covectors induced by g^{TX}; |dz_i|^2 = 2pi at the origin. */
inline Mat cotangent_metric(const Point& z) { return 2 * kPi * fs_matrix(z).inverse(); }

/** <a, b> for covectors given by their dz coefficients, linear in a. */
inline cplx covector_product(const Vec& a, const Vec& b, const Mat& Hinv) { return (b.adjoint() * Hinv * a)(0, 0); }

inline void check_chart(const Point& z)
{
    for (auto& x : z)
        if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) throw ChartError("point at chart infinity");
}

/** FS geodesic distance; the diameter is sqrt(pi)/2. */
inline double fs_distance(const Point& a, const Point& b)
{
    check_chart(a);
    check_chart(b);
    cplx ip = 1;
    double na = 1, nb = 1;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ip += a[i] * std::conj(b[i]);
        na += std::norm(a[i]);
        nb += std::norm(b[i]);
    }
    return std::acos(std::min(1.0, std::abs(ip) / std::sqrt(na * nb))) / kSqrtPi;
}

/** Geodesic normal coordinates at the chart origin: z = tan(sqrt(pi)|Z|) Z/|Z|. */
inline Point exp_chart(const Point& Z)
{
    double r = 0;
    for (auto& x : Z) r += std::norm(x);
    r = std::sqrt(r);
    if (!(r < kSqrtPi / 2)) throw ChartError("normal coordinate beyond the injectivity radius");
    Point z(Z.size());
    double f = r > 0 ? std::tan(kSqrtPi * r) / r : kSqrtPi;
    for (std::size_t i = 0; i < Z.size(); ++i) z[i] = f * Z[i];
    return z;
}

// ---------------------------------------------------------------------------------------------
// HomogSpace

/**
 * int_{R_+^n} prod t_i^{a_i} (1 + sum t)^{-(p+n+1)} dt, reduced one variable at a time with
 * int_0^inf t^a (c + t)^{-s} dt = c^{a+1-s} B(a+1, s-a-1).
 */
inline Rational fs_monomial_integral(const std::vector<int>& a, int p)
{
    const int n = int(a.size());
    int deg = 0;
    for (int x : a) deg += x;
    if (deg > p) throw DimensionError("monomial degree exceeds the tensor power");
    int s = p + n + 1;
    Rational acc = 1;
    for (int i = n - 1; i >= 0; --i) {
        int x = a[i] + 1, y = s - a[i] - 1;
        acc *= factorial(x - 1) * factorial(y - 1) / factorial(x + y - 1);
        s = y;
    }
    return acc;
}

struct HomogSpace {
    int n = 1;
    int p = 1;
    std::vector<std::vector<int>> exponents; ///< chart exponents a; the section is Z_0^{p-|a|} Z^a
    std::vector<Rational> gram_exact;        ///< diagonal of the Gram, distinct monomials are orthogonal
    Eigen::VectorXd gram;
    Eigen::VectorXd root;
    std::map<std::vector<int>, std::size_t> lookup;

    std::size_t size() const { return exponents.size(); }
    std::ptrdiff_t index_of(const std::vector<int>& a) const
    {
        auto it = lookup.find(a);
        return it == lookup.end() ? -1 : std::ptrdiff_t(it->second);
    }
    std::vector<int> homogeneous(std::size_t i) const
    {
        std::vector<int> h{p};
        for (int x : exponents[i]) { h[0] -= x; h.push_back(x); }
        return h;
    }
    Eigen::MatrixXd gram_matrix() const { return gram.asDiagonal(); }

    /** Whitened section values: z^a / |z^a|_{L^2} times the unit-frame factor (1 + |z|^2)^{-p/2}. */
    Vec frame_values(const Point& z) const
    {
        check_chart(z);
        if (int(z.size()) != n) throw DimensionError("point dimension does not match the space");
        double r2 = 0;
        for (auto& x : z) r2 += std::norm(x);
        double h = std::pow(1 + r2, -0.5 * p);
        Vec v(size());
        for (std::size_t i = 0; i < size(); ++i) {
            cplx m = 1;
            for (int q = 0; q < n; ++q) m *= std::pow(z[q], exponents[i][q]);
            v(i) = m * h / root(i);
        }
        return v;
    }

    /** Raw section value in the unit frame. */
    cplx eval(const Vec& raw, const Point& z) const
    {
        Vec v = frame_values(z);
        cplx acc = 0;
        for (std::size_t i = 0; i < size(); ++i) acc += raw(i) * root(i) * v(i);
        return acc;
    }

    Vec whiten(const Vec& raw) const { return root.cast<cplx>().cwiseProduct(raw); }
    Vec unwhiten(const Vec& w) const { return w.cwiseQuotient(root.cast<cplx>()); }
};

inline HomogSpace homog_space(int n, int p)
{
    if (n < 1 || n > 2) throw DimensionError("projective dimension must be 1 or 2");
    if (p < 1) throw DimensionError("tensor power must be positive");
    HomogSpace X;
    X.n = n;
    X.p = p;
    X.exponents = fock_basis(n, p).elements;
    X.gram.resize(X.size());
    X.root.resize(X.size());
    for (std::size_t i = 0; i < X.size(); ++i) {
        X.gram_exact.push_back(fs_monomial_integral(X.exponents[i], p));
        X.gram(i) = X.gram_exact.back().get_d();
        X.root(i) = std::sqrt(X.gram(i));
        X.lookup[X.exponents[i]] = i;
    }
    return X;
}

inline Eigen::MatrixXd gram_matrix(int n, int p) { return homog_space(n, p).gram_matrix(); }

struct GramValidation {
    double max_rel_error = 0;
    int radial_order = 0;
    std::size_t entries_checked = 0;
};

namespace detail {

/// Gauss-Legendre on s in (0,1) for t = s/(1-s) in (0, inf); weights include dt/ds.
inline quad::Rule half_line_rule(int order)
{
    quad::Rule r = quad::legendre_on(order, 0.0, 1.0);
    for (std::size_t i = 0; i < r.nodes.size(); ++i) {
        double s = r.nodes[i];
        r.nodes[i] = s / (1 - s);
        r.weights[i] /= (1 - s) * (1 - s);
    }
    return r;
}

/**
 * Chart quadrature of <z^a, z^b> with the numerically evaluated volume form det(F)/pi^n d(lambda).
 * For n = 2 the squared moduli are written as t_1 = T u, t_2 = T (1 - u), which keeps the
 * integrand smooth in the quadrature variables.
 */
inline cplx chart_product(const HomogSpace& X, const std::vector<int>& a, const std::vector<int>& b, int order, int angular)
{
    const int n = X.n;
    quad::Rule rad = half_line_rule(order);
    quad::Rule frac = quad::legendre_on(order, 0.0, 1.0);
    const std::size_t R = rad.nodes.size();
    const std::size_t U = n == 2 ? frac.nodes.size() : 1;
    const std::size_t A = std::size_t(angular);
    const double dth = 2 * kPi / angular;
    cplx acc = 0;
    for (std::size_t i = 0; i < R; ++i)
        for (std::size_t j = 0; j < U; ++j) {
            double T = rad.nodes[i];
            std::vector<double> t{T};
            // d(lambda) = (1/2)^n dt d(theta), and dt_1 dt_2 = T dT du
            double w = rad.weights[i] * std::pow(0.5 * dth, n);
            if (n == 2) {
                double u = frac.nodes[j];
                t = {T * u, T * (1 - u)};
                w *= T * frac.weights[j];
            }
            Point z0(n);
            for (int q = 0; q < n; ++q) z0[q] = std::sqrt(t[q]);
            double vol = fs_matrix(z0).determinant().real() / std::pow(kPi, n);
            double mod = w * std::pow(1 + T, -X.p) * vol;
            for (std::size_t th0 = 0; th0 < A; ++th0)
                for (std::size_t th1 = 0; th1 < (n == 2 ? A : 1); ++th1) {
                    std::size_t th[2] = {th0, th1};
                    cplx f = 1;
                    for (int q = 0; q < n; ++q) {
                        cplx zq = std::polar(std::sqrt(t[q]), dth * double(th[q]));
                        f *= std::pow(zq, a[q]) * std::pow(std::conj(zq), b[q]);
                    }
                    acc += mod * f;
                }
        }
    return acc;
}

} // namespace detail

/**
 * Cross-check the exact Gram against chart quadrature. All diagonal entries and a few off-diagonal
 * pairs are integrated; the radial order doubles until the diagonal stabilizes to 1e-9.
 */
inline GramValidation validate_gram(const HomogSpace& X, double tol = 1e-6, std::size_t offdiag_pairs = 4)
{
    GramValidation v;
    int order = X.p + 8;
    auto diag = [&](int o) {
        std::vector<double> d(X.size());
        for (std::size_t i = 0; i < X.size(); ++i) d[i] = detail::chart_product(X, X.exponents[i], X.exponents[i], o, 1).real();
        return d;
    };
    std::vector<double> cur = diag(order);
    for (int it = 0;; ++it) {
        std::vector<double> nxt = diag(2 * order);
        double ch = 0;
        for (std::size_t i = 0; i < cur.size(); ++i) ch = std::max(ch, std::abs(nxt[i] - cur[i]) / X.gram(i));
        order *= 2;
        cur = nxt;
        if (ch < 1e-9) break;
        if (it == 3) throw QuadratureError("chart quadrature did not stabilize");
    }
    v.radial_order = order;
    for (std::size_t i = 0; i < X.size(); ++i) v.max_rel_error = std::max(v.max_rel_error, std::abs(cur[i] - X.gram(i)) / X.gram(i));
    v.entries_checked = X.size();
    const std::size_t N = X.size();
    for (std::size_t t = 0; t < offdiag_pairs && N > 1; ++t) {
        std::size_t i = (t * 7919) % N, j = (i + 1 + t * 104729) % N;
        if (i == j) j = (j + 1) % N;
        cplx val = detail::chart_product(X, X.exponents[i], X.exponents[j], X.p + 8, X.p + 3);
        v.max_rel_error = std::max(v.max_rel_error, std::abs(val) / std::sqrt(X.gram(i) * X.gram(j)));
        ++v.entries_checked;
    }
    if (v.max_rel_error > tol) throw QuadratureError("Gram matrix disagrees with chart quadrature");
    return v;
}

// ---------------------------------------------------------------------------------------------
// Submanifolds

enum class YKind { Point, Linear, Conic };

inline std::string to_string(YKind k)
{
    switch (k) {
    case YKind::Point: return "point";
    case YKind::Linear: return "linear";
    case YKind::Conic: return "conic";
    }
    return "?";
}

inline YKind parse_y_kind(const std::string& s)
{
    if (s == "point") return YKind::Point;
    if (s == "linear") return YKind::Linear;
    if (s == "conic") return YKind::Conic;
    throw std::invalid_argument("unknown submanifold kind '" + s + "'");
}

/**
 * Point: the chart origin. Linear: {Z_{m+1} = ... = Z_n = 0}. Conic: Z_1^2 = 2 Z_0 Z_2, the image of
 * u -> [1 : sqrt(2) u : u^2], which has nonzero second fundamental form.
 */
struct SubmanifoldSpec {
    YKind kind = YKind::Point;
    int n = 1;
    int m = 0;

    static SubmanifoldSpec point(int n) { return {YKind::Point, n, 0}; }
    static SubmanifoldSpec linear(int n, int m)
    {
        if (m == 0) return point(n);
        if (m < 0 || m >= n) throw DimensionError("linear submanifold needs 0 <= m < n");
        return {YKind::Linear, n, m};
    }
    static SubmanifoldSpec conic() { return {YKind::Conic, 2, 1}; }
    static SubmanifoldSpec make(YKind kind, int n, int m)
    {
        switch (kind) {
        case YKind::Point: return point(n);
        case YKind::Linear: return linear(n, m);
        case YKind::Conic: return conic();
        }
        throw std::invalid_argument("bad kind");
    }

    int codim() const { return n - m; }
    bool totally_geodesic() const { return kind != YKind::Conic; }
    std::string name() const
    {
        std::string s = to_string(kind) + " in CP" + std::to_string(n);
        if (kind == YKind::Linear) s += " (m=" + std::to_string(m) + ")";
        return s;
    }

    void validate() const
    {
        if (n < 1 || n > 2) throw DimensionError("projective dimension must be 1 or 2");
        if (kind == YKind::Linear && (m < 1 || m >= n)) throw DimensionError("linear submanifold needs 0 < m < n");
        if (kind == YKind::Conic && (n != 2 || m != 1)) throw DimensionError("the conic lives in CP2");
        if (kind == YKind::Point && m != 0) throw DimensionError("a point has m = 0");
    }

    /** Chart point of the parameter u (ignored for a point). */
    Point embed(cplx u) const
    {
        Point z(n, 0.0);
        if (kind == YKind::Linear) z[0] = u;
        if (kind == YKind::Conic) { z[0] = std::sqrt(2.0) * u; z[1] = u * u; }
        return z;
    }
    Point tangent(cplx u) const
    {
        Point t(n, 0.0);
        if (kind == YKind::Linear) t[0] = 1;
        if (kind == YKind::Conic) { t[0] = std::sqrt(2.0); t[1] = 2.0 * u; }
        return t;
    }
    /** Covectors spanning the conormal bundle at y(u): dz_N for linear Y, dq with q = z_1^2 - 2 z_2 for the conic. */
    std::vector<Vec> conormal(cplx u) const
    {
        std::vector<Vec> out;
        if (kind == YKind::Conic) {
            Point z = embed(u);
            Vec v(2);
            v << 2.0 * z[0], -2.0;
            out.push_back(v);
            return out;
        }
        for (int a = m; a < n; ++a) out.push_back(Vec::Unit(n, a));
        return out;
    }
    /** Scalar c_a with nu_a = c_a dz_{m+a} at the origin. */
    cplx conormal_scale_at_origin() const { return kind == YKind::Conic ? cplx(-2.0) : cplx(1.0); }

    /** FS distance from a chart point to Y (point and linear kinds). */
    double distance(const Point& z) const
    {
        check_chart(z);
        if (kind == YKind::Conic) throw std::logic_error("distance to the conic is not available in closed form");
        double r2 = 0, rn = 0;
        for (int i = 0; i < n; ++i) {
            r2 += std::norm(z[i]);
            if (i >= m) rn += std::norm(z[i]);
        }
        return std::asin(std::min(1.0, std::sqrt(rn / (1 + r2)))) / kSqrtPi;
    }
};

// ---------------------------------------------------------------------------------------------
// Fermi charts

namespace detail {

inline Point chart_of_lift(const Vec& v)
{
    if (std::abs(v(0)) < 1e-300) throw ChartError("point at chart infinity");
    Point z(v.size() - 1);
    for (Eigen::Index i = 1; i < v.size(); ++i) z[i - 1] = v(i) / v(0);
    return z;
}

} // namespace detail

/**
 * Fermi coordinates along Y based at the chart origin. Z = (Z_Y, Z_N): the foot point is the
 * intrinsic geodesic of Y with initial vector Z_Y, then the ambient normal geodesic with initial
 * vector Z_N in an orthonormal normal frame. Geodesics are great circles cos(sqrt(pi) t) v + sin(sqrt(pi) t) u
 * of unit lifts. The conic's frame is the SU(2)-equivariant one, conj(b^2, -sqrt(2) a b, a^2).
 */
inline Point fermi_chart(const SubmanifoldSpec& Y, const Point& Z)
{
    const int n = Y.n, m = Y.m;
    if (int(Z.size()) != n) throw DimensionError("Fermi coordinate has the wrong length");
    double ry = 0, rn = 0;
    for (int i = 0; i < m; ++i) ry += std::norm(Z[i]);
    for (int i = m; i < n; ++i) rn += std::norm(Z[i]);
    ry = std::sqrt(ry);
    rn = std::sqrt(rn);
    const double ry_max = Y.kind == YKind::Conic ? std::sqrt(2.0) * kSqrtPi / 2 : kSqrtPi / 2;
    if (!(ry < ry_max) || !(rn < kSqrtPi / 2)) throw ChartError("Fermi coordinate beyond the injectivity radius");
    Vec foot = Vec::Zero(n + 1);
    std::vector<Vec> normals;
    if (Y.kind == YKind::Conic) {
        double th = std::sqrt(kPi / 2) * ry;
        cplx a = std::cos(th), b = ry > 0 ? std::sin(th) * Z[0] / ry : cplx(0);
        foot << a * a, std::sqrt(2.0) * a * b, b * b;
        Vec nu(3);
        nu << std::conj(b * b), -std::sqrt(2.0) * std::conj(a * b), std::conj(a * a);
        normals.push_back(nu);
    } else {
        foot(0) = std::cos(kSqrtPi * ry);
        for (int i = 0; i < m; ++i) foot(i + 1) = ry > 0 ? std::sin(kSqrtPi * ry) * Z[i] / ry : cplx(0);
        for (int i = m; i < n; ++i) normals.push_back(Vec::Unit(n + 1, i + 1));
    }
    Vec v = foot;
    if (rn > 0) {
        Vec u = Vec::Zero(n + 1);
        for (int i = m; i < n; ++i) u += Z[i] * normals[std::size_t(i - m)];
        v = std::cos(kSqrtPi * rn) * foot + std::sin(kSqrtPi * rn) * u / rn;
    }
    return detail::chart_of_lift(v);
}

// ---------------------------------------------------------------------------------------------
// Jet spaces

/** Basis element u^gamma * nu^{(.)beta} of H^0(Y, Sym^k N* (x) L^p) in the chart. */
struct JetElement {
    int ypow = 0;
    std::vector<int> beta;
    friend bool operator==(const JetElement& a, const JetElement& b) { return a.ypow == b.ypow && a.beta == b.beta; }
};

/** <nu^{(.)a}, nu^{(.)b}> from the conormal products G(x, y) = <nu_x, nu_y>, as a normalized permanent. */
inline cplx sym_product(const std::vector<int>& a, const std::vector<int>& b, const Mat& G)
{
    std::vector<int> I, J;
    for (std::size_t i = 0; i < a.size(); ++i) I.insert(I.end(), a[i], int(i));
    for (std::size_t i = 0; i < b.size(); ++i) J.insert(J.end(), b[i], int(i));
    if (I.size() != J.size()) throw DimensionError("Sym orders differ");
    std::vector<int> perm(I.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = int(i);
    cplx acc = 0;
    do {
        cplx t = 1;
        for (std::size_t i = 0; i < I.size(); ++i) t *= G(I[i], J[perm[i]]);
        acc += t;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return acc / factorial_d(int(I.size()));
}

struct JetSpace {
    SubmanifoldSpec Y;
    int k = 0;
    int p = 1;
    std::vector<JetElement> elements;
    Mat gram; ///< gram(i, j) = <b_i, b_j>, antilinear in the first slot
    int quadrature_order = 0;

    std::size_t size() const { return elements.size(); }
    std::ptrdiff_t index_of(const JetElement& e) const
    {
        auto it = std::find(elements.begin(), elements.end(), e);
        return it == elements.end() ? -1 : it - elements.begin();
    }

    Mat conormal_products(cplx u) const
    {
        Point z = Y.embed(u);
        Mat Hinv = cotangent_metric(z);
        auto nu = Y.conormal(u);
        Mat G(nu.size(), nu.size());
        for (std::size_t a = 0; a < nu.size(); ++a)
            for (std::size_t b = 0; b < nu.size(); ++b) G(a, b) = covector_product(nu[a], nu[b], Hinv);
        return G;
    }

    /** Pointwise products conj(v_i) v_j <frame_j, frame_i> |e_0^p|^2 at y(u). */
    Mat pointwise(cplx u) const
    {
        Point z = Y.embed(u);
        double r2 = 0;
        for (auto& x : z) r2 += std::norm(x);
        double h = std::pow(1 + r2, -p);
        Mat G = conormal_products(u);
        std::map<std::pair<std::vector<int>, std::vector<int>>, cplx> cache;
        Mat P(size(), size());
        for (std::size_t i = 0; i < size(); ++i)
            for (std::size_t j = 0; j < size(); ++j) {
                auto key = std::make_pair(elements[j].beta, elements[i].beta);
                auto it = cache.find(key);
                cplx s = it != cache.end() ? it->second : (cache[key] = sym_product(key.first, key.second, G));
                cplx vi = std::pow(u, elements[i].ypow), vj = std::pow(u, elements[j].ypow);
                P(i, j) = std::conj(vi) * vj * s * h;
            }
        return P;
    }

    /** <w, b_j(y(u))> for w given in the frame nu^{(.)beta}, beta in Sym(codim, k) order. */
    Vec pair_with(const Vec& w, cplx u) const
    {
        auto betas = IndexSet::sym(Y.codim(), k).betas;
        if (std::size_t(w.size()) != betas.size()) throw DimensionError("jet datum has the wrong length");
        Point z = Y.embed(u);
        double r2 = 0;
        for (auto& x : z) r2 += std::norm(x);
        double h = std::pow(1 + r2, -p);
        Mat G = conormal_products(u);
        Vec out(size());
        for (std::size_t j = 0; j < size(); ++j) {
            cplx acc = 0;
            for (std::size_t b = 0; b < betas.size(); ++b) acc += w(b) * sym_product(betas[b], elements[j].beta, G);
            out(j) = acc * std::conj(std::pow(u, elements[j].ypow)) * h;
        }
        return out;
    }
};

namespace detail {

inline Mat jet_gram_quadrature(const JetSpace& J, int order, int angular)
{
    quad::Rule rad = half_line_rule(order);
    Mat G = Mat::Zero(J.size(), J.size());
    for (std::size_t a = 0; a < rad.nodes.size(); ++a) {
        double r = std::sqrt(rad.nodes[a]);
        for (int b = 0; b < angular; ++b) {
            cplx u = std::polar(r, 2 * kPi * b / angular);
            Point z = J.Y.embed(u), t = J.Y.tangent(u);
            Mat F = fs_matrix(z);
            cplx dens = 0;
            for (int i = 0; i < J.Y.n; ++i)
                for (int j = 0; j < J.Y.n; ++j) dens += F(i, j) * t[i] * std::conj(t[j]);
            double w = 0.5 * rad.weights[a] * (2 * kPi / angular) * dens.real() / kPi;
            G += w * J.pointwise(u);
        }
    }
    return G;
}

} // namespace detail

inline JetSpace jet_space(const SubmanifoldSpec& Y, int k, int p)
{
    Y.validate();
    if (k < 0) throw DimensionError("negative jet order");
    JetSpace J;
    J.Y = Y;
    J.k = k;
    J.p = p;
    auto betas = IndexSet::sym(Y.codim(), k).betas;
    int top = -1;
    if (Y.kind == YKind::Point) top = 0;
    if (Y.kind == YKind::Linear) top = p - k;
    if (Y.kind == YKind::Conic) top = 2 * p - 4 * k;
    for (int a = 0; a <= top; ++a)
        for (auto& b : betas) J.elements.push_back({a, b});
    if (Y.kind == YKind::Point) {
        J.gram = J.pointwise(0.0);
        return J;
    }
    if (J.size() == 0) {
        J.gram = Mat(0, 0);
        return J;
    }
    int order = p + 4, angular = 2 * std::max(top, 0) + 4;
    Mat cur = detail::jet_gram_quadrature(J, order, angular);
    for (int it = 0;; ++it) {
        Mat nxt = detail::jet_gram_quadrature(J, 2 * order, angular);
        double ch = 0;
        for (Eigen::Index i = 0; i < cur.rows(); ++i)
            for (Eigen::Index j = 0; j < cur.cols(); ++j)
                ch = std::max(ch, std::abs(nxt(i, j) - cur(i, j)) / std::sqrt(std::abs(nxt(i, i) * nxt(j, j))));
        order *= 2;
        cur = nxt;
        if (ch < 1e-9) break;
        if (it == 3) throw QuadratureError("jet Gram quadrature did not stabilize");
    }
    J.gram = 0.5 * (cur + cur.adjoint());
    J.quadrature_order = order;
    return J;
}

// ---------------------------------------------------------------------------------------------
// Vanishing subspaces and jet levels

/** H^0(X, L^p (x) J_Y^k), spanned by raw coefficient columns and orthonormalized in whitened coordinates. */
struct VanishingSubspace {
    int k = 0;
    Eigen::MatrixXd span;
    Mat basis;
    Mat to_basis; ///< basis = diag(root) * span * to_basis

    Mat projector() const { return basis * basis.adjoint(); }
    Eigen::Index dim() const { return basis.cols(); }

    /** Orthonormal basis of the orthogonal complement inside the whitened space. */
    Mat complement(Eigen::Index N) const
    {
        if (basis.cols() == 0) return Mat::Identity(N, N);
        Eigen::HouseholderQR<Mat> qr(basis);
        Mat Q = qr.householderQ() * Mat::Identity(N, N);
        return Q.rightCols(N - basis.cols());
    }
};

namespace detail {

inline double binom(int n, int k) { return factorial_d(n) / (factorial_d(k) * factorial_d(n - k)); }

/** Raw coefficients of q^k z^a with q = z_1^2 - 2 z_2. */
inline Eigen::VectorXd conic_multiple(const HomogSpace& X, int k, const std::vector<int>& a)
{
    Eigen::VectorXd v = Eigen::VectorXd::Zero(X.size());
    for (int j = 0; j <= k; ++j) {
        std::vector<int> e{a[0] + 2 * j, a[1] + (k - j)};
        auto i = X.index_of(e);
        if (i < 0) throw DimensionError("conic multiple leaves the space");
        v(i) += binom(k, j) * std::pow(-2.0, k - j);
    }
    return v;
}

inline int normal_degree(const SubmanifoldSpec& Y, const std::vector<int>& a)
{
    int d = 0;
    for (int i = Y.m; i < Y.n; ++i) d += a[i];
    return d;
}

} // namespace detail

inline VanishingSubspace vanishing_subspace(const HomogSpace& X, const SubmanifoldSpec& Y, int k)
{
    Y.validate();
    if (X.n != Y.n) throw DimensionError("submanifold and space dimensions differ");
    VanishingSubspace V;
    V.k = k;
    std::vector<Eigen::VectorXd> cols;
    if (Y.kind == YKind::Conic) {
        if (X.p >= 2 * k)
            for (auto& a : fock_basis(2, X.p - 2 * k).elements) cols.push_back(detail::conic_multiple(X, k, a));
    } else {
        for (std::size_t i = 0; i < X.size(); ++i)
            if (detail::normal_degree(Y, X.exponents[i]) >= k) cols.push_back(Eigen::VectorXd::Unit(X.size(), i));
    }
    V.span.resize(X.size(), cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c) V.span.col(c) = cols[c];
    if (cols.empty()) {
        V.basis = Mat(X.size(), 0);
        V.to_basis = Mat(0, 0);
        return V;
    }
    Eigen::MatrixXd W = X.root.asDiagonal() * V.span;
    Eigen::VectorXd scale = W.colwise().norm().transpose();
    Eigen::MatrixXd Wn = W * scale.cwiseInverse().asDiagonal();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(Wn, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    if (s(s.size() - 1) <= kPinvTol * s(0)) throw LabError("vanishing subspace spanning set is degenerate");
    V.basis = svd.matrixU().cast<cplx>();
    V.to_basis = (scale.cwiseInverse().asDiagonal() * svd.matrixV() * s.cwiseInverse().asDiagonal()).cast<cplx>();
    return V;
}

/** Everything needed for Res_{k,p}, E_{k,p} and A_{k,p} at one (Y, k, p). */
struct JetLevel {
    SubmanifoldSpec Y;
    int k = 0;
    HomogSpace X;
    VanishingSubspace vanishing;
    JetSpace jets;
    Mat span_jets;     ///< jets of the spanning columns, raw J coefficients (k! included)
    Mat jet_root;      ///< G_J = jet_root^H jet_root
    Mat jet_root_inv;
    Mat res;           ///< whitened Res restricted to the orthonormal basis of J_Y^k
    Eigen::VectorXd singular_values;
    int rank = 0;
    double rank_threshold = 0;

    int p() const { return X.p; }
    bool surjective() const { return rank == int(jets.size()); }
    void require_surjective() const
    {
        if (!surjective())
            throw ExtensionNotGuaranteed("extension not guaranteed: jet map rank " + std::to_string(rank) + " < " +
                                         std::to_string(jets.size()) + " at p = " + std::to_string(X.p));
    }
};

namespace detail {

inline std::pair<Mat, Mat> hermitian_root(const Mat& G)
{
    if (G.rows() == 0) return {Mat(0, 0), Mat(0, 0)};
    Eigen::SelfAdjointEigenSolver<Mat> es(G);
    Eigen::VectorXd ev = es.eigenvalues();
    if (ev(0) <= 0) throw LabError("Gram matrix is not positive definite");
    Mat U = es.eigenvectors();
    Mat R = U * ev.cwiseSqrt().cast<cplx>().asDiagonal() * U.adjoint();
    Mat Ri = U * ev.cwiseSqrt().cwiseInverse().cast<cplx>().asDiagonal() * U.adjoint();
    return {R, Ri};
}

inline Mat pseudo_inverse(const Mat& M, double tol = kPinvTol)
{
    if (M.size() == 0) return Mat(M.cols(), M.rows());
    Eigen::BDCSVD<Mat> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    Eigen::VectorXd inv(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) inv(i) = s(i) > tol * s(0) ? 1.0 / s(i) : 0.0;
    return svd.matrixV() * inv.cast<cplx>().asDiagonal() * svd.matrixU().adjoint();
}

inline double op_norm(const Mat& M)
{
    if (M.size() == 0) return 0;
    return Eigen::BDCSVD<Mat>(M).singularValues()(0);
}

} // namespace detail

inline JetLevel jet_level(const HomogSpace& X, const SubmanifoldSpec& Y, int k)
{
    JetLevel L;
    L.Y = Y;
    L.k = k;
    L.X = X;
    L.vanishing = vanishing_subspace(X, Y, k);
    L.jets = jet_space(Y, k, X.p);
    const Eigen::Index d = L.vanishing.dim(), J = Eigen::Index(L.jets.size());
    L.span_jets = Mat::Zero(J, d);
    const double kf = factorial_d(k);
    if (Y.kind == YKind::Conic) {
        auto hs = X.p >= 2 * k ? fock_basis(2, X.p - 2 * k).elements : std::vector<std::vector<int>>{};
        for (Eigen::Index c = 0; c < d; ++c) {
            auto& a = hs[c];
            auto row = L.jets.index_of({a[0] + 2 * a[1], {k}});
            L.span_jets(row, c) = kf * std::pow(std::sqrt(2.0), a[0]);
        }
    } else {
        for (Eigen::Index c = 0; c < d; ++c) {
            Eigen::Index i;
            L.vanishing.span.col(c).maxCoeff(&i);
            auto& a = X.exponents[i];
            if (detail::normal_degree(Y, a) != k) continue;
            int ypow = 0;
            for (int q = 0; q < Y.m; ++q) ypow += a[q];
            std::vector<int> beta(a.begin() + Y.m, a.end());
            auto row = L.jets.index_of({ypow, beta});
            if (row >= 0) L.span_jets(row, c) = kf;
        }
    }
    std::tie(L.jet_root, L.jet_root_inv) = detail::hermitian_root(L.jets.gram);
    L.res = L.jet_root * L.span_jets * L.vanishing.to_basis;
    if (L.res.size() > 0) {
        L.singular_values = Eigen::BDCSVD<Mat>(L.res).singularValues();
        L.rank_threshold = kPinvTol * L.singular_values(0);
        for (Eigen::Index i = 0; i < L.singular_values.size(); ++i)
            if (L.singular_values(i) > L.rank_threshold) ++L.rank;
    }
    return L;
}

inline JetLevel jet_level(const SubmanifoldSpec& Y, int k, int p) { return jet_level(homog_space(Y.n, p), Y, k); }

// ---------------------------------------------------------------------------------------------
// Restriction, extension, defect, jet map

/**
 * Res_{k,p} f for f in H^0(J_Y^k), raw in and raw out; throws if f has a lower-order jet.
 * The vanishing test is relative to `scale` (whitened norm) when given, else to |f|.
 */
inline Vec restriction_jets(const JetLevel& L, const Vec& f, double scale = 0)
{
    if (f.size() != Eigen::Index(L.X.size())) throw DimensionError("section has the wrong length");
    Vec w = L.X.whiten(f);
    Vec c = L.vanishing.basis.adjoint() * w;
    double resid = (w - L.vanishing.basis * c).norm();
    if (resid > kJetTol * std::max(scale > 0 ? scale : w.norm(), 1e-300))
        throw PreconditionError("section does not vanish to order " + std::to_string(L.k) + " on Y");
    return L.span_jets * L.vanishing.to_basis * c;
}

/** Raw J x N matrix of Res_{k,p} o B^{X,kY}. */
inline Mat restriction_matrix(const JetLevel& L)
{
    return L.span_jets * L.vanishing.to_basis * L.vanishing.basis.adjoint() * L.X.root.cast<cplx>().asDiagonal();
}

/** Whitened E_{k,p}: N x J, from whitened jets to whitened sections. */
inline Mat extension_white(const JetLevel& L)
{
    L.require_surjective();
    return L.vanishing.basis * detail::pseudo_inverse(L.res);
}

/** Least-norm f in H^0(J_Y^k) with Res_{k,p} f = g; raw in and raw out. */
inline Vec minimal_norm_extension(const JetLevel& L, const Vec& g)
{
    if (g.size() != Eigen::Index(L.jets.size())) throw DimensionError("jet vector has the wrong length");
    return L.X.unwhiten(extension_white(L) * (L.jet_root * g));
}

inline double extension_norm(const JetLevel& L)
{
    L.require_surjective();
    return 1.0 / L.singular_values(L.singular_values.size() - 1);
}

inline double restriction_norm(const JetLevel& L) { return L.singular_values.size() ? L.singular_values(0) : 0.0; }

/** p^{n-m+k} (2pi)^k k!, the leading term of A_{k,p}. */
inline double defect_scale(const JetLevel& L)
{
    return std::pow(double(L.p()), L.Y.codim() + L.k) * std::pow(2 * kPi, L.k) * factorial_d(L.k);
}

struct DefectResult {
    Mat A;        ///< raw J coefficients
    Mat A_white;  ///< jet_root A jet_root^{-1}
    double defining_residual = 0;  ///< |T* - E A| / |T*|
    double adjoint_residual = 0;   ///< |E* E - (A*)^{-1}| / |E* E|
    double res_residual = 0;       ///< |T T* - A| / |A|
    double normalized_deviation = 0; ///< |A / defect_scale - Id|
};

inline DefectResult multiplicative_defect(const JetLevel& L)
{
    L.require_surjective();
    DefectResult r;
    const Mat& M = L.res;
    Mat Tw = M * L.vanishing.basis.adjoint();
    Mat Tstar = Tw.adjoint();
    Mat E = extension_white(L);
    r.A_white = M * M.adjoint();
    r.A = L.jet_root_inv * r.A_white * L.jet_root;
    r.defining_residual = detail::op_norm(Tstar - E * r.A_white) / detail::op_norm(Tstar);
    Mat EE = E.adjoint() * E;
    r.adjoint_residual = detail::op_norm(EE - r.A_white.adjoint().inverse()) / detail::op_norm(EE);
    r.res_residual = detail::op_norm(Tw * Tstar - r.A_white) / detail::op_norm(r.A_white);
    Mat I = Mat::Identity(r.A_white.rows(), r.A_white.cols());
    r.normalized_deviation = detail::op_norm(r.A_white / defect_scale(L) - I);
    return r;
}

struct JetMapResult {
    std::vector<Vec> g; ///< raw jets g_0..g_k
    double jet_norm = 0;
    double quotient_norm = 0;
    double ratio = 0;
};

/** Jet_{k,p}(f) with levels[r] for r = 0..k and quotient by J_Y^{k+1}. */
inline JetMapResult jet_map(const std::vector<JetLevel>& levels, const VanishingSubspace& next, const Vec& f)
{
    if (levels.empty()) throw DimensionError("no jet levels");
    const HomogSpace& X = levels[0].X;
    const SubmanifoldSpec& Y = levels[0].Y;
    JetMapResult out;
    Vec rest = f;
    double j2 = 0;
    const double scale = X.whiten(f).norm();
    for (std::size_t r = 0; r < levels.size(); ++r) {
        const JetLevel& L = levels[r];
        Vec g = restriction_jets(L, rest, scale);
        rest -= minimal_norm_extension(L, g);
        double n2 = (g.adjoint() * L.jets.gram * g)(0, 0).real();
        j2 += n2 / (factorial_d(int(r)) * std::pow(2 * kPi, double(r)) * std::pow(double(X.p), Y.codim() + int(r)));
        out.g.push_back(g);
    }
    Vec w = X.whiten(f);
    out.quotient_norm = (w - next.basis * (next.basis.adjoint() * w)).norm();
    out.jet_norm = std::sqrt(j2);
    out.ratio = out.quotient_norm > 0 ? out.jet_norm / out.quotient_norm : 1.0;
    return out;
}

/** Extreme ratios |Jet f|/|[f]| over the whole quotient, via singular values of the jet map. */
inline std::pair<double, double> jet_isometry_extremes(const std::vector<JetLevel>& levels, const VanishingSubspace& next)
{
    const HomogSpace& X = levels[0].X;
    Mat C = next.complement(Eigen::Index(X.size()));
    Eigen::Index rows = 0;
    for (auto& L : levels) rows += Eigen::Index(L.jets.size());
    Mat J(rows, C.cols());
    for (Eigen::Index c = 0; c < C.cols(); ++c) {
        JetMapResult r = jet_map(levels, next, X.unwhiten(C.col(c)));
        Eigen::Index off = 0;
        for (std::size_t l = 0; l < levels.size(); ++l) {
            double wt = 1.0 / std::sqrt(factorial_d(int(l)) * std::pow(2 * kPi, double(l)) *
                                        std::pow(double(X.p), levels[l].Y.codim() + int(l)));
            J.block(off, c, r.g[l].size(), 1) = wt * (levels[l].jet_root * r.g[l]);
            off += r.g[l].size();
        }
    }
    Eigen::VectorXd s = Eigen::BDCSVD<Mat>(J).singularValues();
    return {s(s.size() - 1), s(0)};
}

// ---------------------------------------------------------------------------------------------
// Kernels

struct KernelValues {
    cplx bergman = 0;
    cplx logbk = 0;
    cplx difference = 0; ///< (B^{X,kY} - B^X)(x1, x2) = -sum_{l<k} B^{perp,l}(x1, x2)
};

/** Kernels in the unit frames (1 + |z|^2)^{-p/2} e_0^p at both points. */
inline KernelValues bergman_and_logbk_eval(const HomogSpace& X, const VanishingSubspace& V, const Point& x1, const Point& x2)
{
    Vec s1 = X.frame_values(x1), s2 = X.frame_values(x2);
    KernelValues kv;
    kv.bergman = (s1.transpose() * s2.conjugate())(0, 0);
    Vec a = V.basis.transpose() * s1, b = V.basis.transpose() * s2;
    kv.logbk = (a.transpose() * b.conjugate())(0, 0);
    Mat C = V.complement(Eigen::Index(X.size()));
    Vec ca = C.transpose() * s1, cb = C.transpose() * s2;
    kv.difference = -(ca.transpose() * cb.conjugate())(0, 0);
    return kv;
}

inline KernelValues bergman_and_logbk_eval(const SubmanifoldSpec& Y, int k, int p, const Point& x1, const Point& x2)
{
    HomogSpace X = homog_space(Y.n, p);
    return bergman_and_logbk_eval(X, vanishing_subspace(X, Y, k), x1, x2);
}

/** Section E_{k,p}(., y(u)) w, raw coefficients; w is given in the conormal frame at y(u). */
inline Vec extension_kernel_section(const JetLevel& L, const Vec& w, cplx u = 0.0)
{
    Vec nu = L.jets.pair_with(w, u);
    Vec r = L.jets.gram.ldlt().solve(nu);
    return minimal_norm_extension(L, r);
}

/** Coefficients of dZ_N^{(.)beta} (normal coordinates at the origin) in the conormal frame. */
inline Vec unit_normal_datum(const SubmanifoldSpec& Y, int k, const std::vector<int>& beta)
{
    auto betas = IndexSet::sym(Y.codim(), k).betas;
    Vec w = Vec::Zero(betas.size());
    auto it = std::find(betas.begin(), betas.end(), beta);
    if (it == betas.end()) throw DimensionError("beta is not a Sym^k index");
    w(it - betas.begin()) = std::pow(kPi, -0.5 * k) * std::pow(Y.conormal_scale_at_origin(), -k);
    return w;
}

// ---------------------------------------------------------------------------------------------
// Peak sections

struct PeakResult {
    Vec section;              ///< raw coefficients
    double lower_jet = 0;     ///< max |lower Taylor coefficient| relative to the section norm
    double jet_error = 0;     ///< relative error of the k-jet against the datum
    double profile_deviation = 0; ///< sup |s - model| / sup |model| on the sampled rays
    std::size_t samples = 0;
};

/**
 * s = E^{x}_{k,p}(v) at the chart origin of CP^n with v = sum_beta v_beta dZ^{(.)beta} in normal
 * coordinates, compared along rays |Z| <= radius/sqrt(p) with (1/k!) v(Z,...,Z) exp(-pi p|Z|^2/2).
 */
inline PeakResult peak_section(int n, int k, int p, const Vec& v, int rays = 8, int radii = 33, double radius = 2.0)
{
    SubmanifoldSpec Y = SubmanifoldSpec::point(n);
    JetLevel L = jet_level(Y, k, p);
    auto betas = IndexSet::sym(n, k).betas;
    if (std::size_t(v.size()) != betas.size()) throw DimensionError("jet datum has the wrong length");
    Vec g(L.jets.size());
    for (std::size_t b = 0; b < betas.size(); ++b) g(b) = v(b) * std::pow(kPi, -0.5 * k);
    PeakResult out;
    out.section = minimal_norm_extension(L, g);
    Vec w = L.X.whiten(out.section);
    double nrm = w.norm();
    for (std::size_t i = 0; i < L.X.size(); ++i) {
        int deg = 0;
        for (int x : L.X.exponents[i]) deg += x;
        if (deg < k) out.lower_jet = std::max(out.lower_jet, std::abs(w(i)) / nrm);
    }
    Vec jet = restriction_jets(L, out.section);
    out.jet_error = (jet - g).norm() / g.norm();
    double sup_dev = 0, sup_model = 0;
    std::mt19937 dir_rng(7u);
    for (int r = 0; r < rays; ++r) {
        Point dir(n);
        if (n == 1) {
            dir[0] = std::polar(1.0, 2 * kPi * r / rays);
        } else {
            std::normal_distribution<double> nd;
            double s = 0;
            for (auto& x : dir) { x = {nd(dir_rng), nd(dir_rng)}; s += std::norm(x); }
            for (auto& x : dir) x /= std::sqrt(s);
        }
        for (int q = 1; q <= radii; ++q) {
            double rho = radius / std::sqrt(double(p)) * q / radii;
            Point Z(n);
            for (int i = 0; i < n; ++i) Z[i] = rho * dir[i];
            cplx s = L.X.eval(out.section, exp_chart(Z));
            cplx model = 0;
            for (std::size_t b = 0; b < betas.size(); ++b) {
                cplx mono = 1;
                for (int i = 0; i < n; ++i) mono *= std::pow(Z[i], betas[b][i]);
                model += v(b) * mono;
            }
            model *= std::exp(-kPi * p * rho * rho / 2) / factorial_d(k);
            sup_dev = std::max(sup_dev, std::abs(s - model));
            sup_model = std::max(sup_model, std::abs(model));
            ++out.samples;
        }
    }
    out.profile_deviation = sup_dev / sup_model;
    return out;
}

// ---------------------------------------------------------------------------------------------
// Decay fits

struct DecaySample {
    double p = 0;
    double distance = 0;
    double magnitude = 0;
};

struct DecayFit {
    double c = 0;
    double slope = 0;
    double intercept = 0;
    double r2 = 0;
    std::size_t count = 0;
};

/** Least squares of log|K| against sqrt(p) * dist. */
inline DecayFit decay_fit(const std::vector<DecaySample>& samples)
{
    std::vector<std::pair<double, double>> pts;
    std::vector<double> xs;
    for (auto& s : samples) {
        if (!(s.magnitude > 0)) throw FitError("kernel magnitudes must be positive");
        double x = std::sqrt(s.p) * s.distance;
        pts.push_back({x, std::log(s.magnitude)});
        xs.push_back(x);
    }
    if (distinct_count(xs) < 5) throw FitError("need at least five distinct sqrt(p)*dist abscissae");
    LineFit f = least_squares(pts);
    return {-f.slope, f.slope, f.intercept, f.r2, f.count};
}

} // namespace bjet::lab
