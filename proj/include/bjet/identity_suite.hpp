#pragma once

#include "bjet/fock_oracle.hpp"
#include "bjet/model_kernels.hpp"

#include <functional>
#include <random>
#include <string>
#include <vector>

namespace bjet::suite {

// ---------------------------------------------------------------------------
// Random inputs

/** Random amplitude of total degree <= maxdeg using only variables legal for the base. */
inline MultiPoly random_amplitude(std::mt19937& rng, const KernelBase& b, int maxdeg, int nterms, int pi_lo = -1, int pi_hi = 1)
{
    std::vector<Var> vars;
    for (int i = 1; i <= b.left_dim(); ++i) { vars.push_back(z(i)); vars.push_back(zb(i)); }
    for (int i = 1; i <= b.right_dim(); ++i) { vars.push_back(zp(i)); vars.push_back(zpb(i)); }
    if (vars.empty()) maxdeg = 0;
    std::uniform_int_distribution<int> pick(0, std::max(0, int(vars.size()) - 1)), deg(0, maxdeg), num(-3, 3), den(1, 3), pj(pi_lo, pi_hi);
    MultiPoly p(b.n);
    for (int t = 0; t < nterms; ++t) {
        Monomial m;
        int d = deg(rng);
        for (int s = 0; s < d; ++s) m.e[vars[pick(rng)].slot()] += 1;
        p.add_term(m, PiCoeff(GaussRational(Rational(num(rng), den(rng)), Rational(num(rng), den(rng))), pj(rng)));
    }
    return p;
}

/** Keep only the monomials of the requested degree parity. */
inline MultiPoly parity_part(const MultiPoly& p, int parity)
{
    MultiPoly r(p.dim());
    for (auto& [m, c] : p.terms())
        if (m.degree() % 2 == parity) r.add_term(m, c);
    return r;
}

inline std::vector<cplx> random_point(std::mt19937& rng, int dim, double radius)
{
    std::uniform_real_distribution<double> u(-radius, radius);
    std::vector<cplx> z(std::size_t(std::max(dim, 0)));
    for (auto& x : z) x = {u(rng), u(rng)};
    return z;
}

using Samples = std::vector<std::pair<std::vector<cplx>, std::vector<cplx>>>;

inline Samples random_samples(std::mt19937& rng, int count, int left, int right, double radius)
{
    Samples s;
    for (int i = 0; i < count; ++i) s.push_back({random_point(rng, left, radius), random_point(rng, right, radius)});
    return s;
}

using ComposeFn = std::function<JetKernel(const JetKernel&, const JetKernel&)>;

inline ComposeFn default_compose()
{
    return [](const JetKernel& a, const JetKernel& b) { return compose(a, b); };
}

/** Max abs deviation between symbolic composition values and oracle values over samples. */
inline double oracle_gap(const JetKernel& a, const JetKernel& b, const Samples& samples, double* doubling = nullptr,
                         const ComposeFn& fn = default_compose())
{
    JetKernel c = fn(a, b);
    OracleResult o = quadrature_oracle_compose(a, b, samples);
    if (doubling) *doubling = o.doubling_delta;
    double gap = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        Eigen::MatrixXcd sym = kernel_eval(c, samples[i].first, samples[i].second);
        gap = std::max(gap, (sym - o.values[i]).cwiseAbs().maxCoeff());
    }
    return gap;
}

// ---------------------------------------------------------------------------
// Checks

struct IdentityCheck {
    std::string group;
    std::string name;
    bool passed = true;
    double max_error = 0;
    std::size_t cases = 0;
    std::string detail; ///< first failing case
};

struct SuiteConfig {
    int n_max = 3;
    int k_max = 3;
    unsigned seed = 1;
    int oracle_samples = 20;
    int oracle_degree = 4;
    int oracle_trials = 2;
    double oracle_tol = 1e-8;
    int fock_cutoff = 6;
};

namespace detail {

/** Numeric size of a kernel difference at a few fixed points; zero iff the check is exact there. */
inline double kernel_gap(const JetKernel& a, const JetKernel& b)
{
    if (!(a.rows() == b.rows()) || !(a.cols() == b.cols()) || !(a.base() == b.base()))
        return std::numeric_limits<double>::infinity();
    if (a == b) return 0;
    double g = 0;
    const int n = a.base().n;
    for (int s = 0; s < 3; ++s) {
        std::vector<cplx> Z(static_cast<std::size_t>(n)), W(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            Z[std::size_t(i)] = {0.3 * (s + 1) - 0.1 * i, 0.2 - 0.15 * s};
            W[std::size_t(i)] = {-0.25 + 0.1 * i, 0.1 * s};
        }
        g = std::max(g, (kernel_eval(a, Z, W) - kernel_eval(b, Z, W)).cwiseAbs().maxCoeff());
    }
    // distinct exact kernels that agree on the sample points still count as a failure
    return g > 0 ? g : std::numeric_limits<double>::min();
}

inline std::string case_label(int n, int m, int k) { return "n=" + std::to_string(n) + " m=" + std::to_string(m) + " k=" + std::to_string(k); }

struct Tally {
    IdentityCheck c;
    Tally(std::string group, std::string name)
    {
        c.group = std::move(group);
        c.name = std::move(name);
    }
    void record(double err, const std::string& label, double tol = 0)
    {
        ++c.cases;
        c.max_error = std::max(c.max_error, err);
        if (err > tol && c.passed) {
            c.passed = false;
            c.detail = label;
        }
    }
};

} // namespace detail

/** Exact identities of the model calculus, over n <= n_max, m < n, k <= k_max. */
inline std::vector<IdentityCheck> symbolic_identities(const SuiteConfig& cfg, const ComposeFn& fn = default_compose())
{
    using detail::Tally;
    Tally fact{"symbolic", "E^k o Res^k = Pperp^k"}, dual{"symbolic", "(Res^k)* = (2pi)^k k! E^k"},
        repro{"symbolic", "Res^k o E^k = P_m Id"}, mixed{"symbolic", "Res^l o E^j = 0 for j != l"},
        ortho{"symbolic", "Pperp^j o Pperp^l = delta_jl Pperp^j"}, idem{"symbolic", "P_n o P_n = P_n"},
        parity{"symbolic", "degree and parity rules of the composition"};
    for (int n = 1; n <= cfg.n_max; ++n) {
        idem.record(detail::kernel_gap(fn(model_P(n), model_P(n)), model_P(n)), "n=" + std::to_string(n));
        for (int m = 0; m < n; ++m)
            for (int k = 0; k <= cfg.k_max; ++k) {
                std::string lab = detail::case_label(n, m, k);
                fact.record(detail::kernel_gap(fn(model_E(n, m, k), model_Res(n, m, k)), model_Pperp(n, m, k)), lab);
                PiCoeff c(GaussRational(Rational(factorial(k) * (1 << k))), k);
                dual.record(detail::kernel_gap(kernel_adjoint(model_Res(n, m, k)), model_E(n, m, k).scale(c)), lab);
                repro.record(detail::kernel_gap(fn(model_Res(n, m, k), model_E(n, m, k)), model_sym_identity(n, m, k)), lab);
                for (int l = 0; l <= cfg.k_max; ++l) {
                    std::string ll = lab + " l=" + std::to_string(l);
                    JetKernel pp = fn(model_Pperp(n, m, k), model_Pperp(n, m, l));
                    if (k == l) ortho.record(detail::kernel_gap(pp, model_Pperp(n, m, k)), ll);
                    else ortho.record(pp.is_zero() ? 0.0 : detail::kernel_gap(pp, pp.scale(PiCoeff(0))), ll);
                    if (k == l) continue;
                    JetKernel R = model_Res(n, m, l), E = model_E(n, m, k);
                    double worst = 0;
                    for (std::size_t a = 0; a < R.nrows(); ++a)
                        for (std::size_t b = 0; b < E.ncols(); ++b) {
                            JetKernel c2 = fn(JetKernel::scalar(R.entry(a, 0)), JetKernel::scalar(E.entry(0, b)));
                            if (!c2.is_zero()) worst = std::max(worst, detail::kernel_gap(c2, c2.scale(PiCoeff(0))));
                        }
                    mixed.record(worst, ll);
                }
            }
    }
    std::mt19937 rng(cfg.seed);
    for (BaseKind kd : {BaseKind::OrthoProj0, BaseKind::SubProj}) {
        int n = std::min(3, cfg.n_max);
        KernelBase b = KernelBase::make(kd, n, std::min(1, n - 1));
        for (int t = 0; t < 24; ++t) {
            int p1 = t % 2, p2 = (t / 2) % 2;
            MultiPoly a1 = parity_part(random_amplitude(rng, b, 4, 6, 0, 2), p1);
            MultiPoly a2 = parity_part(random_amplitude(rng, b, 4, 6, 0, 2), p2);
            if (a1.is_zero() || a2.is_zero()) continue;
            MultiPoly out = fn(JetKernel::scalar(PolyKernel(b, a1)), JetKernel::scalar(PolyKernel(b, a2))).amp(0, 0);
            if (out.is_zero()) continue;
            bool ok = out.degree() <= a1.degree() + a2.degree() &&
                      out.parity() == ((p1 + p2) % 2 ? Parity::Odd : Parity::Even) &&
                      out.min_pi_exponent() >= -(a1.degree() + a2.degree());
            parity.record(ok ? 0.0 : 1.0, b.tag() + " trial " + std::to_string(t));
        }
    }
    return {fact.c, dual.c, repro.c, mixed.c, ortho.c, idem.c, parity.c};
}

/**
 * Symbolic composition against the Gauss-Hermite oracle for every pair of the composition table,
 * with random amplitudes of degree <= oracle_degree and oracle_samples random point pairs.
 */
inline std::vector<IdentityCheck> oracle_equivalence(const SuiteConfig& cfg, const ComposeFn& fn = default_compose())
{
    struct Pair {
        std::string name;
        BaseKind a, b;
    };
    const std::vector<Pair> table{{"P o P", BaseKind::BargmannProj, BaseKind::BargmannProj},
                                  {"Pperp0 o Pperp0", BaseKind::OrthoProj0, BaseKind::OrthoProj0},
                                  {"Sub o Sub", BaseKind::SubProj, BaseKind::SubProj},
                                  {"E0 o Sub", BaseKind::Ext0, BaseKind::SubProj},
                                  {"E0 o Res0", BaseKind::Ext0, BaseKind::Res0},
                                  {"Res0 o E0", BaseKind::Res0, BaseKind::Ext0},
                                  {"Sub o Res0", BaseKind::SubProj, BaseKind::Res0}};
    std::mt19937 rng(cfg.seed + 1000);
    std::vector<IdentityCheck> out;
    for (auto& pr : table) {
        detail::Tally t{"oracle", "symbolic = quadrature for " + pr.name};
        for (int n = 1; n <= cfg.n_max; ++n)
            for (int m = (pr.a == BaseKind::BargmannProj ? n : 0); m < (pr.a == BaseKind::BargmannProj ? n + 1 : n); ++m)
                for (int trial = 0; trial < cfg.oracle_trials; ++trial) {
                    KernelBase ba = KernelBase::make(pr.a, n, m), bb = KernelBase::make(pr.b, n, m);
                    JetKernel A = JetKernel::scalar(PolyKernel(ba, random_amplitude(rng, ba, cfg.oracle_degree, 4)));
                    JetKernel B = JetKernel::scalar(PolyKernel(bb, random_amplitude(rng, bb, cfg.oracle_degree, 4)));
                    Samples s = random_samples(rng, cfg.oracle_samples, ba.left_dim(), bb.right_dim(), 0.8);
                    double dbl = 0;
                    double gap = oracle_gap(A, B, s, &dbl, fn);
                    std::string lab = "n=" + std::to_string(n) + " m=" + std::to_string(m) + " trial " + std::to_string(trial);
                    t.record(gap, lab, cfg.oracle_tol);
                    if (dbl > 1e-6) t.record(std::numeric_limits<double>::infinity(), lab + " (oracle order not converged)", 0);
                }
        out.push_back(t.c);
    }
    return out;
}

/** Identity ladder of the operator matrices on polynomials of degree <= fock_cutoff. */
inline std::vector<IdentityCheck> fock_ladder(const SuiteConfig& cfg)
{
    using detail::Tally;
    const int D = cfg.fock_cutoff;
    Tally comp{"fock", "sum_{l<k} Pperp^l + vanishing projector = P_n"}, idem{"fock", "projectors idempotent"},
        adj{"fock", "projectors self-adjoint"}, orth{"fock", "Pperp^j Pperp^l = 0 for j != l"},
        fact{"fock", "E^k Res^k = Pperp^k"}, repro{"fock", "Res^k E^k = Id"}, dual{"fock", "(Res^k)* = 2^k k! pi^k E^k"};
    auto gap = [](const OperatorMatrix& a, const OperatorMatrix& b) {
        if (a == b) return 0.0;
        if (a.coeff.size() != b.coeff.size()) return std::numeric_limits<double>::infinity();
        Eigen::MatrixXcd d = a.orthonormal() - b.orthonormal();
        return std::max(d.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    };
    for (int n = 1; n <= cfg.n_max; ++n) {
        OperatorMatrix P = kernel_to_matrix(model_P(n), D);
        for (int m = 0; m < n; ++m)
            for (int k = 0; k <= cfg.k_max; ++k) {
                std::string lab = detail::case_label(n, m, k);
                OperatorMatrix A = kernel_to_matrix(model_Pperp(n, m, k), D);
                OperatorMatrix sum = vanishing_projector(n, m, k, D);
                for (int l = 0; l < k; ++l) sum = sum + kernel_to_matrix(model_Pperp(n, m, l), D);
                comp.record(gap(sum, P), lab);
                idem.record(gap(A * A, A), lab);
                adj.record(gap(A.adjoint(), A), lab);
                for (int l = 0; l < k; ++l) {
                    OperatorMatrix Z = A * kernel_to_matrix(model_Pperp(n, m, l), D);
                    bool zero = true;
                    for (auto& r : Z.coeff)
                        for (auto& x : r) zero = zero && x.is_zero();
                    orth.record(zero ? 0.0 : 1.0, lab + " l=" + std::to_string(l));
                }
                OperatorMatrix E = kernel_to_matrix(model_E(n, m, k), D), R = kernel_to_matrix(model_Res(n, m, k), D);
                fact.record(gap(E * R, A), lab);
                OperatorMatrix RE = R * E;
                repro.record(RE.coeff == exact_identity(RE.rows.size()) ? 0.0 : 1.0, lab);
                PiCoeff c(GaussRational(Rational(factorial(k) * (1 << k))), k);
                dual.record(gap(R.adjoint(), E.scale(c)), lab);
            }
    }
    return {comp.c, idem.c, adj.c, orth.c, fact.c, repro.c, dual.c};
}

inline bool all_passed(const std::vector<IdentityCheck>& v)
{
    for (auto& c : v)
        if (!c.passed) return false;
    return true;
}

} // namespace bjet::suite
