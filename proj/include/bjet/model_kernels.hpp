#pragma once

/**
 * @file model_kernels.hpp
 * @brief Bargmann model kernels, their composition calculus and numeric evaluation.
 *
 * A kernel is an amplitude polynomial times one of five Gaussian bases. All bases
 * share the tangential factor exp(-pi/2(|z_Y|^2 + |z'_Y|^2) + pi z_Y.zb'_Y) and may carry
 * exp(-pi/2|z_N|^2) on the left and/or exp(-pi/2|z'_N|^2) on the right.
 */

#include "bjet/poly_core.hpp"
#include "bjet/quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace bjet {

struct CompositionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SupportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class BaseKind { BargmannProj, OrthoProj0, Ext0, Res0, SubProj };

struct KernelBase {
    BaseKind kind = BaseKind::BargmannProj;
    int n = 1;
    int m = 1;

    static KernelBase make(BaseKind kind, int n, int m)
    {
        if (n < 0 || n > kMaxDim) throw DimensionError("n out of range");
        if (m < 0 || m > n) throw DimensionError("need 0 <= m <= n");
        if (kind == BaseKind::BargmannProj) m = n;
        return {kind, n, m};
    }

    int tangential() const { return kind == BaseKind::BargmannProj ? n : m; }
    bool left_normal() const { return kind == BaseKind::OrthoProj0 || kind == BaseKind::Ext0; }
    bool right_normal() const { return kind == BaseKind::OrthoProj0 || kind == BaseKind::Res0; }
    int left_dim() const { return left_normal() ? n : tangential(); }
    int right_dim() const { return right_normal() ? n : tangential(); }

    std::string tag() const
    {
        switch (kind) {
        case BaseKind::BargmannProj: return "P " + std::to_string(n);
        case BaseKind::OrthoProj0: return "Pperp0 " + std::to_string(n) + " " + std::to_string(m);
        case BaseKind::Ext0: return "E0 " + std::to_string(n) + " " + std::to_string(m);
        case BaseKind::Res0: return "Res0 " + std::to_string(n) + " " + std::to_string(m);
        case BaseKind::SubProj:
            return n == m ? "Sub " + std::to_string(m) : "Sub " + std::to_string(n) + " " + std::to_string(m);
        }
        return "?";
    }

    /** Closed-form Gaussian factor; Z has left_dim entries, Zp right_dim entries. */
    cplx eval(const std::vector<cplx>& Z, const std::vector<cplx>& Zp) const
    {
        if (int(Z.size()) < left_dim() || int(Zp.size()) < right_dim())
            throw DimensionError("point has too few coordinates for " + tag());
        const double pi = std::numbers::pi;
        int t = tangential();
        cplx e = 0;
        for (int i = 0; i < t; ++i)
            e += -pi / 2 * (std::norm(Z[i]) + std::norm(Zp[i])) + pi * Z[i] * std::conj(Zp[i]);
        if (left_normal())
            for (int i = t; i < n; ++i) e += -pi / 2 * std::norm(Z[i]);
        if (right_normal())
            for (int i = t; i < n; ++i) e += -pi / 2 * std::norm(Zp[i]);
        return std::exp(e);
    }

    friend bool operator==(const KernelBase&, const KernelBase&) = default;
};

inline KernelBase base_of_profile(int n, int t, bool L, bool R, bool bargmann)
{
    if (bargmann && L == false && R == false && t == n) return KernelBase::make(BaseKind::BargmannProj, n, n);
    if (L && R) return KernelBase::make(BaseKind::OrthoProj0, n, t);
    if (L) return KernelBase::make(BaseKind::Ext0, n, t);
    if (R) return KernelBase::make(BaseKind::Res0, n, t);
    return KernelBase::make(BaseKind::SubProj, n, t);
}

/** Whether the amplitude only uses variables the base allows. */
inline bool support_is_legal(const KernelBase& b, const MultiPoly& a)
{
    if (a.dim() != b.n) return false;
    if (a.uses(Family::W) || a.uses(Family::Wb)) return false;
    int l = b.left_dim(), r = b.right_dim();
    if (a.uses(Family::Z, l + 1) || a.uses(Family::Zb, l + 1)) return false;
    if (a.uses(Family::Zp, r + 1) || a.uses(Family::Zpb, r + 1)) return false;
    return true;
}

struct PolyKernel {
    KernelBase base;
    MultiPoly amp;

    PolyKernel() = default;
    PolyKernel(KernelBase b, MultiPoly a) : base(b), amp(std::move(a))
    {
        if (!support_is_legal(base, amp)) throw SupportError("amplitude support illegal for base " + base.tag());
    }

    cplx eval(const std::vector<cplx>& Z, const std::vector<cplx>& Zp) const
    {
        return amp.eval(Assignment::points(Z, Zp)) * base.eval(Z, Zp);
    }
    std::string pretty() const { return amp.pretty() + " | " + base.tag(); }
    friend bool operator==(const PolyKernel& a, const PolyKernel& b) { return a.base == b.base && a.amp == b.amp; }
};

/** Scalar {*} or the multi-indices beta in N^(n-m) with |beta| = k in lexicographic order. */
struct IndexSet {
    bool scalar = true;
    int k = 0;
    int normal_dim = 0;
    std::vector<std::vector<int>> betas;

    static IndexSet star() { return IndexSet{true, 0, 0, {{}}}; }
    static IndexSet sym(int normal_dim, int k)
    {
        if (k < 0) throw std::invalid_argument("negative jet order");
        IndexSet s{false, k, normal_dim, {}};
        std::vector<int> b(normal_dim, 0);
        std::function<void(int, int)> rec = [&](int i, int left) {
            if (i == normal_dim - 1) {
                b[i] = left;
                s.betas.push_back(b);
                return;
            }
            for (int x = 0; x <= left; ++x) {
                b[i] = x;
                rec(i + 1, left - x);
            }
        };
        if (normal_dim == 0) {
            if (k == 0) s.betas.push_back({});
        } else {
            rec(0, k);
        }
        std::sort(s.betas.begin(), s.betas.end());
        return s;
    }

    std::size_t size() const { return betas.size(); }
    friend bool operator==(const IndexSet&, const IndexSet&) = default;

    std::string label(std::size_t i) const
    {
        if (scalar) return "*";
        std::string s = "(";
        for (std::size_t j = 0; j < betas[i].size(); ++j) s += (j ? "," : "") + std::to_string(betas[i][j]);
        return s + ")";
    }
};

inline Rational beta_factorial(const std::vector<int>& b)
{
    Rational f = 1;
    for (int x : b) f *= factorial(x);
    return f;
}

/** Contraction weight of an internal index: the pairing dz^beta (d/dz)^beta = beta!/k!. */
inline Rational contraction_weight(const IndexSet& s, std::size_t i)
{
    if (s.scalar) return 1;
    return Rational(beta_factorial(s.betas[i]) / factorial(s.k));
}

/** Hermitian Sym^k metric on dz^beta: scale^k beta!/k!, scale = |dz_i|^2. */
struct SymMetric {
    Rational scale = 2;
    Rational weight(int k, const std::vector<int>& beta) const
    {
        Rational s = 1;
        for (int i = 0; i < k; ++i) s *= scale;
        return Rational(s * beta_factorial(beta) / factorial(k));
    }
};

class JetKernel {
public:
    JetKernel() = default;
    JetKernel(KernelBase base, IndexSet rows, IndexSet cols)
        : base_(base), rows_(std::move(rows)), cols_(std::move(cols)),
          entries_(rows_.size(), std::vector<MultiPoly>(cols_.size(), MultiPoly(base.n)))
    {
    }
    static JetKernel scalar(const PolyKernel& k)
    {
        JetKernel j(k.base, IndexSet::star(), IndexSet::star());
        j.set(0, 0, k.amp);
        return j;
    }

    const KernelBase& base() const { return base_; }
    const IndexSet& rows() const { return rows_; }
    const IndexSet& cols() const { return cols_; }
    std::size_t nrows() const { return rows_.size(); }
    std::size_t ncols() const { return cols_.size(); }
    const MultiPoly& amp(std::size_t r, std::size_t c) const { return entries_.at(r).at(c); }
    PolyKernel entry(std::size_t r, std::size_t c) const { return PolyKernel(base_, amp(r, c)); }

    void set(std::size_t r, std::size_t c, MultiPoly a)
    {
        if (!support_is_legal(base_, a)) throw SupportError("amplitude support illegal for base " + base_.tag());
        entries_.at(r).at(c) = std::move(a);
    }

    bool is_zero() const
    {
        for (auto& row : entries_)
            for (auto& a : row)
                if (!a.is_zero()) return false;
        return true;
    }

    JetKernel scale(const PiCoeff& c) const
    {
        JetKernel r = *this;
        for (auto& row : r.entries_)
            for (auto& a : row) a = a.scale(c);
        return r;
    }

    friend JetKernel operator+(const JetKernel& a, const JetKernel& b)
    {
        a.check_same_shape(b);
        JetKernel r = a;
        for (std::size_t i = 0; i < a.nrows(); ++i)
            for (std::size_t j = 0; j < a.ncols(); ++j) r.entries_[i][j] = a.entries_[i][j] + b.entries_[i][j];
        return r;
    }
    friend JetKernel operator-(const JetKernel& a, const JetKernel& b) { return a + b.scale(PiCoeff(-1)); }

    friend bool operator==(const JetKernel& a, const JetKernel& b)
    {
        return a.base_ == b.base_ && a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.entries_ == b.entries_;
    }

    int degree() const
    {
        int d = -1;
        for (auto& row : entries_)
            for (auto& a : row) d = std::max(d, a.degree());
        return d;
    }

    Parity parity() const
    {
        Parity p = Parity::Zero;
        for (auto& row : entries_)
            for (auto& a : row) {
                Parity q = a.parity();
                if (q == Parity::Zero) continue;
                if (p == Parity::Zero) p = q;
                else if (p != q) return Parity::Neither;
            }
        return p;
    }

    std::string pretty() const
    {
        if (nrows() == 1 && ncols() == 1) return amp(0, 0).pretty() + " | " + base_.tag();
        std::string s;
        for (std::size_t i = 0; i < nrows(); ++i)
            for (std::size_t j = 0; j < ncols(); ++j) {
                if (amp(i, j).is_zero()) continue;
                s += "[" + rows_.label(i) + "," + cols_.label(j) + "] " + amp(i, j).pretty() + " | " + base_.tag() + "\n";
            }
        return s.empty() ? "0 | " + base_.tag() + "\n" : s;
    }

    void check_same_shape(const JetKernel& b) const
    {
        if (!(base_ == b.base_) || !(rows_ == b.rows_) || !(cols_ == b.cols_))
            throw CompositionError("kernel shapes differ");
    }

private:
    KernelBase base_;
    IndexSet rows_, cols_;
    std::vector<std::vector<MultiPoly>> entries_;
};

// ---------------------------------------------------------------------------
// Builders

inline MultiPoly normal_monomial(int n, int m, Family f, const std::vector<int>& beta)
{
    Monomial mono;
    for (std::size_t q = 0; q < beta.size(); ++q) mono.e[Var{f, m + 1 + int(q)}.slot()] = std::uint8_t(beta[q]);
    return MultiPoly::monomial(n, mono, PiCoeff(1));
}

/** pi^k sum_{|beta|=k} z_N^beta zb'_N^beta / beta! */
inline MultiPoly perp_amplitude(int n, int m, int k)
{
    MultiPoly a(n);
    for (auto& b : IndexSet::sym(n - m, k).betas) {
        PiCoeff c(GaussRational(Rational(1 / beta_factorial(b))), k);
        a += (normal_monomial(n, m, Family::Z, b) * normal_monomial(n, m, Family::Zpb, b)).scale(c);
    }
    return a;
}

inline void check_nmk(int n, int m, int k)
{
    if (m > n) throw DimensionError("m > n");
    if (m < 0 || n > kMaxDim) throw DimensionError("dimension out of range");
    if (k < 0) throw std::invalid_argument("negative jet order");
}

inline JetKernel model_P(int n)
{
    check_nmk(n, n, 0);
    return JetKernel::scalar(PolyKernel(KernelBase::make(BaseKind::BargmannProj, n, n), MultiPoly::constant(n, 1)));
}

inline JetKernel model_Pperp(int n, int m, int k)
{
    check_nmk(n, m, k);
    return JetKernel::scalar(PolyKernel(KernelBase::make(BaseKind::OrthoProj0, n, m), perp_amplitude(n, m, k)));
}

/** Columns in the dual basis (d/dz_N)^beta. */
inline JetKernel model_E(int n, int m, int k)
{
    check_nmk(n, m, k);
    IndexSet cols = IndexSet::sym(n - m, k);
    JetKernel j(KernelBase::make(BaseKind::Ext0, n, m), IndexSet::star(), cols);
    for (std::size_t c = 0; c < cols.size(); ++c) {
        PiCoeff w(Rational(1 / beta_factorial(cols.betas[c])));
        j.set(0, c, normal_monomial(n, m, Family::Z, cols.betas[c]).scale(w));
    }
    return j;
}

/** Rows in the basis dz_N^beta. */
inline JetKernel model_Res(int n, int m, int k)
{
    check_nmk(n, m, k);
    IndexSet rows = IndexSet::sym(n - m, k);
    JetKernel j(KernelBase::make(BaseKind::Res0, n, m), rows, IndexSet::star());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        PiCoeff w(GaussRational(Rational(factorial(k) / beta_factorial(rows.betas[r]))), k);
        j.set(r, 0, normal_monomial(n, m, Family::Zpb, rows.betas[r]).scale(w));
    }
    return j;
}

/** P_m Id on Sym^k: entries delta k!/beta! in the dz^beta (x) (d/dz)^beta basis. */
inline JetKernel model_sym_identity(int n, int m, int k)
{
    check_nmk(n, m, k);
    IndexSet s = IndexSet::sym(n - m, k);
    JetKernel j(KernelBase::make(BaseKind::SubProj, n, m), s, s);
    for (std::size_t i = 0; i < s.size(); ++i)
        j.set(i, i, MultiPoly::constant(n, PiCoeff(Rational(factorial(k) / beta_factorial(s.betas[i])))));
    return j;
}

enum class ModelKind { P, Pperp, E, Res, LogBK };

/** For LogBK the kernel is P_n and `minus` lists the P^{perp,l}, l < k, to subtract. */
struct ModelKernel {
    JetKernel kernel;
    std::vector<JetKernel> minus;
};

inline ModelKernel build_model_kernel(ModelKind kind, int n, int m, int k)
{
    check_nmk(n, m, k);
    switch (kind) {
    case ModelKind::P: return {model_P(n), {}};
    case ModelKind::Pperp: return {model_Pperp(n, m, k), {}};
    case ModelKind::E: return {model_E(n, m, k), {}};
    case ModelKind::Res: return {model_Res(n, m, k), {}};
    case ModelKind::LogBK: {
        ModelKernel r{model_P(n), {}};
        for (int l = 0; l < k; ++l) r.minus.push_back(model_Pperp(n, m, l));
        return r;
    }
    }
    throw std::invalid_argument("unknown model kind");
}

// ---------------------------------------------------------------------------
// Composition calculus

namespace detail {

/** Integrate out W in P(Z, W, Z'') against the Gaussian of the composed bases. */
inline MultiPoly integrate_intermediate(const MultiPoly& P, int tangential, int inter_dim)
{
    MultiPoly out(P.dim());
    struct Piece {
        Monomial mono;
        PiCoeff c;
    };
    for (auto& [mono, c] : P.terms()) {
        Monomial rest = mono;
        for (int i = 1; i <= kMaxDim; ++i) {
            rest.e[Var{Family::W, i}.slot()] = 0;
            rest.e[Var{Family::Wb, i}.slot()] = 0;
        }
        std::vector<Piece> acc{{rest, c}};
        bool dead = false;
        for (int i = 1; i <= kMaxDim && !dead; ++i) {
            int a = mono.exp(Var{Family::W, i});
            int b = mono.exp(Var{Family::Wb, i});
            if (!a && !b) continue;
            if (i > inter_dim) throw SupportError("intermediate variable beyond the integration domain");
            if (i <= tangential) {
                std::vector<Piece> next;
                for (auto& pc : acc)
                    for (int k = 0; k <= std::min(a, b); ++k) {
                        Rational w = factorial(a) * factorial(b) / (factorial(k) * factorial(a - k) * factorial(b - k));
                        Piece q{pc.mono, pc.c * PiCoeff(GaussRational(w), -k)};
                        q.mono.e[Var{Family::Z, i}.slot()] += std::uint8_t(a - k);
                        q.mono.e[Var{Family::Zpb, i}.slot()] += std::uint8_t(b - k);
                        next.push_back(q);
                    }
                acc.swap(next);
            } else {
                if (a != b) { dead = true; break; }
                PiCoeff mom(GaussRational(factorial(a)), -a);
                for (auto& pc : acc) pc.c = pc.c * mom;
            }
        }
        if (dead) continue;
        for (auto& pc : acc) out.add_term(pc.mono, pc.c);
    }
    return out;
}

inline std::pair<MultiPoly, KernelBase> integrate_pair(const PolyKernel& k1, const PolyKernel& k2)
{
    const KernelBase& b1 = k1.base;
    const KernelBase& b2 = k2.base;
    if (b1.n != b2.n || b1.tangential() != b2.tangential())
        throw CompositionError("bases " + b1.tag() + " and " + b2.tag() + " do not share dimensions");
    if (b1.right_dim() != b2.left_dim())
        throw CompositionError("intermediate domains differ for " + b1.tag() + " and " + b2.tag());
    MultiPoly a1 = k1.amp.rename({{Family::Zp, Family::W}, {Family::Zpb, Family::Wb}});
    MultiPoly a2 = k2.amp.rename({{Family::Z, Family::W}, {Family::Zb, Family::Wb}});
    MultiPoly amp = integrate_intermediate(a1 * a2, b1.tangential(), b1.right_dim());
    bool bargmann = b1.kind == BaseKind::BargmannProj && b2.kind == BaseKind::BargmannProj;
    return {amp, base_of_profile(b1.n, b1.tangential(), b1.left_normal(), b2.right_normal(), bargmann)};
}

/** Split a polynomial by its monomial part in the normal variables of two families. */
inline std::map<Monomial, MultiPoly, GrLexGreater> split_normal(const MultiPoly& a, int m, Family f, Family fb)
{
    std::map<Monomial, MultiPoly, GrLexGreater> parts;
    for (auto& [mono, c] : a.terms()) {
        Monomial normal, rest = mono;
        for (int i = m + 1; i <= kMaxDim; ++i) {
            for (Family g : {f, fb}) {
                int s = Var{g, i}.slot();
                normal.e[s] = mono.e[s];
                rest.e[s] = 0;
            }
        }
        auto it = parts.try_emplace(normal, MultiPoly(a.dim())).first;
        it->second.add_term(rest, c);
    }
    return parts;
}

} // namespace detail

/** K_{n,m}[A1, A2] for two kernels over the same projector base. */
inline PolyKernel compose_K(const PolyKernel& k1, const PolyKernel& k2)
{
    if (!(k1.base == k2.base)) throw CompositionError("base mismatch: " + k1.base.tag() + " vs " + k2.base.tag());
    BaseKind kd = k1.base.kind;
    if (kd != BaseKind::OrthoProj0 && kd != BaseKind::SubProj && kd != BaseKind::BargmannProj)
        throw CompositionError("compose_K needs a projector base, got " + k1.base.tag());
    auto [amp, base] = detail::integrate_pair(k1, k2);
    return PolyKernel(base, amp);
}

/** K^{EP}: A = sum_alpha Z_N^alpha A^alpha, then K_{m,m} per alpha. */
inline PolyKernel compose_K_EP_scalar(const PolyKernel& e, const PolyKernel& d)
{
    if (e.base.kind != BaseKind::Ext0 || d.base.kind != BaseKind::SubProj)
        throw CompositionError("EP composition needs Ext0 then SubProj");
    if (e.base.n != d.base.n || e.base.m != d.base.m) throw CompositionError("EP dimension mismatch");
    KernelBase sub = d.base;
    MultiPoly out(e.base.n);
    for (auto& [alpha, part] : detail::split_normal(e.amp, e.base.m, Family::Z, Family::Zb)) {
        PolyKernel piece = compose_K(PolyKernel(sub, part), d);
        out += piece.amp * MultiPoly::monomial(e.base.n, alpha, PiCoeff(1));
    }
    return PolyKernel(e.base, out);
}

/** K^{ER}: double split in Z_N and Z'_N, K_{m,m} per pair. */
inline PolyKernel compose_K_ER_scalar(const PolyKernel& e, const PolyKernel& r)
{
    if (e.base.kind != BaseKind::Ext0 || r.base.kind != BaseKind::Res0)
        throw CompositionError("ER composition needs Ext0 then Res0");
    if (e.base.n != r.base.n || e.base.m != r.base.m) throw CompositionError("ER dimension mismatch");
    int n = e.base.n, m = e.base.m;
    KernelBase sub = KernelBase::make(BaseKind::SubProj, n, m);
    MultiPoly out(n);
    auto As = detail::split_normal(e.amp, m, Family::Z, Family::Zb);
    auto Cs = detail::split_normal(r.amp, m, Family::Zp, Family::Zpb);
    for (auto& [alpha, A] : As)
        for (auto& [alpha2, C] : Cs) {
            PolyKernel piece = compose_K(PolyKernel(sub, A), PolyKernel(sub, C));
            out += piece.amp * MultiPoly::monomial(n, alpha, PiCoeff(1)) * MultiPoly::monomial(n, alpha2, PiCoeff(1));
        }
    return PolyKernel(KernelBase::make(BaseKind::OrthoProj0, n, m), out);
}

/** Res o E: the normal variables integrate against pure Gaussian moments. */
inline PolyKernel compose_RE_scalar(const PolyKernel& r, const PolyKernel& e)
{
    if (r.base.kind != BaseKind::Res0 || e.base.kind != BaseKind::Ext0)
        throw CompositionError("RE composition needs Res0 then Ext0");
    auto [amp, base] = detail::integrate_pair(r, e);
    return PolyKernel(base, amp);
}

inline MultiPoly conj_swap(const MultiPoly& a)
{
    return a.conj_coeffs().rename({{Family::Z, Family::Zpb}, {Family::Zb, Family::Zp}, {Family::Zp, Family::Zb}, {Family::Zpb, Family::Z}});
}

inline KernelBase adjoint_base(const KernelBase& b)
{
    switch (b.kind) {
    case BaseKind::Ext0: return KernelBase::make(BaseKind::Res0, b.n, b.m);
    case BaseKind::Res0: return KernelBase::make(BaseKind::Ext0, b.n, b.m);
    default: return b;
    }
}

/**
 * Adjoint for the Sym^k metric: a Sym row (basis dz^beta) becomes a dual column with
 * factor w_beta k!/beta!, a dual column becomes a row with factor (beta!/k!)/w_beta.
 */
inline JetKernel kernel_adjoint(const JetKernel& k, const SymMetric& metric = {})
{
    JetKernel r(adjoint_base(k.base()), k.cols(), k.rows());
    for (std::size_t i = 0; i < k.nrows(); ++i)
        for (std::size_t j = 0; j < k.ncols(); ++j) {
            Rational f = 1;
            if (!k.rows().scalar) {
                auto& b = k.rows().betas[i];
                f *= metric.weight(k.rows().k, b) * factorial(k.rows().k) / beta_factorial(b);
            }
            if (!k.cols().scalar) {
                auto& b = k.cols().betas[j];
                f *= beta_factorial(b) / factorial(k.cols().k) / metric.weight(k.cols().k, b);
            }
            r.set(j, i, conj_swap(k.amp(i, j)).scale(PiCoeff(f)));
        }
    return r;
}

inline PolyKernel kernel_adjoint(const PolyKernel& k) { return PolyKernel(adjoint_base(k.base), conj_swap(k.amp)); }

enum class PairKind { Projector, EP, ER, RE, SubRes };

inline PairKind classify_pair(const KernelBase& a, const KernelBase& b)
{
    auto ka = a.kind, kb = b.kind;
    if (ka == kb && (ka == BaseKind::OrthoProj0 || ka == BaseKind::SubProj || ka == BaseKind::BargmannProj))
        return PairKind::Projector;
    if (ka == BaseKind::Ext0 && kb == BaseKind::SubProj) return PairKind::EP;
    if (ka == BaseKind::Ext0 && kb == BaseKind::Res0) return PairKind::ER;
    if (ka == BaseKind::Res0 && kb == BaseKind::Ext0) return PairKind::RE;
    if (ka == BaseKind::SubProj && kb == BaseKind::Res0) return PairKind::SubRes;
    throw CompositionError("no composition rule for " + a.tag() + " after " + b.tag());
}

inline PolyKernel compose_scalar(const PolyKernel& a, const PolyKernel& b)
{
    switch (classify_pair(a.base, b.base)) {
    case PairKind::Projector: return compose_K(a, b);
    case PairKind::EP: return compose_K_EP_scalar(a, b);
    case PairKind::ER: return compose_K_ER_scalar(a, b);
    case PairKind::RE: return compose_RE_scalar(a, b);
    case PairKind::SubRes: {
        // (D o C)* = C* o D*, an Ext0 o SubProj pair
        PolyKernel ep = compose_K_EP_scalar(kernel_adjoint(b), kernel_adjoint(a));
        return kernel_adjoint(ep);
    }
    }
    throw CompositionError("unreachable");
}

inline KernelBase composed_base(const KernelBase& a, const KernelBase& b)
{
    classify_pair(a, b);
    if (a.n != b.n || a.tangential() != b.tangential()) throw CompositionError("dimension mismatch");
    bool bargmann = a.kind == BaseKind::BargmannProj && b.kind == BaseKind::BargmannProj;
    return base_of_profile(a.n, a.tangential(), a.left_normal(), b.right_normal(), bargmann);
}

/** Matrix composition; an internal Sym index contracts with weight beta!/k!. */
inline JetKernel compose(const JetKernel& a, const JetKernel& b)
{
    if (!(a.cols() == b.rows())) throw CompositionError("shape mismatch: inner index sets differ");
    JetKernel r(composed_base(a.base(), b.base()), a.rows(), b.cols());
    for (std::size_t i = 0; i < a.nrows(); ++i)
        for (std::size_t j = 0; j < b.ncols(); ++j) {
            MultiPoly s(a.base().n);
            for (std::size_t t = 0; t < a.ncols(); ++t) {
                if (a.amp(i, t).is_zero() || b.amp(t, j).is_zero()) continue;
                PolyKernel c = compose_scalar(a.entry(i, t), b.entry(t, j));
                s += c.amp.scale(PiCoeff(contraction_weight(a.cols(), t)));
            }
            r.set(i, j, s);
        }
    return r;
}

inline JetKernel compose_K_EP(const JetKernel& a, const JetKernel& b)
{
    if (a.base().kind != BaseKind::Ext0 || b.base().kind != BaseKind::SubProj)
        throw CompositionError("EP composition needs Ext0 then SubProj");
    return compose(a, b);
}

inline JetKernel compose_K_ER(const JetKernel& a, const JetKernel& b)
{
    if (a.base().kind != BaseKind::Ext0 || b.base().kind != BaseKind::Res0)
        throw CompositionError("ER composition needs Ext0 then Res0");
    return compose(a, b);
}

// ---------------------------------------------------------------------------
// Numerics

inline Eigen::MatrixXcd kernel_eval(const JetKernel& k, const std::vector<cplx>& Z, const std::vector<cplx>& Zp)
{
    Eigen::MatrixXcd M(k.nrows(), k.ncols());
    cplx g = k.base().eval(Z, Zp);
    Assignment at = Assignment::points(Z, Zp);
    for (std::size_t i = 0; i < k.nrows(); ++i)
        for (std::size_t j = 0; j < k.ncols(); ++j) M(i, j) = k.amp(i, j).eval(at) * g;
    return M;
}

/** Points of R^{2n} as (x1, y1, x2, y2, ...). */
inline std::vector<cplx> from_real(const std::vector<double>& x)
{
    std::vector<cplx> z(x.size() / 2);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = {x[2 * i], x[2 * i + 1]};
    return z;
}

struct OracleResult {
    std::vector<Eigen::MatrixXcd> values;
    double doubling_delta = 0;
    bool order_ok = true;
};

namespace detail {

using NumPoly = std::map<std::vector<int>, cplx>;

/** Substitute numeric values for one side, keeping the other side as symbols w, wb. */
inline NumPoly partial_numeric(const MultiPoly& a, bool keep_right, const std::vector<cplx>& fixed, int d)
{
    NumPoly out;
    for (auto& [mono, c] : a.terms()) {
        cplx v = c.eval();
        std::vector<int> ex(2 * d, 0);
        Family fz = keep_right ? Family::Z : Family::Zp;
        Family fzb = keep_right ? Family::Zb : Family::Zpb;
        Family kz = keep_right ? Family::Zp : Family::Z;
        Family kzb = keep_right ? Family::Zpb : Family::Zb;
        for (int i = 1; i <= kMaxDim; ++i) {
            int x = mono.exp(Var{fz, i}), y = mono.exp(Var{fzb, i});
            if (x || y) {
                if (i > int(fixed.size())) throw DimensionError("sample point too short");
                v *= std::pow(fixed[i - 1], x) * std::pow(std::conj(fixed[i - 1]), y);
            }
            int s = mono.exp(Var{kz, i}), t = mono.exp(Var{kzb, i});
            if (s || t) {
                if (i > d) throw SupportError("intermediate variable beyond the integration domain");
                ex[2 * (i - 1)] = s;
                ex[2 * (i - 1) + 1] = t;
            }
        }
        out[ex] += v;
    }
    return out;
}

/** Tensor Gauss-Hermite table T(a,b) of w^a wb^b exp(pi s wb + pi w t) against e^{-pi|w|^2} on one complex coordinate. */
inline Eigen::MatrixXcd gh_moment_table(int order, int maxdeg, cplx s, cplx t)
{
    const quad::Rule& r = quad::hermite(order);
    const double pi = std::numbers::pi;
    const double sc = 1.0 / std::sqrt(pi);
    Eigen::MatrixXcd T = Eigen::MatrixXcd::Zero(maxdeg + 1, maxdeg + 1);
    std::vector<cplx> pw(maxdeg + 1), pwb(maxdeg + 1);
    for (std::size_t j = 0; j < r.nodes.size(); ++j)
        for (std::size_t l = 0; l < r.nodes.size(); ++l) {
            cplx w(r.nodes[j] * sc, r.nodes[l] * sc);
            cplx f = r.weights[j] * r.weights[l] / pi * std::exp(pi * s * std::conj(w) + pi * w * t);
            pw[0] = pwb[0] = 1;
            for (int a = 1; a <= maxdeg; ++a) {
                pw[a] = pw[a - 1] * w;
                pwb[a] = pwb[a - 1] * std::conj(w);
            }
            for (int a = 0; a <= maxdeg; ++a) {
                cplx fa = f * pw[a];
                for (int b = 0; b <= maxdeg; ++b) T(a, b) += fa * pwb[b];
            }
        }
    return T;
}

inline cplx oracle_scalar(const PolyKernel& k1, const PolyKernel& k2, const std::vector<cplx>& Z,
                          const std::vector<cplx>& Zpp, const std::vector<Eigen::MatrixXcd>& tables)
{
    const KernelBase& b1 = k1.base;
    const KernelBase& b2 = k2.base;
    const double pi = std::numbers::pi;
    int d = b1.right_dim(), t = b1.tangential();
    NumPoly p1 = partial_numeric(k1.amp, true, Z, d);
    NumPoly p2 = partial_numeric(k2.amp, false, Zpp, d);
    cplx outer = 0;
    for (int i = 0; i < t; ++i) outer += -pi / 2 * (std::norm(Z[i]) + std::norm(Zpp[i]));
    if (b1.left_normal())
        for (int i = t; i < b1.n; ++i) outer += -pi / 2 * std::norm(Z[i]);
    if (b2.right_normal())
        for (int i = t; i < b2.n; ++i) outer += -pi / 2 * std::norm(Zpp[i]);
    cplx total = 0;
    for (auto& [e1, c1] : p1)
        for (auto& [e2, c2] : p2) {
            cplx v = c1 * c2;
            for (int i = 0; i < d; ++i) v *= tables[i](e1[2 * i] + e2[2 * i], e1[2 * i + 1] + e2[2 * i + 1]);
            total += v;
        }
    return total * std::exp(outer);
}

inline Eigen::MatrixXcd oracle_matrix(const JetKernel& a, const JetKernel& b, const std::vector<cplx>& Z,
                                      const std::vector<cplx>& Zpp, int order)
{
    const KernelBase& b1 = a.base();
    const KernelBase& b2 = b.base();
    if (b1.n != b2.n || b1.tangential() != b2.tangential() || b1.right_dim() != b2.left_dim())
        throw CompositionError("non-composable bases for the oracle");
    if (int(Z.size()) < b1.left_dim() || int(Zpp.size()) < b2.right_dim()) throw DimensionError("sample point too short");
    int d = b1.right_dim(), t = b1.tangential();
    int maxdeg = std::max(0, a.degree()) + std::max(0, b.degree());
    std::vector<Eigen::MatrixXcd> tables;
    for (int i = 0; i < d; ++i) {
        cplx s = i < t ? Z[i] : cplx(0), u = i < t ? std::conj(Zpp[i]) : cplx(0);
        tables.push_back(gh_moment_table(order, maxdeg, s, u));
    }
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(a.nrows(), b.ncols());
    for (std::size_t i = 0; i < a.nrows(); ++i)
        for (std::size_t j = 0; j < b.ncols(); ++j)
            for (std::size_t c = 0; c < a.ncols(); ++c)
                M(i, j) += contraction_weight(a.cols(), c).get_d() * oracle_scalar(a.entry(i, c), b.entry(c, j), Z, Zpp, tables);
    return M;
}

} // namespace detail

/** Numeric composition by tensor Gauss-Hermite, self-checked by doubling the order. */
inline OracleResult quadrature_oracle_compose(const JetKernel& a, const JetKernel& b,
                                              const std::vector<std::pair<std::vector<cplx>, std::vector<cplx>>>& samples,
                                              int order = 40, double tol = 1e-6)
{
    if (!(a.cols() == b.rows())) throw CompositionError("shape mismatch: inner index sets differ");
    OracleResult r;
    for (auto& [Z, Zpp] : samples) {
        Eigen::MatrixXcd v = detail::oracle_matrix(a, b, Z, Zpp, order);
        Eigen::MatrixXcd v2 = detail::oracle_matrix(a, b, Z, Zpp, 2 * order);
        double scale = std::max(1.0, v2.cwiseAbs().maxCoeff());
        r.doubling_delta = std::max(r.doubling_delta, (v - v2).cwiseAbs().maxCoeff() / scale);
        r.values.push_back(v);
    }
    r.order_ok = r.doubling_delta <= tol;
    return r;
}

// ---------------------------------------------------------------------------
// Second-order profiles

/** Coefficients a[q][i][j] of g(z_N, A(u)u) = sum a_{qij} z_{m+1+q} u_i u_j, u = zb_Y - zb'_Y. */
struct SecondFundamentalForm {
    int n = 0, m = 0;
    std::vector<std::vector<std::vector<GaussRational>>> a;

    static SecondFundamentalForm zero(int n, int m)
    {
        SecondFundamentalForm s{n, m, {}};
        s.a.assign(n - m, std::vector<std::vector<GaussRational>>(m, std::vector<GaussRational>(m)));
        return s;
    }
    void validate() const
    {
        if (int(a.size()) != n - m) throw DimensionError("second fundamental form: wrong normal size");
        for (auto& q : a) {
            if (int(q.size()) != m) throw DimensionError("second fundamental form: wrong tangent size");
            for (auto& row : q)
                if (int(row.size()) != m) throw DimensionError("second fundamental form: wrong tangent size");
        }
    }
};

/** g(z_N, A(zb_Y - zb'_Y)(zb_Y - zb'_Y)) */
inline MultiPoly sff_holomorphic_normal(const SecondFundamentalForm& A)
{
    A.validate();
    int n = A.n, m = A.m;
    MultiPoly s(n);
    for (int q = 0; q < n - m; ++q)
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                if (A.a[q][i][j].is_zero()) continue;
                MultiPoly ui = MultiPoly::var(n, zb(i + 1)) - MultiPoly::var(n, zpb(i + 1));
                MultiPoly uj = MultiPoly::var(n, zb(j + 1)) - MultiPoly::var(n, zpb(j + 1));
                s += (MultiPoly::var(n, z(m + 1 + q)) * ui * uj).scale(PiCoeff(A.a[q][i][j]));
            }
    return s;
}

/** g(zb'_N, A(z_Y - z'_Y)(z_Y - z'_Y)) */
inline MultiPoly sff_antiholomorphic_normal(const SecondFundamentalForm& A)
{
    A.validate();
    int n = A.n, m = A.m;
    MultiPoly s(n);
    for (int q = 0; q < n - m; ++q)
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                if (A.a[q][i][j].is_zero()) continue;
                MultiPoly ui = MultiPoly::var(n, z(i + 1)) - MultiPoly::var(n, zp(i + 1));
                MultiPoly uj = MultiPoly::var(n, z(j + 1)) - MultiPoly::var(n, zp(j + 1));
                s += (MultiPoly::var(n, zpb(m + 1 + q)) * ui * uj).scale(PiCoeff(A.a[q][i][j].conj()));
            }
    return s;
}

enum class ProfileKind { E, Perp, Res };

inline JetKernel build_second_order_profile(ProfileKind kind, int k, const SecondFundamentalForm& A)
{
    A.validate();
    int n = A.n, m = A.m;
    check_nmk(n, m, k);
    switch (kind) {
    case ProfileKind::E: {
        JetKernel e = model_E(n, m, k);
        MultiPoly g = sff_holomorphic_normal(A);
        JetKernel r(e.base(), e.rows(), e.cols());
        for (std::size_t c = 0; c < e.ncols(); ++c) r.set(0, c, g * e.amp(0, c));
        return r;
    }
    case ProfileKind::Perp: {
        MultiPoly g = sff_holomorphic_normal(A) + sff_antiholomorphic_normal(A);
        MultiPoly amp = (g * perp_amplitude(n, m, k)).scale(PiCoeff::pi_pow(1));
        return JetKernel::scalar(PolyKernel(KernelBase::make(BaseKind::OrthoProj0, n, m), amp));
    }
    case ProfileKind::Res: {
        JetKernel res = model_Res(n, m, k);
        MultiPoly g = sff_antiholomorphic_normal(A).scale(PiCoeff::pi_pow(1));
        JetKernel r(res.base(), res.rows(), res.cols());
        for (std::size_t i = 0; i < res.nrows(); ++i) r.set(i, 0, g * res.amp(i, 0));
        return r;
    }
    }
    throw std::invalid_argument("unknown profile kind");
}

} // namespace bjet
