#pragma once

/**
 * @file fock_oracle.hpp
 * @brief Truncated Bargmann-space matrices of the model operators, computed with exact Gaussian moments.
 */

#include "bjet/model_kernels.hpp"

#include <Eigen/Dense>

namespace bjet {

/** Multi-indices beta in N^n with |beta| <= D, ordered by degree then lexicographically. */
struct FockBasis {
    int n = 0;
    int D = 0;
    std::vector<std::vector<int>> elements;

    std::size_t size() const { return elements.size(); }

    /** <z^beta, z^beta> = beta!/pi^|beta| against exp(-pi|z|^2). */
    PiCoeff norm2(std::size_t i) const
    {
        int deg = 0;
        for (int x : elements[i]) deg += x;
        return PiCoeff(GaussRational(beta_factorial(elements[i])), -deg);
    }

    std::ptrdiff_t index_of(const std::vector<int>& b) const
    {
        auto it = std::find(elements.begin(), elements.end(), b);
        return it == elements.end() ? -1 : it - elements.begin();
    }
};

inline FockBasis fock_basis(int n, int D)
{
    if (D < 0) throw std::invalid_argument("negative cutoff");
    FockBasis f{n, D, {}};
    for (int d = 0; d <= D; ++d) {
        auto s = IndexSet::sym(n, d);
        for (auto& b : s.betas) f.elements.push_back(b);
    }
    return f;
}

/** A Fock basis, optionally tensored with the dz^beta basis of Sym^k. */
struct FockSpace {
    FockBasis basis;
    IndexSet sym = IndexSet::star();

    std::size_t size() const { return basis.size() * sym.size(); }
    std::size_t index(std::size_t mono, std::size_t s) const { return mono * sym.size() + s; }

    PiCoeff gram(std::size_t i, const SymMetric& metric = {}) const
    {
        std::size_t mono = i / sym.size(), s = i % sym.size();
        PiCoeff g = basis.norm2(mono);
        if (!sym.scalar) g = g * PiCoeff(metric.weight(sym.k, sym.betas[s]));
        return g;
    }
    friend bool operator==(const FockSpace& a, const FockSpace& b)
    {
        return a.basis.n == b.basis.n && a.basis.D == b.basis.D && a.sym == b.sym;
    }
};

using ExactMatrix = std::vector<std::vector<PiCoeff>>;

inline ExactMatrix exact_zero(std::size_t r, std::size_t c) { return ExactMatrix(r, std::vector<PiCoeff>(c)); }

inline ExactMatrix exact_identity(std::size_t n)
{
    ExactMatrix I = exact_zero(n, n);
    for (std::size_t i = 0; i < n; ++i) I[i][i] = PiCoeff(1);
    return I;
}

inline ExactMatrix exact_mul(const ExactMatrix& a, const ExactMatrix& b)
{
    std::size_t r = a.size(), inner = b.size(), c = inner ? b[0].size() : 0;
    if (r && a[0].size() != inner) throw DimensionError("exact matrix shapes differ");
    ExactMatrix out = exact_zero(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t t = 0; t < inner; ++t) {
            if (a[i][t].is_zero()) continue;
            for (std::size_t j = 0; j < c; ++j)
                if (!b[t][j].is_zero()) out[i][j] += a[i][t] * b[t][j];
        }
    return out;
}

inline ExactMatrix exact_add(const ExactMatrix& a, const ExactMatrix& b)
{
    ExactMatrix out = a;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[i].size(); ++j) out[i][j] += b.at(i).at(j);
    return out;
}

inline ExactMatrix exact_scale(const ExactMatrix& a, const PiCoeff& c)
{
    ExactMatrix out = a;
    for (auto& row : out)
        for (auto& x : row) x = x * c;
    return out;
}

/**
 * Operator matrix. `coeff` is exact in the monomial basis: column j holds the expansion of the
 * image of the j-th basis element. `orthonormal()` gives <K e_j, e_i> for the normalized basis.
 */
struct OperatorMatrix {
    FockSpace rows, cols;
    ExactMatrix coeff;

    /** <K u_j, u_i> for the unnormalized monomial basis u. */
    ExactMatrix gram_entries(const SymMetric& metric = {}) const
    {
        ExactMatrix S = coeff;
        for (std::size_t i = 0; i < S.size(); ++i) {
            PiCoeff g = rows.gram(i, metric);
            for (auto& x : S[i]) x = x * g;
        }
        return S;
    }

    Eigen::MatrixXcd orthonormal(const SymMetric& metric = {}) const
    {
        Eigen::MatrixXcd M(coeff.size(), cols.size());
        for (std::size_t i = 0; i < coeff.size(); ++i) {
            double gi = rows.gram(i, metric).eval().real();
            for (std::size_t j = 0; j < cols.size(); ++j) {
                double gj = cols.gram(j, metric).eval().real();
                M(i, j) = coeff[i][j].eval() * std::sqrt(gi / gj);
            }
        }
        return M;
    }

    /** Exact adjoint: G_cols^{-1} coeff^H G_rows. */
    OperatorMatrix adjoint(const SymMetric& metric = {}) const
    {
        OperatorMatrix r{cols, rows, exact_zero(cols.size(), rows.size())};
        for (std::size_t i = 0; i < cols.size(); ++i) {
            PiCoeff gi = cols.gram(i, metric).inverse();
            for (std::size_t j = 0; j < rows.size(); ++j)
                if (!coeff[j][i].is_zero()) r.coeff[i][j] = gi * coeff[j][i].conj() * rows.gram(j, metric);
        }
        return r;
    }

    friend OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b)
    {
        if (!(a.cols == b.rows)) throw DimensionError("operator spaces do not match");
        return {a.rows, b.cols, exact_mul(a.coeff, b.coeff)};
    }
    friend OperatorMatrix operator+(const OperatorMatrix& a, const OperatorMatrix& b)
    {
        if (!(a.rows == b.rows) || !(a.cols == b.cols)) throw DimensionError("operator spaces do not match");
        return {a.rows, a.cols, exact_add(a.coeff, b.coeff)};
    }
    OperatorMatrix scale(const PiCoeff& c) const { return {rows, cols, exact_scale(coeff, c)}; }
    friend bool operator==(const OperatorMatrix& a, const OperatorMatrix& b)
    {
        return a.rows == b.rows && a.cols == b.cols && a.coeff == b.coeff;
    }
};

namespace detail {

/**
 * Image of z'^gamma e^{-pi|z'|^2/2} under a scalar kernel entry: integrate z' out with
 * int w^a wb^b e^{-pi|w|^2 + pi z wb} = [a >= b] a!/(a-b)! pi^-b z^(a-b) on tangential
 * coordinates and Gaussian moments on normal ones. Returns the polynomial factor in Z.
 */
inline MultiPoly apply_to_monomial(const PolyKernel& k, const std::vector<int>& gamma)
{
    const KernelBase& b = k.base;
    int t = b.tangential();
    Monomial g;
    for (std::size_t i = 0; i < gamma.size(); ++i) g.e[zp(int(i) + 1).slot()] = std::uint8_t(gamma[i]);
    MultiPoly P = k.amp * MultiPoly::monomial(b.n, g, PiCoeff(1));
    MultiPoly out(b.n);
    for (auto& [mono, c] : P.terms()) {
        Monomial r = mono;
        PiCoeff coef = c;
        bool dead = false;
        for (int i = 1; i <= b.right_dim() && !dead; ++i) {
            int a = mono.exp(zp(i)), bb = mono.exp(zpb(i));
            r.e[zp(i).slot()] = r.e[zpb(i).slot()] = 0;
            if (i <= t) {
                if (a < bb) { dead = true; break; }
                coef = coef * PiCoeff(GaussRational(Rational(factorial(a) / factorial(a - bb))), -bb);
                r.e[z(i).slot()] += std::uint8_t(a - bb);
            } else {
                if (a != bb) { dead = true; break; }
                coef = coef * PiCoeff(GaussRational(factorial(a)), -a);
            }
        }
        if (!dead) out.add_term(r, coef);
    }
    return out;
}

} // namespace detail

/** Matrix of a model JetKernel between truncated spaces; throws if an image leaves the holomorphic span. */
inline OperatorMatrix kernel_to_matrix(const JetKernel& K, const FockSpace& in, const FockSpace& out)
{
    const KernelBase& b = K.base();
    if (in.basis.n != b.right_dim() || out.basis.n != b.left_dim()) throw DimensionError("basis dimension does not match kernel");
    if (!(in.sym == K.cols()) || !(out.sym == K.rows())) throw DimensionError("Sym index sets do not match kernel");
    OperatorMatrix M{out, in, exact_zero(out.size(), in.size())};
    for (std::size_t gi = 0; gi < in.basis.size(); ++gi)
        for (std::size_t c = 0; c < K.ncols(); ++c) {
            std::size_t col = in.index(gi, c);
            PiCoeff w(contraction_weight(K.cols(), c));
            for (std::size_t r = 0; r < K.nrows(); ++r) {
                if (K.amp(r, c).is_zero()) continue;
                MultiPoly img = detail::apply_to_monomial(K.entry(r, c), in.basis.elements[gi]);
                for (auto& [mono, coef] : img.terms()) {
                    std::vector<int> alpha(out.basis.n);
                    for (int i = 1; i <= kMaxDim; ++i) {
                        if (mono.exp(zb(i)) || mono.exp(zp(i)) || mono.exp(zpb(i)))
                            throw DimensionError("kernel image is not holomorphic");
                        if (i <= out.basis.n) alpha[i - 1] = mono.exp(z(i));
                        else if (mono.exp(z(i))) throw DimensionError("kernel image uses variables beyond the output space");
                    }
                    auto row = out.basis.index_of(alpha);
                    if (row < 0) continue;
                    M.coeff[out.index(std::size_t(row), r)][col] += coef * w;
                }
            }
        }
    return M;
}

/** Spaces for a kernel at cutoff D: Sym sides are truncated at D - k so images stay inside degree D. */
inline std::pair<FockSpace, FockSpace> default_spaces(const JetKernel& K, int D)
{
    const KernelBase& b = K.base();
    int kin = K.cols().scalar ? 0 : K.cols().k;
    int kout = K.rows().scalar ? 0 : K.rows().k;
    FockSpace in{fock_basis(b.right_dim(), D - kin), K.cols()};
    FockSpace out{fock_basis(b.left_dim(), D - kout), K.rows()};
    return {in, out};
}

inline OperatorMatrix kernel_to_matrix(const JetKernel& K, int D)
{
    auto [in, out] = default_spaces(K, D);
    return kernel_to_matrix(K, in, out);
}

/** Projector onto monomials of normal degree >= k, straight from the vanishing-order definition. */
inline OperatorMatrix vanishing_projector(int n, int m, int k, int D)
{
    FockSpace s{fock_basis(n, D), IndexSet::star()};
    OperatorMatrix M{s, s, exact_zero(s.size(), s.size())};
    for (std::size_t i = 0; i < s.size(); ++i) {
        int nd = 0;
        for (int q = m; q < n; ++q) nd += s.basis.elements[i][q];
        if (nd >= k) M.coeff[i][i] = PiCoeff(1);
    }
    return M;
}

/** Hermitian Sym^k pairing with weights 2^k beta!/k!. */
inline cplx sym_pairing(const IndexSet& s, const std::vector<cplx>& u, const std::vector<cplx>& v, const SymMetric& metric = {})
{
    if (u.size() != s.size() || v.size() != s.size()) throw DimensionError("Sym^k coefficient vectors have the wrong length");
    cplx acc = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        double w = s.scalar ? 1.0 : metric.weight(s.k, s.betas[i]).get_d();
        acc += w * u[i] * std::conj(v[i]);
    }
    return acc;
}

inline cplx sym_pairing(int normal_dim, int k, const std::vector<cplx>& u, const std::vector<cplx>& v)
{
    return sym_pairing(IndexSet::sym(normal_dim, k), u, v);
}

} // namespace bjet
