#pragma once

// Exact polynomials in z, zb, z', zb' with coefficients in Q(i)[pi, 1/pi].

#include <gmpxx.h>

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bjet {

using Rational = mpq_class;
using cplx = std::complex<double>;

struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnknownVariable : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MissingAssignment : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error {
    std::size_t position;
    ParseError(const std::string& msg, std::size_t pos)
        : std::runtime_error(msg + " at position " + std::to_string(pos)), position(pos) {}
};

inline std::string rat_str(const Rational& r)
{
    Rational c = r;
    c.canonicalize();
    return c.get_num().get_str() + "/" + c.get_den().get_str();
}

inline std::string rat_short(const Rational& r)
{
    if (r.get_den() == 1) return r.get_num().get_str();
    return r.get_num().get_str() + "/" + r.get_den().get_str();
}

/** Gaussian rational a + b i. */
struct GaussRational {
    Rational re{0}, im{0};

    GaussRational() = default;
    GaussRational(Rational r) : re(std::move(r)) { re.canonicalize(); }
    GaussRational(long r) : re(r) {}
    GaussRational(Rational r, Rational i) : re(std::move(r)), im(std::move(i))
    {
        re.canonicalize();
        im.canonicalize();
    }

    bool is_zero() const { return re == 0 && im == 0; }
    bool is_real() const { return im == 0; }
    GaussRational conj() const { return {re, -im}; }
    Rational norm2() const { return re * re + im * im; }
    cplx to_complex() const { return {re.get_d(), im.get_d()}; }

    GaussRational inverse() const
    {
        if (is_zero()) throw std::domain_error("inverse of zero Gaussian rational");
        Rational d = norm2();
        return {Rational(re / d), Rational(-im / d)};
    }

    friend GaussRational operator+(const GaussRational& a, const GaussRational& b)
    {
        return {Rational(a.re + b.re), Rational(a.im + b.im)};
    }
    friend GaussRational operator-(const GaussRational& a, const GaussRational& b)
    {
        return {Rational(a.re - b.re), Rational(a.im - b.im)};
    }
    friend GaussRational operator-(const GaussRational& a) { return {Rational(-a.re), Rational(-a.im)}; }
    friend GaussRational operator*(const GaussRational& a, const GaussRational& b)
    {
        return {Rational(a.re * b.re - a.im * b.im), Rational(a.re * b.im + a.im * b.re)};
    }
    friend bool operator==(const GaussRational& a, const GaussRational& b)
    {
        return a.re == b.re && a.im == b.im;
    }
    GaussRational& operator+=(const GaussRational& b) { re += b.re; im += b.im; return *this; }
    GaussRational& operator*=(const GaussRational& b) { *this = *this * b; return *this; }

    std::string canonical() const { return "(" + rat_str(re) + " + " + rat_str(im) + " i)"; }
};

/** Laurent polynomial in pi over Gaussian rationals. */
class PiCoeff {
public:
    PiCoeff() = default;
    PiCoeff(long v) { if (v != 0) terms_[0] = GaussRational(v); }
    PiCoeff(const Rational& v) { if (v != 0) terms_[0] = GaussRational(v); }
    PiCoeff(const GaussRational& v, int pi_exp = 0) { if (!v.is_zero()) terms_[pi_exp] = v; }

    static PiCoeff pi_pow(int j) { return PiCoeff(GaussRational(1), j); }
    static PiCoeff imag_unit() { return PiCoeff(GaussRational(0, 1)); }

    const std::map<int, GaussRational>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    bool is_monomial() const { return terms_.size() == 1; }
    int min_pi_exponent() const { return terms_.empty() ? 0 : terms_.begin()->first; }

    PiCoeff conj() const
    {
        PiCoeff r;
        for (auto& [j, g] : terms_) r.terms_[j] = g.conj();
        return r;
    }

    /** Only monomials c*pi^j are invertible in this ring. */
    PiCoeff inverse() const
    {
        if (!is_monomial()) throw std::domain_error("PiCoeff inverse requires a single pi-power");
        auto& [j, g] = *terms_.begin();
        return PiCoeff(g.inverse(), -j);
    }

    cplx eval(double pi = std::numbers::pi) const
    {
        cplx s = 0;
        for (auto& [j, g] : terms_) s += g.to_complex() * std::pow(pi, j);
        return s;
    }

    PiCoeff& operator+=(const PiCoeff& b)
    {
        for (auto& [j, g] : b.terms_) {
            auto it = terms_.find(j);
            if (it == terms_.end()) {
                terms_.emplace(j, g);
            } else {
                it->second += g;
                if (it->second.is_zero()) terms_.erase(it);
            }
        }
        return *this;
    }
    friend PiCoeff operator+(PiCoeff a, const PiCoeff& b) { a += b; return a; }
    friend PiCoeff operator-(const PiCoeff& a)
    {
        PiCoeff r;
        for (auto& [j, g] : a.terms_) r.terms_[j] = -g;
        return r;
    }
    friend PiCoeff operator-(const PiCoeff& a, const PiCoeff& b) { return a + (-b); }
    friend PiCoeff operator*(const PiCoeff& a, const PiCoeff& b)
    {
        PiCoeff r;
        for (auto& [ja, ga] : a.terms_)
            for (auto& [jb, gb] : b.terms_) r += PiCoeff(ga * gb, ja + jb);
        return r;
    }
    PiCoeff& operator*=(const PiCoeff& b) { *this = *this * b; return *this; }
    friend bool operator==(const PiCoeff& a, const PiCoeff& b) { return a.terms_ == b.terms_; }

    /** Terms in descending pi-exponent, each as (a/b + c/d i)·pi^j. */
    std::string canonical() const
    {
        if (terms_.empty()) return "(0/1 + 0/1 i)·pi^0";
        std::string s;
        for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
            if (!s.empty()) s += " + ";
            s += it->second.canonical() + "·pi^" + std::to_string(it->first);
        }
        return terms_.size() > 1 ? "[" + s + "]" : s;
    }

    std::string pretty() const;

private:
    std::map<int, GaussRational> terms_;
};

inline std::string pi_factor(int j)
{
    if (j == 0) return "";
    if (j == 1) return "pi";
    return "pi^" + std::to_string(j);
}

inline std::string gauss_pretty(const GaussRational& g, bool& unit, bool& negative)
{
    unit = false;
    negative = false;
    if (g.is_real()) {
        Rational r = g.re;
        if (r < 0) { negative = true; r = -r; }
        if (r == 1) { unit = true; return ""; }
        return rat_short(r);
    }
    if (g.re == 0) {
        Rational r = g.im;
        if (r < 0) { negative = true; r = -r; }
        if (r == 1) return "i";
        return rat_short(r) + "*i";
    }
    std::string im = g.im < 0 ? " - " + rat_short(Rational(-g.im)) : " + " + rat_short(g.im);
    return "(" + rat_short(g.re) + im + "*i)";
}

inline std::string PiCoeff::pretty() const
{
    if (terms_.empty()) return "0";
    auto piece = [](int j, const GaussRational& g) {
        bool unit, neg;
        std::string c = gauss_pretty(g, unit, neg);
        std::string p = pi_factor(j);
        std::string body = c.empty() ? p : (p.empty() ? c : c + "*" + p);
        if (body.empty()) body = "1";
        return (neg ? "-" : "") + body;
    };
    if (terms_.size() == 1) return piece(terms_.begin()->first, terms_.begin()->second);
    std::string s;
    for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
        std::string t = piece(it->first, it->second);
        if (s.empty()) s = t;
        else if (t[0] == '-') s += " - " + t.substr(1);
        else s += " + " + t;
    }
    return "(" + s + ")";
}

enum class Family : std::uint8_t { Z = 0, Zb = 1, Zp = 2, Zpb = 3, W = 4, Wb = 5 };

inline constexpr int kMaxDim = 4;
inline constexpr int kFamilies = 6;
inline constexpr int kSlots = kMaxDim * kFamilies;

inline const char* family_prefix(Family f)
{
    switch (f) {
    case Family::Z: return "z";
    case Family::Zb: return "zb";
    case Family::Zp: return "z'";
    case Family::Zpb: return "zb'";
    case Family::W: return "w";
    case Family::Wb: return "wb";
    }
    return "?";
}

inline Family bar_partner(Family f)
{
    switch (f) {
    case Family::Z: return Family::Zb;
    case Family::Zb: return Family::Z;
    case Family::Zp: return Family::Zpb;
    case Family::Zpb: return Family::Zp;
    case Family::W: return Family::Wb;
    case Family::Wb: return Family::W;
    }
    return f;
}

inline bool is_bar(Family f) { return f == Family::Zb || f == Family::Zpb || f == Family::Wb; }

/** Variable id; index is 1-based. */
struct Var {
    Family fam;
    int index;
    int slot() const { return static_cast<int>(fam) * kMaxDim + (index - 1); }
    std::string name() const { return family_prefix(fam) + std::to_string(index); }
    friend auto operator<=>(const Var&, const Var&) = default;
};

inline Var z(int i) { return {Family::Z, i}; }
inline Var zb(int i) { return {Family::Zb, i}; }
inline Var zp(int i) { return {Family::Zp, i}; }
inline Var zpb(int i) { return {Family::Zpb, i}; }

struct Monomial {
    std::array<std::uint8_t, kSlots> e{};

    int degree() const
    {
        int d = 0;
        for (auto x : e) d += x;
        return d;
    }
    int exp(Var v) const { return e[v.slot()]; }
    bool is_one() const { return degree() == 0; }
    friend bool operator==(const Monomial&, const Monomial&) = default;
};

/** Graded-lex order, higher degree first, then lex descending in slot order. */
struct GrLexGreater {
    bool operator()(const Monomial& a, const Monomial& b) const
    {
        int da = a.degree(), db = b.degree();
        if (da != db) return da > db;
        for (int s = 0; s < kSlots; ++s)
            if (a.e[s] != b.e[s]) return a.e[s] > b.e[s];
        return false;
    }
};

inline std::string monomial_str(const Monomial& m)
{
    std::string s;
    for (int f = 0; f < kFamilies; ++f)
        for (int i = 0; i < kMaxDim; ++i) {
            int x = m.e[f * kMaxDim + i];
            if (!x) continue;
            if (!s.empty()) s += "*";
            s += family_prefix(static_cast<Family>(f)) + std::to_string(i + 1);
            if (x > 1) s += "^" + std::to_string(x);
        }
    return s;
}

enum class Parity { Even, Odd, Neither, Zero };

inline const char* parity_name(Parity p)
{
    switch (p) {
    case Parity::Even: return "even";
    case Parity::Odd: return "odd";
    case Parity::Neither: return "neither";
    case Parity::Zero: return "zero";
    }
    return "?";
}

/** Complex values for variables; bar variables default to conjugates of their partners. */
class Assignment {
public:
    Assignment& set(Var v, cplx value)
    {
        vals_[v] = value;
        return *this;
    }
    /** z_i = Z[i-1], z'_i = Zp[i-1]; conjugates implied. */
    static Assignment points(const std::vector<cplx>& Z, const std::vector<cplx>& Zp)
    {
        Assignment a;
        for (std::size_t i = 0; i < Z.size(); ++i) a.set(z(int(i) + 1), Z[i]);
        for (std::size_t i = 0; i < Zp.size(); ++i) a.set(zp(int(i) + 1), Zp[i]);
        return a;
    }
    std::optional<cplx> lookup(Var v) const
    {
        if (auto it = vals_.find(v); it != vals_.end()) return it->second;
        if (is_bar(v.fam)) {
            if (auto it = vals_.find(Var{bar_partner(v.fam), v.index}); it != vals_.end())
                return std::conj(it->second);
        }
        return std::nullopt;
    }

private:
    std::map<Var, cplx> vals_;
};

class MultiPoly {
public:
    using TermMap = std::map<Monomial, PiCoeff, GrLexGreater>;

    MultiPoly() = default;
    explicit MultiPoly(int n) : n_(n) { check_dim(n); }
    MultiPoly(int n, const PiCoeff& c) : MultiPoly(n) { add_term(Monomial{}, c); }

    static MultiPoly constant(int n, const PiCoeff& c) { return MultiPoly(n, c); }
    static MultiPoly var(int n, Var v, int power = 1)
    {
        MultiPoly p(n);
        p.check_var(v);
        Monomial m;
        m.e[v.slot()] = static_cast<std::uint8_t>(power);
        p.add_term(m, PiCoeff(1));
        return p;
    }
    static MultiPoly monomial(int n, const Monomial& m, const PiCoeff& c)
    {
        MultiPoly p(n);
        p.add_term(m, c);
        return p;
    }

    int dim() const { return n_; }
    const TermMap& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }

    int degree() const
    {
        int d = -1;
        for (auto& [m, c] : terms_) d = std::max(d, m.degree());
        return d;
    }

    Parity parity() const
    {
        if (terms_.empty()) return Parity::Zero;
        bool ev = false, od = false;
        for (auto& [m, c] : terms_) (m.degree() % 2 ? od : ev) = true;
        if (ev && od) return Parity::Neither;
        return ev ? Parity::Even : Parity::Odd;
    }

    int min_pi_exponent() const
    {
        int j = 0;
        bool first = true;
        for (auto& [m, c] : terms_) {
            int x = c.min_pi_exponent();
            if (first || x < j) j = x;
            first = false;
        }
        return j;
    }

    void add_term(const Monomial& m, const PiCoeff& c)
    {
        if (c.is_zero()) return;
        for (int f = 0; f < kFamilies; ++f)
            for (int i = n_; i < kMaxDim; ++i)
                if (m.e[f * kMaxDim + i]) throw DimensionError("monomial uses a variable beyond dimension " + std::to_string(n_));
        auto it = terms_.find(m);
        if (it == terms_.end()) {
            terms_.emplace(m, c);
        } else {
            it->second += c;
            if (it->second.is_zero()) terms_.erase(it);
        }
    }

    PiCoeff coeff(const Monomial& m) const
    {
        auto it = terms_.find(m);
        return it == terms_.end() ? PiCoeff() : it->second;
    }

    MultiPoly& operator+=(const MultiPoly& b)
    {
        same_dim(b);
        for (auto& [m, c] : b.terms_) add_term(m, c);
        return *this;
    }
    friend MultiPoly operator+(MultiPoly a, const MultiPoly& b) { a += b; return a; }
    friend MultiPoly operator-(const MultiPoly& a)
    {
        MultiPoly r(a.n_);
        for (auto& [m, c] : a.terms_) r.terms_.emplace(m, -c);
        return r;
    }
    friend MultiPoly operator-(const MultiPoly& a, const MultiPoly& b) { return a + (-b); }

    friend MultiPoly operator*(const MultiPoly& a, const MultiPoly& b)
    {
        a.same_dim(b);
        MultiPoly r(a.n_);
        for (auto& [ma, ca] : a.terms_)
            for (auto& [mb, cb] : b.terms_) {
                Monomial m;
                for (int s = 0; s < kSlots; ++s) {
                    int x = ma.e[s] + mb.e[s];
                    if (x > 255) throw std::overflow_error("exponent overflow");
                    m.e[s] = static_cast<std::uint8_t>(x);
                }
                r.add_term(m, ca * cb);
            }
        return r;
    }
    MultiPoly& operator*=(const MultiPoly& b) { *this = *this * b; return *this; }

    MultiPoly scale(const PiCoeff& c) const
    {
        MultiPoly r(n_);
        if (c.is_zero()) return r;
        for (auto& [m, x] : terms_) r.add_term(m, x * c);
        return r;
    }

    MultiPoly conj_coeffs() const
    {
        MultiPoly r(n_);
        for (auto& [m, c] : terms_) r.terms_.emplace(m, c.conj());
        return r;
    }

    /** Relabel whole variable families; target families must not collide with untouched ones in use. */
    MultiPoly rename(const std::map<Family, Family>& mapping) const
    {
        std::array<int, kFamilies> to{};
        for (int f = 0; f < kFamilies; ++f) to[f] = f;
        for (auto& [a, b] : mapping) to[int(a)] = int(b);
        std::array<int, kFamilies> hits{};
        std::array<bool, kFamilies> used{};
        for (auto& [m, c] : terms_)
            for (int f = 0; f < kFamilies; ++f)
                for (int i = 0; i < kMaxDim; ++i)
                    if (m.e[f * kMaxDim + i]) used[f] = true;
        for (int f = 0; f < kFamilies; ++f)
            if (used[f]) ++hits[to[f]];
        for (int f = 0; f < kFamilies; ++f)
            if (hits[f] > 1) throw DimensionError("rename maps two families in use onto one");
        MultiPoly r(n_);
        for (auto& [m, c] : terms_) {
            Monomial out;
            for (int f = 0; f < kFamilies; ++f)
                for (int i = 0; i < kMaxDim; ++i)
                    if (m.e[f * kMaxDim + i]) out.e[to[f] * kMaxDim + i] = m.e[f * kMaxDim + i];
            r.add_term(out, c);
        }
        return r;
    }

    /** Same polynomial viewed with more variables per family. */
    MultiPoly widen(int n) const
    {
        if (n < n_) throw DimensionError("widen to a smaller dimension");
        MultiPoly r(n);
        r.terms_ = terms_;
        return r;
    }

    MultiPoly diff(Var v, int order = 1) const
    {
        if (order < 0) throw std::invalid_argument("negative derivative order");
        check_var(v);
        MultiPoly r(n_);
        for (auto& [m, c] : terms_) {
            int a = m.e[v.slot()];
            if (a < order) continue;
            long f = 1;
            for (int t = 0; t < order; ++t) f *= (a - t);
            Monomial out = m;
            out.e[v.slot()] = static_cast<std::uint8_t>(a - order);
            r.add_term(out, c * PiCoeff(f));
        }
        return r;
    }

    cplx eval(const Assignment& at) const
    {
        cplx s = 0;
        std::map<int, cplx> cache;
        for (auto& [m, c] : terms_) {
            cplx t = c.eval();
            for (int sl = 0; sl < kSlots; ++sl) {
                int x = m.e[sl];
                if (!x) continue;
                auto it = cache.find(sl);
                if (it == cache.end()) {
                    Var v{static_cast<Family>(sl / kMaxDim), sl % kMaxDim + 1};
                    auto val = at.lookup(v);
                    if (!val) throw MissingAssignment("no value for " + v.name());
                    it = cache.emplace(sl, *val).first;
                }
                t *= std::pow(it->second, x);
            }
            s += t;
        }
        return s;
    }

    /** Indicator of families carrying nonzero exponents at index range. */
    bool uses(Family f, int from = 1, int to = kMaxDim) const
    {
        for (auto& [m, c] : terms_)
            for (int i = from; i <= std::min(to, kMaxDim); ++i)
                if (m.e[static_cast<int>(f) * kMaxDim + i - 1]) return true;
        return false;
    }

    std::string canonical() const
    {
        if (terms_.empty()) return "0";
        std::string s;
        for (auto& [m, c] : terms_) {
            if (!s.empty()) s += " + ";
            s += c.canonical();
            if (!m.is_one()) s += " * " + monomial_str(m);
        }
        return s;
    }

    std::string pretty() const
    {
        if (terms_.empty()) return "0";
        std::string s;
        for (auto& [m, c] : terms_) {
            std::string cs = c.pretty();
            std::string ms = monomial_str(m);
            std::string t;
            bool neg = false;
            if (!cs.empty() && cs[0] == '-') { neg = true; cs = cs.substr(1); }
            if (ms.empty()) t = cs;
            else if (cs == "1") t = ms;
            else t = cs + "*" + ms;
            if (s.empty()) s = neg ? "-" + t : t;
            else s += (neg ? " - " : " + ") + t;
        }
        return s;
    }

    friend bool operator==(const MultiPoly& a, const MultiPoly& b)
    {
        return a.n_ == b.n_ && a.terms_ == b.terms_;
    }

private:
    static void check_dim(int n)
    {
        if (n < 0 || n > kMaxDim) throw DimensionError("dimension out of range: " + std::to_string(n));
    }
    void check_var(Var v) const
    {
        if (v.index < 1 || v.index > n_) throw UnknownVariable("unknown variable " + v.name());
    }
    void same_dim(const MultiPoly& b) const
    {
        if (n_ != b.n_) throw DimensionError("variable family mismatch: dims " + std::to_string(n_) + " vs " + std::to_string(b.n_));
    }

    int n_ = 0;
    TermMap terms_;
};

inline MultiPoly ring_add(const MultiPoly& a, const MultiPoly& b) { return a + b; }
inline MultiPoly ring_mul(const MultiPoly& a, const MultiPoly& b) { return a * b; }
inline MultiPoly ring_scale(const MultiPoly& a, const PiCoeff& c) { return a.scale(c); }
inline MultiPoly ring_rename(const MultiPoly& a, const std::map<Family, Family>& m) { return a.rename(m); }
inline MultiPoly poly_diff(const MultiPoly& a, Var v, int order) { return a.diff(v, order); }
inline cplx poly_eval(const MultiPoly& a, const Assignment& at) { return a.eval(at); }

inline Rational factorial(int k)
{
    mpz_class f;
    mpz_fac_ui(f.get_mpz_t(), static_cast<unsigned long>(k));
    return Rational(f);
}

inline double factorial_d(int k)
{
    double f = 1;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

} // namespace bjet
