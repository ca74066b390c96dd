#include "bjet/poly_core.hpp"
#include "bjet/poly_parse.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace bjet;

namespace {

MultiPoly random_poly(std::mt19937& rng, int n, int maxdeg, int nterms)
{
    std::uniform_int_distribution<int> slot(0, 4 * n - 1), deg(0, maxdeg), num(-5, 5), den(1, 4), pj(-2, 2);
    MultiPoly p(n);
    for (int t = 0; t < nterms; ++t) {
        Monomial m;
        int d = deg(rng);
        for (int s = 0; s < d; ++s) {
            int x = slot(rng);
            m.e[(x / n) * kMaxDim + x % n] += 1;
        }
        GaussRational g(Rational(num(rng), den(rng)), Rational(num(rng), den(rng)));
        p.add_term(m, PiCoeff(g, pj(rng)));
    }
    return p;
}

// Naive convolution over (exponent vector, pi power) with separate re/im accumulators.
using NaiveKey = std::pair<std::array<std::uint8_t, kSlots>, int>;
using NaiveMap = std::map<NaiveKey, std::pair<Rational, Rational>>;

NaiveMap to_naive(const MultiPoly& p)
{
    NaiveMap out;
    for (auto& [m, c] : p.terms())
        for (auto& [j, g] : c.terms()) out[{m.e, j}] = {g.re, g.im};
    return out;
}

NaiveMap naive_mul(const NaiveMap& a, const NaiveMap& b)
{
    NaiveMap out;
    for (auto& [ka, va] : a)
        for (auto& [kb, vb] : b) {
            NaiveKey k;
            for (int s = 0; s < kSlots; ++s) k.first[s] = ka.first[s] + kb.first[s];
            k.second = ka.second + kb.second;
            auto& acc = out[k];
            acc.first += va.first * vb.first - va.second * vb.second;
            acc.second += va.first * vb.second + va.second * vb.first;
        }
    for (auto it = out.begin(); it != out.end();)
        it = (it->second.first == 0 && it->second.second == 0) ? out.erase(it) : std::next(it);
    return out;
}

} // namespace

TEST(PiCoeff, CanonicalAndRing)
{
    PiCoeff a = PiCoeff(GaussRational(Rational(1, 2), Rational(-1, 3)), 2) + PiCoeff(3);
    PiCoeff b = PiCoeff::pi_pow(-1);
    EXPECT_EQ((a * b).terms().begin()->first, -1);
    EXPECT_TRUE((a - a).is_zero());
    EXPECT_EQ(PiCoeff(5).canonical(), "(5/1 + 0/1 i)·pi^0");
    EXPECT_EQ(PiCoeff::pi_pow(-1).canonical(), "(1/1 + 0/1 i)·pi^-1");
}

TEST(PiCoeff, NumericMatchesExactOnLongProducts)
{
    std::mt19937 rng(7);
    std::uniform_int_distribution<int> num(-9, 9), den(1, 7), pj(-3, 3);
    for (int trial = 0; trial < 50; ++trial) {
        PiCoeff prod(1);
        cplx numeric = 1;
        for (int f = 0; f < 10; ++f) {
            PiCoeff c = PiCoeff(GaussRational(Rational(num(rng), den(rng)), Rational(num(rng), den(rng))), pj(rng)) +
                        PiCoeff(GaussRational(Rational(1, den(rng))), pj(rng));
            prod *= c;
            numeric *= c.eval();
        }
        cplx exact = prod.eval();
        EXPECT_LE(std::abs(exact - numeric), 1e-12 * std::max(1.0, std::abs(exact)));
    }
}

TEST(RingOps, AdditiveInverse)
{
    MultiPoly a = MultiPoly::var(1, z(1));
    EXPECT_TRUE((a + (-a)).is_zero());
}

TEST(RingOps, MonomialProduct)
{
    MultiPoly p = MultiPoly::var(1, z(1)) * MultiPoly::var(1, zpb(1));
    ASSERT_EQ(p.size(), 1u);
    EXPECT_EQ(p.pretty(), "z1*zb'1");
    EXPECT_EQ(p.terms().begin()->second, PiCoeff(1));
}

TEST(RingOps, MulMatchesNaiveConvolution)
{
    std::mt19937 rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        MultiPoly a = random_poly(rng, 2, 3, 6), b = random_poly(rng, 2, 3, 6);
        EXPECT_EQ(to_naive(a * b), naive_mul(to_naive(a), to_naive(b)));
        if (!a.is_zero() && !b.is_zero()) {
            EXPECT_EQ((a * b).degree(), a.degree() + b.degree());
        }
    }
}

TEST(RingOps, DimensionMismatchThrows)
{
    EXPECT_THROW(MultiPoly::var(1, z(1)) + MultiPoly::var(2, z(1)), DimensionError);
    EXPECT_THROW(MultiPoly::var(1, z(2)), UnknownVariable);
}

TEST(RingOps, RenameFamilies)
{
    MultiPoly a = MultiPoly::var(2, zp(1)) * MultiPoly::var(2, zpb(2));
    MultiPoly r = a.rename({{Family::Zp, Family::W}, {Family::Zpb, Family::Wb}});
    EXPECT_EQ(r.pretty(), "w1*wb2");
    MultiPoly both = MultiPoly::var(2, z(1)) * MultiPoly::var(2, zp(1));
    EXPECT_THROW(both.rename({{Family::Zp, Family::Z}}), DimensionError);
}

TEST(RingOps, ExactRoundTrip)
{
    std::mt19937 rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        MultiPoly a = random_poly(rng, 3, 3, 5), b = random_poly(rng, 3, 3, 5), c = random_poly(rng, 3, 2, 4);
        MultiPoly x = ((a + b) * c) - b * c;
        EXPECT_EQ(x, a * c);
        EXPECT_EQ((a + b) - b, a);
        EXPECT_EQ(-(-a), a);
    }
}

TEST(RingOps, ParityAlgebra)
{
    MultiPoly even = MultiPoly::var(2, z(1)) * MultiPoly::var(2, zb(2)) + MultiPoly::constant(2, 3);
    MultiPoly odd = MultiPoly::var(2, z(2)) + MultiPoly::var(2, zp(1)) * MultiPoly::var(2, zp(1)) * MultiPoly::var(2, zb(1));
    EXPECT_EQ(even.parity(), Parity::Even);
    EXPECT_EQ(odd.parity(), Parity::Odd);
    EXPECT_EQ((even * odd).parity(), Parity::Odd);
    EXPECT_EQ((odd * odd).parity(), Parity::Even);
    EXPECT_EQ((even + odd).parity(), Parity::Neither);
}

TEST(PolyDiff, PowerRule)
{
    MultiPoly p = MultiPoly::var(2, z(2), 2);
    EXPECT_EQ(p.diff(z(2), 1), MultiPoly::var(2, z(2)).scale(PiCoeff(2)));
    EXPECT_EQ(p.diff(z(2), 2), MultiPoly::constant(2, 2));
    EXPECT_TRUE(MultiPoly::var(2, z(1)).diff(zb(1), 1).is_zero());
    EXPECT_THROW(p.diff(z(3), 1), UnknownVariable);
}

TEST(PolyDiff, BetaFactorial)
{
    MultiPoly p = MultiPoly::var(3, z(2), 2) * MultiPoly::var(3, z(3), 3);
    EXPECT_EQ(p.diff(z(2), 2).diff(z(3), 3), MultiPoly::constant(3, 12));
}

TEST(PolyEval, Basics)
{
    EXPECT_EQ(MultiPoly::constant(1, 1).eval(Assignment{}), cplx(1));
    MultiPoly p = MultiPoly::var(1, z(1)) * MultiPoly::var(1, zpb(1)) + MultiPoly::constant(1, PiCoeff::pi_pow(-1));
    Assignment at;
    at.set(z(1), 1).set(zpb(1), 1);
    EXPECT_NEAR(std::abs(p.eval(at) - cplx(1.0 + 1.0 / std::numbers::pi)), 0.0, 1e-15);
    EXPECT_NEAR(p.eval(at).real(), 1.3183, 5e-5);
    EXPECT_THROW(p.eval(Assignment{}), MissingAssignment);
}

TEST(PolyEval, ConjugatePartnersDefault)
{
    MultiPoly p = MultiPoly::var(1, z(1)) * MultiPoly::var(1, zb(1));
    Assignment at = Assignment::points({cplx(0.3, 0.4)}, {});
    EXPECT_NEAR(std::abs(p.eval(at) - cplx(0.25)), 0.0, 1e-15);
    at.set(zb(1), 2.0);
    EXPECT_NEAR(std::abs(p.eval(at) - cplx(0.6, 0.8)), 0.0, 1e-15);
}

TEST(PolyEval, Homomorphism)
{
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 100; ++trial) {
        MultiPoly a = random_poly(rng, 2, 3, 5), b = random_poly(rng, 2, 3, 5);
        Assignment at = Assignment::points({{u(rng), u(rng)}, {u(rng), u(rng)}}, {{u(rng), u(rng)}, {u(rng), u(rng)}});
        cplx lhs = (a * b).eval(at), rhs = a.eval(at) * b.eval(at);
        EXPECT_LE(std::abs(lhs - rhs), 1e-12 * std::max(1.0, std::abs(lhs)));
    }
}

TEST(Serialization, PrettyAndCanonicalRoundTrip)
{
    std::mt19937 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        MultiPoly a = random_poly(rng, 2, 3, 5);
        EXPECT_EQ(parse_poly(a.canonical(), 2), a);
        EXPECT_EQ(parse_poly(a.pretty(), 2), a);
    }
}

TEST(Serialization, GradedLexOrder)
{
    MultiPoly p = parse_poly("pi^-1 + z1*zb'1", 1);
    EXPECT_EQ(p.pretty(), "z1*zb'1 + pi^-1");
    EXPECT_EQ(p.canonical(), "(1/1 + 0/1 i)·pi^0 * z1*zb'1 + (1/1 + 0/1 i)·pi^-1");
}

TEST(Serialization, ParseErrorsCarryPosition)
{
    try {
        parse_poly("z1 + * z2");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.position, 5u);
    }
    EXPECT_THROW(parse_poly("z1 / z2"), ParseError);
    EXPECT_THROW(parse_poly("q1"), ParseError);
}
