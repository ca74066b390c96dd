#include "bjet/model_kernels.hpp"
#include "bjet/poly_parse.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace bjet;
using namespace bjet::testing;

namespace {

KernelBase base(BaseKind k, int n, int m) { return KernelBase::make(k, n, m); }

JetKernel scalar_kernel(BaseKind k, int n, int m, const std::string& amp)
{
    return JetKernel::scalar(PolyKernel(base(k, n, m), parse_poly(amp, n)));
}

const double kPi = std::numbers::pi;

} // namespace

TEST(Builders, BargmannProjector)
{
    ModelKernel P = build_model_kernel(ModelKind::P, 1, 1, 0);
    EXPECT_EQ(P.kernel.amp(0, 0), MultiPoly::constant(1, 1));
    EXPECT_EQ(P.kernel.base().kind, BaseKind::BargmannProj);
    EXPECT_NEAR(std::abs(kernel_eval(P.kernel, {0.0}, {0.0})(0, 0) - 1.0), 0.0, 1e-15);
}

TEST(Builders, OrthogonalKernelOrderOne)
{
    JetKernel K = build_model_kernel(ModelKind::Pperp, 2, 1, 1).kernel;
    EXPECT_EQ(K.amp(0, 0), parse_poly("pi*z2*zb'2", 2));
    EXPECT_EQ(K.base().tag(), "Pperp0 2 1");
}

TEST(Builders, RestrictionKernelOrderTwo)
{
    JetKernel R = build_model_kernel(ModelKind::Res, 2, 1, 2).kernel;
    ASSERT_EQ(R.nrows(), 1u);
    EXPECT_EQ(R.amp(0, 0), parse_poly("pi^2*zb'2^2", 2));
    EXPECT_EQ(R.base().kind, BaseKind::Res0);
}

TEST(Builders, ExtensionKernelEntries)
{
    JetKernel E = model_E(3, 1, 2);
    ASSERT_EQ(E.ncols(), 3u);
    EXPECT_EQ(E.amp(0, 0), parse_poly("1/2*z3^2", 3));
    EXPECT_EQ(E.amp(0, 1), parse_poly("z2*z3", 3));
    EXPECT_EQ(E.amp(0, 2), parse_poly("1/2*z2^2", 3));
}

TEST(Builders, LogBKIsFormalDifference)
{
    ModelKernel L = build_model_kernel(ModelKind::LogBK, 2, 1, 3);
    EXPECT_EQ(L.kernel, model_P(2));
    ASSERT_EQ(L.minus.size(), 3u);
    EXPECT_EQ(L.minus[2], model_Pperp(2, 1, 2));
}

TEST(Builders, Errors)
{
    EXPECT_THROW(build_model_kernel(ModelKind::E, 1, 2, 0), DimensionError);
    EXPECT_THROW(build_model_kernel(ModelKind::E, 2, 1, -1), std::invalid_argument);
    EXPECT_THROW(PolyKernel(base(BaseKind::Ext0, 2, 1), parse_poly("z'2", 2)), SupportError);
    EXPECT_THROW(PolyKernel(base(BaseKind::SubProj, 2, 1), parse_poly("z2", 2)), SupportError);
}

TEST(ComposeK, ProjectorIdempotence)
{
    JetKernel one = scalar_kernel(BaseKind::OrthoProj0, 2, 1, "1");
    EXPECT_EQ(compose(one, one), one);
}

TEST(ComposeK, TangentialMonomialRule)
{
    PolyKernel out = compose_K(PolyKernel(base(BaseKind::OrthoProj0, 2, 1), parse_poly("1", 2)),
                               PolyKernel(base(BaseKind::OrthoProj0, 2, 1), parse_poly("z1*zb1", 2)));
    EXPECT_EQ(out.pretty(), "z1*zb'1 + pi^-1 | Pperp0 2 1");
}

TEST(ComposeK, NormalMonomialRule)
{
    auto K = [](const std::string& a2) {
        return compose_K(PolyKernel(base(BaseKind::OrthoProj0, 2, 1), MultiPoly::constant(2, 1)),
                         PolyKernel(base(BaseKind::OrthoProj0, 2, 1), parse_poly(a2, 2)))
            .amp;
    };
    EXPECT_EQ(K("z2*zb2"), parse_poly("pi^-1", 2));
    EXPECT_TRUE(K("z2^2*zb2").is_zero());
    EXPECT_EQ(K("z2^2*zb2^2"), parse_poly("2*pi^-2", 2));
}

TEST(ComposeK, HandExpandedRules)
{
    auto K = [](const std::string& a1, const std::string& a2) {
        return compose_K(PolyKernel(base(BaseKind::SubProj, 1, 1), parse_poly(a1, 1)),
                         PolyKernel(base(BaseKind::SubProj, 1, 1), parse_poly(a2, 1)))
            .amp;
    };
    EXPECT_EQ(K("1", "zb1"), parse_poly("zb'1", 1));
    EXPECT_EQ(K("1", "z1*zb1^2"), parse_poly("z1*zb'1^2 + 2*pi^-1*zb'1", 1));
    EXPECT_EQ(K("z'1", "1"), parse_poly("z1", 1));
    EXPECT_EQ(K("zb1", "1"), parse_poly("zb1", 1));
}

TEST(ComposeK, BaseMismatch)
{
    EXPECT_THROW(compose_K(PolyKernel(base(BaseKind::OrthoProj0, 2, 1), MultiPoly::constant(2, 1)),
                           PolyKernel(base(BaseKind::OrthoProj0, 2, 0), MultiPoly::constant(2, 1))),
                 CompositionError);
    EXPECT_THROW(compose(model_Res(2, 1, 0), model_Pperp(2, 1, 0)), CompositionError);
}

TEST(ComposeEP, UnitAndDecomposition)
{
    JetKernel e1 = scalar_kernel(BaseKind::Ext0, 2, 1, "1");
    JetKernel d1 = scalar_kernel(BaseKind::SubProj, 2, 1, "1");
    EXPECT_EQ(compose_K_EP(e1, d1).amp(0, 0), MultiPoly::constant(2, 1));

    JetKernel e = scalar_kernel(BaseKind::Ext0, 2, 1, "z2");
    JetKernel d = scalar_kernel(BaseKind::SubProj, 2, 1, "zb1");
    JetKernel out = compose_K_EP(e, d);
    EXPECT_EQ(out.amp(0, 0), parse_poly("z2*zb'1", 2));

    std::mt19937 rng(3);
    Samples s = random_samples(rng, 20, 2, 1, 0.8);
    EXPECT_LT(oracle_gap(e, d, s), 1e-8);
    EXPECT_LT(oracle_gap(e1, scalar_kernel(BaseKind::SubProj, 2, 1, "zb1"), s), 1e-8);
}

TEST(ComposeEP, MatchesGenericIntegration)
{
    std::mt19937 rng(17);
    for (int t = 0; t < 20; ++t) {
        PolyKernel e(base(BaseKind::Ext0, 3, 1), random_amplitude(rng, base(BaseKind::Ext0, 3, 1), 4, 5));
        PolyKernel d(base(BaseKind::SubProj, 3, 1), random_amplitude(rng, base(BaseKind::SubProj, 3, 1), 4, 5));
        EXPECT_EQ(compose_K_EP_scalar(e, d).amp, detail::integrate_pair(e, d).first);
    }
}

TEST(ComposeEP, SubProjectorFixesExtension)
{
    for (int n = 1; n <= 3; ++n)
        for (int m = 0; m < n; ++m)
            for (int k = 0; k <= 3; ++k) EXPECT_EQ(compose_K_EP(model_E(n, m, k), model_sym_identity(n, m, k)), model_E(n, m, k));
}

TEST(ComposeER, Factorization)
{
    for (int n = 1; n <= 3; ++n)
        for (int m = 0; m < n; ++m)
            for (int k = 0; k <= 3; ++k) EXPECT_EQ(compose_K_ER(model_E(n, m, k), model_Res(n, m, k)), model_Pperp(n, m, k));
}

TEST(ComposeER, UnitAndGeneric)
{
    JetKernel e = scalar_kernel(BaseKind::Ext0, 2, 1, "1");
    JetKernel r = scalar_kernel(BaseKind::Res0, 2, 1, "1");
    EXPECT_EQ(compose_K_ER(e, r).amp(0, 0), MultiPoly::constant(2, 1));
    std::mt19937 rng(23);
    for (int t = 0; t < 20; ++t) {
        PolyKernel a(base(BaseKind::Ext0, 3, 2), random_amplitude(rng, base(BaseKind::Ext0, 3, 2), 4, 5));
        PolyKernel c(base(BaseKind::Res0, 3, 2), random_amplitude(rng, base(BaseKind::Res0, 3, 2), 4, 5));
        EXPECT_EQ(compose_K_ER_scalar(a, c).amp, detail::integrate_pair(a, c).first);
    }
}

TEST(ComposeRE, MixedOrdersAnnihilate)
{
    std::mt19937 rng(31);
    for (int j = 0; j <= 2; ++j)
        for (int l = 0; l <= 2; ++l) {
            if (j == l) continue;
            JetKernel R = model_Res(2, 1, l), E = model_E(2, 1, j);
            JetKernel bridge(base(BaseKind::SubProj, 2, 1), E.cols(), E.cols());
            for (std::size_t i = 0; i < E.ncols(); ++i) bridge.set(i, i, MultiPoly::constant(2, 1));
            // Res^l o E^j as a block of scalar pairings
            for (std::size_t a = 0; a < R.nrows(); ++a)
                for (std::size_t b = 0; b < E.ncols(); ++b) {
                    PolyKernel c = compose_scalar(R.entry(a, 0), E.entry(0, b));
                    EXPECT_TRUE(c.amp.is_zero());
                    JetKernel rs = JetKernel::scalar(R.entry(a, 0)), es = JetKernel::scalar(E.entry(0, b));
                    Samples s = random_samples(rng, 20, 1, 1, 0.8);
                    EXPECT_LT(oracle_gap(rs, es, s), 1e-8);
                }
        }
}

TEST(ComposeRE, Reproducing)
{
    for (int n = 1; n <= 3; ++n)
        for (int m = 0; m < n; ++m)
            for (int k = 0; k <= 3; ++k) EXPECT_EQ(compose(model_Res(n, m, k), model_E(n, m, k)), model_sym_identity(n, m, k));
}

TEST(ComposeSubRes, AdjunctionMatchesDirectIntegration)
{
    std::mt19937 rng(41);
    for (int t = 0; t < 20; ++t) {
        PolyKernel d(base(BaseKind::SubProj, 2, 1), random_amplitude(rng, base(BaseKind::SubProj, 2, 1), 4, 5));
        PolyKernel c(base(BaseKind::Res0, 2, 1), random_amplitude(rng, base(BaseKind::Res0, 2, 1), 4, 5));
        EXPECT_EQ(compose_scalar(d, c).amp, detail::integrate_pair(d, c).first);
    }
}

TEST(Ladder, OrthogonalProjectors)
{
    for (int n = 1; n <= 3; ++n)
        for (int m = 0; m < n; ++m)
            for (int j = 0; j <= 3; ++j)
                for (int l = 0; l <= 3; ++l) {
                    JetKernel c = compose(model_Pperp(n, m, j), model_Pperp(n, m, l));
                    if (j == l) EXPECT_EQ(c, model_Pperp(n, m, j));
                    else EXPECT_TRUE(c.is_zero());
                }
}

TEST(DegreeParity, RandomizedDefiniteParity)
{
    std::mt19937 rng(77);
    for (BaseKind kd : {BaseKind::OrthoProj0, BaseKind::SubProj}) {
        KernelBase b = base(kd, 3, 1);
        for (int t = 0; t < 30; ++t) {
            int p1 = t % 2, p2 = (t / 2) % 2;
            MultiPoly a1 = parity_part(random_amplitude(rng, b, 4, 6, 0, 2), p1);
            MultiPoly a2 = parity_part(random_amplitude(rng, b, 4, 6, 0, 2), p2);
            if (a1.is_zero() || a2.is_zero()) continue;
            MultiPoly out = compose_K(PolyKernel(b, a1), PolyKernel(b, a2)).amp;
            if (out.is_zero()) continue;
            EXPECT_LE(out.degree(), a1.degree() + a2.degree());
            EXPECT_EQ(out.parity(), (p1 + p2) % 2 ? Parity::Odd : Parity::Even);
            EXPECT_GE(out.min_pi_exponent(), -(a1.degree() + a2.degree()));
        }
    }
}

TEST(Adjoint, DualityConstant)
{
    for (int n = 1; n <= 3; ++n)
        for (int m = 0; m < n; ++m)
            for (int k = 0; k <= 3; ++k) {
                PiCoeff c(GaussRational(Rational(factorial(k) * (1 << k))), k);
                EXPECT_EQ(kernel_adjoint(model_Res(n, m, k)), model_E(n, m, k).scale(c));
            }
}

TEST(Adjoint, SelfAdjointProjectorsAndInvolution)
{
    for (int k = 0; k <= 3; ++k) EXPECT_EQ(kernel_adjoint(model_Pperp(3, 1, k)), model_Pperp(3, 1, k));
    std::mt19937 rng(5);
    for (int t = 0; t < 20; ++t) {
        KernelBase b = base(t % 2 ? BaseKind::Ext0 : BaseKind::Res0, 3, 1);
        IndexSet sym = IndexSet::sym(2, t % 3);
        JetKernel K(b, t % 2 ? IndexSet::star() : sym, t % 2 ? sym : IndexSet::star());
        for (std::size_t i = 0; i < K.nrows(); ++i)
            for (std::size_t j = 0; j < K.ncols(); ++j) K.set(i, j, random_amplitude(rng, b, 4, 4));
        EXPECT_EQ(kernel_adjoint(kernel_adjoint(K)), K);
    }
}

TEST(Adjoint, NumericConjugateSwap)
{
    std::mt19937 rng(8);
    KernelBase b = base(BaseKind::Ext0, 2, 1);
    PolyKernel k(b, random_amplitude(rng, b, 3, 5));
    PolyKernel ks = kernel_adjoint(k);
    for (int t = 0; t < 10; ++t) {
        auto Z = random_point(rng, 2, 1.0), Y = random_point(rng, 1, 1.0);
        EXPECT_LT(std::abs(ks.eval(Y, Z) - std::conj(k.eval(Z, Y))), 1e-12);
    }
}

TEST(KernelEval, UnitDiagonalAndModulus)
{
    std::mt19937 rng(13);
    for (int n = 1; n <= 3; ++n) {
        JetKernel P = model_P(n);
        for (int t = 0; t < 50; ++t) {
            auto Z = random_point(rng, n, 1.5), Zp = random_point(rng, n, 1.5);
            EXPECT_NEAR(std::abs(kernel_eval(P, Z, Z)(0, 0) - 1.0), 0.0, 1e-12);
            double d2 = 0;
            for (int i = 0; i < n; ++i) d2 += std::norm(Z[i] - Zp[i]);
            EXPECT_NEAR(std::abs(kernel_eval(P, Z, Zp)(0, 0)), std::exp(-kPi / 2 * d2), 1e-12);
        }
    }
}

TEST(KernelEval, OrthogonalDiagonalOnNormalSlice)
{
    std::mt19937 rng(14);
    JetKernel K = model_Pperp(3, 1, 0);
    for (int t = 0; t < 20; ++t) {
        auto N = random_point(rng, 2, 1.0);
        std::vector<cplx> Z{0.0, N[0], N[1]};
        EXPECT_NEAR(std::abs(kernel_eval(K, Z, Z)(0, 0) - std::exp(-kPi * (std::norm(N[0]) + std::norm(N[1])))), 0.0, 1e-13);
    }
}

TEST(KernelEval, TensorSplit)
{
    std::mt19937 rng(15);
    for (int t = 0; t < 20; ++t) {
        auto Z = random_point(rng, 3, 1.0), Zp = random_point(rng, 3, 1.0);
        cplx full = kernel_eval(model_P(3), Z, Zp)(0, 0);
        cplx y = kernel_eval(model_P(1), {Z[0]}, {Zp[0]})(0, 0);
        cplx nn = kernel_eval(model_P(2), {Z[1], Z[2]}, {Zp[1], Zp[2]})(0, 0);
        EXPECT_LT(std::abs(full - y * nn), 1e-13);
    }
}

TEST(Oracle, BargmannIdempotence)
{
    std::mt19937 rng(21);
    Samples s = random_samples(rng, 10, 1, 1, 1.0);
    OracleResult o = quadrature_oracle_compose(model_P(1), model_P(1), s);
    EXPECT_TRUE(o.order_ok);
    for (std::size_t i = 0; i < s.size(); ++i)
        EXPECT_LT(std::abs(o.values[i](0, 0) - kernel_eval(model_P(1), s[i].first, s[i].second)(0, 0)), 1e-8);
}

TEST(Oracle, OrthogonalPair)
{
    std::mt19937 rng(22);
    Samples s = random_samples(rng, 20, 2, 2, 0.8);
    EXPECT_LT(oracle_gap(scalar_kernel(BaseKind::OrthoProj0, 2, 1, "z1"), scalar_kernel(BaseKind::OrthoProj0, 2, 1, "zb1"), s), 1e-8);
}

TEST(Oracle, LowOrderIsFlagged)
{
    std::mt19937 rng(23);
    Samples s = random_samples(rng, 3, 1, 1, 1.5);
    JetKernel a = scalar_kernel(BaseKind::BargmannProj, 1, 1, "z'1^4*zb'1^4");
    OracleResult o = quadrature_oracle_compose(a, a, s, 3);
    EXPECT_FALSE(o.order_ok);
}

TEST(SecondOrder, ZeroTensorGivesZero)
{
    auto A = SecondFundamentalForm::zero(3, 1);
    for (auto kind : {ProfileKind::E, ProfileKind::Perp, ProfileKind::Res})
        for (int k = 0; k <= 2; ++k) EXPECT_TRUE(build_second_order_profile(kind, k, A).is_zero());
}

TEST(SecondOrder, ParityOfExtensionProfile)
{
    auto A = SecondFundamentalForm::zero(3, 2);
    A.a[0][0][1] = A.a[0][1][0] = GaussRational(Rational(1, 2), Rational(1));
    A.a[0][1][1] = GaussRational(3);
    for (int k = 0; k <= 3; ++k) {
        Parity p = build_second_order_profile(ProfileKind::E, k, A).parity();
        EXPECT_EQ(p, (k + 1) % 2 ? Parity::Odd : Parity::Even);
        EXPECT_EQ(build_second_order_profile(ProfileKind::Res, k, A).parity(), p);
    }
}

TEST(SecondOrder, HandExpandedPerpProfile)
{
    auto A = SecondFundamentalForm::zero(2, 1);
    A.a[0][0][0] = GaussRational(1);
    JetKernel J = build_second_order_profile(ProfileKind::Perp, 0, A);
    MultiPoly expect = parse_poly("pi*(z2*zb1^2 - 2*z2*zb1*zb'1 + z2*zb'1^2 + zb'2*z1^2 - 2*zb'2*z1*z'1 + zb'2*z'1^2)", 2);
    EXPECT_EQ(J.amp(0, 0), expect);
    EXPECT_EQ(J.base().kind, BaseKind::OrthoProj0);
}

TEST(SecondOrder, InconsistentDimensions)
{
    auto A = SecondFundamentalForm::zero(3, 1);
    A.a.pop_back();
    EXPECT_THROW(build_second_order_profile(ProfileKind::E, 0, A), DimensionError);
}
