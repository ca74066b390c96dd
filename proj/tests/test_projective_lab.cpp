#include "bjet/projective_lab.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace bjet;
using namespace bjet::lab;

namespace {

double fact(int k) { return factorial_d(k); }

long binom_size(int n, int p) { return std::lround(fact(n + p) / (fact(n) * fact(p))); }

Vec random_vec(std::mt19937& rng, Eigen::Index n)
{
    std::normal_distribution<double> nd;
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = {nd(rng), nd(rng)};
    return v;
}

} // namespace

TEST(HomogSpace, DimensionAndExactDiagonal)
{
    for (int n = 1; n <= 2; ++n)
        for (int p = 1; p <= 8; ++p) {
            HomogSpace X = homog_space(n, p);
            EXPECT_EQ(X.size(), std::size_t(binom_size(n, p)));
            for (std::size_t i = 0; i < X.size(); ++i) {
                auto h = X.homogeneous(i);
                Rational expect = beta_factorial(h) / factorial(p + n);
                EXPECT_EQ(X.gram_exact[i], expect);
            }
        }
}

TEST(HomogSpace, CP1CubicDiagonalMatchesChartQuadrature)
{
    HomogSpace X = homog_space(1, 3);
    std::vector<double> expect{1.0 / 4, 1.0 / 12, 1.0 / 12, 1.0 / 4};
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_NEAR(X.gram(i), expect[i], 1e-15);
        double q = lab::detail::chart_product(X, X.exponents[i], X.exponents[i], 40, 1).real();
        EXPECT_NEAR(q, expect[i], 1e-12);
    }
    EXPECT_DOUBLE_EQ(X.gram(0), X.gram(3));
}

TEST(HomogSpace, TorusOrthogonalityByQuadrature)
{
    HomogSpace X = homog_space(1, 5);
    for (std::size_t j = 1; j < X.size(); ++j)
        EXPECT_LT(std::abs(lab::detail::chart_product(X, X.exponents[0], X.exponents[j], 20, 12)), 1e-14);
}

TEST(HomogSpace, ValidationPasses)
{
    for (int n = 1; n <= 2; ++n)
        for (int p : {2, 6, 11}) {
            GramValidation v = validate_gram(homog_space(n, p));
            EXPECT_LT(v.max_rel_error, 1e-8) << n << " " << p;
        }
}

TEST(Geometry, DistancesAndNormalCoordinates)
{
    // The CP^1 of area one is a round sphere of radius 1/(2 sqrt(pi)).
    EXPECT_NEAR(fs_distance({0.0}, {cplx(1e8)}), kSqrtPi / 2, 1e-7);
    Point Z{cplx(0.1, 0.2)};
    Point z = exp_chart(Z);
    EXPECT_NEAR(fs_distance({0.0}, z), std::abs(Z[0]), 1e-14);
    EXPECT_THROW(exp_chart({cplx(1.0, 0)}), ChartError);
    SubmanifoldSpec L = SubmanifoldSpec::linear(2, 1);
    EXPECT_NEAR(L.distance({cplx(5.0), 0.0}), 0.0, 1e-15);
    Point x{cplx(0.3), cplx(0.0, 0.4)};
    // closest point of {z_2 = 0} to [1 : 0.3 : 0.4i] is [1 : 0.3 : 0]
    EXPECT_NEAR(L.distance(x), fs_distance(x, {cplx(0.3), 0.0}), 1e-14);
    EXPECT_THROW(homog_space(1, 3).frame_values({cplx(INFINITY, 0)}), ChartError);
}

TEST(JetSpace, LinearGramClosedForm)
{
    for (int k = 0; k <= 2; ++k)
        for (int p : {k + 1, 7, 12}) {
            JetSpace J = jet_space(SubmanifoldSpec::linear(2, 1), k, p);
            ASSERT_EQ(J.size(), std::size_t(p - k + 1));
            for (std::size_t i = 0; i < J.size(); ++i)
                for (std::size_t j = 0; j < J.size(); ++j) {
                    int a = J.elements[i].ypow;
                    double expect = i == j ? std::pow(2 * kPi, k) * fact(a) * fact(p - k - a) / fact(p - k + 1) : 0.0;
                    EXPECT_NEAR(std::abs(J.gram(i, j) - expect), 0.0, 1e-11 * std::abs(J.gram(0, 0)));
                }
        }
}

TEST(JetSpace, ConicGramClosedForm)
{
    for (int k = 0; k <= 2; ++k)
        for (int p : {2 * k + 1, 9}) {
            JetSpace J = jet_space(SubmanifoldSpec::conic(), k, p);
            int top = 2 * p - 4 * k;
            ASSERT_EQ(J.size(), std::size_t(top + 1));
            for (std::size_t i = 0; i < J.size(); ++i) {
                int j = J.elements[i].ypow;
                double expect = 2 * std::pow(8 * kPi, k) * fact(j) * fact(top - j) / fact(top + 1);
                EXPECT_NEAR(J.gram(i, i).real() / expect, 1.0, 1e-10);
            }
        }
}

TEST(JetSpace, PointGramUsesSymWeights)
{
    // At the origin |dz_i|^2 = 2 pi, so <dz^b, dz^b> = (2 pi)^k b!/k!.
    JetSpace J = jet_space(SubmanifoldSpec::point(2), 2, 5);
    for (std::size_t i = 0; i < J.size(); ++i)
        EXPECT_NEAR(J.gram(i, i).real(), std::pow(2 * kPi, 2) * beta_factorial(J.elements[i].beta).get_d() / 2, 1e-12);
}

TEST(RestrictionJets, Examples)
{
    const int p = 6;
    JetLevel L0 = jet_level(SubmanifoldSpec::linear(2, 1), 0, p);
    HomogSpace& X = L0.X;
    Vec f = Vec::Zero(X.size());
    f(X.index_of({0, 0})) = 1;
    Vec g = restriction_jets(L0, f);
    EXPECT_EQ(g, Vec::Unit(g.size(), L0.jets.index_of({0, {0}})));

    JetLevel L1 = jet_level(X, SubmanifoldSpec::linear(2, 1), 1);
    Vec f1 = Vec::Zero(X.size());
    f1(X.index_of({0, 1})) = 1;
    Vec g1 = restriction_jets(L1, f1);
    EXPECT_LT((g1 - Vec::Unit(g1.size(), L1.jets.index_of({0, {1}}))).norm(), 1e-13);

    EXPECT_THROW(restriction_jets(L1, f), PreconditionError);
}

TEST(RestrictionJets, ConicJetOfQMultiple)
{
    const int p = 7, k = 2;
    JetLevel L = jet_level(SubmanifoldSpec::conic(), k, p);
    // q^2 z_1 z_2 restricts its transverse factor to sqrt(2) u^3
    Vec f = lab::detail::conic_multiple(L.X, k, {1, 1}).cast<cplx>();
    Vec g = restriction_jets(L, f);
    Vec expect = Vec::Zero(g.size());
    expect(L.jets.index_of({3, {k}})) = 2.0 * std::sqrt(2.0);
    EXPECT_LT((g - expect).norm(), 1e-9);
}

TEST(MinimalNormExtension, LinearNormsClosedForm)
{
    auto Y = SubmanifoldSpec::linear(2, 1);
    for (int p : {6, 10, 16}) {
        EXPECT_NEAR(extension_norm(jet_level(Y, 0, p)), 1 / std::sqrt(p + 2.0), 1e-12);
        EXPECT_NEAR(extension_norm(jet_level(Y, 1, p)), 1 / std::sqrt(2 * kPi * (p + 1) * (p + 2)), 1e-12);
    }
}

TEST(MinimalNormExtension, DefiningRelationAndOptimality)
{
    std::mt19937 rng(11);
    for (auto Y : {SubmanifoldSpec::linear(2, 1), SubmanifoldSpec::conic(), SubmanifoldSpec::point(1), SubmanifoldSpec::point(2)})
        for (int k = 0; k <= 1; ++k) {
            int p = 9;
            HomogSpace X = homog_space(Y.n, p);
            JetLevel L = jet_level(X, Y, k);
            ASSERT_TRUE(L.surjective()) << Y.name();
            EXPECT_EQ(minimal_norm_extension(L, Vec::Zero(L.jets.size())).norm(), 0.0);
            Vec g = random_vec(rng, Eigen::Index(L.jets.size()));
            Vec f = minimal_norm_extension(L, g);
            EXPECT_LT((restriction_jets(L, f) - g).norm(), 1e-10 * g.norm()) << Y.name();
            VanishingSubspace next = vanishing_subspace(X, Y, k + 1);
            Vec fw = X.whiten(f);
            for (int t = 0; t < 50; ++t) {
                Vec h = next.basis * random_vec(rng, next.dim());
                EXPECT_LT(std::abs(h.dot(fw)) / (h.norm() * fw.norm()), 1e-10);
            }
        }
}

TEST(MinimalNormExtension, RankDeficiencyIsReported)
{
    JetLevel L = jet_level(SubmanifoldSpec::point(1), 3, 2);
    EXPECT_FALSE(L.surjective());
    EXPECT_THROW(minimal_norm_extension(L, Vec::Ones(1)), ExtensionNotGuaranteed);
}

TEST(MinimalNormExtension, SurjectivityOnsetIsMonotone)
{
    for (auto Y : {SubmanifoldSpec::point(1), SubmanifoldSpec::linear(2, 1), SubmanifoldSpec::conic()}) {
        bool seen = false;
        for (int p = 1; p <= 8; ++p) {
            bool s = jet_level(Y, 2, p).surjective();
            if (seen) {
                EXPECT_TRUE(s) << Y.name() << " p=" << p;
            }
            seen = seen || s;
        }
        EXPECT_TRUE(seen);
    }
}

TEST(MultiplicativeDefect, IdentitiesAndLinearClosedForm)
{
    for (auto Y : {SubmanifoldSpec::linear(2, 1), SubmanifoldSpec::conic(), SubmanifoldSpec::point(1)})
        for (int k = 0; k <= 2; ++k) {
            JetLevel L = jet_level(Y, k, 10);
            DefectResult d = multiplicative_defect(L);
            EXPECT_LT(d.defining_residual, 1e-8);
            EXPECT_LT(d.adjoint_residual, 1e-8);
            EXPECT_LT(d.res_residual, 1e-8);
        }
    const int p = 10;
    DefectResult d0 = multiplicative_defect(jet_level(SubmanifoldSpec::linear(2, 1), 0, p));
    EXPECT_LT((d0.A - (p + 2.0) * Mat::Identity(d0.A.rows(), d0.A.cols())).norm(), 1e-9);
    EXPECT_NEAR(d0.normalized_deviation, 2.0 / p, 1e-12);
}

TEST(ProjectorLadder, OrthogonalIdempotentsSumToIdentity)
{
    for (auto Y : {SubmanifoldSpec::linear(2, 1), SubmanifoldSpec::conic(), SubmanifoldSpec::point(1)}) {
        HomogSpace X = homog_space(Y.n, 8);
        const int k = 2;
        std::vector<Mat> P;
        for (int l = 0; l <= k + 1; ++l) P.push_back(vanishing_subspace(X, Y, l).projector());
        Mat sum = P[k + 1];
        std::vector<Mat> perp;
        for (int l = 0; l <= k; ++l) {
            perp.push_back(P[l] - P[l + 1]);
            sum += perp.back();
        }
        const Eigen::Index N = Eigen::Index(X.size());
        EXPECT_LT((sum - Mat::Identity(N, N)).norm(), 1e-10);
        for (std::size_t a = 0; a < perp.size(); ++a) {
            EXPECT_LT((perp[a] * perp[a] - perp[a]).norm(), 1e-10);
            EXPECT_LT((perp[a] - perp[a].adjoint()).norm(), 1e-10);
            for (std::size_t b = 0; b < a; ++b) EXPECT_LT((perp[a] * perp[b]).norm(), 1e-10);
        }
    }
}

TEST(JetMap, QuotientKernelAndOrderZero)
{
    auto Y = SubmanifoldSpec::linear(2, 1);
    const int p = 9, k = 1;
    HomogSpace X = homog_space(2, p);
    std::vector<JetLevel> levels;
    for (int r = 0; r <= k; ++r) levels.push_back(jet_level(X, Y, r));
    VanishingSubspace next = vanishing_subspace(X, Y, k + 1);
    std::mt19937 rng(5);
    Vec inside = X.unwhiten(next.basis * random_vec(rng, next.dim()));
    JetMapResult r0 = jet_map(levels, next, inside);
    for (auto& g : r0.g) EXPECT_LT(g.norm(), 1e-10 * inside.norm());
    EXPECT_LT(r0.quotient_norm, 1e-10);
    EXPECT_LT(r0.jet_norm, 1e-8);

    Vec f = X.unwhiten(random_vec(rng, Eigen::Index(X.size())));
    JetMapResult r = jet_map(levels, next, f);
    for (std::size_t i = 0; i < levels[0].jets.size(); ++i) {
        std::vector<int> a{levels[0].jets.elements[i].ypow, 0};
        EXPECT_LT(std::abs(r.g[0](i) - f(X.index_of(a))), 1e-12 * f.norm());
    }
    // exact ratios: sqrt((p+2)/p) on order 0 and sqrt((p+1)(p+2))/p on order 1
    auto [lo, hi] = jet_isometry_extremes(levels, next);
    EXPECT_NEAR(lo, std::sqrt((p + 2.0) / p), 1e-10);
    EXPECT_NEAR(hi, std::sqrt((p + 1.0) * (p + 2.0)) / p, 1e-10);
    EXPECT_GE(r.ratio, lo - 1e-12);
    EXPECT_LE(r.ratio, hi + 1e-12);
}

TEST(Kernels, BergmanDiagonalAndTrace)
{
    for (int n = 1; n <= 2; ++n) {
        const int p = 7;
        HomogSpace X = homog_space(n, p);
        VanishingSubspace V0 = vanishing_subspace(X, SubmanifoldSpec::point(n), 0);
        Point x(n, cplx(0.3, -0.2));
        KernelValues kv = bergman_and_logbk_eval(X, V0, x, x);
        double dim = double(X.size());
        // B(x,x) = dim / vol(CP^n) with vol = 1/n!
        EXPECT_NEAR(kv.bergman.real(), dim * fact(n), 1e-10);
        EXPECT_NEAR(std::abs(kv.logbk - kv.bergman), 0.0, 1e-10);
        EXPECT_NEAR(std::abs(kv.difference), 0.0, 1e-12);
    }
    // trace: integrate B(x,x) over CP^1 by chart quadrature
    HomogSpace X = homog_space(1, 5);
    VanishingSubspace V0 = vanishing_subspace(X, SubmanifoldSpec::point(1), 0);
    auto rule = lab::detail::half_line_rule(30);
    double tr = 0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        double t = rule.nodes[i];
        double b = bergman_and_logbk_eval(X, V0, {std::sqrt(t)}, {std::sqrt(t)}).bergman.real();
        tr += rule.weights[i] * b / ((1 + t) * (1 + t));
    }
    EXPECT_NEAR(tr, 6.0, 1e-10);
}

TEST(Kernels, LogBergmanDifferenceOnCP1)
{
    const int p = 12, k = 2;
    Point x{cplx(0.4, 0.1)};
    KernelValues kv = bergman_and_logbk_eval(SubmanifoldSpec::point(1), k, p, x, x);
    double r2 = std::norm(x[0]), expect = 0;
    for (int a = 0; a < k; ++a) expect += (p + 1) * fact(p) / (fact(a) * fact(p - a)) * std::pow(r2, a);
    expect /= std::pow(1 + r2, p);
    EXPECT_NEAR(kv.difference.real(), -expect, 1e-12 * expect);
    EXPECT_NEAR(std::abs(kv.logbk - kv.bergman - kv.difference), 0.0, 1e-10);
}

TEST(PeakSection, ZerothOrderIsTheRankOneCandidate)
{
    const int p = 12;
    PeakResult r = peak_section(1, 0, p, Vec::Ones(1));
    HomogSpace X = homog_space(1, p);
    Vec cand = Vec::Zero(X.size());
    cand(X.index_of({0})) = 1;
    Vec s = r.section / r.section(X.index_of({0}));
    EXPECT_LT((s - cand).norm(), 1e-12);
}

TEST(PeakSection, JetConstraintsAndProfile)
{
    for (int k = 0; k <= 2; ++k) {
        PeakResult a = peak_section(1, k, 10, Vec::Ones(1)), b = peak_section(1, k, 40, Vec::Ones(1));
        EXPECT_LT(a.lower_jet, 1e-10);
        EXPECT_LT(a.jet_error, 1e-10);
        EXPECT_LT(b.profile_deviation, a.profile_deviation);
        EXPECT_LT(b.profile_deviation, 0.1);
    }
}

TEST(DecayFit, SyntheticAndPermutation)
{
    std::vector<DecaySample> s;
    for (int p : {8, 12, 18, 25, 33, 40})
        for (double d : {0.1, 0.2}) s.push_back({double(p), d, std::exp(-3 * std::sqrt(double(p)) * d)});
    DecayFit f = decay_fit(s);
    EXPECT_NEAR(f.c, 3.0, 1e-6);
    EXPECT_NEAR(f.r2, 1.0, 1e-12);
    auto t = s;
    std::reverse(t.begin(), t.end());
    std::swap(t[1], t[7]);
    DecayFit g = decay_fit(t);
    EXPECT_EQ(f.c, g.c);
    EXPECT_EQ(f.intercept, g.intercept);
    EXPECT_EQ(f.r2, g.r2);
    EXPECT_THROW(decay_fit({{8, 0.1, 1}, {8, 0.1, 2}, {8, 0.1, 3}, {8, 0.1, 4}, {8, 0.1, 5}}), FitError);
    EXPECT_THROW(decay_fit({{8, 0.1, 0}}), FitError);
}

TEST(DecayFit, BergmanOffDiagonalOnCP1)
{
    std::vector<DecaySample> s;
    const double d = 0.4;
    Point x1{0.0}, x2{std::tan(kSqrtPi * d)};
    for (int p = 8; p <= 40; p += 4) {
        KernelValues kv = bergman_and_logbk_eval(SubmanifoldSpec::point(1), 0, p, x1, x2);
        s.push_back({double(p), fs_distance(x1, x2), std::abs(kv.bergman)});
    }
    DecayFit f = decay_fit(s);
    EXPECT_GT(f.c, 0);
    EXPECT_GT(f.r2, 0.95);
}
