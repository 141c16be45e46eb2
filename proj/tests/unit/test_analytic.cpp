#include <ffop/analytic.h>
#include <ffop/error.h>
#include <ffop/mesh_gen.h>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace ffop;

TEST(SquareSpectrum, LatticeExamples)
{
    const double w4 = std::pow(std::numbers::pi / 2, 4);
    EXPECT_NEAR(square_lattice_eigenvalue(1, 0, 0.3), 0.3 * w4, 1e-12);
    EXPECT_NEAR(w4, 6.0881, 1e-4);
    EXPECT_NEAR(square_lattice_eigenvalue(1, 1, 1.0), 4 * w4, 1e-12);
    EXPECT_EQ(square_lattice_eigenvalue(0, 0, 0.5), 0.0);
}

TEST(SquareSpectrum, SortedNonnegativeWithMultiplicity)
{
    const auto s = square_spectrum(0.1, 40);
    const Eigen::VectorXd ev = s.eigenvalues();
    ASSERT_EQ(ev.size(), 40);
    EXPECT_EQ(ev[0], 0.0);
    EXPECT_TRUE(std::is_sorted(ev.data(), ev.data() + ev.size()));
    EXPECT_EQ(ev[1], ev[2]);
}

TEST(SquareSpectrum, BruteForceEnumeration)
{
    for (double eps : {1.0, 0.1, 0.01}) {
        std::vector<double> all;
        for (int a = 0; a < 60; ++a) {
            for (int b = 0; b < 60; ++b) all.push_back(square_lattice_eigenvalue(a, b, eps));
        }
        std::sort(all.begin(), all.end());
        const Eigen::VectorXd ev = square_spectrum(eps, 100).eigenvalues();
        for (Eigen::Index i = 0; i < ev.size(); ++i) EXPECT_DOUBLE_EQ(ev[i], all[static_cast<size_t>(i)]);
    }
}

TEST(SquareSpectrum, EpsilonOneIsBilaplacian)
{
    const auto s = square_spectrum(1.0, 30);
    const double w = std::numbers::pi / 2;
    for (const auto& mode : s.modes) {
        EXPECT_NEAR(mode.eigenvalue, std::pow(w * w * (mode.a * mode.a + mode.b * mode.b), 2), 1e-9 * (1 + mode.eigenvalue));
    }
}

TEST(SquareSpectrum, RejectsBadArguments)
{
    EXPECT_THROW(square_spectrum(0.0, 5), InvalidArgument);
    EXPECT_THROW(square_spectrum(0.5, 0), InvalidArgument);
}

TEST(ConformalWarp, ZeroParameterIsIdentity)
{
    const auto mesh = make_square(4);
    for (auto kind : {WarpKind::Polynomial, WarpKind::Exponential}) {
        const auto f = conformal_warp(kind, 0.0, mesh);
        EXPECT_TRUE(warp_mesh(mesh, f).vertices().isApprox(mesh.vertices(), 1e-15));
        EXPECT_TRUE(f.inverse_jacobian(Eigen::Vector2d(0.3, -0.2)).isIdentity(1e-15));
    }
}

TEST(ConformalWarp, JacobianInverseConsistency)
{
    const auto mesh = make_square(6);
    for (auto kind : {WarpKind::Polynomial, WarpKind::Exponential}) {
        const auto f = conformal_warp(kind, 0.3, mesh);
        for (Eigen::Index v = 0; v < mesh.num_vertices(); ++v) {
            const Eigen::Vector2d x = mesh.vertex(v);
            EXPECT_TRUE((f.jacobian(x) * f.inverse_jacobian(x)).isIdentity(1e-12));
            // Cauchy-Riemann: df is a scaled rotation.
            const Eigen::Matrix2d J = f.jacobian(x);
            EXPECT_NEAR(J(0, 0), J(1, 1), 1e-14);
            EXPECT_NEAR(J(0, 1), -J(1, 0), 1e-14);
            const double h = 1e-6;
            const Eigen::Vector2d fd = (f(x + Eigen::Vector2d(h, 0)) - f(x - Eigen::Vector2d(h, 0))) / (2 * h);
            EXPECT_LT((fd - J.col(0)).norm(), 1e-8);
        }
    }
}

TEST(ConformalWarp, ExponentialQuarterAnnulus)
{
    const auto rect = make_rectangle(4, 4, 0, 1, 0, std::numbers::pi / 2);
    const auto f = conformal_warp(WarpKind::Exponential, 1.0, rect);
    for (Eigen::Index v = 0; v < rect.num_vertices(); ++v) {
        const Eigen::Vector2d x = rect.vertex(v);
        // (exp(z) - 1) / c with c = 1 shifts the image of exp by -1.
        const Eigen::Vector2d y = f(x) + Eigen::Vector2d(1, 0);
        EXPECT_NEAR(y.norm(), std::exp(x[0]), 1e-12);
        EXPECT_GE(y[0], -1e-12);
        EXPECT_GE(y[1], -1e-12);
    }
}

TEST(ConformalWarp, RejectsNonInjectiveParameters)
{
    const auto mesh = make_square(4);
    EXPECT_THROW(conformal_warp(WarpKind::Polynomial, 0.4, mesh), InvalidArgument);
    const auto tall = make_rectangle(2, 8, 0, 1, 0, 7);
    EXPECT_THROW(conformal_warp(WarpKind::Exponential, 1.0, tall), InvalidArgument);
    EXPECT_THROW(warp_kind_from_string("cubic"), InvalidArgument);
    EXPECT_EQ(warp_kind_from_string(to_string(WarpKind::Exponential)), WarpKind::Exponential);
}

TEST(WarpExperiment, IdentityMapGivesIdenticalSpectra)
{
    const auto mesh = make_square(10);
    const auto r = warp_experiment(mesh, conformal_warp(WarpKind::Polynomial, 0.0, mesh), 0.1, 12, BcKind::Neumann);
    ASSERT_EQ(r.unwarped.eigenvalues.size(), r.warped.eigenvalues.size());
    for (Eigen::Index i = 0; i < r.unwarped.eigenvalues.size(); ++i) {
        EXPECT_NEAR(r.unwarped.eigenvalues[i], r.warped.eigenvalues[i], 1e-10 * (1 + r.unwarped.eigenvalues[i]));
    }
}
