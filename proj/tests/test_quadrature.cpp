#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "solab/dsl/chart.hpp"
#include "solab/quadrature/extrinsic.hpp"

using namespace solab;
using namespace solab::quad;
using std::numbers::pi;

namespace {

QuadOptions generic() {
    QuadOptions o;
    o.force_generic = true;
    return o;
}

Immersion paraboloid() {
    return Immersion(dsl::load_chart(std::string(SOLAB_SAMPLES_DIR) + "/paraboloid.json"), "paraboloid");
}

// z = |x|^2 / 2: D_R is the disk |x|^2 < 2(sqrt(1 + R^2) - 1).
double paraboloid_rho2(double R) { return 2 * (std::sqrt(1 + R * R) - 1); }
double paraboloid_area(double R) { return 2 * pi / 3 * (std::pow(1 + paraboloid_rho2(R), 1.5) - 1); }

}  // namespace

TEST(GaussRule, IntegratesPolynomialsExactly) {
    for (int q : {2, 6, 8, 24}) {
        const auto& r = gauss_legendre(q);
        for (int d = 0; d < 2 * q; ++d) {
            double s = 0;
            for (int i = 0; i < q; ++i) s += r.w[i] * std::pow(r.x[i], d);
            EXPECT_NEAR(s, d % 2 ? 0.0 : 2.0 / (d + 1), 1e-14) << q << " " << d;
        }
    }
}

TEST(RegionVolume, Examples) {
    auto sphere = catalog("sphere", {{"n", 2}, {"radius", 1}});
    auto cyl = catalog("cylinder", {{"n", 2}, {"k", 1}, {"rho", 1}});
    auto plane = catalog("plane", {{"n", 2}});
    for (const QuadOptions& opt : {QuadOptions{}, generic()}) {
        EXPECT_NEAR(region_volume(sphere.immersion, 2.0, opt).value, 4 * pi, 1e-9);
        EXPECT_NEAR(region_volume(cyl.immersion, 2.0, opt).value, 2 * pi * 2 * std::sqrt(3.0), 1e-9);
        EXPECT_NEAR(region_volume(plane.immersion, 1.0, opt).value, pi, 1e-7);
    }
}

TEST(RegionVolume, ParaboloidAgainstClosedForm) {
    Immersion par = paraboloid();
    for (double R : {0.5, 1.0, 2.5, 4.0}) {
        auto q = region_volume(par, R);
        EXPECT_NEAR(q.value, paraboloid_area(R), std::max(1e-7 * q.value, 4 * q.error)) << R;
        EXPECT_GE(q.error, 0.0);
    }
}

TEST(RegionVolume, Shell) {
    auto plane = catalog("plane");
    auto q = region_volume(ExtrinsicRegion{&plane.immersion, 1.0, 2.0}, generic());
    EXPECT_NEAR(q.value, 3 * pi, 1e-7);
}

TEST(RegionVolume, ImproperWindow) {
    auto cyl = catalog("cylinder");
    try {
        region_volume(cyl.immersion, 100.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "ImproperWindow");
    }
}

TEST(RegionVolume, MonotoneInRadius) {
    Immersion par = paraboloid();
    double prev = 0;
    for (double R = 0.25; R <= 5.0; R += 0.25) {
        double v = region_volume(par, R, generic()).value;
        EXPECT_GE(v, prev);
        prev = v;
    }
}

TEST(RegionVolume, RefinementWithinFourErrorEstimates) {
    Immersion par = paraboloid();
    for (double R : {1.0, 3.0}) {
        QuadOptions coarse = generic(), fine = generic();
        coarse.rel_tol = fine.rel_tol = 1e-6;
        fine.initial_per_axis = 2 * coarse.initial_per_axis;
        auto a = region_volume(par, R, coarse), b = region_volume(par, R, fine);
        EXPECT_LE(std::fabs(a.value - b.value), 4 * std::max(a.error, b.error) + 1e-12 * a.value) << R;
    }
}

TEST(RegionVolume, Deterministic) {
    auto e = catalog("castro_lerma");
    auto a = region_volume(e.immersion, 3.0), b = region_volume(e.immersion, 3.0);
    EXPECT_EQ(a.value, b.value);
    EXPECT_EQ(a.error, b.error);
}

TEST(Boundary, Examples) {
    auto plane = catalog("plane");
    auto cyl = catalog("cylinder");
    for (const QuadOptions& opt : {QuadOptions{}, generic()}) {
        auto p = boundary_area_and_flux(plane.immersion, 1.0, opt);
        EXPECT_NEAR(p.area, 2 * pi, 1e-7);
        EXPECT_NEAR(p.flux, 2 * pi, 1e-7);
        EXPECT_LE(std::fabs(p.area - 2 * pi), std::max(p.area_error, 1e-12));
        auto c = boundary_area_and_flux(cyl.immersion, 2.0, opt);
        EXPECT_NEAR(c.area, 4 * pi, 1e-9);
        EXPECT_NEAR(c.flux, 2 * std::sqrt(3.0) * pi, 1e-9);
    }
}

TEST(Boundary, CriticalLevel) {
    auto sphere = catalog("sphere", {{"n", 2}, {"radius", 1}});
    for (const QuadOptions& opt : {QuadOptions{}, generic()}) {
        try {
            boundary_area_and_flux(sphere.immersion, 1.0, opt);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), "NonRegularLevel");
        }
    }
}

TEST(Boundary, OneDimensionalPoints) {
    auto circle = catalog("sphere", {{"n", 1}, {"radius", 1}});
    auto line = catalog("plane", {{"n", 1}});
    auto a = boundary_area_and_flux(line.immersion, 2.0, generic());
    EXPECT_NEAR(a.area, 2.0, 1e-14);  // two points
    EXPECT_NEAR(a.flux, 2.0, 1e-14);
    EXPECT_EQ(boundary_area_and_flux(circle.immersion, 3.0).area, 0.0);
}

TEST(Boundary, MarchingAgreesWithLineRoots) {
    Immersion par = paraboloid();
    auto cl = catalog("castro_lerma");
    QuadOptions march = generic(), lines = generic();
    march.boundary_route = BoundaryRoute::Marching;
    lines.boundary_route = BoundaryRoute::LineRoot;
    for (double R : {0.7, 2.0, 3.5}) {
        auto a = boundary_area_and_flux(par, R, march), b = boundary_area_and_flux(par, R, lines);
        EXPECT_NEAR(a.area, 2 * pi * std::sqrt(paraboloid_rho2(R)), 1e-6 * a.area);
        EXPECT_NEAR(b.area, 2 * pi * std::sqrt(paraboloid_rho2(R)), 1e-6 * a.area);
        EXPECT_NEAR(a.flux, b.flux, 1e-6 * a.flux);
    }
    auto a = boundary_area_and_flux(cl.immersion, 3.0, march), b = boundary_area_and_flux(cl.immersion, 3.0, lines);
    EXPECT_NEAR(a.area, b.area, 1e-6 * a.area);
    EXPECT_NEAR(a.flux, b.flux, 1e-6 * a.flux);
}

TEST(Boundary, ThreeDimensionalLevelSet) {
    auto plane = catalog("plane", {{"n", 3}});
    auto cyl = catalog("cylinder", {{"n", 3}, {"k", 1}, {"rho", 1}});
    // Line roots in three dimensions are low order: the level set leaves
    // cells through their faces. The error estimate has to cover the gap.
    auto a = boundary_area_and_flux(plane.immersion, 1.5, generic());
    EXPECT_NEAR(a.area, 4 * pi * 2.25, std::min(a.area_error, 1e-2 * a.area));
    auto b = boundary_area_and_flux(cyl.immersion, 2.0, generic()), c = boundary_area_and_flux(cyl.immersion, 2.0);
    EXPECT_NEAR(b.area, c.area, std::min(b.area_error, 1e-2 * c.area));  // S^1 x S^1(sqrt 3)
    EXPECT_NEAR(c.area, 4 * pi * pi * std::sqrt(3.0), 1e-9);
    // S^1 x D^2(sqrt 3)
    auto v = region_volume(cyl.immersion, 2.0, generic());
    EXPECT_NEAR(v.value, 6 * pi * pi, std::max(4 * v.error, 1e-6));
}

TEST(Boundary, CoareaConsistency) {
    Immersion par = paraboloid();
    auto cyl = catalog("cylinder");
    auto cl = catalog("castro_lerma");
    Integrand inv{1, Level::Metric, [](const PointGeometry& G, double* out) { out[0] = 1.0 / G.grad_r_norm; }};
    for (const Immersion* imm : {&par, &cyl.immersion, &cl.immersion}) {
        const double R = 2.5, h = 1e-3;
        const double dv = (region_volume(*imm, R + h, generic()).value - region_volume(*imm, R - h, generic()).value) / (2 * h);
        const double b = integrate_level(*imm, inv, R, generic()).value[0];
        EXPECT_NEAR(dv, b, 0.05 * b) << imm->name();
    }
}

TEST(Weighted, SphereCollapses) {
    auto s = catalog("sphere", {{"n", 2}, {"radius", 1.5}});
    const double lam = *s.known.lambda;
    auto g = gaussian_volume(s.immersion, lam);
    EXPECT_NEAR(g.value, std::exp(-lam * 1.5 * 1.5 / 2) * 4 * pi * 1.5 * 1.5, 1e-10);
    EXPECT_EQ(g.tail, 0.0);
    EXPECT_LT(weighted_identity_check(s.immersion, lam).margin, 1e-12);
}

TEST(Weighted, CylinderRatios) {
    for (auto [n, k] : {std::pair{2, 1}, {4, 2}}) {
        auto c = make_cylinder(n, k, 1.0);
        const double lam = k;
        auto w = weighted_identity_check(c.immersion, lam);
        EXPECT_NEAR(w.gaussian.value / w.second.value, lam / n, 1e-3);
        EXPECT_LT(w.margin, 1e-3);
        EXPECT_TRUE(w.pass);
        EXPECT_GT(w.gaussian.tail, 0.0);
        EXPECT_LT(w.gaussian.tail, 1e-8 * w.gaussian.value);
    }
}

TEST(Weighted, CylinderClosedForm) {
    // S^1 x R: 2 pi e^{-1/2} sqrt(2 pi)
    auto c = catalog("cylinder");
    EXPECT_NEAR(gaussian_volume(c.immersion, 1.0).value, 2 * pi * std::exp(-0.5) * std::sqrt(2 * pi), 1e-8);
}

TEST(Weighted, GenericRouteMatchesProduct) {
    auto c = catalog("cylinder");
    QuadOptions g = generic();
    g.rel_tol = 1e-7;
    auto a = gaussian_volume(c.immersion, 1.0), b = gaussian_volume(c.immersion, 1.0, g);
    EXPECT_NEAR(a.value, b.value, 1e-6 * a.value);
    auto w = weighted_identity_check(c.immersion, 1.0, g);
    EXPECT_LT(w.margin, 1e-3);
}

TEST(Weighted, CompactShrinkers) {
    for (auto name : {"clifford_torus", "veronese_surface"}) {
        auto e = catalog(name);
        EXPECT_LT(weighted_identity_check(e.immersion, *e.known.lambda).margin, 1e-3) << name;
    }
}

TEST(Weighted, PlaneIsNotANegativeControl) {
    // H = 0 = X^perp: the identity holds for every lambda.
    auto p = catalog("plane");
    EXPECT_LT(weighted_identity_check(p.immersion, 1.0).margin, 1e-6);
}

TEST(Weighted, ShiftedPlaneNegativeControl) {
    Immersion sp(dsl::load_chart(std::string(SOLAB_SAMPLES_DIR) + "/shifted_plane.json"), "shifted_plane");
    // z = a: lambda int r^2 w = (a^2 + 2) int w, margin = a^2 / 2 = 1 at lambda = 1.
    EXPECT_NEAR(weighted_identity_check(sp, 1.0).margin, 1.0, 1e-6);
}

TEST(Weighted, TruncationFailure) {
    auto p = catalog("plane");
    try {
        gaussian_volume(p.immersion, 1e-3);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "TruncationFailure");
    }
}

TEST(Psi, CylinderMatchesClosedForm) {
    auto c = make_cylinder(3, 1, 1.0);
    auto curve = psi(c, 1.0, {1.5, 2.0, 3.0, 4.0});
    for (std::size_t i = 0; i < curve.radii.size(); ++i)
        EXPECT_NEAR(curve.values[i], curve.closed_form[i], 1e-6 * curve.closed_form[i]);
    EXPECT_NEAR(curve.values[1], 32.06, 0.01);
}

TEST(Psi, NonincreasingAndZeroAtOrigin) {
    auto c = catalog("cylinder");
    std::vector<double> grid;
    for (double R = 0; R <= 6; R += 0.5) grid.push_back(R);
    auto curve = psi(c, 1.0, grid);
    for (std::size_t i = 1; i < grid.size(); ++i) EXPECT_LE(curve.values[i], curve.values[i - 1]);
    EXPECT_NEAR(curve.values[0], second_moment(c.immersion, 1.0).value, 1e-9 * curve.values[0]);
    for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(curve.values[i], curve.closed_form[i], 1e-6 * curve.closed_form[i] + 1e-300);
}

TEST(Psi, SphereVanishesOutside) {
    auto s = catalog("sphere", {{"n", 2}, {"radius", 1}});
    auto curve = psi(s.immersion, 2.0, {0.5, 1.5, 3.0});
    EXPECT_GT(curve.values[0], 0.0);
    EXPECT_EQ(curve.values[1], 0.0);
    EXPECT_EQ(curve.values[2], 0.0);
}

TEST(Parabolicity, CodimensionTwoFactorDiverges) {
    auto c = make_cylinder(3, 1, 1.0);
    auto r = parabolicity_integral(c.immersion, 1.0);
    EXPECT_EQ(r.trend, Trend::DivergentLike);
    EXPECT_EQ(r.label, "diagnostic");
    // scaled Psi = 8 pi^2 (t^2/2 + 1): the integral is log(t^2 + 2) / (8 pi^2)
    auto F = [](double t) { return std::log(t * t + 2) / (8 * pi * pi); };
    EXPECT_NEAR(r.value, F(r.R_max) - F(r.R0), 1e-6 * r.value);
    auto longer = parabolicity_integral(c.immersion, 1.0, r.R0, 2 * r.R_max);
    EXPECT_NEAR(longer.value - r.value, F(2 * r.R_max) - F(r.R_max), 1e-6);
}

TEST(Parabolicity, CodimensionFourFactorConverges) {
    auto c = make_cylinder(5, 1, 1.0);
    EXPECT_EQ(parabolicity_integral(c.immersion, 1.0).trend, Trend::ConvergentLike);
}

TEST(Parabolicity, SphereUnderflows) {
    auto s = catalog("sphere", {{"n", 2}, {"radius", 1}});
    try {
        parabolicity_integral(s.immersion, 2.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "PsiUnderflow");
    }
}

TEST(FluxIdentity, Cylinder) {
    auto c = catalog("cylinder");
    for (const QuadOptions& opt : {QuadOptions{}, generic()}) {
        auto f = flux_identity_check(c.immersion, 1.0, 2.0, opt);
        EXPECT_LT(f.margin, 1e-3);
        EXPECT_LT(f.lemma_margin, 1e-3);
        EXPECT_NEAR(f.lemma_lhs, 0.5, 1e-9);
        EXPECT_GE(f.rhs, 0.0);
    }
}

TEST(FluxIdentity, PlaneByParts) {
    auto p = catalog("plane");
    auto f = flux_identity_check(p.immersion, 1.0, 3.0, generic());
    const double oracle = 2 * pi * 9 * std::exp(-4.5);
    EXPECT_NEAR(f.lhs, oracle, 1e-5);
    EXPECT_NEAR(f.rhs, oracle, 1e-8);
    EXPECT_NEAR(f.lemma_lhs, 1.0, 1e-12);
    EXPECT_NEAR(f.lemma_rhs, 1.0, 1e-4);
}

TEST(FluxIdentity, SphereOutsideBall) {
    auto s = catalog("sphere", {{"n", 2}, {"radius", 1}});
    for (const QuadOptions& opt : {QuadOptions{}, generic()}) {
        auto f = flux_identity_check(s.immersion, 2.0, 1.5, opt);
        EXPECT_NEAR(f.lhs, 0.0, 1e-10);
        EXPECT_EQ(f.rhs, 0.0);
        EXPECT_LT(f.margin, 1e-10);
    }
}

TEST(FluxIdentity, RightSideNonnegativeOnShrinkers) {
    for (auto e : {catalog("cylinder"), make_cylinder(3, 1, 1.0), make_cylinder(4, 2, 1.0), catalog("clifford_torus")}) {
        const double lam = *e.known.lambda;
        for (double R : {0.8, 1.7, 2.5}) {
            FluxIdentity f;
            try {
                f = flux_identity_check(e.immersion, lam, R);
            } catch (const Error& err) {
                EXPECT_EQ(err.code(), "NonRegularLevel");
                continue;
            }
            EXPECT_GE(f.rhs, -1e-10) << e.name << " " << R;
            EXPECT_LT(f.margin, 1e-3) << e.name << " " << R;
        }
    }
}
