#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "solab/dsl/chart.hpp"
#include "solab/geometry/catalog.hpp"
#include "solab/pde/io.hpp"
#include "solab/pde/lab.hpp"

using namespace solab;
using namespace solab::pde;
using std::numbers::pi;

namespace {

template <class F>
void expect_error(F&& f, const std::string& code) {
    try {
        f();
        ADD_FAILURE() << "expected " << code;
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), code) << e.what();
    }
}

const Immersion& plane2() {
    static CatalogEntry e = make_plane(2);
    return e.immersion;
}
const Immersion& cylinder() {
    static CatalogEntry e = make_cylinder(2, 1, 1.0);
    return e.immersion;
}

// Cylinder S^1 x R with K = {r < sqrt 2}: two strips, u linear in z on each.
double cylinder_cap(double rho, double R) {
    return 4 * pi / (std::sqrt(R * R - 1) - std::sqrt(rho * rho - 1));
}

double l2_error(const ExitTimeField& f, double R) {
    double s = 0.0;
    for (int v = 0; v < f.mesh.vertex_count(); ++v) {
        const double exact = (R * R - f.r[v] * f.r[v]) / 4;
        s += f.lumped_mass[v] * (f.E[v] - exact) * (f.E[v] - exact);
    }
    return std::sqrt(s);
}

}  // namespace

TEST(Mesh, AnnulusIsARing) {
    Mesh m = mesh_region(plane2(), {1.0, std::exp(1.0)});
    EXPECT_EQ(m.euler_characteristic(), 0);
    for (const auto& x : m.local) EXPECT_GT(solab::pde::detail::signed_area(x[0], x[1], x[2]), 0.0);
    int inner = 0, outer = 0;
    for (int v = 0; v < m.vertex_count(); ++v) {
        const double r = plane2().radius(m.vertices[v].data());
        if (m.tags[v] == Tag::Inner) {
            ++inner;
            EXPECT_NEAR(r, 1.0, 1e-12);
        }
        if (m.tags[v] == Tag::Outer) {
            ++outer;
            EXPECT_NEAR(r, std::exp(1.0), 1e-12);
        }
        if (m.tags[v] == Tag::Interior) {
            EXPECT_GT(r, 1.0);
            EXPECT_LT(r, std::exp(1.0));
        }
    }
    EXPECT_GT(inner, 50);
    EXPECT_GT(outer, inner);
    for (const auto& e : m.boundary_edges) EXPECT_EQ(m.tags[e[0]], m.tags[e[1]]);
}

TEST(Mesh, CylinderStripIsPeriodic) {
    Mesh m = mesh_region(cylinder(), {0.0, 2.0});
    EXPECT_EQ(m.euler_characteristic(), 0);
    EXPECT_TRUE(m.periodic[0]);
    double zmin = 1e9, zmax = -1e9;
    for (const auto& p : m.vertices) zmin = std::min(zmin, p[1]), zmax = std::max(zmax, p[1]);
    EXPECT_NEAR(zmin, -std::sqrt(3.0), 1e-10);
    EXPECT_NEAR(zmax, std::sqrt(3.0), 1e-10);
    for (const auto& e : m.boundary_edges) EXPECT_EQ(m.tags[e[0]], Tag::Outer);
    // Induced area of the strip: 2 pi * 2 sqrt 3.
    Assembly A = assemble(cylinder(), m);
    EXPECT_NEAR(A.volume, 4 * pi * std::sqrt(3.0), 1e-9);
}

TEST(Mesh, Errors) {
    CatalogEntry sphere = make_sphere(2, 1.0);
    expect_error([&] { mesh_region(sphere.immersion, {0.0, 0.5}); }, "MeshFailure");
    CatalogEntry p3 = make_plane(3);
    expect_error([&] { mesh_region(p3.immersion, {0.0, 1.0}); }, "DimensionUnsupported");
    expect_error([&] { mesh_region(plane2(), {0.0, 100.0}); }, "ImproperWindow");
    expect_error([&] { mesh_region(plane2(), {2.0, 1.0}); }, "InvalidParams");
    expect_error([&] { mesh_region(plane2(), {1.0, 1.05}, {0.2}); }, "MeshFailure");
}

TEST(Fem, DisconnectedComponentIsReported) {
    Mesh m;
    m.dim = 2;
    m.periodic = {false, false};
    m.period = {1, 1};
    m.vertices = {{0, 0}, {1, 0}, {0, 1}, {5, 5}, {6, 5}, {5, 6}};
    m.tags = {Tag::Outer, Tag::Inner, Tag::Interior, Tag::Interior, Tag::Interior, Tag::Interior};
    m.simplices = {{0, 1, 2}, {3, 4, 5}};
    m.local = {{m.vertices[0], m.vertices[1], m.vertices[2]}, {m.vertices[3], m.vertices[4], m.vertices[5]}};
    Assembly A = assemble(plane2(), m);
    try {
        solve_dirichlet(m, A, 1.0, 0.0, 0.0);
        ADD_FAILURE();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "DisconnectedRegion");
        EXPECT_NE(std::string(e.what()).find("component 1 (3 vertices)"), std::string::npos);
    }
}

TEST(Fem, StiffnessKillsConstantsAndIsSymmetric) {
    Mesh m = mesh_region(cylinder(), {std::sqrt(2.0), 3.0}, {0.1});
    Assembly A = assemble(cylinder(), m);
    Eigen::VectorXd one = Eigen::VectorXd::Ones(m.vertex_count());
    EXPECT_LT((A.K * one).lpNorm<Eigen::Infinity>(), 1e-10);
    EXPECT_LT((SparseMatrix(A.K.transpose()) - A.K).norm(), 1e-12);
}

TEST(Capacity, PlaneAnnulus) {
    CapacityResult c = capacity(plane2(), 1.0, std::exp(1.0));
    EXPECT_NEAR(c.value, 2 * pi, 0.02 * 2 * pi);
    EXPECT_LE(c.residual, 1e-10);
    // Energy and boundary-flux forms agree.
    EXPECT_NEAR(c.recovered_flux / c.value, 1.0, 0.02);
    // Discrete maximum principle.
    EXPECT_GE(c.solution.values.minCoeff(), -1e-12);
    EXPECT_LE(c.solution.values.maxCoeff(), 1 + 1e-12);
    CapacityResult c2 = capacity(plane2(), 1.0, std::exp(2.0));
    EXPECT_NEAR(c2.value, pi, 0.02 * pi);
    EXPECT_LT(c2.value, c.value);
}

TEST(Capacity, MonotoneInTheOuterSet) {
    struct Triple {
        const Immersion* imm;
        double rho, R1, R2, R3;
    };
    for (const auto& t : {Triple{&plane2(), 1.0, 1.5, 2.0, 3.0}, Triple{&plane2(), 0.5, 1.0, 2.0, 4.0},
                          Triple{&cylinder(), std::sqrt(2.0), 2.0, 3.0, 5.0}}) {
        PdeOptions o{0.05, false};
        const double a = capacity(*t.imm, t.rho, t.R1, o).value;
        const double b = capacity(*t.imm, t.rho, t.R2, o).value;
        const double c = capacity(*t.imm, t.rho, t.R3, o).value;
        EXPECT_GE(a, b);
        EXPECT_GE(b, c);
    }
}

TEST(Capacity, BelowTheLipschitzBound) {
    struct Case {
        const Immersion* imm;
        double rho, R;
    };
    for (const auto& k : {Case{&plane2(), 1.0, std::exp(1.0)}, Case{&plane2(), 0.5, 2.0}, Case{&cylinder(), std::sqrt(2.0), 3.0},
                          Case{&cylinder(), 1.2, 2.5}}) {
        CapacityResult c = capacity(*k.imm, k.rho, k.R);
        CapacityBound b = capacity_upper_bound(*k.imm, k.rho, k.R);
        EXPECT_LE(c.value, b.value + c.tolerance + b.error) << k.rho << " " << k.R;
    }
    // The plane annulus bound is tight: flux(t) = 2 pi t.
    EXPECT_NEAR(capacity_upper_bound(plane2(), 1.0, std::exp(1.0)).value, 2 * pi, 1e-10);
}

TEST(Capacity, CylinderBoundFromHandFlux) {
    // flux(t) = 2 * 2 pi sqrt(t^2 - 1) / t on S^1 x R.
    auto inv = [](double t) { return t / (4 * pi * std::sqrt(t * t - 1)); };
    const double rho = 1.5, R = 3.0;
    const double exact = 1.0 / boost::math::quadrature::gauss_kronrod<double, 61>::integrate(inv, rho, R, 10, 1e-14);
    EXPECT_NEAR(capacity_upper_bound(cylinder(), rho, R).value, exact, 1e-9 * exact);
}

TEST(Capacity, SphereHasNoWindow) {
    CatalogEntry s = make_sphere(2, 1.0);
    expect_error([&] { capacity_upper_bound(s.immersion, 0.5, 2.0); }, "EmptyBoundary");
    expect_error([&] { capacity(plane2(), 0.0, 1.0); }, "InvalidParams");
}

TEST(Capacity, CylinderLadderDecays) {
    CapacityLadder l = capacity_ladder(cylinder(), std::sqrt(2.0), 2.0, 4, {0.1, true});
    ASSERT_EQ(l.caps.size(), 4u);
    EXPECT_EQ(l.label, "trend");
    for (std::size_t i = 0; i < l.caps.size(); ++i) {
        EXPECT_NEAR(l.caps[i], cylinder_cap(std::sqrt(2.0), l.radii[i]), 1e-6 * l.caps[i]);
        if (i > 0) {
            EXPECT_LE(l.caps[i], 0.7 * l.caps[i - 1]);
        }
    }
    ASSERT_TRUE(l.fitted_limit.has_value());
    EXPECT_LT(*l.fitted_limit, l.caps.back());
}

TEST(Capacity, CurveOnALine) {
    CatalogEntry line = make_plane(1);
    // Two segments 1 < |x| < 3, each with u linear: cap = 2 * 1/2.
    CapacityResult c = capacity(line.immersion, 1.0, 3.0, {0.05, true});
    EXPECT_NEAR(c.value, 1.0, 1e-9);
    EXPECT_NEAR(c.recovered_flux, 1.0, 1e-6);
}

TEST(Capacity, Deterministic) {
    PdeOptions o{0.1, false};
    EXPECT_EQ(capacity(plane2(), 1.0, 2.0, o).value, capacity(plane2(), 1.0, 2.0, o).value);
}

TEST(ExitTime, PlaneDiskMatchesTheProfile) {
    ExitTimeField f = solve_exit_time(plane2(), 1.0);
    double err = 0.0;
    for (int v = 0; v < f.mesh.vertex_count(); ++v) err = std::max(err, std::fabs(f.E[v] - f.Ebar[v]));
    EXPECT_LT(err, 0.01 * 0.25);
    EXPECT_NEAR(f.E.maxCoeff(), 0.25, 0.0025);
    // Maximum principle: zero exactly on the exit boundary, positive inside.
    for (int v = 0; v < f.mesh.vertex_count(); ++v) {
        if (f.mesh.tags[v] == Tag::Outer)
            EXPECT_EQ(f.E[v], 0.0);
        else
            EXPECT_GT(f.E[v], 0.0);
    }
    ExitComparison c = exit_time_comparison(f, SolitonSpec::mcf(0.0));
    EXPECT_EQ(c.mode, "both");
    EXPECT_TRUE(c.pass);
    EXPECT_LT(std::fabs(c.min_margin), 0.0025);
}

TEST(ExitTime, SecondOrderInL2) {
    // Boundary cells are cut per h, so single halvings are noisy; fit the slope.
    std::vector<double> lh, le;
    for (double h : {0.2, 0.1, 0.05, 0.025, 0.0125}) {
        lh.push_back(std::log(h));
        le.push_back(std::log(l2_error(solve_exit_time(plane2(), 1.0, {h, false}), 1.0)));
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lh.size(); ++i) mx += lh[i] / lh.size(), my += le[i] / le.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lh.size(); ++i) sxy += (lh[i] - mx) * (le[i] - my), sxx += (lh[i] - mx) * (lh[i] - mx);
    EXPECT_GT(sxy / sxx, 1.6);
    EXPECT_LT(sxy / sxx, 2.6);
}

TEST(ExitTime, CylinderImcfRatio) {
    ExitTimeField f = solve_exit_time(cylinder(), 2.0);
    ExitComparison c = exit_time_comparison(f, SolitonSpec::imcf(1.0));
    EXPECT_EQ(c.mode, "ratio");
    EXPECT_DOUBLE_EQ(c.expected_ratio, 2.0);
    EXPECT_GT(c.ratio_vertices, 100);
    EXPECT_LT(c.max_rel_deviation, 0.02);
    EXPECT_TRUE(c.pass);
    for (int v = 0; v < f.mesh.vertex_count(); ++v)
        if (f.depth[v] <= 2 * f.mesh.h) {
            EXPECT_LE(std::fabs(f.mesh.vertices[v][1]), std::sqrt(3.0) + 1e-12);
        }
    expect_error([&] { exit_time_comparison(f, SolitonSpec::imcf(0.5)); }, "InvalidParams");
}

TEST(ExitTime, ShrinkerLowerComparison) {
    ExitTimeField f = solve_exit_time(cylinder(), 2.0);
    ExitComparison c = exit_time_comparison(f, SolitonSpec::mcf(1.0));
    EXPECT_EQ(c.mode, "lower");
    EXPECT_TRUE(c.pass);
    EXPECT_GE(c.min_margin, -c.tol);
}

TEST(ExitTime, ExpanderUpperComparison) {
    CatalogEntry cl = make_castro_lerma(1.0, -0.5);
    ExitTimeField f = solve_exit_time(cl.immersion, 3.0, {0.1, false});
    ExitComparison c = exit_time_comparison(f, SolitonSpec::mcf(-0.5));
    EXPECT_EQ(c.mode, "upper");
    EXPECT_TRUE(c.pass);
    EXPECT_LE(c.max_margin, c.tol);
    // The reverse inequality fails clearly, so the check is not vacuous.
    EXPECT_LT(c.min_margin, -10 * c.tol);
}

TEST(ExitTime, CompactSphereIsRejected) {
    CatalogEntry s = make_sphere(2, 1.0);
    expect_error([&] { solve_exit_time(s.immersion, 1.1); }, "EmptyBoundary");
}

TEST(ExitTime, CurveSegment) {
    CatalogEntry line = make_plane(1);
    ExitTimeField f = solve_exit_time(line.immersion, 1.0, {0.05, false});
    for (int v = 0; v < f.mesh.vertex_count(); ++v) EXPECT_NEAR(f.E[v], f.Ebar[v], 1e-12);
}

TEST(SolitonFromExit, CylinderInvertsToC1) {
    SolitonFromExit s = soliton_from_exit_time(cylinder(), {2.0, 3.0}, {0.1, false});
    EXPECT_NEAR(s.alpha, 2.0, 0.02);
    ASSERT_TRUE(s.C_forward && s.C_printed);
    EXPECT_NEAR(*s.C_forward, 1.0, 0.02);
    EXPECT_NEAR(*s.C_printed, -1.0, 0.02);
    EXPECT_EQ(s.verdict, "CONSISTENT");
    EXPECT_GT(s.printed_residual, 1.0);
}

TEST(SolitonFromExit, PlaneIsMinimal) {
    SolitonFromExit s = soliton_from_exit_time(plane2(), {1.0, 2.0}, {0.1, false});
    EXPECT_NEAR(s.alpha, 1.0, 0.01);
    EXPECT_EQ(s.verdict, "MINIMAL");
    EXPECT_FALSE(s.C_forward.has_value());
}

TEST(SolitonFromExit, ParaboloidIsNotProportional) {
    Immersion p(dsl::load_chart(std::string(SOLAB_SAMPLES_DIR) + "/paraboloid.json"), "paraboloid");
    expect_error([&] { soliton_from_exit_time(p, {1.0, 2.0}, {0.1, false}); }, "NonProportional");
}

TEST(PdeIo, OffAndCsv) {
    Mesh m = mesh_region(plane2(), {0.0, 1.0}, {0.25});
    std::ostringstream off;
    write_off(off, m, plane2());
    std::istringstream in(off.str());
    std::string head;
    int nv = 0, nf = 0, ne = -1;
    in >> head >> nv >> nf >> ne;
    EXPECT_EQ(head, "OFF");
    EXPECT_EQ(nv, m.vertex_count());
    EXPECT_EQ(nf, m.simplex_count());
    EXPECT_EQ(ne, 0);
    std::ostringstream csv;
    std::vector<double> vals(m.vertex_count(), 1.5);
    write_field_csv(csv, m, plane2(), vals);
    std::istringstream rows(csv.str());
    std::string line;
    std::getline(rows, line);
    EXPECT_EQ(line, "vertex,u1,u2,r,value");
    int count = 0;
    while (std::getline(rows, line)) ++count;
    EXPECT_EQ(count, m.vertex_count());
}
