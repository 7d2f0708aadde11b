#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include <Eigen/QR>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "solab/pde/fem.hpp"
#include "solab/quadrature/extrinsic.hpp"
#include "solab/soliton/soliton.hpp"

namespace solab::pde {

struct PdeOptions {
    double h = 0.05;
    // Capacity tolerance comes from a second solve at 2h.
    bool coarse_check = true;
};

namespace detail {

inline MeshOptions mesh_options(const PdeOptions& opt, double scale = 1.0) {
    MeshOptions m;
    m.h = opt.h * scale;
    return m;
}

// Parameter difference b - a, wrapped to the nearest periodic image.
inline Point2 wrapped_delta(const Mesh& mesh, const Point2& a, const Point2& b) {
    Point2 d{b[0] - a[0], b[1] - a[1]};
    for (int k = 0; k < mesh.dim; ++k)
        if (mesh.periodic[k]) d[k] -= mesh.period[k] * std::round(d[k] / mesh.period[k]);
    return d;
}

inline std::vector<std::vector<int>> adjacency(const Mesh& mesh) {
    std::vector<std::vector<int>> adj(mesh.vertex_count());
    for (const auto& s : mesh.simplices)
        for (int i = 0; i <= mesh.dim; ++i)
            for (int j = 0; j <= mesh.dim; ++j)
                if (i != j) adj[s[i]].push_back(s[j]);
    for (auto& a : adj) {
        std::sort(a.begin(), a.end());
        a.erase(std::unique(a.begin(), a.end()), a.end());
    }
    return adj;
}

inline double induced_length(const Immersion& imm, const Mesh& mesh, const Point2& a, const Point2& d) {
    thread_local PointGeometry G;
    Point2 m{a[0] + 0.5 * d[0], a[1] + 0.5 * d[1]};
    imm.wrap(m.data());
    point_geometry(imm, m.data(), Level::Metric, G);
    double s = 0.0;
    for (int i = 0; i < mesh.dim; ++i)
        for (int j = 0; j < mesh.dim; ++j) s += G.g(i, j) * d[i] * d[j];
    return std::sqrt(std::max(s, 0.0));
}

inline std::vector<int> rings(const std::vector<std::vector<int>>& adj, std::vector<int> seed, int count) {
    std::vector<int> out = seed;
    for (int ring = 0; ring < count; ++ring) {
        std::vector<int> next;
        for (int v : out)
            for (int w : adj[v]) next.push_back(w);
        out.insert(out.end(), next.begin(), next.end());
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
    }
    return out;
}

// Gradient (parameter components) at `at` of the least-squares cubic
// through the values on `patch`.
inline Point2 recovered_gradient(const Mesh& mesh, const Eigen::VectorXd& u, const std::vector<int>& patch,
                                 const Point2& at) {
    const int n = mesh.dim;
    const int cols = n == 1 ? 4 : 10;
    Eigen::MatrixXd A(patch.size(), cols);
    Eigen::VectorXd b(patch.size());
    for (std::size_t i = 0; i < patch.size(); ++i) {
        Point2 d = wrapped_delta(mesh, at, mesh.vertices[patch[i]]);
        const double x = d[0], y = d[1];
        if (n == 1)
            A.row(i) << 1.0, x, x * x, x * x * x;
        else
            A.row(i) << 1.0, x, y, x * x, x * y, y * y, x * x * x, x * x * y, x * y * y, y * y * y;
        b[i] = u[patch[i]];
    }
    Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
    return {c[1], n == 1 ? 0.0 : c[2]};
}

inline double gradient_norm(const Immersion& imm, Point2 at, const Point2& grad, int n) {
    thread_local PointGeometry G;
    imm.wrap(at.data());
    point_geometry(imm, at.data(), Level::Metric, G);
    double s = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s += G.ginv(i, j) * grad[i] * grad[j];
    return std::sqrt(std::max(s, 0.0));
}

inline double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * (v.size() - 1);
    const std::size_t i = static_cast<std::size_t>(pos);
    const double f = pos - i;
    return i + 1 < v.size() ? (1 - f) * v[i] + f * v[i + 1] : v.back();
}

inline void require_tag(const Mesh& mesh, Tag t, const std::string& what) {
    if (std::find(mesh.tags.begin(), mesh.tags.end(), t) == mesh.tags.end())
        throw check_error("EmptyBoundary", what + " is empty on this region");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Capacity of K = D_rho relative to D_R.

struct CapacityResult {
    double value = 0.0;           // Dirichlet energy u^T K u
    double coarse_value = 0.0;    // same at 2h
    double tolerance = 0.0;       // |cap_h - cap_2h| + 1e-9 cap (solver floor)
    double recovered_flux = 0.0;  // int_{r = rho} |grad u| from recovered gradients
    double h = 0.0;
    int vertices = 0, simplices = 0, iterations = 0;
    double residual = 0.0;
    Mesh mesh;
    DirichletSolution solution;
};

// Boundary-flux form of the energy: cubic gradient recovery on a 3-ring patch at the
// midpoints of inner boundary edges (points for n = 1).
inline double inner_boundary_flux(const Immersion& imm, const Mesh& mesh, const Eigen::VectorXd& u) {
    auto adj = detail::adjacency(mesh);
    quad::KahanSum acc;
    if (mesh.dim == 1) {
        for (int v = 0; v < mesh.vertex_count(); ++v) {
            if (mesh.tags[v] != Tag::Inner) continue;
            auto patch = detail::rings(adj, {v}, 3);
            Point2 g = detail::recovered_gradient(mesh, u, patch, mesh.vertices[v]);
            acc.add(detail::gradient_norm(imm, mesh.vertices[v], g, 1));
        }
        return acc.value();
    }
    for (const auto& e : mesh.boundary_edges) {
        if (mesh.tags[e[0]] != Tag::Inner || mesh.tags[e[1]] != Tag::Inner) continue;
        const Point2& a = mesh.vertices[e[0]];
        const Point2 d = detail::wrapped_delta(mesh, a, mesh.vertices[e[1]]);
        const Point2 mid{a[0] + 0.5 * d[0], a[1] + 0.5 * d[1]};
        auto patch = detail::rings(adj, {e[0], e[1]}, 3);
        Point2 g = detail::recovered_gradient(mesh, u, patch, mid);
        acc.add(detail::gradient_norm(imm, mid, g, 2) * detail::induced_length(imm, mesh, a, d));
    }
    return acc.value();
}

inline CapacityResult capacity(const Immersion& imm, double rho, double R, const PdeOptions& opt = {}) {
    if (!(rho > 0)) throw input_error("InvalidParams", "capacity needs an inner radius rho > 0");
    if (!(R > rho)) throw input_error("InvalidParams", "capacity needs R > rho");
    auto solve = [&](double scale, CapacityResult& out) {
        Mesh mesh = mesh_region(imm, {rho, R}, detail::mesh_options(opt, scale));
        detail::require_tag(mesh, Tag::Inner, "the inner boundary r = " + dsl::format_number(rho));
        detail::require_tag(mesh, Tag::Outer, "the outer boundary r = " + dsl::format_number(R));
        Assembly A = assemble(imm, mesh);
        DirichletSolution sol = solve_dirichlet(mesh, A, 1.0, 0.0, 0.0);
        out.mesh = std::move(mesh);
        out.solution = std::move(sol);
        return out.solution.energy;
    };
    CapacityResult out;
    out.h = opt.h;
    out.value = solve(1.0, out);
    out.vertices = out.mesh.vertex_count();
    out.simplices = out.mesh.simplex_count();
    out.iterations = out.solution.iterations;
    out.residual = out.solution.residual;
    out.recovered_flux = inner_boundary_flux(imm, out.mesh, out.solution.values);
    if (opt.coarse_check) {
        CapacityResult coarse;
        out.coarse_value = solve(2.0, coarse);
        out.tolerance = std::fabs(out.value - out.coarse_value) + 1e-9 * out.value;
    }
    return out;
}

struct CapacityBound {
    double value = 0.0;  // (int_rho^R dt / flux(t))^{-1}
    double error = 0.0;
    std::vector<double> radii, fluxes;
};

// Upper bound from the Lipschitz test function built on u = r: flux(t) is
// int_{r = t} |grad r|. Panels on `panels` equal pieces of [rho, R], each
// with a 15-point Kronrod rule.
inline CapacityBound capacity_upper_bound(const Immersion& imm, double rho, double R, int panels = 8,
                                          const quad::QuadOptions& qopt = {}) {
    if (!(rho > 0) || !(R > rho)) throw input_error("InvalidParams", "capacity bound needs 0 < rho < R");
    CapacityBound out;
    auto flux = [&](double t) {
        const double f = quad::boundary_area_and_flux(imm, t, qopt).flux;
        if (!(f > 0))
            throw check_error("EmptyBoundary", "level r = " + dsl::format_number(t) +
                                                   " is empty: no region with both boundaries between rho and R");
        out.radii.push_back(t);
        out.fluxes.push_back(f);
        return 1.0 / f;
    };
    quad::KahanSum total, err;
    for (int i = 0; i < panels; ++i) {
        const double a = rho + (R - rho) * i / panels, b = rho + (R - rho) * (i + 1) / panels;
        double e = 0.0;
        total.add(boost::math::quadrature::gauss_kronrod<double, 15>::integrate(flux, a, b, 0, 0.0, &e));
        err.add(e);
    }
    const double I = total.value();
    out.value = 1.0 / I;
    out.error = err.value() / (I * I);
    return out;
}

struct CapacityLadder {
    std::vector<double> radii, caps, tolerances;
    std::optional<double> fitted_limit;  // Aitken extrapolation of the last three
    std::string label = "trend";
};

inline CapacityLadder capacity_ladder(const Immersion& imm, double rho, double R0, int steps,
                                      const PdeOptions& opt = {}) {
    if (steps < 1) throw input_error("InvalidParams", "capacity ladder needs at least one radius");
    CapacityLadder out;
    for (int i = 0; i < steps; ++i) {
        const double R = R0 * std::ldexp(1.0, i);
        CapacityResult c = capacity(imm, rho, R, opt);
        out.radii.push_back(R);
        out.caps.push_back(c.value);
        out.tolerances.push_back(c.tolerance);
    }
    if (steps >= 3) {
        const double c0 = out.caps[steps - 3], c1 = out.caps[steps - 2], c2 = out.caps[steps - 1];
        const double den = (c2 - c1) - (c1 - c0);
        if (std::fabs(den) > 1e-14 * std::max(1.0, std::fabs(c0))) out.fitted_limit = c2 - (c2 - c1) * (c2 - c1) / den;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Mean exit time on D_R.

struct ExitTimeField {
    double R = 0.0;
    int n = 0;
    Mesh mesh;
    Eigen::VectorXd E;              // Galerkin solution of Delta E + 1 = 0
    std::vector<double> Ebar;       // (R^2 - r^2) / (2n)
    std::vector<double> r;          // extrinsic radius per vertex
    std::vector<double> depth;      // induced graph distance to the exit boundary
    Eigen::VectorXd lumped_mass;    // int phi_i dV
    DirichletSolution solution;
};

inline ExitTimeField solve_exit_time(const Immersion& imm, double R, const PdeOptions& opt = {}) {
    if (!(R > 0)) throw input_error("InvalidParams", "exit time needs R > 0");
    if (imm.compact() && R > max_sampled_radius(imm) * (1 + 1e-9))
        throw check_error("EmptyBoundary", "D_R is the whole compact immersion for R = " + dsl::format_number(R) +
                                               ", so its boundary is empty");
    ExitTimeField f;
    f.R = R;
    f.n = imm.dim();
    f.mesh = mesh_region(imm, {0.0, R}, detail::mesh_options(opt));
    detail::require_tag(f.mesh, Tag::Outer, "the exit boundary r = " + dsl::format_number(R));
    Assembly A = assemble(imm, f.mesh);
    f.solution = solve_dirichlet(f.mesh, A, 0.0, 0.0, 1.0);
    f.E = f.solution.values;
    f.lumped_mass = A.load;
    const int N = f.mesh.vertex_count();
    f.r.resize(N);
    f.Ebar.resize(N);
    for (int v = 0; v < N; ++v) {
        f.r[v] = f.mesh.tags[v] == Tag::Outer ? R : imm.radius(f.mesh.vertices[v].data());
        f.Ebar[v] = (R * R - f.r[v] * f.r[v]) / (2.0 * f.n);
    }
    // Dijkstra from the exit boundary over induced edge lengths.
    auto adj = detail::adjacency(f.mesh);
    f.depth.assign(N, std::numeric_limits<double>::infinity());
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    for (int v = 0; v < N; ++v)
        if (f.mesh.tags[v] == Tag::Outer) f.depth[v] = 0.0, pq.push({0.0, v});
    while (!pq.empty()) {
        auto [d, v] = pq.top();
        pq.pop();
        if (d > f.depth[v]) continue;
        for (int w : adj[v]) {
            const Point2 dv = detail::wrapped_delta(f.mesh, f.mesh.vertices[v], f.mesh.vertices[w]);
            const double nd = d + detail::induced_length(imm, f.mesh, f.mesh.vertices[v], dv);
            if (nd < f.depth[w]) f.depth[w] = nd, pq.push({nd, w});
        }
    }
    return f;
}

struct ExitComparison {
    std::string mode;  // "lower" (E >= Ebar), "upper" (E <= Ebar), "both", "ratio"
    double min_margin = 0.0, max_margin = 0.0;  // over E - Ebar
    double tol = 0.0;
    // IMCF ratio statistics away from the 2h boundary layer.
    double expected_ratio = 0.0, mean_ratio = 0.0, max_rel_deviation = 0.0;
    int ratio_vertices = 0;
    bool pass = false;
};

// MCF: lambda >= 0 needs E >= Ebar - tol, lambda <= 0 needs E <= Ebar + tol.
// IMCF: E / Ebar = Cn / (Cn - 1) within `tol` (relative) beyond depth 2h.
// A negative tol picks the default: 1% of max Ebar (MCF) or 2% (IMCF).
inline ExitComparison exit_time_comparison(const ExitTimeField& f, const SolitonSpec& spec, double tol = -1.0) {
    ExitComparison out;
    double Emax = 0.0;
    out.min_margin = std::numeric_limits<double>::infinity();
    out.max_margin = -out.min_margin;
    for (std::size_t v = 0; v < f.Ebar.size(); ++v) {
        const double m = f.E[v] - f.Ebar[v];
        out.min_margin = std::min(out.min_margin, m);
        out.max_margin = std::max(out.max_margin, m);
        Emax = std::max(Emax, f.Ebar[v]);
    }
    if (spec.kind == FlowKind::MCF) {
        out.tol = tol >= 0 ? tol : 0.01 * Emax;
        const double lambda = spec.constant;
        const bool lower_ok = out.min_margin >= -out.tol, upper_ok = out.max_margin <= out.tol;
        out.mode = lambda > 0 ? "lower" : (lambda < 0 ? "upper" : "both");
        out.pass = lambda > 0 ? lower_ok : (lambda < 0 ? upper_ok : lower_ok && upper_ok);
        return out;
    }
    const double Cn = spec.constant * f.n;
    if (std::fabs(Cn - 1.0) < 1e-12)
        throw input_error("InvalidParams", "C n = 1 makes Cn / (Cn - 1) undefined");
    out.mode = "ratio";
    out.tol = tol >= 0 ? tol : 0.02;
    out.expected_ratio = Cn / (Cn - 1.0);
    quad::KahanSum sum;
    for (std::size_t v = 0; v < f.Ebar.size(); ++v) {
        if (!(f.depth[v] > 2 * f.mesh.h) || !(f.Ebar[v] > 0)) continue;
        const double ratio = f.E[v] / f.Ebar[v];
        sum.add(ratio);
        ++out.ratio_vertices;
        out.max_rel_deviation =
            std::max(out.max_rel_deviation, std::fabs(ratio - out.expected_ratio) / std::fabs(out.expected_ratio));
    }
    if (out.ratio_vertices == 0)
        throw check_error("MeshFailure", "no vertex lies beyond the 2h boundary layer; reduce h");
    out.mean_ratio = sum.value() / out.ratio_vertices;
    out.pass = out.max_rel_deviation <= out.tol;
    return out;
}

// Ratios E / Ebar beyond the 2h layer.
inline std::vector<double> interior_ratios(const ExitTimeField& f) {
    std::vector<double> out;
    for (std::size_t v = 0; v < f.Ebar.size(); ++v)
        if (f.depth[v] > 2 * f.mesh.h && f.Ebar[v] > 0) out.push_back(f.E[v] / f.Ebar[v]);
    return out;
}

struct SolitonFromExit {
    std::vector<double> radii, medians;
    double alpha = 0.0;
    double deviation = 0.0;  // max relative spread of the 10-90% ratio band about alpha
    double tol = 0.05;
    std::optional<double> C_forward;  // alpha / ((alpha - 1) n)
    std::optional<double> C_printed;  // -alpha / ((alpha - 1) n)
    double forward_residual = 0.0, printed_residual = 0.0;  // relative sup residuals
    std::string verdict;  // CONSISTENT, INCONSISTENT, MINIMAL
};

// Relative IMCF residual sup |H/|H|^2 + C X^perp| / sup |H/|H|^2|.
inline double relative_imcf_residual(const Immersion& imm, double C, const SampleSet& samples) {
    auto rep = imcf_residual(imm, C, samples);
    double scale = 0.0;
    PointGeometry G;
    for (const auto& p : samples) {
        point_geometry(imm, p.data(), Level::Full, G);
        scale = std::max(scale, std::sqrt(1.0 / G.H2));
    }
    return rep.sup / scale;
}

inline SolitonFromExit soliton_from_exit_time(const Immersion& imm, const std::vector<double>& radii,
                                              const PdeOptions& opt = {}, double tol = 0.05) {
    if (radii.empty()) throw input_error("InvalidParams", "soliton_from_exit_time needs at least one radius");
    SolitonFromExit out;
    out.tol = tol;
    std::vector<std::pair<double, double>> bands;
    for (double R : radii) {
        ExitTimeField f = solve_exit_time(imm, R, opt);
        auto ratios = interior_ratios(f);
        if (ratios.empty()) throw check_error("MeshFailure", "no vertex beyond the 2h boundary layer at R = " +
                                                                 dsl::format_number(R));
        out.radii.push_back(R);
        out.medians.push_back(detail::median(ratios));
        bands.push_back({detail::quantile(ratios, 0.1), detail::quantile(ratios, 0.9)});
    }
    out.alpha = detail::median(out.medians);
    for (const auto& [lo, hi] : bands)
        out.deviation = std::max({out.deviation, std::fabs(lo - out.alpha) / out.alpha, std::fabs(hi - out.alpha) / out.alpha});
    if (out.deviation > tol)
        throw check_error("NonProportional", "E/Ebar varies by " + dsl::format_number(out.deviation) +
                                                 " relative to alpha = " + dsl::format_number(out.alpha) +
                                                 " (tolerance " + dsl::format_number(tol) + ")");
    if (std::fabs(out.alpha - 1.0) <= tol) {
        out.verdict = "MINIMAL";
        return out;
    }
    const int n = imm.dim();
    out.C_forward = out.alpha / ((out.alpha - 1.0) * n);
    out.C_printed = -*out.C_forward;
    auto samples = sample_parameters(imm, 256);
    out.forward_residual = relative_imcf_residual(imm, *out.C_forward, samples);
    out.printed_residual = relative_imcf_residual(imm, *out.C_printed, samples);
    out.verdict = out.forward_residual <= tol ? "CONSISTENT" : "INCONSISTENT";
    return out;
}

}  // namespace solab::pde
