#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "solab/geometry/sampling.hpp"
#include "solab/quadrature/cells.hpp"

namespace solab::pde {

enum class Tag : std::uint8_t { Interior = 0, Inner = 1, Outer = 2 };

inline std::string tag_name(Tag t) {
    switch (t) {
        case Tag::Interior: return "interior";
        case Tag::Inner: return "inner";
        case Tag::Outer: return "outer";
    }
    return "";
}

using Point2 = std::array<double, 2>;

// Simplicial mesh of {inner < r < outer} in parameter space. Triangles
// (n = 2) or segments (n = 1, third index -1). Coordinates of a simplex are
// kept unwrapped in `local` so periodic seams need no special casing.
struct Mesh {
    int dim = 2;
    std::vector<Point2> vertices;
    std::vector<Tag> tags;
    std::vector<std::array<int, 3>> simplices;
    std::vector<std::array<Point2, 3>> local;
    std::vector<std::array<int, 2>> boundary_edges;  // n = 2
    double h = 0.0;
    quad::Shell shell;
    std::vector<bool> periodic;
    std::vector<double> period;

    int vertex_count() const { return static_cast<int>(vertices.size()); }
    int simplex_count() const { return static_cast<int>(simplices.size()); }
    int verts_per_simplex() const { return dim + 1; }

    int edge_count() const {
        if (dim == 1) return simplex_count();
        std::vector<std::pair<int, int>> e;
        for (const auto& t : simplices)
            for (int k = 0; k < 3; ++k) e.emplace_back(std::min(t[k], t[(k + 1) % 3]), std::max(t[k], t[(k + 1) % 3]));
        std::sort(e.begin(), e.end());
        return static_cast<int>(std::unique(e.begin(), e.end()) - e.begin());
    }
    int euler_characteristic() const {
        return dim == 1 ? vertex_count() - simplex_count() : vertex_count() - edge_count() + simplex_count();
    }
};

struct MeshOptions {
    double h = 0.05;
    double snap_fraction = 0.25;
    long max_vertices = 2000000;
};

namespace detail {

inline double signed_area(const Point2& a, const Point2& b, const Point2& c) {
    return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
}

struct Levels {
    double inner, outer;
    // <= 0 inside for each level; inner == 0 has no inner level.
    double outer_phi(double r) const { return r - outer; }
    double inner_phi(double r) const { return inner > 0 ? inner - r : -1.0; }
};

// Root of r - level on the segment a -> b, as a fraction in [0, 1].
inline double segment_root(const Immersion& imm, const Point2& a, const Point2& b, double level, double fa, double fb) {
    if (fa == 0.0) return 0.0;
    if (fb == 0.0) return 1.0;
    auto f = [&](double s) {
        double p[2] = {a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])};
        return imm.radius(p) - level;
    };
    std::uintmax_t iters = 80;
    auto tol = [](double x, double y) { return std::fabs(x - y) <= 1e-14; };
    auto br = boost::math::tools::toms748_solve(f, 0.0, 1.0, fa, fb, tol, iters);
    return 0.5 * (br.first + br.second);
}

// Parameter sub-box containing the region, from cells of a coarse grid that
// may intersect it. Periodic axes always keep their full period.
inline void region_box(const Immersion& imm, const quad::Shell& s, double* lo, double* hi) {
    const int n = imm.dim();
    const int m = n == 1 ? 1024 : 128;
    for (int a = 0; a < n; ++a) {
        lo[a] = std::numeric_limits<double>::infinity();
        hi[a] = -lo[a];
    }
    const auto& ax = imm.axes();
    long total = 1;
    for (int a = 0; a < n; ++a) total *= m;
    double clo[2], chi[2];
    for (long idx = 0; idx < total; ++idx) {
        long rem = idx;
        for (int a = 0; a < n; ++a) {
            const int i = static_cast<int>(rem % m);
            rem /= m;
            clo[a] = ax[a].min + ax[a].length() * i / m;
            chi[a] = ax[a].min + ax[a].length() * (i + 1) / m;
        }
        quad::detail::CellProbe pr = quad::detail::probe_cell(imm, clo, chi);
        if (pr.rmin - pr.slack >= s.outer || pr.rmax + pr.slack <= s.inner) continue;
        for (int a = 0; a < n; ++a) {
            lo[a] = std::min(lo[a], clo[a]);
            hi[a] = std::max(hi[a], chi[a]);
        }
    }
    for (int a = 0; a < n; ++a) {
        if (ax[a].periodic) {
            lo[a] = ax[a].min;
            hi[a] = ax[a].max;
        }
    }
}

}  // namespace detail

// Conforming mesh of {inner < r < outer}: structured grid on the region's
// parameter box, vertices snapped to nearby level crossings, crossed
// triangles cut at edge roots.
inline Mesh mesh_region(const Immersion& imm, quad::Shell shell, const MeshOptions& opt = {}) {
    const int n = imm.dim();
    if (n >= 3) throw input_error("DimensionUnsupported", "PDE solves need n <= 2 (got n = " + std::to_string(n) + ")");
    if (!(shell.outer > shell.inner) || shell.inner < 0)
        throw input_error("InvalidParams", "region needs 0 <= inner < outer");
    if (!(opt.h > 0)) throw input_error("InvalidParams", "mesh size h must be positive");
    if (shell.outer > imm.window() * (1 + 1e-12))
        throw input_error("ImproperWindow", "radius " + dsl::format_number(shell.outer) + " exceeds the properness window " +
                                                dsl::format_number(imm.window()));
    const auto& ax = imm.axes();
    detail::Levels lv{shell.inner, shell.outer};

    double lo[2] = {0, 0}, hi[2] = {0, 0};
    detail::region_box(imm, shell, lo, hi);
    for (int a = 0; a < n; ++a)
        if (!(hi[a] > lo[a])) throw check_error("MeshFailure", "region {" + dsl::format_number(shell.inner) + " < r < " +
                                                                  dsl::format_number(shell.outer) + "} is empty");

    // Grid counts from the induced length of each axis over the box.
    int N[2] = {1, 1};
    {
        auto samples = sample_parameters(std::vector<Axis>(ax.begin(), ax.end()), 256, 7);
        std::vector<double> colmax(n, 0.0);
        PVec dr, cn;
        for (auto& p : samples) {
            for (int a = 0; a < n; ++a) p[a] = lo[a] + (hi[a] - lo[a]) * (p[a] - ax[a].min) / ax[a].length();
            double r;
            quad::detail::radius_jet(imm, p.data(), r, dr, cn);
            for (int a = 0; a < n; ++a) colmax[a] = std::max(colmax[a], cn[a]);
        }
        long total = 1;
        for (int a = 0; a < n; ++a) {
            N[a] = std::max(4, static_cast<int>(std::ceil(colmax[a] * (hi[a] - lo[a]) / opt.h)));
            total *= N[a] + 1;
        }
        if (total > opt.max_vertices)
            throw input_error("MeshFailure", "grid of " + std::to_string(total) + " vertices exceeds the limit");
    }

    Mesh mesh;
    mesh.dim = n;
    mesh.h = opt.h;
    mesh.shell = shell;
    for (int a = 0; a < n; ++a) {
        mesh.periodic.push_back(ax[a].periodic);
        mesh.period.push_back(ax[a].length());
    }

    // Grid vertices; a periodic axis has N nodes, the last column wraps.
    const int nx = ax[0].periodic ? N[0] : N[0] + 1;
    const int ny = n == 2 ? (ax[1].periodic ? N[1] : N[1] + 1) : 1;
    auto gid = [&](int i, int j) { return (i % nx) * ny + (n == 2 ? j % ny : 0); };
    auto gpos = [&](int i, int j) {
        Point2 p{lo[0] + (hi[0] - lo[0]) * i / N[0], n == 2 ? lo[1] + (hi[1] - lo[1]) * j / N[1] : 0.0};
        return p;
    };
    std::vector<Point2> pos(nx * ny);
    std::vector<double> rad(nx * ny);
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) {
            pos[gid(i, j)] = gpos(i, j);
            rad[gid(i, j)] = imm.radius(pos[gid(i, j)].data());
        }

    // Grid simplices with unwrapped coordinates.
    struct Simplex {
        std::array<int, 3> v;
        std::array<Point2, 3> x;
    };
    std::vector<Simplex> grid;
    if (n == 1) {
        for (int i = 0; i < N[0]; ++i) grid.push_back({{gid(i, 0), gid(i + 1, 0), -1}, {gpos(i, 0), gpos(i + 1, 0), Point2{}}});
    } else {
        for (int i = 0; i < N[0]; ++i)
            for (int j = 0; j < N[1]; ++j) {
                grid.push_back({{gid(i, j), gid(i + 1, j), gid(i + 1, j + 1)}, {gpos(i, j), gpos(i + 1, j), gpos(i + 1, j + 1)}});
                grid.push_back({{gid(i, j), gid(i + 1, j + 1), gid(i, j + 1)}, {gpos(i, j), gpos(i + 1, j + 1), gpos(i, j + 1)}});
            }
    }
    const int nv = n == 1 ? 2 : 3;

    // Snap vertices onto a level when an incident edge crosses it close by.
    std::vector<Point2> shift(pos.size(), Point2{0, 0});
    std::vector<double> best(pos.size(), opt.snap_fraction);
    std::vector<double> snapped_level(pos.size(), 0.0);
    for (const auto& s : grid)
        for (int e = 0; e < nv; ++e) {
            if (n == 1 && e == 1) break;
            const int a = e, b = (e + 1) % nv;
            for (double L : {shell.outer, shell.inner}) {
                if (!(L > 0)) continue;
                const double fa = rad[s.v[a]] - L, fb = rad[s.v[b]] - L;
                if (fa == 0.0 || fb == 0.0 || (fa < 0) == (fb < 0)) continue;
                const double t = detail::segment_root(imm, s.x[a], s.x[b], L, fa, fb);
                auto consider = [&](int v, double frac, const Point2& from, const Point2& to) {
                    if (frac < best[v]) {
                        best[v] = frac;
                        shift[v] = {frac * (to[0] - from[0]), frac * (to[1] - from[1])};
                        snapped_level[v] = L;
                    }
                };
                consider(s.v[a], t, s.x[a], s.x[b]);
                consider(s.v[b], 1 - t, s.x[b], s.x[a]);
            }
        }
    // Apply snaps; undo those that would flatten a triangle.
    std::vector<bool> snapped(pos.size(), false);
    for (std::size_t v = 0; v < pos.size(); ++v) snapped[v] = snapped_level[v] > 0;
    auto moved = [&](const Simplex& s, int k) {
        Point2 p = s.x[k];
        if (snapped[s.v[k]]) p = {p[0] + shift[s.v[k]][0], p[1] + shift[s.v[k]][1]};
        return p;
    };
    if (n == 2) {
        for (int pass = 0; pass < 4; ++pass) {
            bool changed = false;
            for (const auto& s : grid) {
                const double a0 = detail::signed_area(s.x[0], s.x[1], s.x[2]);
                const double a1 = detail::signed_area(moved(s, 0), moved(s, 1), moved(s, 2));
                if (a1 < 0.2 * a0)
                    for (int k = 0; k < 3; ++k)
                        if (snapped[s.v[k]]) snapped[s.v[k]] = false, changed = true;
            }
            if (!changed) break;
        }
    }
    std::vector<double> phi_out(pos.size()), phi_in(pos.size());
    for (std::size_t v = 0; v < pos.size(); ++v) {
        if (snapped[v]) {
            pos[v] = {pos[v][0] + shift[v][0], pos[v][1] + shift[v][1]};
            imm.wrap(pos[v].data());
        }
        phi_out[v] = lv.outer_phi(rad[v]);
        phi_in[v] = lv.inner_phi(rad[v]);
        if (snapped[v]) {
            if (snapped_level[v] == shell.outer) phi_out[v] = 0.0;
            else phi_in[v] = 0.0;
        }
    }
    for (auto& s : grid)
        for (int k = 0; k < nv; ++k) s.x[k] = moved(s, k);

    // Clip each simplex against the one level it crosses.
    std::vector<Point2> verts;
    std::vector<Tag> tags;
    std::vector<int> grid_to_mesh(pos.size(), -1);
    auto grid_vertex = [&](int v) {
        if (grid_to_mesh[v] < 0) {
            grid_to_mesh[v] = static_cast<int>(verts.size());
            verts.push_back(pos[v]);
            tags.push_back(phi_out[v] == 0.0 ? Tag::Outer : (phi_in[v] == 0.0 ? Tag::Inner : Tag::Interior));
        }
        return grid_to_mesh[v];
    };
    std::map<std::tuple<int, int, int>, int> cut_ids;
    auto cut_vertex = [&](int va, int vb, const Point2& xa, const Point2& xb, bool outer_level) {
        const double L = outer_level ? shell.outer : shell.inner;
        const auto key = std::make_tuple(std::min(va, vb), std::max(va, vb), outer_level ? 1 : 0);
        auto it = cut_ids.find(key);
        if (it != cut_ids.end()) return it->second;
        const double fa = imm.radius(xa.data()) - L, fb = imm.radius(xb.data()) - L;
        const double t = detail::segment_root(imm, xa, xb, L, fa, fb);
        Point2 p{xa[0] + t * (xb[0] - xa[0]), xa[1] + t * (xb[1] - xa[1])};
        Point2 w = p;
        imm.wrap(w.data());
        const int id = static_cast<int>(verts.size());
        verts.push_back(w);
        tags.push_back(outer_level ? Tag::Outer : Tag::Inner);
        cut_ids.emplace(key, id);
        return id;
    };
    // Unwrapped position of a cut point in this simplex's frame.
    auto cut_point = [&](const Point2& xa, const Point2& xb, bool outer_level) {
        const double L = outer_level ? shell.outer : shell.inner;
        const double fa = imm.radius(xa.data()) - L, fb = imm.radius(xb.data()) - L;
        const double t = detail::segment_root(imm, xa, xb, L, fa, fb);
        return Point2{xa[0] + t * (xb[0] - xa[0]), xa[1] + t * (xb[1] - xa[1])};
    };

    for (const auto& s : grid) {
        bool any_out = false, any_in_cross = false, all_outside = true;
        bool outside_outer = true, outside_inner = true;
        for (int k = 0; k < nv; ++k) {
            const int v = s.v[k];
            any_out = any_out || phi_out[v] > 0;
            any_in_cross = any_in_cross || phi_in[v] > 0;
            outside_outer = outside_outer && phi_out[v] >= 0;
            outside_inner = outside_inner && phi_in[v] >= 0;
        }
        all_outside = outside_outer || outside_inner;
        if (all_outside) continue;
        if (any_out && any_in_cross)
            throw check_error("MeshFailure", "a simplex crosses both levels; reduce h below the shell width " +
                                                 dsl::format_number(shell.outer - shell.inner));
        const bool use_outer = any_out;
        const bool clip = any_out || any_in_cross;
        auto phi = [&](int k) { return use_outer ? phi_out[s.v[k]] : phi_in[s.v[k]]; };

        // Polygon of (mesh id, unwrapped point).
        std::vector<std::pair<int, Point2>> poly;
        for (int k = 0; k < nv; ++k) {
            const int a = k, b = (k + 1) % nv;
            const double fa = clip ? phi(a) : -1.0;
            if (fa <= 0) poly.push_back({grid_vertex(s.v[a]), s.x[a]});
            if (n == 1 && k == 1) break;
            if (!clip) continue;
            const double fb = phi(b);
            if ((fa < 0 && fb > 0) || (fa > 0 && fb < 0)) {
                const int id = cut_vertex(s.v[a], s.v[b], s.x[a], s.x[b], use_outer);
                poly.push_back({id, cut_point(s.x[a], s.x[b], use_outer)});
            }
        }
        if (n == 1) {
            if (poly.size() != 2) continue;
            mesh.simplices.push_back({poly[0].first, poly[1].first, -1});
            mesh.local.push_back({poly[0].second, poly[1].second, Point2{}});
            continue;
        }
        auto emit = [&](int i0, int i1, int i2) {
            const auto &p0 = poly[i0], &p1 = poly[i1], &p2 = poly[i2];
            if (detail::signed_area(p0.second, p1.second, p2.second) <= 0) return;
            mesh.simplices.push_back({p0.first, p1.first, p2.first});
            mesh.local.push_back({p0.second, p1.second, p2.second});
        };
        if (poly.size() == 3) {
            emit(0, 1, 2);
        } else if (poly.size() == 4) {
            auto d2 = [&](int i, int j) {
                const double dx = poly[i].second[0] - poly[j].second[0], dy = poly[i].second[1] - poly[j].second[1];
                return dx * dx + dy * dy;
            };
            if (d2(0, 2) <= d2(1, 3)) {
                emit(0, 1, 2);
                emit(0, 2, 3);
            } else {
                emit(0, 1, 3);
                emit(1, 2, 3);
            }
        }
    }
    if (mesh.simplices.empty())
        throw check_error("MeshFailure", "region {" + dsl::format_number(shell.inner) + " < r < " +
                                             dsl::format_number(shell.outer) + "} is empty at h = " + dsl::format_number(opt.h));
    mesh.vertices = std::move(verts);
    mesh.tags = std::move(tags);

    // Boundary edges and the face checks.
    if (n == 2) {
        std::map<std::pair<int, int>, int> count;
        for (const auto& t : mesh.simplices)
            for (int k = 0; k < 3; ++k) ++count[{std::min(t[k], t[(k + 1) % 3]), std::max(t[k], t[(k + 1) % 3])}];
        for (const auto& [e, c] : count) {
            if (c != 1) continue;
            mesh.boundary_edges.push_back({e.first, e.second});
            if (mesh.tags[e.first] == Tag::Interior || mesh.tags[e.second] == Tag::Interior) {
                const Point2& p = mesh.vertices[e.first];
                bool collapsed = false;
                for (int a = 0; a < 2; ++a)
                    if ((ax[a].collapsed_lo && std::fabs(p[a] - ax[a].min) < 1e-12) ||
                        (ax[a].collapsed_hi && std::fabs(p[a] - ax[a].max) < 1e-12))
                        collapsed = true;
                if (collapsed)
                    throw check_error("MeshFailure", "region touches a collapsed face of the chart at " +
                                                         solab::detail::format_point(p.data(), 2));
                throw input_error("ImproperWindow", "region touches the parameter box at " +
                                                        solab::detail::format_point(p.data(), 2));
            }
        }
    } else {
        std::vector<int> deg(mesh.vertices.size(), 0);
        for (const auto& s : mesh.simplices) ++deg[s[0]], ++deg[s[1]];
        for (std::size_t v = 0; v < deg.size(); ++v)
            if (deg[v] == 1 && mesh.tags[v] == Tag::Interior)
                throw input_error("ImproperWindow", "region touches the parameter box at " + dsl::format_number(mesh.vertices[v][0]));
    }
    return mesh;
}

}  // namespace solab::pde
