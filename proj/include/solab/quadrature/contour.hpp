#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "solab/quadrature/cells.hpp"

namespace solab::quad {

// Level set r = L of a 2-dimensional chart by marching triangles: crossing
// cells are refined to a small induced diameter, split into m x m squares
// and two triangles each; edge crossings are exact roots of r - L and the
// resulting segments are integrated with a Gauss rule in arclength.
class MarchingContour {
public:
    MarchingContour(const Immersion& imm, double level, const QuadOptions& opt)
        : imm_(imm), level_(level), opt_(opt) {
        if (imm.dim() != 2) throw input_error("InvalidParams", "marching contour needs a 2-dimensional chart");
        std::array<double, 2> lo{imm.axes()[0].min, imm.axes()[1].min}, hi{imm.axes()[0].max, imm.axes()[1].max};
        const int m = opt.initial_per_axis;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                std::array<double, 2> a{lo[0] + (hi[0] - lo[0]) * i / m, lo[1] + (hi[1] - lo[1]) * j / m};
                std::array<double, 2> b{i + 1 == m ? hi[0] : lo[0] + (hi[0] - lo[0]) * (i + 1) / m,
                                        j + 1 == m ? hi[1] : lo[1] + (hi[1] - lo[1]) * (j + 1) / m};
                refine(a, b, 0);
            }
    }

    int cells() const { return static_cast<int>(cells_.size()); }

    // Integral of f over the contour with m x m squares per crossing cell.
    Values integrate(const Integrand& f, int m) const {
        std::array<KahanSum, kMaxValues> acc{};
        PointGeometry G;
        for (const auto& c : cells_) {
            Values v = cell_integral(c, f, m, G);
            for (int k = 0; k < f.count; ++k) acc[k].add(v[k]);
        }
        Values out{};
        for (int k = 0; k < f.count; ++k) out[k] = acc[k].value();
        return out;
    }

    // The chord error is O(h^2) on nested grids, so m and m/2 extrapolate;
    // the error reported is that of the unextrapolated fine value.
    CellSum run(const Integrand& f) const {
        const int m = std::max(2, opt_.marching_subdivisions);
        Values fine = integrate(f, m), coarse = integrate(f, m / 2);
        CellSum out;
        out.cells = cells();
        for (int k = 0; k < f.count; ++k) {
            out.value[k] = (4 * fine[k] - coarse[k]) / 3;
            out.error[k] = std::fabs(fine[k] - coarse[k]) / 3;
        }
        return out;
    }

private:
    using Box = std::array<std::array<double, 2>, 2>;

    void refine(std::array<double, 2> lo, std::array<double, 2> hi, int depth) {
        detail::CellProbe pr = detail::probe_cell(imm_, lo.data(), hi.data(), level_);
        if (pr.near_critical)
            throw check_error("NonRegularLevel", "R = " + dsl::format_number(level_) + " is a critical value of r");
        if (pr.rmin - pr.slack > level_ || pr.rmax + pr.slack < level_) return;
        if (pr.diameter <= 0.05 * level_ || depth >= 24) {
            cells_.push_back({lo, hi});
            return;
        }
        const int a = pr.split_axis;
        const double mid = 0.5 * (lo[a] + hi[a]);
        auto hi1 = hi, lo2 = lo;
        hi1[a] = mid;
        lo2[a] = mid;
        refine(lo, hi1, depth + 1);
        refine(lo2, hi, depth + 1);
    }

    double g(const std::array<double, 2>& p) const { return imm_.radius(p.data()) - level_; }

    std::array<double, 2> edge_root(std::array<double, 2> p, double gp, std::array<double, 2> q, double gq) const {
        auto along = [&](double s) {
            std::array<double, 2> x{p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])};
            return g(x);
        };
        double s = 0.0;
        if (gp == 0.0) {
            s = 0.0;
        } else if (gq == 0.0) {
            s = 1.0;
        } else {
            std::uintmax_t iters = 60;
            auto tol = [](double x, double y) { return std::fabs(x - y) <= 1e-15; };
            auto br = boost::math::tools::toms748_solve(along, 0.0, 1.0, gp, gq, tol, iters);
            s = 0.5 * (br.first + br.second);
        }
        return {p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])};
    }

    void segment(const std::array<double, 2>& a, const std::array<double, 2>& b, const Integrand& f, PointGeometry& G,
                 Values& acc) const {
        const GaussRule& rule = gauss_legendre(4);
        const double d0 = b[0] - a[0], d1 = b[1] - a[1];
        if (d0 == 0.0 && d1 == 0.0) return;
        double out[kMaxValues];
        for (int k = 0; k < 4; ++k) {
            const double s = 0.5 * (rule.x[k] + 1.0);
            double p[2] = {a[0] + s * d0, a[1] + s * d1};
            point_geometry(imm_, p, f.level, G);
            detail::regular_gradient(G, level_);
            const double ds = std::sqrt(G.g(0, 0) * d0 * d0 + 2 * G.g(0, 1) * d0 * d1 + G.g(1, 1) * d1 * d1);
            f.f(G, out);
            for (int q = 0; q < f.count; ++q) acc[q] += 0.5 * rule.w[k] * ds * out[q];
        }
    }

    Values cell_integral(const Box& c, const Integrand& f, int m, PointGeometry& G) const {
        Values acc{};
        const auto& lo = c[0];
        const auto& hi = c[1];
        std::vector<double> vals((m + 1) * (m + 1));
        auto node = [&](int i, int j) {
            return std::array<double, 2>{lo[0] + (hi[0] - lo[0]) * i / m, lo[1] + (hi[1] - lo[1]) * j / m};
        };
        for (int i = 0; i <= m; ++i)
            for (int j = 0; j <= m; ++j) vals[i * (m + 1) + j] = g(node(i, j));
        auto tri = [&](std::array<int, 3> ii, std::array<int, 3> jj) {
            std::array<std::array<double, 2>, 3> P;
            std::array<double, 3> v;
            for (int t = 0; t < 3; ++t) {
                P[t] = node(ii[t], jj[t]);
                v[t] = vals[ii[t] * (m + 1) + jj[t]];
            }
            std::array<double, 2> pts[2];
            int cnt = 0;
            for (int e = 0; e < 3; ++e) {
                const int s = e, t = (e + 1) % 3;
                if ((v[s] >= 0) != (v[t] >= 0) && cnt < 2) pts[cnt++] = edge_root(P[s], v[s], P[t], v[t]);
            }
            if (cnt == 2) segment(pts[0], pts[1], f, G, acc);
        };
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                tri({i, i + 1, i + 1}, {j, j, j + 1});
                tri({i, i + 1, i}, {j, j + 1, j + 1});
            }
        return acc;
    }

    const Immersion& imm_;
    double level_;
    QuadOptions opt_;
    std::vector<Box> cells_;
};

}  // namespace solab::quad
