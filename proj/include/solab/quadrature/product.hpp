#pragma once

#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "solab/geometry/catalog.hpp"
#include "solab/quadrature/cells.hpp"

namespace solab::quad {

// X(theta, z) = (Y(theta), z) with |Y| = r0: r^2 = r0^2 + |z|^2 and every
// geometric integrand is invariant under rotations of z, so
//   int f dV = int omega_m s^{m-1} F(s) ds,  F(s) = int_compact f(theta, s e1) sqrt(g) dtheta.
class ProductIntegrator {
public:
    ProductIntegrator(const Immersion& imm, const QuadOptions& opt) : imm_(imm), split_(*imm.product()), opt_(opt) {
        k_ = static_cast<int>(split_.compact_axes.size());
        m_ = static_cast<int>(split_.free_axes.size());
        q_ = k_ <= 2 ? 24 : (k_ == 3 ? 12 : 8);
    }

    // F(s) at two compact orders; error is their difference.
    void compact_integral(const Integrand& f, double s, Values& value, Values& error) const {
        Values a = compact(f, s, q_), b = compact(f, s, q_ - 4);
        for (int i = 0; i < f.count; ++i) {
            value[i] = a[i];
            error[i] = std::fabs(a[i] - b[i]);
        }
    }

    CellSum volume(const Integrand& f, Shell shell) const {
        CellSum out;
        out.cells = 1;
        const double r0 = split_.r0;
        if (m_ == 0) {
            if (shell.inner < r0 && r0 < shell.outer) compact_integral(f, 0.0, out.value, out.error);
            return out;
        }
        const double s_out = shell.outer > r0 ? std::sqrt(shell.outer * shell.outer - r0 * r0) : 0.0;
        const double s_in = shell.inner > r0 ? std::sqrt(shell.inner * shell.inner - r0 * r0) : 0.0;
        if (!(s_out > s_in)) return out;
        const double omega = sphere_area(m_);
        // Relative error of F from the order comparison at the midpoint.
        Values mid_v, mid_e;
        compact_integral(f, 0.5 * (s_in + s_out), mid_v, mid_e);
        for (int i = 0; i < f.count; ++i) {
            auto integrand = [&](double s) {
                Values v = compact(f, s, q_);
                return omega * std::pow(s, m_ - 1) * v[i];
            };
            double err = 0.0;
            const double val = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
                integrand, s_in, s_out, 15, opt_.rel_tol * 0.1, &err);
            out.value[i] = val;
            const double rel = mid_v[i] != 0.0 ? mid_e[i] / std::fabs(mid_v[i]) : 0.0;
            out.error[i] = err + rel * std::fabs(val);
        }
        return out;
    }

    CellSum boundary(const Integrand& f, double level) const {
        CellSum out;
        out.cells = 1;
        const double r0 = split_.r0;
        if (std::fabs(level - r0) <= 1e-12 * std::max(1.0, r0))
            throw check_error("NonRegularLevel", "R = " + dsl::format_number(level) + " is a critical value of r");
        if (m_ == 0 || level < r0) return out;
        const double s = std::sqrt(level * level - r0 * r0);
        Values v, e;
        compact_integral(f, s, v, e);
        const double w = sphere_area(m_) * std::pow(s, m_ - 1);
        for (int i = 0; i < f.count; ++i) {
            out.value[i] = w * v[i];
            out.error[i] = w * e[i];
        }
        return out;
    }

private:
    Values compact(const Integrand& f, double s, int q) const {
        thread_local PointGeometry G;
        Values acc{};
        double p[kMaxParam] = {};
        double lo[kMaxParam] = {}, hi[kMaxParam] = {};
        for (int a : split_.compact_axes) {
            lo[a] = imm_.axes()[a].min;
            hi[a] = imm_.axes()[a].max;
        }
        for (int i = 0; i < m_; ++i) lo[split_.free_axes[i]] = hi[split_.free_axes[i]] = 0.0;
        double out[kMaxValues];
        auto body = [&](double* x, double w) {
            if (m_ > 0) x[split_.free_axes[0]] = s;
            for (int i = 1; i < m_; ++i) x[split_.free_axes[i]] = 0.0;
            point_geometry(imm_, x, f.level, G);
            f.f(G, out);
            for (int i = 0; i < f.count; ++i) acc[i] += w * G.sqrt_det_g * out[i];
        };
        if (k_ == 0) {
            body(p, 1.0);
            return acc;
        }
        // Free axes have zero width, so the tensor rule over them is a single node of weight 1.
        const GaussRule& rule = gauss_legendre(q);
        long total = 1;
        for (int i = 0; i < k_; ++i) total *= q;
        for (long idx = 0; idx < total; ++idx) {
            long rem = idx;
            double w = 1.0;
            for (int i = 0; i < k_; ++i) {
                const int a = split_.compact_axes[i];
                const int j = static_cast<int>(rem % q);
                rem /= q;
                const double h = 0.5 * (hi[a] - lo[a]);
                p[a] = lo[a] + h * (rule.x[j] + 1.0);
                w *= h * rule.w[j];
            }
            body(p, w);
        }
        return acc;
    }

    const Immersion& imm_;
    ProductSplit split_;
    QuadOptions opt_;
    int k_ = 0, m_ = 0, q_ = 24;
};

}  // namespace solab::quad
