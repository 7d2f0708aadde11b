#pragma once

#include <cmath>
#include <functional>

#include "solab/geometry/point_geometry.hpp"

namespace solab {

inline constexpr double kOriginExclusion = 1e-6;

// F(r) together with its first two derivatives.
struct RadialFunction {
    std::function<double(double)> f, df, d2f;

    static RadialFunction r_squared() {
        return {[](double r) { return r * r; }, [](double r) { return 2 * r; }, [](double) { return 2.0; }};
    }
    static RadialFunction minus_r_squared() {
        return {[](double r) { return -r * r; }, [](double r) { return -2 * r; }, [](double) { return -2.0; }};
    }
    // (1 - r^-eps) / eps
    static RadialFunction f1_eps(double eps) {
        return {[eps](double r) { return (1.0 - std::pow(r, -eps)) / eps; },
                [eps](double r) { return std::pow(r, -eps - 1.0); },
                [eps](double r) { return -(eps + 1.0) * std::pow(r, -eps - 2.0); }};
    }
};

// Laplace-Beltrami of F(r) from the position splitting:
// (F''/r^2 - F'/r^3)|X^T|^2 + (F'/r)(n + <X, H>).
inline double radial_laplacian(const PointGeometry& G, const RadialFunction& F,
                               double exclusion = kOriginExclusion) {
    if (!G.full) throw input_error("InvalidParams", "radial_laplacian needs curvature data");
    const double r = G.r;
    if (r < exclusion) throw numerical_error("OriginSingularity", "r = " + dsl::format_number(r) + " inside the exclusion radius");
    const double d1 = F.df(r);
    const double d2 = F.d2f(r);
    return (d2 / (r * r) - d1 / (r * r * r)) * G.XT.squaredNorm() + (d1 / r) * (G.n + G.X.dot(G.H));
}

}  // namespace solab
