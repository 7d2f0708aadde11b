#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>

#include "solab/geometry/sampling.hpp"
#include "solab/quadrature/contour.hpp"
#include "solab/quadrature/product.hpp"

namespace solab::quad {

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    int cells = 0;
    double tail = 0.0;   // truncation bound, improper integrals only
    double r_max = std::numeric_limits<double>::quiet_NaN();
    bool converged = true;
};

struct ExtrinsicRegion {
    const Immersion* immersion = nullptr;
    double inner = 0.0;
    double outer = 0.0;
};

enum class Route { Product, Cells, Marching, LineRoot };

inline std::string route_name(Route r) {
    switch (r) {
        case Route::Product: return "product";
        case Route::Cells: return "cells";
        case Route::Marching: return "marching";
        case Route::LineRoot: return "line-root";
    }
    return "";
}

namespace detail {

inline bool use_product(const Immersion& imm, const QuadOptions& opt) {
    return imm.product().has_value() && !opt.force_generic;
}

inline void require_window(const Immersion& imm, double R) {
    if (R > imm.window() * (1 + 1e-12))
        throw input_error("ImproperWindow", "radius " + dsl::format_number(R) + " exceeds the properness window " +
                                                dsl::format_number(imm.window()) + " of chart '" + imm.name() + "'");
}

// Upper bound of r over the whole chart (compact charts only).
inline double sup_radius(const Immersion& imm) {
    double best = 0.0;
    for (auto& p : sample_parameters(imm, 4096, 1)) best = std::max(best, imm.radius(p.data()));
    return 1.5 * best + 1.0;
}

}  // namespace detail

inline CellSum integrate_shell(const Immersion& imm, const Integrand& f, Shell shell, const QuadOptions& opt = {}) {
    if (!(shell.inner < shell.outer)) throw input_error("InvalidParams", "region needs inner < outer");
    if (!std::isinf(shell.outer)) detail::require_window(imm, shell.outer);
    if (std::isinf(shell.outer)) shell.outer = detail::sup_radius(imm);
    if (detail::use_product(imm, opt)) return ProductIntegrator(imm, opt).volume(f, shell);
    return integrate_cells(imm, f, shell, opt);
}

inline Route boundary_route(const Immersion& imm, const QuadOptions& opt) {
    if (detail::use_product(imm, opt)) return Route::Product;
    if (opt.boundary_route == BoundaryRoute::LineRoot) return Route::LineRoot;
    if (opt.boundary_route == BoundaryRoute::Marching || imm.dim() == 2) return Route::Marching;
    return Route::LineRoot;
}

inline CellSum integrate_level(const Immersion& imm, const Integrand& f, double R, const QuadOptions& opt = {}) {
    if (!(R > 0)) throw input_error("InvalidParams", "level radius must be positive");
    detail::require_window(imm, R);
    switch (boundary_route(imm, opt)) {
        case Route::Product: return ProductIntegrator(imm, opt).boundary(f, R);
        case Route::Marching: return MarchingContour(imm, R, opt).run(f);
        default: return integrate_level_lines(imm, f, R, opt);
    }
}

inline QuadratureResult to_result(const CellSum& s, int k = 0) {
    QuadratureResult r;
    r.value = s.value[k];
    r.error = s.error[k];
    r.cells = s.cells;
    r.converged = s.converged;
    return r;
}

inline QuadratureResult region_volume(const ExtrinsicRegion& region, const QuadOptions& opt = {}) {
    return to_result(integrate_shell(*region.immersion, unit_integrand(), {region.inner, region.outer}, opt));
}

inline QuadratureResult region_volume(const Immersion& imm, double R, const QuadOptions& opt = {}) {
    return region_volume(ExtrinsicRegion{&imm, 0.0, R}, opt);
}

struct BoundaryMeasure {
    double area = 0.0;
    double flux = 0.0;  // int |grad r| dA
    double area_error = 0.0;
    double flux_error = 0.0;
    Route route = Route::Product;
};

inline BoundaryMeasure boundary_area_and_flux(const Immersion& imm, double R, const QuadOptions& opt = {}) {
    Integrand f{2, Level::Metric, [](const PointGeometry& G, double* out) {
                    out[0] = 1.0;
                    out[1] = G.grad_r_norm;
                }};
    CellSum s = integrate_level(imm, f, R, opt);
    return {s.value[0], s.value[1], s.error[0], s.error[1], boundary_route(imm, opt)};
}

// ---------------------------------------------------------------------------
// Gaussian-weighted integrals on non-compact charts.

// Vol(D_t) <= c t^n on the window.
struct GrowthMajorant {
    double c = 0.0;
    int n = 0;
};

inline GrowthMajorant growth_majorant(const Immersion& imm, double lambda, const QuadOptions& opt = {}) {
    const int n = imm.dim();
    const double top = std::min(imm.window(), 6.0 * std::sqrt(n / lambda));
    double best = 0.0;
    for (int i = 1; i <= 4; ++i) {
        const double R = top * i / 4;
        const double v = region_volume(imm, R, opt).value;
        best = std::max(best, v / std::pow(R, n));
    }
    return {10.0 * best, n};
}

namespace detail {

// log Gamma(a, x), upper incomplete; asymptotic upper bound when the value
// would underflow.
inline double log_upper_gamma(double a, double x) {
    if (x < 600) {
        const double v = boost::math::tgamma(a, x);
        if (v > 1e-280) return std::log(v);
    }
    // Gamma(a, x) <= x^{a-1} e^{-x} / (1 - (a-1)/x) for x > a - 1.
    const double corr = a > 1 ? -std::log1p(-(a - 1) / x) : 0.0;
    return (a - 1) * std::log(x) - x + corr;
}

}  // namespace detail

// Bound on int_{r > R} r^j e^{-lambda (r^2 - shift^2)/2} dV from V(t) <= c t^n:
// c R^n phi(R) + c n int_R^inf t^{n-1} phi dt. Valid once phi decreases.
inline double log_tail_bound(const GrowthMajorant& m, double lambda, int j, double shift, double R) {
    const int n = m.n;
    if (!(m.c > 0)) return -std::numeric_limits<double>::infinity();
    const double lc = std::log(m.c);
    const double log_phi = j * std::log(R) - 0.5 * lambda * (R * R - shift * shift);
    const double t1 = lc + n * std::log(R) + log_phi;
    const double a = 0.5 * (n + j);
    const double t2 = lc + std::log(n) + std::log(0.5) + a * std::log(2.0 / lambda) +
                      detail::log_upper_gamma(a, 0.5 * lambda * R * R) + 0.5 * lambda * shift * shift;
    const double hi = std::max(t1, t2);
    return hi + std::log(std::exp(t1 - hi) + std::exp(t2 - hi));
}

// int_{r > inner} r^j e^{-lambda (r^2 - shift^2)/2} dV.
inline QuadratureResult weighted_integral(const Immersion& imm, double lambda, int j, double shift, double inner,
                                          const QuadOptions& opt = {},
                                          std::optional<GrowthMajorant> majorant = std::nullopt) {
    if (!(lambda > 0)) throw input_error("InvalidParams", "Gaussian weights need lambda > 0");
    Integrand f{1, Level::Metric, [=](const PointGeometry& G, double* out) {
                    out[0] = std::pow(G.r, j) * std::exp(-0.5 * lambda * (G.r * G.r - shift * shift));
                }};
    if (imm.compact()) {
        const double top = detail::sup_radius(imm);
        if (inner >= top) return {};
        QuadratureResult r = to_result(integrate_shell(imm, f, {inner, top}, opt));
        r.r_max = top;
        return r;
    }
    const int n = imm.dim();
    if (!majorant) majorant = growth_majorant(imm, lambda, opt);
    const double W = imm.window();
    const double floor_r = std::max({inner, shift, std::sqrt((n + j) / lambda)});
    if (floor_r >= W) throw numerical_error("TruncationFailure", "window " + dsl::format_number(W) + " too small");

    // First pass to a generous radius for the scale of the integral.
    const double guess = std::min(W, floor_r + 4.0 * std::sqrt(n / lambda) + 4.0);
    QuadratureResult first = to_result(integrate_shell(imm, f, {inner, guess}, opt));
    const double target = std::max(opt.abs_tol, 0.1 * opt.rel_tol * std::fabs(first.value));
    const double log_target = std::log(target);
    auto excess = [&](double R) { return log_tail_bound(*majorant, lambda, j, shift, R) - log_target; };
    if (excess(W) > 0)
        throw numerical_error("TruncationFailure", "tail bound " +
                                                       dsl::format_number(std::exp(log_tail_bound(*majorant, lambda, j, shift, W))) +
                                                       " above tolerance at the window radius " + dsl::format_number(W));
    double R_max = floor_r;
    if (excess(floor_r) > 0) {
        std::uintmax_t iters = 100;
        auto tol = [](double a, double b) { return std::fabs(a - b) <= 1e-10 * std::max(1.0, a); };
        auto br = boost::math::tools::toms748_solve(excess, floor_r, W, tol, iters);
        R_max = br.second;
    }
    QuadratureResult out = R_max == guess ? first : to_result(integrate_shell(imm, f, {inner, R_max}, opt));
    out.r_max = R_max;
    out.tail = std::exp(log_tail_bound(*majorant, lambda, j, shift, R_max));
    return out;
}

inline QuadratureResult gaussian_volume(const Immersion& imm, double lambda, const QuadOptions& opt = {}) {
    return weighted_integral(imm, lambda, 0, 0.0, 0.0, opt);
}

inline QuadratureResult second_moment(const Immersion& imm, double lambda, const QuadOptions& opt = {}) {
    return weighted_integral(imm, lambda, 2, 0.0, 0.0, opt);
}

struct WeightedIdentity {
    QuadratureResult gaussian, second;
    double margin = 0.0;
    double tol = 0.0;
    bool pass = false;
};

inline WeightedIdentity weighted_identity_check(const Immersion& imm, double lambda, const QuadOptions& opt = {}) {
    WeightedIdentity w;
    std::optional<GrowthMajorant> maj;
    if (!imm.compact()) maj = growth_majorant(imm, lambda, opt);
    w.gaussian = weighted_integral(imm, lambda, 0, 0.0, 0.0, opt, maj);
    w.second = weighted_integral(imm, lambda, 2, 0.0, 0.0, opt, maj);
    const int n = imm.dim();
    const double denom = n * w.gaussian.value;
    if (!(denom > 0)) throw numerical_error("EmptyRegion", "Gaussian volume vanished");
    w.margin = std::fabs(lambda * w.second.value - denom) / denom;
    w.tol = (lambda * (w.second.error + w.second.tail) + n * (w.gaussian.error + w.gaussian.tail)) / denom + 1e-12;
    w.pass = w.margin <= w.tol;
    return w;
}

// ---------------------------------------------------------------------------
// Psi(R) = int_{r > R} r^2 e^{-lambda r^2 / 2} dV, carried as
// scaled = e^{lambda R^2 / 2} Psi(R) so large R does not underflow.

struct PsiCurve {
    std::vector<double> radii;
    std::vector<double> values;
    std::vector<double> scaled;
    std::vector<double> errors;  // of scaled
    std::vector<double> tails;   // of scaled
    std::vector<double> closed_form;  // generalized cylinders only
    double majorant_c = 0.0;
};

inline PsiCurve psi(const CatalogEntry* entry, const Immersion& imm, double lambda, const std::vector<double>& radii,
                    const QuadOptions& opt = {}) {
    PsiCurve c;
    std::optional<GrowthMajorant> maj;
    if (!imm.compact()) {
        maj = growth_majorant(imm, lambda, opt);
        c.majorant_c = maj->c;
    }
    for (double R : radii) {
        QuadratureResult q = weighted_integral(imm, lambda, 2, R, R, opt, maj);
        c.radii.push_back(R);
        c.scaled.push_back(q.value);
        c.values.push_back(q.value * std::exp(-0.5 * lambda * R * R));
        c.errors.push_back(q.error);
        c.tails.push_back(q.tail);
        if (entry && entry->known.psi) c.closed_form.push_back(entry->known.psi(R));
    }
    return c;
}

inline PsiCurve psi(const Immersion& imm, double lambda, const std::vector<double>& radii, const QuadOptions& opt = {}) {
    return psi(nullptr, imm, lambda, radii, opt);
}

inline PsiCurve psi(const CatalogEntry& entry, double lambda, const std::vector<double>& radii, const QuadOptions& opt = {}) {
    return psi(&entry, entry.immersion, lambda, radii, opt);
}

enum class Trend { DivergentLike, ConvergentLike };

inline std::string trend_name(Trend t) { return t == Trend::DivergentLike ? "DIVERGENT-LIKE" : "CONVERGENT-LIKE"; }

struct ParabolicityResult {
    double value = 0.0;  // int_{R0}^{Rmax} t e^{-lambda t^2/2} / Psi(t) dt
    double error = 0.0;
    double R0 = 0.0, R_max = 0.0;
    double log_slope = 0.0;
    Trend trend = Trend::ConvergentLike;
    std::vector<double> trend_radii, trend_integrand;
    std::string label = "diagnostic";
};

inline ParabolicityResult parabolicity_integral(const Immersion& imm, double lambda, std::optional<double> R0 = std::nullopt,
                                                std::optional<double> R_max = std::nullopt, const QuadOptions& opt = {}) {
    if (!(lambda > 0)) throw input_error("InvalidParams", "parabolicity integral needs lambda > 0");
    const int n = imm.dim();
    ParabolicityResult res;
    res.R0 = R0.value_or(std::sqrt(n / lambda));
    res.R_max = R_max.value_or(6.0 * std::sqrt(n / lambda));
    if (!(res.R0 > 0 && res.R_max > res.R0)) throw input_error("InvalidParams", "need 0 < R0 < R_max");
    std::optional<GrowthMajorant> maj;
    if (!imm.compact()) maj = growth_majorant(imm, lambda, opt);
    auto integrand = [&](double t) {
        const double s = weighted_integral(imm, lambda, 2, t, t, opt, maj).value;
        if (!(s > 0) || !std::isfinite(s))
            throw numerical_error("PsiUnderflow", "Psi(" + dsl::format_number(t) + ") is not positive (" +
                                                      dsl::format_number(s * std::exp(-0.5 * lambda * t * t)) + ")");
        return t / s;
    };
    double err = 0.0;
    res.value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(integrand, res.R0, res.R_max, 3, 1e-6, &err);
    res.error = err;
    // Least-squares slope of log(integrand) against log t on the upper half.
    const int K = 8;
    const double a = std::log(0.5 * (res.R0 + res.R_max)), b = std::log(res.R_max);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < K; ++i) {
        const double lt = a + (b - a) * i / (K - 1);
        const double t = std::exp(lt);
        const double v = integrand(t);
        res.trend_radii.push_back(t);
        res.trend_integrand.push_back(v);
        const double ly = std::log(v);
        sx += lt;
        sy += ly;
        sxx += lt * lt;
        sxy += lt * ly;
    }
    res.log_slope = (K * sxy - sx * sy) / (K * sxx - sx * sx);
    res.trend = res.log_slope > -1.5 ? Trend::DivergentLike : Trend::ConvergentLike;
    return res;
}

// ---------------------------------------------------------------------------
// Divergence identity on D_R:
//   int_{D_R} e^{-lambda r^2/2}(n - lambda r^2) dV = R e^{-lambda R^2/2} int_{dD_R} |grad r| dA
// and its normalized form
//   1 - int |H|^2 / (n lambda Vol) = int (1 - lambda r^2 / n) e^{lambda (R^2 - r^2)/2} / Vol.

struct FluxIdentity {
    double lhs = 0.0, rhs = 0.0;
    double margin = 0.0, tol = 0.0;
    double lemma_lhs = 0.0, lemma_rhs = 0.0;
    double lemma_margin = 0.0, lemma_tol = 0.0;
    double volume = 0.0, boundary_area = 0.0, boundary_flux = 0.0, h2_integral = 0.0;
};

inline FluxIdentity flux_identity_check(const Immersion& imm, double lambda, double R, const QuadOptions& opt = {}) {
    const int n = imm.dim();
    Integrand f{5, Level::Full, [=](const PointGeometry& G, double* out) {
                    const double r2 = G.r * G.r;
                    const double w = std::exp(-0.5 * lambda * r2);
                    out[0] = w * (n - lambda * r2);
                    out[1] = w * (n + lambda * r2);
                    out[2] = 1.0;
                    out[3] = G.H2;
                    out[4] = (1.0 - lambda * r2 / n) * std::exp(0.5 * lambda * (R * R - r2));
                }};
    CellSum v = integrate_shell(imm, f, {0.0, R}, opt);
    BoundaryMeasure b = boundary_area_and_flux(imm, R, opt);
    FluxIdentity out;
    const double wR = R * std::exp(-0.5 * lambda * R * R);
    out.lhs = v.value[0];
    out.rhs = wR * b.flux;
    const double ref = std::max({v.value[1], std::fabs(out.rhs), 1e-300});
    out.margin = std::fabs(out.lhs - out.rhs) / ref;
    out.tol = (v.error[0] + wR * b.flux_error) / ref + 1e-12;
    out.volume = v.value[2];
    out.boundary_area = b.area;
    out.boundary_flux = b.flux;
    out.h2_integral = v.value[3];
    if (out.volume > 0) {
        out.lemma_lhs = 1.0 - v.value[3] / (n * lambda * out.volume);
        out.lemma_rhs = v.value[4] / out.volume;
        out.lemma_margin = std::fabs(out.lemma_lhs - out.lemma_rhs);
        out.lemma_tol = (v.error[3] / (n * lambda) + v.error[4]) / out.volume +
                        (std::fabs(v.value[3]) / (n * lambda) + std::fabs(v.value[4])) * v.error[2] /
                            (out.volume * out.volume) +
                        1e-12;
    }
    return out;
}

}  // namespace solab::quad
