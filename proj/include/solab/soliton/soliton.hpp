#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "solab/geometry/point_geometry.hpp"
#include "solab/geometry/radial.hpp"

namespace solab {

enum class FlowKind { MCF, IMCF };

inline const char* to_string(FlowKind k) { return k == FlowKind::MCF ? "mcf" : "imcf"; }

struct SolitonSpec {
    FlowKind kind = FlowKind::MCF;
    double constant = 0.0;  // lambda for MCF, C for IMCF

    static SolitonSpec mcf(double lambda) { return {FlowKind::MCF, lambda}; }
    static SolitonSpec imcf(double C) {
        if (C == 0.0) throw input_error("InvalidParams", "an IMCF soliton needs C != 0");
        return {FlowKind::IMCF, C};
    }
};

inline constexpr double kTolH = 1e-10;
inline constexpr double kSolitonTol = 1e-8;

using SampleSet = std::vector<std::vector<double>>;

struct ResidualReport {
    std::vector<double> residuals;
    double sup = 0.0;
    double mean = 0.0;
    std::size_t samples = 0;
    std::string sample_set;
    double tol = kSolitonTol;
    bool pass = false;
};

namespace detail {

inline ResidualReport finish(std::vector<double> res, double tol, std::string desc) {
    ResidualReport r;
    r.samples = res.size();
    double sum = 0.0, comp = 0.0;
    for (double v : res) {
        r.sup = std::max(r.sup, v);
        // Kahan summation in sample order.
        double y = v - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    r.mean = res.empty() ? 0.0 : sum / res.size();
    r.residuals = std::move(res);
    r.tol = tol;
    r.pass = r.sup < tol;
    r.sample_set = std::move(desc);
    return r;
}

inline std::string describe(const SampleSet& s) { return std::to_string(s.size()) + " Sobol samples"; }

inline void require_H(const PointGeometry& G, double tol_H) {
    if (!(std::sqrt(G.H2) > tol_H))
        throw check_error("VanishingMeanCurvature",
                          "|H| = " + dsl::format_number(std::sqrt(G.H2)) + " at " + format_point(G.p.data(), G.n) +
                              "; a minimal point cannot lie on an IMCF soliton");
}

}  // namespace detail

// residual(p) = |H + lambda X^perp|
inline ResidualReport mcf_residual(const Immersion& imm, double lambda, const SampleSet& samples,
                                   double tol = kSolitonTol) {
    std::vector<double> res;
    res.reserve(samples.size());
    PointGeometry G;
    for (const auto& p : samples) {
        point_geometry(imm, p.data(), Level::Full, G);
        res.push_back((G.H + lambda * G.Xperp).norm());
    }
    return detail::finish(std::move(res), tol, detail::describe(samples));
}

// residual(p) = |H/|H|^2 + C X^perp|
inline ResidualReport imcf_residual(const Immersion& imm, double C, const SampleSet& samples,
                                    double tol = kSolitonTol, double tol_H = kTolH) {
    std::vector<double> res;
    res.reserve(samples.size());
    PointGeometry G;
    for (const auto& p : samples) {
        point_geometry(imm, p.data(), Level::Full, G);
        detail::require_H(G, tol_H);
        res.push_back((G.H / G.H2 + C * G.Xperp).norm());
    }
    return detail::finish(std::move(res), tol, detail::describe(samples));
}

inline ResidualReport soliton_residual(const Immersion& imm, const SolitonSpec& spec, const SampleSet& samples,
                                       double tol = kSolitonTol) {
    return spec.kind == FlowKind::MCF ? mcf_residual(imm, spec.constant, samples, tol)
                                      : imcf_residual(imm, spec.constant, samples, tol);
}

struct InferredConstant {
    double constant = 0.0;
    double fit_residual = 0.0;  // sup residual at the fitted constant
    double normal_mass = 0.0;   // sum |X^perp|^2
    std::string note;
};

// Least squares: MCF lambda* = -sum <H, X^perp> / sum |X^perp|^2; IMCF uses
// H/|H|^2 in place of H.
inline InferredConstant infer_constant(const Immersion& imm, FlowKind kind, const SampleSet& samples,
                                       double tol = 1e-12) {
    std::vector<PointGeometry> geo(samples.size());
    double num = 0.0, den = 0.0, supH = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        point_geometry(imm, samples[i].data(), Level::Full, geo[i]);
        const auto& G = geo[i];
        supH = std::max(supH, std::sqrt(G.H2));
        if (kind == FlowKind::IMCF) detail::require_H(G, kTolH);
        Vec h = kind == FlowKind::MCF ? Vec(G.H) : Vec(G.H / G.H2);
        num += h.dot(G.Xperp);
        den += G.Xperp.squaredNorm();
    }
    InferredConstant out;
    out.normal_mass = den;
    if (den < tol * std::max<std::size_t>(1, samples.size())) {
        if (kind == FlowKind::MCF && supH < kTolH) {
            out.constant = 0.0;
            out.fit_residual = supH;
            out.note = "minimal with X^perp = 0: every lambda fits, reporting 0";
            return out;
        }
        throw check_error("DegenerateNormalPosition", "sum |X^perp|^2 = " + dsl::format_number(den));
    }
    out.constant = -num / den;
    for (const auto& G : geo) {
        Vec h = kind == FlowKind::MCF ? Vec(G.H) : Vec(G.H / G.H2);
        out.fit_residual = std::max(out.fit_residual, (h + out.constant * G.Xperp).norm());
    }
    return out;
}

struct FlowTimeRow {
    double t = 0.0;
    double factor = 1.0;         // homothety factor c(t)
    double sup_residual = 0.0;
    double scaling_law_gap = 0.0;  // max |H_t(numeric) - H/c|
    double max_tangential_speed = 0.0;
};

struct FlowReport {
    std::vector<FlowTimeRow> rows;
    ResidualReport residual;  // over all (t, p) pairs
};

inline double homothety_factor(const SolitonSpec& spec, double t) {
    if (spec.kind == FlowKind::MCF) {
        const double s = 1.0 - 2.0 * spec.constant * t;
        if (!(s > 0.0))
            throw input_error("TimeOutOfRange", "t = " + dsl::format_number(t) + " is past the extinction time 1/(2 lambda)");
        return std::sqrt(s);
    }
    return std::exp(spec.constant * t);
}

inline double homothety_rate(const SolitonSpec& spec, double t) {
    if (spec.kind == FlowKind::MCF) return -spec.constant / homothety_factor(spec, t);
    return spec.constant * std::exp(spec.constant * t);
}

// X_t = c(t) X. The velocity c'(t) X is compared with the flow speed in the
// normal direction; its tangential part only reparametrizes.
inline FlowReport homothety_flow_residual(const Immersion& imm, const SolitonSpec& spec,
                                          const std::vector<double>& times, const SampleSet& samples,
                                          double tol = kSolitonTol) {
    FlowReport out;
    std::vector<double> all;
    PointGeometry G0, Gt;
    std::vector<double> factors;
    for (double t : times) factors.push_back(homothety_factor(spec, t));
    for (std::size_t it = 0; it < times.size(); ++it) {
        const double t = times[it];
        const double c = factors[it];
        const double dc = homothety_rate(spec, t);
        Immersion scaled = imm.scaled(c);
        FlowTimeRow row;
        row.t = t;
        row.factor = c;
        for (const auto& p : samples) {
            point_geometry(imm, p.data(), Level::Full, G0);
            point_geometry(scaled, p.data(), Level::Full, Gt);
            Vec velocity_normal = dc * Gt.Xperp / c;
            Vec speed;
            if (spec.kind == FlowKind::MCF) {
                speed = Gt.H;
            } else {
                detail::require_H(Gt, kTolH);
                speed = -Gt.H / Gt.H2;
            }
            const double res = (velocity_normal - speed).norm();
            row.sup_residual = std::max(row.sup_residual, res);
            row.scaling_law_gap = std::max(row.scaling_law_gap, (Gt.H - G0.H / c).norm());
            row.max_tangential_speed = std::max(row.max_tangential_speed, std::fabs(dc) * G0.XT.norm());
            all.push_back(res);
        }
        out.rows.push_back(row);
    }
    out.residual = detail::finish(std::move(all), tol,
                                  detail::describe(samples) + " x " + std::to_string(times.size()) + " times");
    return out;
}

struct WmpProbe {
    double eps = 0.0;
    int k = 0;
    int n = 0;
    // u = f1_eps(r)
    double sup_u = 0.0;
    int near_sup_u = 0;
    double lap_u_min = 0.0, lap_u_max = 0.0;
    // v = -r^2
    double sup_v = 0.0;
    int near_sup_v = 0;
    double lap_v_min = 0.0, lap_v_max = 0.0;
    double threshold = 0.0;  // n - 2 - eps
    std::optional<double> lambda_xperp2_min, lambda_xperp2_max;  // MCF
    std::optional<double> inv_C;                                 // IMCF
    std::string verdict;  // diagnostic wording
};

inline WmpProbe wmp_probe(const Immersion& imm, const SolitonSpec& spec, double eps, const SampleSet& samples,
                          int k = 100) {
    if (!(eps > 0)) throw input_error("InvalidParams", "wmp probe needs eps > 0");
    WmpProbe out;
    out.eps = eps;
    out.k = k;
    out.n = imm.dim();
    out.threshold = imm.dim() - 2.0 - eps;
    auto U = RadialFunction::f1_eps(eps);
    auto V = RadialFunction::minus_r_squared();
    std::vector<PointGeometry> geo;
    for (const auto& p : samples) {
        PointGeometry G;
        point_geometry(imm, p.data(), Level::Full, G);
        if (G.r >= kOriginExclusion) geo.push_back(std::move(G));
    }
    if (geo.empty()) throw numerical_error("OriginSingularity", "every sample is inside the origin exclusion radius");
    out.sup_u = -INFINITY;
    out.sup_v = -INFINITY;
    for (const auto& G : geo) {
        out.sup_u = std::max(out.sup_u, U.f(G.r));
        out.sup_v = std::max(out.sup_v, V.f(G.r));
    }
    // Tolerances relative to the spread so a constant function selects every point.
    const double slack = 1.0 / k;
    out.lap_u_min = out.lap_v_min = INFINITY;
    out.lap_u_max = out.lap_v_max = -INFINITY;
    double lx_min = INFINITY, lx_max = -INFINITY;
    for (const auto& G : geo) {
        if (U.f(G.r) >= out.sup_u - slack) {
            ++out.near_sup_u;
            const double l = radial_laplacian(G, U);
            out.lap_u_min = std::min(out.lap_u_min, l);
            out.lap_u_max = std::max(out.lap_u_max, l);
            const double lx = spec.constant * G.Xperp.squaredNorm();
            lx_min = std::min(lx_min, lx);
            lx_max = std::max(lx_max, lx);
        }
        if (V.f(G.r) >= out.sup_v - slack * std::max(1.0, std::fabs(out.sup_v))) {
            ++out.near_sup_v;
            const double l = radial_laplacian(G, V);
            out.lap_v_min = std::min(out.lap_v_min, l);
            out.lap_v_max = std::max(out.lap_v_max, l);
        }
    }
    if (spec.kind == FlowKind::MCF) {
        out.lambda_xperp2_min = lx_min;
        out.lambda_xperp2_max = lx_max;
        out.verdict = lx_min > out.threshold ? "lambda |X^perp|^2 exceeds n - 2 - eps at near-sup points"
                                             : "lambda |X^perp|^2 does not exceed n - 2 - eps at some near-sup point";
    } else {
        out.inv_C = 1.0 / spec.constant;
        if (imm.dim() <= 2) out.verdict = "n <= 2: raw quantities only, no verdict";
        else
            out.verdict = (*out.inv_C >= out.threshold) ? "1/C is at least n - 2 - eps"
                                                        : "1/C is below n - 2 - eps";
    }
    return out;
}

}  // namespace solab
