#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "solab/dsl/chart.hpp"
#include "solab/geometry/immersion.hpp"

namespace solab {

// Closed-form constants attached to a built-in immersion.
struct KnownConstants {
    std::optional<double> lambda;  // MCF soliton constant
    std::optional<double> C;       // IMCF soliton constant
    std::optional<double> A2;      // |A|^2 when constant
    std::optional<double> H_norm;  // |H| when constant
    bool minimal_in_sphere = false;
    std::string note;
    // Closed-form mean curvature vector, where one is known independently.
    std::function<Vec(const double* p)> explicit_H;
    // Closed-form Psi(R) for generalized cylinders.
    std::function<double(double R)> psi;
};

struct CatalogEntry {
    std::string name;
    std::map<std::string, double> params;
    Immersion immersion;
    KnownConstants known;
};

using CatalogParams = std::map<std::string, double>;

// Unit (k-1)-sphere area, 2 pi^{k/2} / Gamma(k/2); omega_0 = 2.
inline double sphere_area(int k) {
    return 2.0 * std::pow(std::numbers::pi, 0.5 * k) / std::tgamma(0.5 * k);
}
// Volume of S^k(rho).
inline double sphere_volume(int k, double rho) { return sphere_area(k + 1) * std::pow(rho, k); }
// Volume of the unit n-ball.
inline double ball_volume(int n) { return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0); }

namespace detail {

inline std::string num(double v) { return "(" + dsl::format_number(v) + ")"; }

// Hyperspherical coordinates on S^k(rho) using angle names; all but the last
// angle run over [0, pi].
inline std::vector<std::string> sphere_coords(int k, const std::string& rho, const std::vector<std::string>& ang) {
    std::vector<std::string> out;
    std::string prefix = rho;
    for (int i = 0; i < k; ++i) {
        if (i + 1 < k) {
            out.push_back(prefix + "*cos(" + ang[i] + ")");
            prefix += "*sin(" + ang[i] + ")";
        } else {
            out.push_back(prefix + "*cos(" + ang[i] + ")");
            out.push_back(prefix + "*sin(" + ang[i] + ")");
        }
    }
    return out;
}

inline void sphere_axes(int k, const std::string& prefix, std::vector<dsl::ParamAxis>& axes,
                        std::vector<std::string>& names) {
    for (int i = 0; i < k; ++i) {
        std::string nm = prefix + std::to_string(i + 1);
        names.push_back(nm);
        if (i + 1 < k) axes.push_back({nm, 0.0, std::numbers::pi, false});
        else axes.push_back({nm, 0.0, 2 * std::numbers::pi, true});
    }
}

inline void collapse_polar(Immersion& imm, int first_axis, int k) {
    for (int i = 0; i + 1 < k; ++i) imm.mark_collapsed(first_axis + i, true, true);
}

inline double get(const CatalogParams& p, const std::string& key, double def) {
    auto it = p.find(key);
    return it == p.end() ? def : it->second;
}

inline int get_int(const CatalogParams& p, const std::string& key, int def) {
    double v = get(p, key, def);
    if (v != std::round(v)) throw input_error("InvalidParams", key + " must be an integer");
    return static_cast<int>(v);
}

inline void reject_unknown(const CatalogParams& p, const std::vector<std::string>& allowed, const std::string& entry) {
    for (const auto& [k, v] : p) {
        bool ok = false;
        for (const auto& a : allowed) ok = ok || a == k;
        if (!ok) throw input_error("InvalidParams", entry + " does not take parameter '" + k + "'");
    }
}

}  // namespace detail

inline constexpr double kFreeExtent = 64.0;

inline const std::vector<std::string>& catalog_names() {
    static const std::vector<std::string> names = {"sphere",         "plane",            "generalized_cylinder",
                                                   "clifford_torus", "veronese_surface", "castro_lerma"};
    return names;
}

inline std::string canonical_catalog_name(const std::string& name) {
    if (name == "cylinder") return "generalized_cylinder";
    if (name == "clifford") return "clifford_torus";
    if (name == "veronese") return "veronese_surface";
    return name;
}

inline CatalogEntry make_sphere(int n, double R) {
    if (n < 1 || n > kMaxParam) throw input_error("InvalidParams", "sphere needs 1 <= n <= 8");
    if (!(R > 0)) throw input_error("InvalidParams", "sphere radius must be positive");
    std::vector<dsl::ParamAxis> axes;
    std::vector<std::string> names;
    detail::sphere_axes(n, "a", axes, names);
    auto coords = detail::sphere_coords(n, detail::num(R), names);
    CatalogEntry e{"sphere", {{"n", n}, {"radius", R}}, Immersion(dsl::make_chart(n, n + 1, axes, coords), "sphere"), {}};
    detail::collapse_polar(e.immersion, 0, n);
    e.immersion.set_window(std::numeric_limits<double>::infinity());
    ProductSplit split;
    for (int a = 0; a < n; ++a) split.compact_axes.push_back(a);
    split.r0 = R;
    e.immersion.set_product(split);
    e.known.lambda = n / (R * R);
    e.known.C = 1.0 / n;
    e.known.A2 = n / (R * R);
    e.known.H_norm = n / R;
    e.known.minimal_in_sphere = true;
    return e;
}

inline CatalogEntry make_plane(int n) {
    if (n < 1 || n > kMaxParam) throw input_error("InvalidParams", "plane needs 1 <= n <= 8");
    std::vector<dsl::ParamAxis> axes;
    std::vector<std::string> coords;
    for (int i = 0; i < n; ++i) {
        std::string nm = "x" + std::to_string(i + 1);
        axes.push_back({nm, -kFreeExtent, kFreeExtent, false});
        coords.push_back(nm);
    }
    coords.push_back("0");
    CatalogEntry e{"plane", {{"n", n}}, Immersion(dsl::make_chart(n, n + 1, axes, coords), "plane"), {}};
    ProductSplit split;
    for (int a = 0; a < n; ++a) split.free_axes.push_back(a);
    split.free_extent = kFreeExtent;
    e.immersion.set_product(split);
    e.known.lambda = 0.0;
    e.known.A2 = 0.0;
    e.known.H_norm = 0.0;
    e.known.note = "minimal through the origin: H = 0 = X^perp, a soliton for every lambda";
    return e;
}

// Closed-form Psi(R) of S^k(rho) x R^{n-k} with lambda = k / rho^2, via
// upper incomplete gamma functions.
inline double cylinder_psi(int n, int k, double rho, double R) {
    const int m = n - k;
    const double lam = k / (rho * rho);
    const double vol = sphere_volume(k, rho);
    const double v0 = std::max(R * R - rho * rho, 0.0);
    const double x = 0.5 * lam * v0;
    if (m == 0) return R < rho ? vol * rho * rho * std::exp(-0.5 * lam * rho * rho) : 0.0;
    const double a = 0.5 * m;
    const double t1 = std::pow(2.0 / lam, a + 1) * boost::math::tgamma(a + 1, x);
    const double t2 = rho * rho * std::pow(2.0 / lam, a) * boost::math::tgamma(a, x);
    return vol * 0.5 * sphere_area(m) * std::exp(-0.5 * lam * rho * rho) * (t1 + t2);
}

inline CatalogEntry make_cylinder(int n, int k, double rho) {
    if (k < 1 || n < 1 || n > kMaxParam) throw input_error("InvalidParams", "cylinder needs 1 <= k <= n <= 8");
    if (k > n) throw input_error("InvalidParams", "cylinder needs k <= n (got k = " + std::to_string(k) + ", n = " + std::to_string(n) + ")");
    if (!(rho > 0)) throw input_error("InvalidParams", "cylinder radius must be positive");
    std::vector<dsl::ParamAxis> axes;
    std::vector<std::string> names;
    detail::sphere_axes(k, "a", axes, names);
    auto coords = detail::sphere_coords(k, detail::num(rho), names);
    for (int i = 0; i < n - k; ++i) {
        std::string nm = "z" + std::to_string(i + 1);
        axes.push_back({nm, -kFreeExtent, kFreeExtent, false});
        coords.push_back(nm);
    }
    CatalogEntry e{"generalized_cylinder",
                   {{"n", n}, {"k", k}, {"rho", rho}},
                   Immersion(dsl::make_chart(n, n + 1, axes, coords), "generalized_cylinder"),
                   {}};
    detail::collapse_polar(e.immersion, 0, k);
    ProductSplit split;
    for (int a = 0; a < k; ++a) split.compact_axes.push_back(a);
    for (int a = k; a < n; ++a) split.free_axes.push_back(a);
    split.r0 = rho;
    split.free_extent = kFreeExtent;
    if (k == n) e.immersion.set_window(std::numeric_limits<double>::infinity());
    e.immersion.set_product(split);
    e.known.lambda = k / (rho * rho);
    e.known.C = 1.0 / k;
    e.known.A2 = k / (rho * rho);
    e.known.H_norm = k / rho;
    e.known.psi = [n, k, rho](double R) { return cylinder_psi(n, k, rho, R); };
    return e;
}

// S^k(sqrt(k/n) R0) x S^l(sqrt(l/n) R0) in the sphere of radius R0 = sqrt(n / lambda).
inline CatalogEntry make_clifford(int k, int l, double lambda) {
    const int n = k + l;
    if (k < 1 || l < 1 || n > kMaxParam) throw input_error("InvalidParams", "clifford_torus needs k, l >= 1 and k + l <= 8");
    if (!(lambda > 0)) throw input_error("InvalidParams", "clifford_torus needs lambda > 0");
    const double R0 = std::sqrt(n / lambda);
    std::vector<dsl::ParamAxis> axes;
    std::vector<std::string> na, nb;
    detail::sphere_axes(k, "a", axes, na);
    detail::sphere_axes(l, "b", axes, nb);
    auto coords = detail::sphere_coords(k, detail::num(R0 * std::sqrt(double(k) / n)), na);
    auto cb = detail::sphere_coords(l, detail::num(R0 * std::sqrt(double(l) / n)), nb);
    coords.insert(coords.end(), cb.begin(), cb.end());
    CatalogEntry e{"clifford_torus",
                   {{"k", k}, {"l", l}, {"lambda", lambda}},
                   Immersion(dsl::make_chart(n, n + 2, axes, coords), "clifford_torus"),
                   {}};
    detail::collapse_polar(e.immersion, 0, k);
    detail::collapse_polar(e.immersion, k, l);
    e.immersion.set_window(std::numeric_limits<double>::infinity());
    e.known.lambda = lambda;
    e.known.C = 1.0 / n;
    e.known.A2 = 2.0 * lambda;
    e.known.H_norm = std::sqrt(n * lambda);
    e.known.minimal_in_sphere = true;
    return e;
}

// Degree-2 harmonic map S^2(sqrt 3) -> S^4(1), scaled to radius sqrt(2 / lambda).
inline CatalogEntry make_veronese(double lambda) {
    if (!(lambda > 0)) throw input_error("InvalidParams", "veronese_surface needs lambda > 0");
    const double R0 = std::sqrt(2.0 / lambda);
    const std::string x = "(sqrt(3)*cos(a1))", y = "(sqrt(3)*sin(a1)*cos(a2))", z = "(sqrt(3)*sin(a1)*sin(a2))";
    const std::string s = detail::num(R0) + "*";
    std::vector<std::string> coords = {
        s + y + "*" + z + "/sqrt(3)",
        s + x + "*" + z + "/sqrt(3)",
        s + x + "*" + y + "/sqrt(3)",
        s + "(" + x + "^2 - " + y + "^2)/(2*sqrt(3))",
        s + "(" + x + "^2 + " + y + "^2 - 2*" + z + "^2)/6",
    };
    std::vector<dsl::ParamAxis> axes = {{"a1", 0.0, std::numbers::pi, false}, {"a2", 0.0, 2 * std::numbers::pi, true}};
    CatalogEntry e{"veronese_surface", {{"lambda", lambda}}, Immersion(dsl::make_chart(2, 5, axes, coords), "veronese_surface"), {}};
    e.immersion.mark_collapsed(0, true, true);
    e.immersion.set_window(std::numeric_limits<double>::infinity());
    e.known.lambda = lambda;
    e.known.C = 0.5;
    e.known.A2 = 5.0 / 3.0 * lambda;
    e.known.H_norm = std::sqrt(2.0 * lambda);
    e.known.minimal_in_sphere = true;
    e.known.note = "standard quadratic chart of S^2(sqrt 3)";
    return e;
}

inline constexpr double kCastroLermaT = 6.0;

// Self-expander of R^4 = C^2:
// X = (1/sqrt(-lambda)) (i s cosh t e^{-i u/c}, th sinh t e^{i c u}),
// s = sinh d, c = cosh d, th = tanh d. The u axis is declared periodic with
// period 2 pi c; rotations of C^2 act transitively on u, so this strip is a
// fundamental domain and integrals are per period.
inline CatalogEntry make_castro_lerma(double delta, double lambda) {
    if (!(delta > 0)) throw input_error("InvalidParams", "castro_lerma needs delta > 0");
    if (!(lambda < 0)) throw input_error("InvalidParams", "castro_lerma is a self-expander and needs lambda < 0");
    const double sd = std::sinh(delta), cd = std::cosh(delta), td = std::tanh(delta);
    const double P = 1.0 / std::sqrt(-lambda);
    using detail::num;
    std::vector<std::string> coords = {
        num(P * sd) + "*cosh(t)*sin(s/" + num(cd) + ")",
        num(P * sd) + "*cosh(t)*cos(s/" + num(cd) + ")",
        num(P * td) + "*sinh(t)*cos(" + num(cd) + "*s)",
        num(P * td) + "*sinh(t)*sin(" + num(cd) + "*s)",
    };
    std::vector<dsl::ParamAxis> axes = {{"s", 0.0, 2 * std::numbers::pi * cd, true},
                                        {"t", -kCastroLermaT, kCastroLermaT, false}};
    CatalogEntry e{"castro_lerma", {{"delta", delta}, {"lambda", lambda}},
                   Immersion(dsl::make_chart(2, 4, axes, coords), "castro_lerma"), {}};
    e.known.lambda = lambda;
    e.known.note = "u axis is a fundamental domain of a rotation symmetry; integrals are per period";
    // H = (-lambda s^2 / D(t)) (z1 / c^2, -z2), D = th^2 cosh^2 t + s^2 sinh^2 t.
    e.known.explicit_H = [=](const double* p) {
        const double u = p[0], t = p[1];
        const double D = td * td * std::cosh(t) * std::cosh(t) + sd * sd * std::sinh(t) * std::sinh(t);
        const double K = -lambda * sd * sd / D;
        Vec H(4);
        H[0] = K / (cd * cd) * P * sd * std::cosh(t) * std::sin(u / cd);
        H[1] = K / (cd * cd) * P * sd * std::cosh(t) * std::cos(u / cd);
        H[2] = -K * P * td * std::sinh(t) * std::cos(cd * u);
        H[3] = -K * P * td * std::sinh(t) * std::sin(cd * u);
        return H;
    };
    return e;
}

inline CatalogEntry catalog(const std::string& raw_name, const CatalogParams& p = {}) {
    using detail::get;
    using detail::get_int;
    const std::string name = canonical_catalog_name(raw_name);
    if (name == "sphere") {
        detail::reject_unknown(p, {"n", "radius"}, name);
        return make_sphere(get_int(p, "n", 2), get(p, "radius", 1.0));
    }
    if (name == "plane") {
        detail::reject_unknown(p, {"n"}, name);
        return make_plane(get_int(p, "n", 2));
    }
    if (name == "generalized_cylinder") {
        detail::reject_unknown(p, {"n", "k", "rho"}, name);
        return make_cylinder(get_int(p, "n", 2), get_int(p, "k", 1), get(p, "rho", 1.0));
    }
    if (name == "clifford_torus") {
        detail::reject_unknown(p, {"k", "l", "lambda"}, name);
        const int k = get_int(p, "k", 1), l = get_int(p, "l", 1);
        return make_clifford(k, l, get(p, "lambda", double(k + l)));
    }
    if (name == "veronese_surface") {
        detail::reject_unknown(p, {"lambda"}, name);
        return make_veronese(get(p, "lambda", 2.0));
    }
    if (name == "castro_lerma") {
        detail::reject_unknown(p, {"delta", "lambda"}, name);
        return make_castro_lerma(get(p, "delta", 1.0), get(p, "lambda", -0.5));
    }
    throw input_error("UnknownCatalogEntry", "'" + raw_name + "'");
}

}  // namespace solab
