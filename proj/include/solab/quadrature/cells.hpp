#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "solab/geometry/point_geometry.hpp"
#include "solab/quadrature/gauss.hpp"

namespace solab::quad {

inline constexpr int kMaxValues = 6;
using Values = std::array<double, kMaxValues>;

// Values integrated against the induced volume (or boundary) measure.
struct Integrand {
    int count = 1;
    Level level = Level::Metric;
    std::function<void(const PointGeometry&, double*)> f;
};

inline Integrand unit_integrand() {
    return {1, Level::Metric, [](const PointGeometry&, double* out) { out[0] = 1.0; }};
}

// {inner < r < outer}
struct Shell {
    double inner = 0.0;
    double outer = 0.0;
};

enum class BoundaryRoute { Auto, LineRoot, Marching };

struct QuadOptions {
    double rel_tol = 1e-8;
    double abs_tol = 1e-13;
    int order = 8;
    int max_cells = 6000;
    int initial_per_axis = 4;
    // Crossing cells are split until their induced diameter is below this
    // fraction of the level radius before the error estimate is trusted.
    double crossing_fraction = 0.25;
    bool force_generic = false;
    BoundaryRoute boundary_route = BoundaryRoute::Auto;
    int marching_subdivisions = 16;
};

struct CellSum {
    Values value{};
    Values error{};
    int cells = 0;
    bool converged = true;
};

namespace detail {

struct CellProbe {
    double rmin = 0.0, rmax = 0.0;
    double slack = 0.0;
    double diameter = 0.0;  // induced, from the Jacobian at the samples
    int axis = 0;           // max |dr/du_a| * width_a
    int split_axis = 0;     // max induced width
    bool near_critical = false;
};

// r and the Jacobian without the rank check (cell corners may sit on
// collapsed faces).
inline void radius_jet(const Immersion& imm, const double* p, double& r, PVec& dr, PVec& colnorm) {
    thread_local ChartJet jet;
    imm.evaluate(p, Level::Metric, jet);
    r = jet.X.norm();
    const int n = imm.dim();
    dr.resize(n);
    colnorm.resize(n);
    for (int a = 0; a < n; ++a) {
        colnorm[a] = jet.J.col(a).norm();
        dr[a] = r > 0 ? jet.J.col(a).dot(jet.X) / r : colnorm[a];
    }
}

// 3^n samples plus a Lipschitz slack.
inline CellProbe probe_cell(const Immersion& imm, const double* lo, const double* hi, double level_for_critical = -1) {
    const int n = imm.dim();
    CellProbe pr;
    pr.rmin = std::numeric_limits<double>::infinity();
    pr.rmax = -pr.rmin;
    PVec M = PVec::Zero(n), C = PVec::Zero(n), dr, cn;
    PVec center_dr = PVec::Zero(n);
    int total = 1;
    for (int a = 0; a < n; ++a) total *= 3;
    double p[kMaxParam];
    for (int idx = 0; idx < total; ++idx) {
        int rem = idx;
        bool is_center = true;
        for (int a = 0; a < n; ++a) {
            int i = rem % 3;
            rem /= 3;
            p[a] = lo[a] + 0.5 * i * (hi[a] - lo[a]);
            is_center = is_center && i == 1;
        }
        double r;
        try {
            radius_jet(imm, p, r, dr, cn);
        } catch (const Error&) {
            continue;
        }
        pr.rmin = std::min(pr.rmin, r);
        pr.rmax = std::max(pr.rmax, r);
        for (int a = 0; a < n; ++a) {
            M[a] = std::max(M[a], std::fabs(dr[a]));
            C[a] = std::max(C[a], cn[a]);
        }
        if (is_center) center_dr = dr;
        if (level_for_critical > 0 && std::fabs(r - level_for_critical) <= 1e-9 * level_for_critical) {
            thread_local PointGeometry G;
            try {
                point_geometry(imm, p, Level::Metric, G);
                if (G.grad_r_norm < 1e-8) pr.near_critical = true;
            } catch (const Error&) {
            }
        }
    }
    double best = -1, best_w = -1, diam2 = 0;
    for (int a = 0; a < n; ++a) {
        const double w = hi[a] - lo[a];
        pr.slack += 1.5 * M[a] * w / 4;
        diam2 += (C[a] * w) * (C[a] * w);
        const double s = std::fabs(center_dr[a]) * w;
        if (s > best) best = s, pr.axis = a;
        if (C[a] * w > best_w) best_w = C[a] * w, pr.split_axis = a;
    }
    pr.diameter = std::sqrt(diam2);
    return pr;
}

inline bool inside(const Shell& s, double r) { return r > s.inner && r < s.outer; }

// Sorted roots of r - level along axis a on [t0, t1] with the other
// coordinates of p fixed.
inline void line_roots(const Immersion& imm, double* p, int a, double t0, double t1, double level,
                       std::vector<double>& roots, int samples = 16) {
    auto g = [&](double t) {
        p[a] = t;
        return imm.radius(p) - level;
    };
    double prev_t = t0, prev = g(t0);
    for (int i = 1; i <= samples; ++i) {
        const double t = t0 + (t1 - t0) * i / samples;
        const double v = g(t);
        if (prev == 0.0) {
            roots.push_back(prev_t);
        } else if ((prev < 0) != (v < 0) && v != 0.0) {
            std::uintmax_t iters = 60;
            auto tol = [](double x, double y) { return std::fabs(x - y) <= 1e-15 * std::max(1.0, std::fabs(x)); };
            auto br = boost::math::tools::toms748_solve(g, prev_t, t, prev, v, tol, iters);
            roots.push_back(0.5 * (br.first + br.second));
        }
        prev_t = t;
        prev = v;
    }
}

inline double regular_gradient(const PointGeometry& G, double level) {
    if (G.grad_r_norm < 1e-8)
        throw check_error("NonRegularLevel", "R = " + dsl::format_number(level) + " is not a regular value of r (|grad r| = " +
                                                 dsl::format_number(G.grad_r_norm) + " at " +
                                                 solab::detail::format_point(G.p.data(), G.n) + ")");
    return G.grad_r_norm;
}

// Tensor Gauss rule over the axes != skip, calling body(point, weight).
template <class Body>
void tensor_gauss(int n, const double* lo, const double* hi, int q, int skip, double* p, Body&& body) {
    const GaussRule& rule = gauss_legendre(q);
    int dims[kMaxParam], m = 0;
    for (int a = 0; a < n; ++a)
        if (a != skip) dims[m++] = a;
    long total = 1;
    for (int i = 0; i < m; ++i) total *= q;
    for (long idx = 0; idx < total; ++idx) {
        long rem = idx;
        double w = 1.0;
        for (int i = 0; i < m; ++i) {
            const int a = dims[i];
            const int k = static_cast<int>(rem % q);
            rem /= q;
            const double h = 0.5 * (hi[a] - lo[a]);
            p[a] = lo[a] + h * (rule.x[k] + 1.0);
            w *= h * rule.w[k];
        }
        body(p, w);
    }
}

// Same, with every axis != skip split into two panels of order q.
template <class Body>
void tensor_gauss_composite(int n, const double* lo, const double* hi, int q, int skip, double* p, Body&& body) {
    int dims[kMaxParam], m = 0;
    for (int a = 0; a < n; ++a)
        if (a != skip) dims[m++] = a;
    double sub_lo[kMaxParam], sub_hi[kMaxParam];
    for (int mask = 0; mask < (1 << m); ++mask) {
        for (int a = 0; a < n; ++a) sub_lo[a] = lo[a], sub_hi[a] = hi[a];
        for (int i = 0; i < m; ++i) {
            const int a = dims[i];
            const double mid = 0.5 * (lo[a] + hi[a]);
            if (mask & (1 << i))
                sub_lo[a] = mid;
            else
                sub_hi[a] = mid;
        }
        tensor_gauss(n, sub_lo, sub_hi, q, skip, p, body);
    }
}

class CellIntegrator {
public:
    enum class Mode { Volume, Boundary };

    CellIntegrator(const Immersion& imm, const Integrand& f, Mode mode, Shell shell, double level,
                   const QuadOptions& opt)
        : imm_(imm), f_(f), mode_(mode), shell_(shell), level_(level), opt_(opt), n_(imm.dim()) {}

    CellSum run() {
        std::vector<Cell> initial;
        Cell root;
        for (int a = 0; a < n_; ++a) {
            root.lo[a] = imm_.axes()[a].min;
            root.hi[a] = imm_.axes()[a].max;
        }
        split_grid(root, 0, initial);
        for (auto& c : initial) add(std::move(c));

        const double scale_len = mode_ == Mode::Volume ? shell_.outer : level_;
        while (true) {
            if (queue_.empty()) break;
            const auto top = queue_.top();
            const Cell& worst = leaves_[top.second];
            bool forced = worst.crossing && worst.diameter > opt_.crossing_fraction * scale_len;
            if (!forced && within_tolerance()) break;
            if (live_ >= opt_.max_cells) {
                converged_ = false;
                break;
            }
            queue_.pop();
            Cell parent = leaves_[top.second];
            leaves_[top.second].alive = false;
            --live_;
            subtract(parent);
            const int a = parent.split_axis;
            const double mid = 0.5 * (parent.lo[a] + parent.hi[a]);
            Cell left, right;
            left.lo = right.lo = parent.lo;
            left.hi = right.hi = parent.hi;
            left.hi[a] = mid;
            right.lo[a] = mid;
            add(std::move(left));
            add(std::move(right));
        }

        CellSum out;
        out.cells = live_;
        out.converged = converged_;
        for (int k = 0; k < f_.count; ++k) {
            KahanSum v, e;
            for (const auto& c : leaves_)
                if (c.alive) {
                    v.add(c.value[k]);
                    e.add(c.error[k]);
                }
            out.value[k] = v.value();
            out.error[k] = e.value();
        }
        return out;
    }

private:
    struct Cell {
        std::array<double, kMaxParam> lo{}, hi{};
        Values value{}, error{};
        bool alive = true;
        bool crossing = false;
        double diameter = 0.0;
        int axis = 0;
        int split_axis = 0;
    };

    void split_grid(const Cell& root, int a, std::vector<Cell>& out) {
        if (a == n_) {
            out.push_back(root);
            return;
        }
        const int m = opt_.initial_per_axis;
        for (int i = 0; i < m; ++i) {
            Cell c = root;
            c.lo[a] = root.lo[a] + (root.hi[a] - root.lo[a]) * i / m;
            c.hi[a] = i + 1 == m ? root.hi[a] : root.lo[a] + (root.hi[a] - root.lo[a]) * (i + 1) / m;
            split_grid(c, a + 1, out);
        }
    }

    bool within_tolerance() const {
        for (int k = 0; k < f_.count; ++k)
            if (err_[k].value() > std::max(opt_.abs_tol, opt_.rel_tol * std::fabs(val_[k].value()))) return false;
        return true;
    }

    void subtract(const Cell& c) {
        for (int k = 0; k < f_.count; ++k) {
            val_[k].add(-c.value[k]);
            err_[k].add(-c.error[k]);
        }
    }

    void add(Cell c) {
        evaluate(c);
        for (int k = 0; k < f_.count; ++k) {
            val_[k].add(c.value[k]);
            err_[k].add(c.error[k]);
        }
        double key = 0;
        for (int k = 0; k < f_.count; ++k) key += c.error[k];
        const double scale_len = mode_ == Mode::Volume ? shell_.outer : level_;
        if (c.crossing && c.diameter > opt_.crossing_fraction * scale_len) key = std::numeric_limits<double>::infinity();
        leaves_.push_back(std::move(c));
        ++live_;
        // Ties resolve by index so the traversal is deterministic.
        queue_.push({key, static_cast<long>(leaves_.size()) - 1});
    }

    void evaluate(Cell& c) {
        const double lvl = mode_ == Mode::Boundary ? level_ : -1.0;
        CellProbe pr = probe_cell(imm_, c.lo.data(), c.hi.data(), lvl);
        c.diameter = pr.diameter;
        c.axis = pr.axis;
        c.split_axis = pr.split_axis;
        if (pr.near_critical)
            throw check_error("NonRegularLevel", "R = " + dsl::format_number(level_) + " is a critical value of r");
        const double lo_r = pr.rmin - pr.slack, hi_r = pr.rmax + pr.slack;
        if (mode_ == Mode::Volume) {
            if (lo_r >= shell_.outer || hi_r <= shell_.inner) return;  // outside
            if (lo_r > shell_.inner && hi_r < shell_.outer) {
                Values a = tensor(c, opt_.order), b = tensor(c, opt_.order - 2);
                store(c, a, b);
                return;
            }
            c.crossing = true;
            Values a = lines(c, opt_.order, false), b = lines(c, opt_.order - 2, false);
            store(c, a, b);
            if (n_ >= 3) widen(c, a, lines(c, opt_.order / 2, true));
        } else {
            if (lo_r > level_ || hi_r < level_) return;
            c.crossing = true;
            Values a = boundary_lines(c, opt_.order, false), b = boundary_lines(c, opt_.order - 2, false);
            store(c, a, b);
            if (n_ >= 3) widen(c, a, boundary_lines(c, opt_.order / 2, true));
        }
    }

    void store(Cell& c, const Values& a, const Values& b) {
        for (int k = 0; k < f_.count; ++k) {
            c.value[k] = a[k];
            c.error[k] = std::fabs(a[k] - b[k]);
        }
    }

    void widen(Cell& c, const Values& a, const Values& b) {
        for (int k = 0; k < f_.count; ++k) c.error[k] = std::max(c.error[k], std::fabs(a[k] - b[k]));
    }

    // Rule over the coordinates transverse to the line axis a. In two
    // dimensions the transverse interval is cut where the level set leaves
    // through the faces t = lo_a, hi_a, so each piece is smooth. In higher
    // dimensions those kinks stay inside the cells; the composite rule is
    // there to expose them in the error estimate.
    template <class Body>
    void transverse(const Cell& c, int a, int q, bool composite, double* p, Body&& body) {
        if (n_ != 2) {
            if (composite)
                tensor_gauss_composite(n_, c.lo.data(), c.hi.data(), q, a, p, body);
            else
                tensor_gauss(n_, c.lo.data(), c.hi.data(), q, a, p, body);
            return;
        }
        const int b = 1 - a;
        cuts_.clear();
        cuts_.push_back(c.lo[b]);
        double x[2];
        for (double face : {c.lo[a], c.hi[a]}) {
            for (double L : {mode_ == Mode::Volume ? shell_.outer : level_, mode_ == Mode::Volume ? shell_.inner : 0.0}) {
                if (!(L > 0)) continue;
                x[a] = face;
                line_roots(imm_, x, b, c.lo[b], c.hi[b], L, cuts_);
            }
        }
        cuts_.push_back(c.hi[b]);
        std::sort(cuts_.begin(), cuts_.end());
        const std::vector<double> pieces = cuts_;
        const GaussRule& rule = gauss_legendre(q);
        for (std::size_t i = 0; i + 1 < pieces.size(); ++i) {
            const double h = 0.5 * (pieces[i + 1] - pieces[i]);
            if (!(h > 0)) continue;
            for (int k = 0; k < q; ++k) {
                p[b] = pieces[i] + h * (rule.x[k] + 1.0);
                body(p, h * rule.w[k]);
            }
        }
    }

    void eval_point(const double* p, double w, Values& acc) {
        point_geometry(imm_, p, f_.level, G_);
        double out[kMaxValues];
        f_.f(G_, out);
        for (int k = 0; k < f_.count; ++k) acc[k] += w * G_.sqrt_det_g * out[k];
    }

    Values tensor(const Cell& c, int q) {
        Values acc{};
        double p[kMaxParam];
        tensor_gauss(n_, c.lo.data(), c.hi.data(), q, -1, p, [&](double* x, double w) { eval_point(x, w, acc); });
        return acc;
    }

    // Inside intervals along the line are found from roots of r - inner and
    // r - outer, then integrated with a q-point rule per interval.
    Values lines(const Cell& c, int q, bool composite) {
        Values acc{};
        const int a = c.axis;
        const GaussRule& rule = gauss_legendre(q);
        double p[kMaxParam];
        std::vector<double> cuts;
        transverse(c, a, q, composite, p, [&](double* x, double w) {
            cuts.clear();
            cuts.push_back(c.lo[a]);
            line_roots(imm_, x, a, c.lo[a], c.hi[a], shell_.outer, cuts);
            if (shell_.inner > 0) line_roots(imm_, x, a, c.lo[a], c.hi[a], shell_.inner, cuts);
            cuts.push_back(c.hi[a]);
            std::sort(cuts.begin(), cuts.end());
            for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
                const double t0 = cuts[i], t1 = cuts[i + 1];
                if (!(t1 > t0)) continue;
                x[a] = 0.5 * (t0 + t1);
                if (!inside(shell_, imm_.radius(x))) continue;
                const double h = 0.5 * (t1 - t0);
                for (int k = 0; k < q; ++k) {
                    x[a] = t0 + h * (rule.x[k] + 1.0);
                    eval_point(x, w * h * rule.w[k], acc);
                }
            }
        });
        return acc;
    }

    // Coarea along the line: sum over roots of f sqrt(g) |grad r| / |dr/du_a|.
    Values boundary_lines(const Cell& c, int q, bool composite) {
        Values acc{};
        const int a = c.axis;
        double p[kMaxParam];
        std::vector<double> roots;
        auto per_line = [&](double* x, double w) {
            roots.clear();
            line_roots(imm_, x, a, c.lo[a], c.hi[a], level_, roots);
            for (double t : roots) {
                x[a] = t;
                point_geometry(imm_, x, f_.level, G_);
                const double gr = regular_gradient(G_, level_);
                const double da = std::fabs(G_.dr[a]);
                if (!(da > 0)) continue;
                double out[kMaxValues];
                f_.f(G_, out);
                for (int k = 0; k < f_.count; ++k) acc[k] += w * out[k] * G_.sqrt_det_g * gr / da;
            }
        };
        if (n_ == 1) {
            p[0] = c.lo[0];
            per_line(p, 1.0);
        } else {
            transverse(c, a, q, composite, p, per_line);
        }
        return acc;
    }

    const Immersion& imm_;
    const Integrand& f_;
    Mode mode_;
    Shell shell_;
    double level_;
    QuadOptions opt_;
    int n_;
    PointGeometry G_;
    std::vector<Cell> leaves_;
    std::vector<double> cuts_;
    std::priority_queue<std::pair<double, long>> queue_;
    std::array<KahanSum, kMaxValues> val_{}, err_{};
    int live_ = 0;
    bool converged_ = true;
};

}  // namespace detail

inline CellSum integrate_cells(const Immersion& imm, const Integrand& f, Shell shell, const QuadOptions& opt = {}) {
    return detail::CellIntegrator(imm, f, detail::CellIntegrator::Mode::Volume, shell, shell.outer, opt).run();
}

inline CellSum integrate_level_lines(const Immersion& imm, const Integrand& f, double level, const QuadOptions& opt = {}) {
    return detail::CellIntegrator(imm, f, detail::CellIntegrator::Mode::Boundary, {}, level, opt).run();
}

}  // namespace solab::quad
