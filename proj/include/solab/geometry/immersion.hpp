#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "solab/dsl/chart.hpp"
#include "solab/dsl/eval.hpp"
#include "solab/error.hpp"

namespace solab {

inline constexpr int kMaxAmbient = 16;
inline constexpr int kMaxParam = dsl::kMaxJetDim;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxAmbient, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxAmbient, kMaxAmbient>;
using D2Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxAmbient, dsl::kMaxPacked>;
using PVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxParam, 1>;

struct Axis {
    std::string name;
    double min = 0.0;
    double max = 1.0;
    bool periodic = false;
    // The chart degenerates on this face (polar angle of a sphere).
    bool collapsed_lo = false;
    bool collapsed_hi = false;

    double length() const { return max - min; }
};

// X(theta, z) = (Y(theta), z) with |Y| = r0 and z ranging over a cube
// [-free_extent, free_extent]^m of Euclidean coordinates.
struct ProductSplit {
    std::vector<int> compact_axes;
    std::vector<int> free_axes;
    double r0 = 0.0;
    double free_extent = 0.0;
};

enum class Level { Metric, Full };

// Raw derivatives of X at a parameter point.
struct ChartJet {
    Vec X;
    Mat J;     // N x n, column a is dX/du_a
    D2Mat D2;  // N x packed(n), column packed(a,b) is d2X/du_a du_b
};

class Immersion {
public:
    Immersion() = default;

    explicit Immersion(dsl::ChartDefinition chart, std::string name = "chart")
        : chart_(std::move(chart)), name_(std::move(name)) {
        const int n = chart_.dim;
        if (chart_.codim_total > kMaxAmbient)
            throw input_error("InvalidChart", "ambient dimension above " + std::to_string(kMaxAmbient));
        const auto names = chart_.names();
        for (const auto& e : chart_.coords) programs_.emplace_back(e, n, names);
        for (const auto& p : chart_.params) axes_.push_back({p.name, p.min, p.max, p.periodic, false, false});
        window_ = compute_window();
    }

    int dim() const { return chart_.dim; }
    int ambient() const { return chart_.codim_total; }
    const std::string& name() const { return name_; }
    const std::vector<Axis>& axes() const { return axes_; }
    const dsl::ChartDefinition& chart() const { return chart_; }
    double scale() const { return scale_; }

    // Largest extrinsic radius R such that {r < R} stays away from the
    // non-periodic, non-collapsed faces of the parameter box.
    double window() const { return window_; }
    bool compact() const { return std::isinf(window_); }

    const std::optional<ProductSplit>& product() const { return product_; }

    // Catalog hooks.
    void mark_collapsed(int axis, bool lo, bool hi) {
        axes_[axis].collapsed_lo = lo;
        axes_[axis].collapsed_hi = hi;
        window_ = compute_window();
    }
    void set_product(ProductSplit s) { product_ = std::move(s); }
    void set_window(double w) { window_ = w; }

    // c X, same parameter domain.
    Immersion scaled(double c) const {
        Immersion out = *this;
        out.scale_ *= c;
        out.window_ = window_ * std::fabs(c);
        if (out.product_) {
            out.product_->r0 *= std::fabs(c);
            // Free coordinates become c z; only c = 1 keeps the split literal.
            if (c != 1.0) out.product_.reset();
        }
        return out;
    }

    void evaluate(const double* p, Level level, ChartJet& out) const {
        const int n = dim();
        const int N = ambient();
        out.X.resize(N);
        out.J.resize(N, n);
        if (level == Level::Full) {
            thread_local std::vector<dsl::Jet<2>> st;
            out.D2.resize(N, dsl::packed_size(n));
            for (int k = 0; k < N; ++k) {
                dsl::Jet<2> j = programs_[k].eval<dsl::Jet<2>>(p, st);
                out.X[k] = scale_ * j.v;
                for (int a = 0; a < n; ++a) out.J(k, a) = scale_ * j.g[a];
                for (int q = 0; q < dsl::packed_size(n); ++q) out.D2(k, q) = scale_ * j.h[q];
            }
        } else {
            thread_local std::vector<dsl::Jet<1>> st;
            out.D2.resize(0, 0);
            for (int k = 0; k < N; ++k) {
                dsl::Jet<1> j = programs_[k].eval<dsl::Jet<1>>(p, st);
                out.X[k] = scale_ * j.v;
                for (int a = 0; a < n; ++a) out.J(k, a) = scale_ * j.g[a];
            }
        }
    }

    Vec position(const double* p) const {
        thread_local std::vector<double> st;
        Vec X(ambient());
        for (int k = 0; k < ambient(); ++k) X[k] = scale_ * programs_[k].eval<double>(p, st);
        return X;
    }

    double radius(const double* p) const { return position(p).norm(); }

    // Wraps periodic coordinates into [min, max).
    void wrap(double* p) const {
        for (int a = 0; a < dim(); ++a) {
            const Axis& ax = axes_[a];
            if (!ax.periodic) continue;
            double L = ax.length();
            double t = std::fmod(p[a] - ax.min, L);
            if (t < 0) t += L;
            p[a] = ax.min + t;
        }
    }

private:
    double compute_window() const {
        const int n = dim();
        double best = std::numeric_limits<double>::infinity();
        const int per_axis = n == 1 ? 1 : std::max(3, static_cast<int>(std::ceil(std::pow(4096.0, 1.0 / (n - 1)))));
        std::vector<double> p(n);
        for (int a = 0; a < n; ++a) {
            const Axis& ax = axes_[a];
            if (ax.periodic) continue;
            for (int side = 0; side < 2; ++side) {
                if ((side == 0 && ax.collapsed_lo) || (side == 1 && ax.collapsed_hi)) continue;
                // Walk a grid on the face.
                long total = 1;
                for (int b = 0; b < n - 1; ++b) total *= per_axis;
                for (long idx = 0; idx < total; ++idx) {
                    long rem = idx;
                    for (int b = 0; b < n; ++b) {
                        if (b == a) {
                            p[b] = side == 0 ? ax.min : ax.max;
                            continue;
                        }
                        int i = static_cast<int>(rem % per_axis);
                        rem /= per_axis;
                        const Axis& bx = axes_[b];
                        p[b] = bx.min + bx.length() * (per_axis == 1 ? 0.5 : double(i) / (per_axis - 1));
                    }
                    try {
                        best = std::min(best, radius(p.data()));
                    } catch (const Error&) {
                        // Faces outside the expression's domain do not bound the window.
                    }
                }
            }
        }
        return best;
    }

    dsl::ChartDefinition chart_;
    std::string name_;
    std::vector<dsl::Program> programs_;
    std::vector<Axis> axes_;
    double scale_ = 1.0;
    double window_ = std::numeric_limits<double>::infinity();
    std::optional<ProductSplit> product_;
};

}  // namespace solab
