#pragma once

// Shared helpers for the unit tests and the acceptance runner.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "solab/dsl/eval.hpp"
#include "solab/dsl/expr.hpp"

namespace solab::testkit {

// Random well-formed expressions over `dim` parameters. Leaves are
// parameters or small constants; the mix keeps most trees finite on [-1.5, 1.5].
class ExprGen {
public:
    ExprGen(std::uint64_t seed, int dim) : rng_(seed), dim_(dim) {}

    dsl::Expr make(int depth) {
        std::uniform_int_distribution<int> pick(0, depth <= 0 ? 2 : 11);
        int c = pick(rng_);
        switch (c) {
            case 0:
            case 1: return dsl::parameter(std::uniform_int_distribution<int>(0, dim_ - 1)(rng_));
            case 2: {
                if (std::uniform_int_distribution<int>(0, 5)(rng_) == 0)
                    return dsl::named_constant(std::uniform_int_distribution<int>(0, 1)(rng_) ? 'p' : 'e');
                return dsl::constant(std::uniform_real_distribution<double>(0.1, 3.0)(rng_));
            }
            case 3: return dsl::unary(dsl::NodeKind::Neg, make(depth - 1));
            case 4: return dsl::binary(dsl::NodeKind::Add, make(depth - 1), make(depth - 1));
            case 5: return dsl::binary(dsl::NodeKind::Sub, make(depth - 1), make(depth - 1));
            case 6: return dsl::binary(dsl::NodeKind::Mul, make(depth - 1), make(depth - 1));
            case 7: return dsl::binary(dsl::NodeKind::Div, make(depth - 1), make(depth - 1));
            case 8: {
                // Integer power, or a real power of a positive base.
                if (std::uniform_int_distribution<int>(0, 1)(rng_))
                    return dsl::binary(dsl::NodeKind::Pow, make(depth - 1),
                                       dsl::constant(std::uniform_int_distribution<int>(0, 3)(rng_)));
                auto base = dsl::call(dsl::Func::Exp, make(depth - 1));
                return dsl::binary(dsl::NodeKind::Pow, base, dsl::constant(0.5 + std::uniform_real_distribution<double>(0, 1)(rng_)));
            }
            default: {
                dsl::Func f = dsl::kAllFuncs[std::uniform_int_distribution<int>(0, 9)(rng_)];
                auto arg = make(depth - 1);
                if (f == dsl::Func::Log || f == dsl::Func::Sqrt) {
                    // 1 + x^2 keeps the argument positive.
                    arg = dsl::binary(dsl::NodeKind::Add, dsl::constant(1.0),
                                      dsl::binary(dsl::NodeKind::Pow, arg, dsl::constant(2)));
                }
                return dsl::call(f, arg);
            }
        }
    }

    std::vector<double> point(double lo = -1.5, double hi = 1.5) {
        std::uniform_real_distribution<double> u(lo, hi);
        std::vector<double> p(dim_);
        for (auto& x : p) x = u(rng_);
        return p;
    }

    std::mt19937_64& rng() { return rng_; }

private:
    std::mt19937_64 rng_;
    int dim_;
};

struct FdCheck {
    double grad_err = 0.0;  // max relative gradient error
    double hess_err = 0.0;  // max relative Hessian error
};

// Compares exact jets with central differences of the value.
inline FdCheck finite_difference_check(const dsl::Expr& e, const std::vector<double>& p) {
    const int n = static_cast<int>(p.size());
    dsl::Program prog(e, n);
    auto jr = dsl::eval_jet2(e, p);
    auto f = [&](std::vector<double> x) { return prog.value(x.data()); };
    FdCheck out;
    for (int i = 0; i < n; ++i) {
        const double h = 1e-5 * std::max(1.0, std::fabs(p[i]));
        auto xp = p, xm = p;
        xp[i] += h;
        xm[i] -= h;
        const double fd = (f(xp) - f(xm)) / (2 * h);
        out.grad_err = std::max(out.grad_err, std::fabs(fd - jr.gradient[i]) / std::max(1.0, std::fabs(jr.gradient[i])));
        for (int k = 0; k < n; ++k) {
            const double hi = 1e-4 * std::max(1.0, std::fabs(p[i]));
            const double hk = 1e-4 * std::max(1.0, std::fabs(p[k]));
            double fd2;
            if (i == k) {
                auto a = p, b = p;
                a[i] += hi;
                b[i] -= hi;
                fd2 = (f(a) - 2 * jr.value + f(b)) / (hi * hi);
            } else {
                auto pp = p, pm = p, mp = p, mm = p;
                pp[i] += hi; pp[k] += hk;
                pm[i] += hi; pm[k] -= hk;
                mp[i] -= hi; mp[k] += hk;
                mm[i] -= hi; mm[k] -= hk;
                fd2 = (f(pp) - f(pm) - f(mp) + f(mm)) / (4 * hi * hk);
            }
            out.hess_err = std::max(out.hess_err, std::fabs(fd2 - jr.hessian[i][k]) / std::max(1.0, std::fabs(jr.hessian[i][k])));
        }
    }
    return out;
}

}  // namespace solab::testkit
