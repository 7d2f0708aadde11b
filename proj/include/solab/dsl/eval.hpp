#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "solab/dsl/expr.hpp"
#include "solab/dsl/jet.hpp"
#include "solab/error.hpp"

namespace solab::dsl {

// Postfix form of an expression. Powers whose exponent does not depend on the
// parameters are folded at compile time into integer or real-constant powers.
class Program {
public:
    Program() = default;
    Program(const Expr& e, int dim, std::vector<std::string> names = {})
        : dim_(dim), names_(std::move(names)) {
        if (dim < 1 || dim > kMaxJetDim)
            throw input_error("InvalidParams", "parameter dimension must be in [1, " + std::to_string(kMaxJetDim) + "]");
        if (max_parameter(e) >= dim)
            throw input_error("UnexpectedToken", "parameter index exceeds declared dimension");
        if (names_.empty()) names_ = default_param_names(dim);
        compile(e);
    }

    int dim() const { return dim_; }

    // Evaluates at x (dim entries). T is double, Jet<1> or Jet<2>.
    template <class T>
    T eval(const double* x, std::vector<T>& stack) const {
        stack.clear();
        for (const Instr& in : code_) {
            switch (in.op) {
                case Op::Const: stack.push_back(make<T>(in.c)); break;
                case Op::Var:
                    if constexpr (std::is_same_v<T, double>) stack.push_back(x[in.k]);
                    else stack.push_back(T::variable(dim_, in.k, x[in.k]));
                    break;
                case Op::Neg: stack.back() = -stack.back(); break;
                case Op::Add: binop(stack, [](const T& a, const T& b) { return a + b; }); break;
                case Op::Sub: binop(stack, [](const T& a, const T& b) { return a - b; }); break;
                case Op::Mul: binop(stack, [](const T& a, const T& b) { return a * b; }); break;
                case Op::Div: {
                    T b = stack.back();
                    stack.pop_back();
                    if (value_of(b) == 0.0) fail(in, "division by zero");
                    stack.back() = stack.back() / b;
                    break;
                }
                case Op::PowInt: stack.back() = pow_int(stack.back(), in); break;
                case Op::PowReal: stack.back() = pow_real(stack.back(), in); break;
                case Op::PowGeneral: {
                    T b = stack.back();
                    stack.pop_back();
                    T a = stack.back();
                    if (!(value_of(a) > 0.0)) fail(in, "non-integer or variable exponent needs a positive base");
                    const double av = value_of(a);
                    T la = chain(a, std::log(av), 1.0 / av, -1.0 / (av * av));
                    T prod = la * b;
                    const double ev = std::exp(value_of(prod));
                    stack.back() = chain(prod, ev, ev, ev);
                    break;
                }
                case Op::Call: stack.back() = apply(stack.back(), in); break;
            }
            if (!std::isfinite(value_of(stack.back()))) fail(in, "non-finite result");
        }
        return stack.back();
    }

    double value(const double* x) const {
        std::vector<double> st;
        return eval<double>(x, st);
    }

private:
    enum class Op { Const, Var, Neg, Add, Sub, Mul, Div, PowInt, PowReal, PowGeneral, Call };
    struct Instr {
        Op op;
        double c = 0.0;
        int k = 0;
        Func f = Func::Sin;
        Expr node;  // for error messages
    };

    static std::vector<std::string> default_param_names(int n) {
        std::vector<std::string> v;
        for (int i = 1; i <= n; ++i) v.push_back("u" + std::to_string(i));
        return v;
    }

    template <class T>
    T make(double c) const {
        if constexpr (std::is_same_v<T, double>) return c;
        else return T::constant(dim_, c);
    }

    template <class T, class F>
    static void binop(std::vector<T>& st, F f) {
        T b = st.back();
        st.pop_back();
        st.back() = f(st.back(), b);
    }

    [[noreturn]] void fail(const Instr& in, const std::string& why) const {
        throw input_error("DomainError", "at node '" + print(in.node, names_) + "': " + why);
    }

    template <class T>
    static constexpr bool has_derivs() { return !std::is_same_v<T, double>; }

    template <class T>
    T pow_int(const T& a, const Instr& in) const {
        const int k = in.k;
        const double x = value_of(a);
        if (x == 0.0 && k < 0) fail(in, "zero base with negative exponent");
        const double f0 = ipow(x, k);
        const double f1 = k == 0 ? 0.0 : k * ipow(x, k - 1);
        const double f2 = (k == 0 || k == 1) ? 0.0 : double(k) * (k - 1) * ipow(x, k - 2);
        return chain(a, f0, f1, f2);
    }

    template <class T>
    T pow_real(const T& a, const Instr& in) const {
        const double x = value_of(a);
        const double c = in.c;
        if (!(x > 0.0)) fail(in, "non-integer exponent needs a positive base");
        const double f0 = std::pow(x, c);
        return chain(a, f0, c * f0 / x, c * (c - 1.0) * f0 / (x * x));
    }

    static double ipow(double x, int k) {
        if (k < 0) return 1.0 / ipow(x, -k);
        double r = 1.0;
        double b = x;
        while (k) {
            if (k & 1) r *= b;
            b *= b;
            k >>= 1;
        }
        return r;
    }

    template <class T>
    T apply(const T& a, const Instr& in) const {
        const double x = value_of(a);
        switch (in.f) {
            case Func::Sin: return chain(a, std::sin(x), std::cos(x), -std::sin(x));
            case Func::Cos: return chain(a, std::cos(x), -std::sin(x), -std::cos(x));
            case Func::Tan: {
                if (std::cos(x) == 0.0) fail(in, "tan at a pole");
                const double t = std::tan(x);
                return chain(a, t, 1.0 + t * t, 2.0 * t * (1.0 + t * t));
            }
            case Func::Sinh: return chain(a, std::sinh(x), std::cosh(x), std::sinh(x));
            case Func::Cosh: return chain(a, std::cosh(x), std::sinh(x), std::cosh(x));
            case Func::Tanh: {
                const double t = std::tanh(x);
                return chain(a, t, 1.0 - t * t, -2.0 * t * (1.0 - t * t));
            }
            case Func::Exp: {
                const double e = std::exp(x);
                return chain(a, e, e, e);
            }
            case Func::Log:
                if (!(x > 0.0)) fail(in, "log of a non-positive value");
                return chain(a, std::log(x), 1.0 / x, -1.0 / (x * x));
            case Func::Sqrt: {
                if (x < 0.0) fail(in, "sqrt of a negative value");
                if (has_derivs<T>() && x == 0.0) fail(in, "sqrt is not differentiable at 0");
                const double s = std::sqrt(x);
                return chain(a, s, 0.5 / s, -0.25 / (s * x));
            }
            case Func::Abs:
                if (has_derivs<T>() && x == 0.0) fail(in, "abs is not differentiable at 0");
                return chain(a, std::fabs(x), x > 0 ? 1.0 : -1.0, 0.0);
        }
        fail(in, "unknown function");
    }

    void compile(const Expr& e) {
        switch (e->kind) {
            case NodeKind::Constant: code_.push_back({Op::Const, e->value, 0, Func::Sin, e}); return;
            case NodeKind::NamedConstant:
                code_.push_back({Op::Const, e->name == 'p' ? std::numbers::pi : std::numbers::e, 0, Func::Sin, e});
                return;
            case NodeKind::Parameter: code_.push_back({Op::Var, 0.0, e->index, Func::Sin, e}); return;
            case NodeKind::Neg:
                compile(e->lhs);
                code_.push_back({Op::Neg, 0.0, 0, Func::Sin, e});
                return;
            case NodeKind::Call:
                compile(e->lhs);
                code_.push_back({Op::Call, 0.0, 0, e->func, e});
                return;
            case NodeKind::Pow:
                compile(e->lhs);
                if (!depends_on_parameters(e->rhs)) {
                    // Exponent is a constant expression: fold it.
                    Program sub;
                    sub.dim_ = dim_;
                    sub.names_ = names_;
                    sub.compile(e->rhs);
                    const double c = sub.value(nullptr);
                    if (c == std::round(c) && std::fabs(c) <= 1024.0)
                        code_.push_back({Op::PowInt, c, static_cast<int>(c), Func::Sin, e});
                    else
                        code_.push_back({Op::PowReal, c, 0, Func::Sin, e});
                    return;
                }
                compile(e->rhs);
                code_.push_back({Op::PowGeneral, 0.0, 0, Func::Sin, e});
                return;
            default: {
                compile(e->lhs);
                compile(e->rhs);
                Op op = e->kind == NodeKind::Add ? Op::Add
                      : e->kind == NodeKind::Sub ? Op::Sub
                      : e->kind == NodeKind::Mul ? Op::Mul : Op::Div;
                code_.push_back({op, 0.0, 0, Func::Sin, e});
                return;
            }
        }
    }

    int dim_ = 0;
    std::vector<std::string> names_;
    std::vector<Instr> code_;
};

struct Jet2Result {
    double value;
    std::vector<double> gradient;
    std::vector<std::vector<double>> hessian;
};

// Value, exact gradient and exact Hessian of `e` at `point`.
inline Jet2Result eval_jet2(const Expr& e, const std::vector<double>& point) {
    const int n = static_cast<int>(point.size());
    Program prog(e, n);
    std::vector<Jet<2>> st;
    Jet<2> j = prog.eval<Jet<2>>(point.data(), st);
    Jet2Result r{j.v, std::vector<double>(n), std::vector<std::vector<double>>(n, std::vector<double>(n))};
    for (int i = 0; i < n; ++i) {
        r.gradient[i] = j.g[i];
        for (int k = 0; k < n; ++k) r.hessian[i][k] = j.hess(i, k);
    }
    return r;
}

inline double eval_value(const Expr& e, const std::vector<double>& point) {
    Program prog(e, std::max<int>(1, static_cast<int>(point.size())));
    return prog.value(point.data());
}

}  // namespace solab::dsl
