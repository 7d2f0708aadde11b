#pragma once

#include <array>
#include <cassert>

namespace solab::dsl {

inline constexpr int kMaxJetDim = 8;
inline constexpr int kMaxPacked = kMaxJetDim * (kMaxJetDim + 1) / 2;

inline constexpr int packed_size(int dim) { return dim * (dim + 1) / 2; }

// Index of H(i, j), i <= j, in the packed upper triangle.
inline constexpr int packed_index(int dim, int i, int j) {
    return i * dim - i * (i - 1) / 2 + (j - i);
}

// Truncated Taylor jet in `dim` variables: value, gradient and (Order 2)
// Hessian. Arithmetic propagates derivatives exactly.
template <int Order>
struct Jet {
    static_assert(Order == 1 || Order == 2);
    int dim = 0;
    double v = 0.0;
    std::array<double, kMaxJetDim> g{};
    std::array<double, (Order >= 2 ? kMaxPacked : 0)> h{};

    static Jet constant(int dim, double c) {
        Jet j;
        j.dim = dim;
        j.v = c;
        return j;
    }
    static Jet variable(int dim, int index, double x) {
        Jet j = constant(dim, x);
        j.g[index] = 1.0;
        return j;
    }

    double hess(int i, int j) const {
        if constexpr (Order >= 2) {
            return i <= j ? h[packed_index(dim, i, j)] : h[packed_index(dim, j, i)];
        } else {
            (void)i; (void)j;
            return 0.0;
        }
    }
};

// f(a) given f(a.v), f'(a.v), f''(a.v).
template <int Order>
Jet<Order> chain(const Jet<Order>& a, double f0, double f1, double f2) {
    Jet<Order> r;
    r.dim = a.dim;
    r.v = f0;
    for (int i = 0; i < a.dim; ++i) r.g[i] = f1 * a.g[i];
    if constexpr (Order >= 2) {
        int k = 0;
        for (int i = 0; i < a.dim; ++i)
            for (int j = i; j < a.dim; ++j, ++k) r.h[k] = f1 * a.h[k] + f2 * a.g[i] * a.g[j];
    } else {
        (void)f2;
    }
    return r;
}

inline double chain(double, double f0, double, double) { return f0; }

template <int Order>
Jet<Order> operator+(const Jet<Order>& a, const Jet<Order>& b) {
    Jet<Order> r = a;
    r.v += b.v;
    for (int i = 0; i < a.dim; ++i) r.g[i] += b.g[i];
    if constexpr (Order >= 2)
        for (int k = 0; k < packed_size(a.dim); ++k) r.h[k] += b.h[k];
    return r;
}

template <int Order>
Jet<Order> operator-(const Jet<Order>& a) {
    Jet<Order> r = a;
    r.v = -r.v;
    for (int i = 0; i < a.dim; ++i) r.g[i] = -r.g[i];
    if constexpr (Order >= 2)
        for (int k = 0; k < packed_size(a.dim); ++k) r.h[k] = -r.h[k];
    return r;
}

template <int Order>
Jet<Order> operator-(const Jet<Order>& a, const Jet<Order>& b) {
    return a + (-b);
}

template <int Order>
Jet<Order> operator*(const Jet<Order>& a, const Jet<Order>& b) {
    Jet<Order> r;
    r.dim = a.dim;
    r.v = a.v * b.v;
    for (int i = 0; i < a.dim; ++i) r.g[i] = a.g[i] * b.v + a.v * b.g[i];
    if constexpr (Order >= 2) {
        int k = 0;
        for (int i = 0; i < a.dim; ++i)
            for (int j = i; j < a.dim; ++j, ++k)
                r.h[k] = a.h[k] * b.v + a.v * b.h[k] + a.g[i] * b.g[j] + a.g[j] * b.g[i];
    }
    return r;
}

template <int Order>
Jet<Order> operator/(const Jet<Order>& a, const Jet<Order>& b) {
    const double inv = 1.0 / b.v;
    return a * chain(b, inv, -inv * inv, 2.0 * inv * inv * inv);
}

inline double value_of(double x) { return x; }
template <int Order>
double value_of(const Jet<Order>& j) { return j.v; }

}  // namespace solab::dsl
