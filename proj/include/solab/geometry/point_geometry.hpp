#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "solab/geometry/immersion.hpp"

namespace solab {

struct PointGeometry {
    int n = 0;
    int N = 0;
    PVec p;
    Vec X;
    Mat J;       // N x n
    Mat g;       // n x n induced metric
    Mat ginv;
    double sqrt_det_g = 0.0;
    Mat Q;       // N x n orthonormal tangent frame (Gram-Schmidt of J)
    Mat normals; // N x (N - n) orthonormal normal frame
    Vec XT;      // tangential part of X
    Vec Xperp;   // normal part of X
    double r = 0.0;
    PVec dr;     // parameter gradient of r
    double grad_r_norm = 0.0;  // |grad^Sigma r| = |X^T| / r

    // Level::Full only.
    bool full = false;
    std::vector<Vec> alpha;  // packed(a,b) -> normal vector alpha_ab
    Vec H;
    double A2 = 0.0;  // |A|^2
    double H2 = 0.0;  // |H|^2

    const Vec& alpha_ab(int a, int b) const {
        return a <= b ? alpha[dsl::packed_index(n, a, b)] : alpha[dsl::packed_index(n, b, a)];
    }
};

namespace detail {

inline std::string format_point(const double* p, int n) {
    std::string s = "(";
    for (int a = 0; a < n; ++a) {
        if (a) s += ", ";
        s += dsl::format_number(p[a]);
    }
    return s + ")";
}

}  // namespace detail

inline void point_geometry(const Immersion& imm, const double* p, Level level, PointGeometry& G) {
    thread_local ChartJet jet;
    imm.evaluate(p, level, jet);
    const int n = imm.dim();
    const int N = imm.ambient();
    G.n = n;
    G.N = N;
    G.p = Eigen::Map<const Eigen::VectorXd>(p, n);
    G.X = jet.X;
    G.J = jet.J;
    G.g = jet.J.transpose() * jet.J;

    // Full rank: smallest singular value of J relative to the largest.
    Eigen::SelfAdjointEigenSolver<Mat> es(G.g, Eigen::EigenvaluesOnly);
    const double emin = es.eigenvalues()(0);
    const double emax = es.eigenvalues()(n - 1);
    if (!(emax > 0.0) || !(emin > 1e-20 * emax))
        throw numerical_error("RankDeficient", "Jacobian loses rank at " + detail::format_point(p, n));

    Eigen::LLT<Mat> llt(G.g);
    G.ginv = llt.solve(Mat::Identity(n, n));
    double det_sqrt = 1.0;
    for (int a = 0; a < n; ++a) det_sqrt *= llt.matrixL()(a, a);
    G.sqrt_det_g = det_sqrt;

    // Modified Gram-Schmidt in a fixed order, applied twice for stability.
    G.Q.resize(N, n);
    for (int a = 0; a < n; ++a) {
        Vec v = jet.J.col(a);
        for (int pass = 0; pass < 2; ++pass)
            for (int b = 0; b < a; ++b) v -= G.Q.col(b).dot(v) * G.Q.col(b);
        G.Q.col(a) = v / v.norm();
    }
    G.normals.resize(N, N - n);
    int found = 0;
    for (int k = 0; k < N && found < N - n; ++k) {
        Vec v = Vec::Zero(N);
        v[k] = 1.0;
        for (int pass = 0; pass < 2; ++pass) {
            for (int b = 0; b < n; ++b) v -= G.Q.col(b).dot(v) * G.Q.col(b);
            for (int b = 0; b < found; ++b) v -= G.normals.col(b).dot(v) * G.normals.col(b);
        }
        const double nv = v.norm();
        if (nv > 1e-6) G.normals.col(found++) = v / nv;
    }
    if (found < N - n) throw numerical_error("RankDeficient", "normal frame incomplete at " + detail::format_point(p, n));

    G.XT = G.Q * (G.Q.transpose() * G.X);
    G.Xperp = G.X - G.XT;
    G.r = G.X.norm();
    G.dr.resize(n);
    if (G.r > 0.0) {
        for (int a = 0; a < n; ++a) G.dr[a] = jet.J.col(a).dot(G.X) / G.r;
        G.grad_r_norm = G.XT.norm() / G.r;
    } else {
        G.dr.setZero();
        G.grad_r_norm = 0.0;
    }

    G.full = level == Level::Full;
    if (!G.full) return;
    const int P = dsl::packed_size(n);
    G.alpha.resize(P);
    for (int q = 0; q < P; ++q) {
        Vec v = jet.D2.col(q);
        G.alpha[q] = v - G.Q * (G.Q.transpose() * v);
    }
    G.H = Vec::Zero(N);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) G.H += G.ginv(a, b) * G.alpha_ab(a, b);
    G.H2 = G.H.squaredNorm();
    // |A|^2 = sum_k tr(g^-1 h_k g^-1 h_k) over an orthonormal normal frame.
    double A2 = 0.0;
    Mat hk(n, n);
    for (int k = 0; k < N - n; ++k) {
        for (int a = 0; a < n; ++a)
            for (int b = a; b < n; ++b) hk(a, b) = hk(b, a) = G.alpha_ab(a, b).dot(G.normals.col(k));
        Mat m = G.ginv * hk;
        A2 += (m * m).trace();
    }
    G.A2 = A2;
}

inline PointGeometry point_geometry(const Immersion& imm, const double* p, Level level = Level::Full) {
    PointGeometry G;
    point_geometry(imm, p, level, G);
    return G;
}

inline PointGeometry point_geometry(const Immersion& imm, const std::vector<double>& p, Level level = Level::Full) {
    if (static_cast<int>(p.size()) != imm.dim()) throw input_error("InvalidParams", "point has wrong dimension");
    return point_geometry(imm, p.data(), level);
}

}  // namespace solab
