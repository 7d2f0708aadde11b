#pragma once

#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include "solab/pde/mesh.hpp"

namespace solab::pde {

using SparseMatrix = Eigen::SparseMatrix<double>;

// P1 stiffness K_ij = int <grad phi_i, grad phi_j>_g dV and load
// b_i = int phi_i dV with the induced metric; the metric enters through
// g^{-1} sqrt(g) averaged over the three edge midpoints.
struct Assembly {
    SparseMatrix K;
    Eigen::VectorXd load;
    double volume = 0.0;
};

namespace detail {

struct MetricSample {
    Eigen::Matrix2d ginv_sqrtg;
    double sqrtg;
};

inline MetricSample metric_at(const Immersion& imm, Point2 p) {
    imm.wrap(p.data());
    thread_local PointGeometry G;
    point_geometry(imm, p.data(), Level::Metric, G);
    MetricSample s;
    s.ginv_sqrtg.setZero();
    for (int a = 0; a < G.n; ++a)
        for (int b = 0; b < G.n; ++b) s.ginv_sqrtg(a, b) = G.ginv(a, b) * G.sqrt_det_g;
    s.sqrtg = G.sqrt_det_g;
    return s;
}

// Barycentric gradients (2 x 3) and the parameter area of a triangle.
inline Eigen::Matrix<double, 2, 3> barycentric_gradients(const std::array<Point2, 3>& x, double& area) {
    Eigen::Matrix2d D;
    D << x[1][0] - x[0][0], x[2][0] - x[0][0], x[1][1] - x[0][1], x[2][1] - x[0][1];
    area = 0.5 * std::fabs(D.determinant());
    Eigen::Matrix2d Dinv = D.inverse();
    Eigen::Matrix<double, 2, 3> B;
    B.col(1) = Dinv.row(0).transpose();
    B.col(2) = Dinv.row(1).transpose();
    B.col(0) = -B.col(1) - B.col(2);
    return B;
}

}  // namespace detail

inline Assembly assemble(const Immersion& imm, const Mesh& mesh) {
    const int N = mesh.vertex_count();
    std::vector<Eigen::Triplet<double>> trip;
    Assembly out;
    out.load = Eigen::VectorXd::Zero(N);
    quad::KahanSum vol;
    for (int s = 0; s < mesh.simplex_count(); ++s) {
        const auto& v = mesh.simplices[s];
        const auto& x = mesh.local[s];
        if (mesh.dim == 1) {
            const double len = std::fabs(x[1][0] - x[0][0]);
            const auto& rule = quad::gauss_legendre(2);
            double w = 0.0, l0 = 0.0, l1 = 0.0;
            for (int k = 0; k < 2; ++k) {
                const double t = 0.5 * (rule.x[k] + 1.0);
                auto m = detail::metric_at(imm, {x[0][0] + t * (x[1][0] - x[0][0]), 0.0});
                w += 0.5 * rule.w[k] * m.ginv_sqrtg(0, 0);
                l0 += 0.5 * rule.w[k] * (1 - t) * m.sqrtg * len;
                l1 += 0.5 * rule.w[k] * t * m.sqrtg * len;
            }
            const double k = w / len;
            trip.emplace_back(v[0], v[0], k);
            trip.emplace_back(v[1], v[1], k);
            trip.emplace_back(v[0], v[1], -k);
            trip.emplace_back(v[1], v[0], -k);
            out.load[v[0]] += l0;
            out.load[v[1]] += l1;
            vol.add(l0 + l1);
            continue;
        }
        double area = 0.0;
        Eigen::Matrix<double, 2, 3> B = detail::barycentric_gradients(x, area);
        Eigen::Matrix2d M = Eigen::Matrix2d::Zero();
        for (int e = 0; e < 3; ++e) {
            const Point2& a = x[e];
            const Point2& b = x[(e + 1) % 3];
            auto m = detail::metric_at(imm, {0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])});
            M += m.ginv_sqrtg / 3.0;
            // phi = 1/2 at the midpoint for both endpoints of the edge.
            const double q = area / 3.0 * 0.5 * m.sqrtg;
            out.load[v[e]] += q;
            out.load[v[(e + 1) % 3]] += q;
            vol.add(2 * q);
        }
        Eigen::Matrix3d Ke = area * B.transpose() * M * B;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) trip.emplace_back(v[i], v[j], Ke(i, j));
    }
    out.K.resize(N, N);
    out.K.setFromTriplets(trip.begin(), trip.end());
    out.volume = vol.value();
    return out;
}

struct DirichletSolution {
    Eigen::VectorXd values;
    double energy = 0.0;    // u^T K u
    double residual = 0.0;  // relative residual of the free block
    int iterations = 0;
};

// Connected components of the simplex graph; every one needs a Dirichlet vertex.
inline std::vector<int> components(const Mesh& mesh, int& count) {
    std::vector<int> parent(mesh.vertex_count());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int a) { return parent[a] == a ? a : parent[a] = find(parent[a]); };
    for (const auto& s : mesh.simplices)
        for (int k = 1; k <= mesh.dim; ++k) parent[find(s[k])] = find(s[0]);
    std::vector<int> label(mesh.vertex_count(), -1), root_label(mesh.vertex_count(), -1);
    count = 0;
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        const int r = find(v);
        if (root_label[r] < 0) root_label[r] = count++;
        label[v] = root_label[r];
    }
    return label;
}

inline void require_dirichlet_everywhere(const Mesh& mesh) {
    int count = 0;
    auto label = components(mesh, count);
    std::vector<int> size(count, 0), fixed(count, 0);
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        ++size[label[v]];
        if (mesh.tags[v] != Tag::Interior) ++fixed[label[v]];
    }
    std::string bad;
    for (int c = 0; c < count; ++c)
        if (fixed[c] == 0) bad += (bad.empty() ? "" : ", ") + std::string("component ") + std::to_string(c) + " (" +
                                  std::to_string(size[c]) + " vertices)";
    if (!bad.empty()) throw check_error("DisconnectedRegion", "no Dirichlet boundary on " + bad);
}

// Solves K u = f with u fixed on tagged vertices. `source` scales the load
// (0 for Laplace, 1 for Delta u + 1 = 0).
inline DirichletSolution solve_dirichlet(const Mesh& mesh, const Assembly& A, double inner_value, double outer_value,
                                         double source) {
    require_dirichlet_everywhere(mesh);
    const int N = mesh.vertex_count();
    std::vector<int> free_index(N, -1);
    int nf = 0;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(N);
    for (int v = 0; v < N; ++v) {
        if (mesh.tags[v] == Tag::Interior)
            free_index[v] = nf++;
        else
            u[v] = mesh.tags[v] == Tag::Inner ? inner_value : outer_value;
    }
    DirichletSolution sol;
    if (nf > 0) {
        std::vector<Eigen::Triplet<double>> trip;
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf);
        for (int v = 0; v < N; ++v)
            if (free_index[v] >= 0) rhs[free_index[v]] = source * A.load[v];
        for (int k = 0; k < A.K.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(A.K, k); it; ++it) {
                const int i = static_cast<int>(it.row()), j = static_cast<int>(it.col());
                if (free_index[i] < 0) continue;
                if (free_index[j] >= 0)
                    trip.emplace_back(free_index[i], free_index[j], it.value());
                else
                    rhs[free_index[i]] -= it.value() * u[j];
            }
        SparseMatrix Kf(nf, nf);
        Kf.setFromTriplets(trip.begin(), trip.end());
        Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
        cg.setTolerance(1e-10);
        const int cap = static_cast<int>(std::ceil(50.0 * std::sqrt(static_cast<double>(N))));
        cg.setMaxIterations(cap);
        cg.compute(Kf);
        Eigen::VectorXd x = cg.solve(rhs);
        sol.iterations = static_cast<int>(cg.iterations());
        const double rn = rhs.norm();
        sol.residual = rn > 0 ? (Kf * x - rhs).norm() / rn : 0.0;
        if (cg.info() != Eigen::Success || !(sol.residual <= 1e-9))
            throw numerical_error("SolverDivergence", "CG stopped after " + std::to_string(sol.iterations) +
                                                          " iterations (cap " + std::to_string(cap) +
                                                          ") with relative residual " + dsl::format_number(sol.residual));
        for (int v = 0; v < N; ++v)
            if (free_index[v] >= 0) u[v] = x[free_index[v]];
    }
    sol.values = u;
    sol.energy = u.dot(A.K * u);
    return sol;
}

}  // namespace solab::pde
