#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include <boost/random/sobol.hpp>
#include <boost/random/uniform_01.hpp>

#include "solab/geometry/immersion.hpp"

namespace solab {

inline constexpr std::uint64_t kDefaultSeed = 0x5EED;
inline constexpr int kDefaultSamples = 512;

// Low-discrepancy points in the parameter box. A Sobol sequence (first point
// skipped) is rotated by a seed-dependent shift; non-periodic axes are kept
// 1e-6 of their length away from the faces so polar singularities are never hit.
inline std::vector<std::vector<double>> sample_parameters(const std::vector<Axis>& axes, int count,
                                                          std::uint64_t seed = kDefaultSeed) {
    const int n = static_cast<int>(axes.size());
    boost::random::sobol qrng(n);
    qrng.discard(n);  // skip the all-zero point
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<double> shift(n);
    for (auto& s : shift) s = u01(rng);
    const double scale = 1.0 / (static_cast<double>(qrng.max()) + 1.0);
    std::vector<std::vector<double>> out(count, std::vector<double>(n));
    for (int i = 0; i < count; ++i) {
        for (int a = 0; a < n; ++a) {
            double u = static_cast<double>(qrng()) * scale + shift[a];
            u -= std::floor(u);
            const Axis& ax = axes[a];
            if (!ax.periodic) u = 1e-6 + (1.0 - 2e-6) * u;
            out[i][a] = ax.min + ax.length() * u;
        }
    }
    return out;
}

inline std::vector<std::vector<double>> sample_parameters(const Immersion& imm, int count,
                                                          std::uint64_t seed = kDefaultSeed) {
    return sample_parameters(imm.axes(), count, seed);
}

// Largest sampled extrinsic radius; compact charts use it to detect D_R = all of Sigma.
inline double max_sampled_radius(const Immersion& imm, int count = 4096) {
    double best = 0.0;
    for (auto& p : sample_parameters(imm, count, 1)) best = std::max(best, imm.radius(p.data()));
    return best;
}

}  // namespace solab
