#pragma once

#include <cstdio>
#include <ostream>
#include <string>

#include "solab/pde/mesh.hpp"

namespace solab::pde {

inline std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// OFF text. Vertices are ambient positions when the immersion sits in R^3 or
// lower (zero padded), otherwise parameter coordinates with a zero third entry.
inline void write_off(std::ostream& os, const Mesh& mesh, const Immersion& imm) {
    const bool ambient = imm.ambient() <= 3;
    const int faces = mesh.dim == 2 ? mesh.simplex_count() : 0;
    os << "OFF\n" << mesh.vertex_count() << ' ' << faces << " 0\n";
    for (const auto& p : mesh.vertices) {
        double x[3] = {0, 0, 0};
        if (ambient) {
            Vec X = imm.position(p.data());
            for (int k = 0; k < X.size(); ++k) x[k] = X[k];
        } else {
            x[0] = p[0];
            x[1] = p[1];
        }
        os << fmt17(x[0]) << ' ' << fmt17(x[1]) << ' ' << fmt17(x[2]) << '\n';
    }
    if (mesh.dim == 2)
        for (const auto& s : mesh.simplices) os << "3 " << s[0] << ' ' << s[1] << ' ' << s[2] << '\n';
}

// One row per vertex: index, parameter coordinates, r, value.
template <class Values>
void write_field_csv(std::ostream& os, const Mesh& mesh, const Immersion& imm, const Values& values) {
    os << "vertex";
    for (int a = 0; a < mesh.dim; ++a) os << ",u" << a + 1;
    os << ",r,value\n";
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        os << v;
        for (int a = 0; a < mesh.dim; ++a) os << ',' << fmt17(mesh.vertices[v][a]);
        os << ',' << fmt17(imm.radius(mesh.vertices[v].data())) << ',' << fmt17(values[v]) << '\n';
    }
}

}  // namespace solab::pde
