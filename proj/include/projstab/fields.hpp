// fields.hpp - nodal P1 coefficient vectors.
#pragma once

#include <vector>

#include "projstab/mesh.hpp"

namespace projstab {

struct ScalarFieldP1 {
    const TriangleMesh* mesh = nullptr;
    std::vector<double> values;

    ScalarFieldP1() = default;
    explicit ScalarFieldP1(const TriangleMesh& m)
        : mesh(&m), values(static_cast<std::size_t>(m.vertex_count()), 0.0) {}
};

// Two scalar components sharing one mesh; Dirichlet-constrained fields are
// exactly zero at boundary vertices.
struct VectorFieldP1 {
    const TriangleMesh* mesh = nullptr;
    std::vector<double> x;
    std::vector<double> y;

    VectorFieldP1() = default;
    explicit VectorFieldP1(const TriangleMesh& m)
        : mesh(&m),
          x(static_cast<std::size_t>(m.vertex_count()), 0.0),
          y(static_cast<std::size_t>(m.vertex_count()), 0.0) {}
};

} // namespace projstab
