// mesh.hpp - structured conforming triangulations of the unit square.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "projstab/csr.hpp"

namespace projstab {

struct Vertex {
    double x;
    double y;
};

// Conforming triangulation of [0,1]^2. Immutable after construction; safe to
// share across threads. Triangles are counterclockwise.
struct TriangleMesh {
    std::vector<Vertex> vertices;
    std::vector<std::array<index_t, 3>> triangles;
    std::vector<bool> boundary_flag;
    std::vector<double> element_areas;
    double h = 0.0;                 // max element diameter
    double quasi_uniformity = 1.0;  // max over K of h / h_K
    index_t n_interior = 0;

    index_t vertex_count() const { return static_cast<index_t>(vertices.size()); }
    index_t triangle_count() const { return static_cast<index_t>(triangles.size()); }

    // Throws if any invariant fails (areas, orientation, conformity,
    // total area, boundary consistency).
    void validate() const;
};

// Uniform n x n grid of cells, each split along the lower-left to upper-right
// diagonal. Deterministic: the same n always yields the bit-identical mesh.
TriangleMesh build_structured_mesh(index_t n);

// max_K h_K, scanning every edge.
double mesh_diameter(const TriangleMesh& mesh);

// Plain-text dump: one line "v x y flag" per vertex, "t i j k" per triangle.
void write_mesh_dump(const TriangleMesh& mesh, const std::string& path);

// Per-triangle geometry used by assembly and quadrature: the P1 basis
// gradients are constant, grad(phi_k) = (b[k], c[k]) / (2*area).
struct TriangleGeometry {
    double area;
    std::array<double, 3> b;  // y_j - y_k, cyclic
    std::array<double, 3> c;  // x_k - x_j, cyclic
};

TriangleGeometry triangle_geometry(const TriangleMesh& mesh, index_t t);

} // namespace projstab
