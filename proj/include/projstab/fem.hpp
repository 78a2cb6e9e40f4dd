// fem.hpp - P1 operator assembly, quadrature-based error norms, and the
// Dirichlet index maps between full and reduced velocity vectors.
//
// Assembly is deterministic by construction: each matrix row accumulates its
// element contributions in a canonical order (elements sorted by their sorted
// vertex triple), so the result is bit-identical regardless of thread count
// and of the order triangles appear in the mesh.
#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "projstab/csr.hpp"
#include "projstab/fields.hpp"
#include "projstab/mesh.hpp"

namespace projstab {

// Vertex -> incident elements, each with the vertex's local index, in the
// canonical element order.
struct MeshAdjacency {
    std::vector<index_t> ptr;    // per vertex offsets into elem/local
    std::vector<index_t> elem;
    std::vector<std::uint8_t> local;
};

MeshAdjacency build_adjacency(const TriangleMesh& mesh);

struct OperatorSet {
    const TriangleMesh* mesh = nullptr;
    MeshAdjacency adjacency;

    CsrMatrix mass_scalar;        // M_s on all vertices; SPD, entries sum to |Omega|
    CsrMatrix stiffness_scalar;   // A_s on all vertices; also the pressure
                                  // Laplacian (no boundary reduction)
    CsrMatrix mass_interior;      // M_s reduced to interior vertices
    CsrMatrix stiffness_interior;
    CsrMatrix velocity_mass;      // block-diagonal x2 of the interior operators
    CsrMatrix velocity_stiffness;
    CsrMatrix divergence;         // D: (div u_h, psi), pressure rows x reduced
                                  // velocity cols
    CsrMatrix gradient;           // G: (grad q_h, chi), reduced velocity rows x
                                  // pressure cols; equals -D^T discretely
    std::vector<double> lumped_mass;  // row sums of M_s

    std::vector<index_t> interior_of_vertex;  // -1 for boundary vertices
    std::vector<index_t> vertex_of_interior;

    index_t interior_count() const { return static_cast<index_t>(vertex_of_interior.size()); }
    index_t velocity_dofs() const { return 2 * interior_count(); }

    const CsrMatrix& pressure_stiffness() const { return stiffness_scalar; }
};

OperatorSet assemble_operators(const TriangleMesh& mesh);

// Matrix of the frozen-advection form z -> B(w, z) = w.grad(z) + (div w)z/2
// over the full vector P1 basis, component-major. Skew-symmetric on fields
// with zero boundary values.
CsrMatrix assemble_convection(const TriangleMesh& mesh, const VectorFieldP1& w);

// Scalar block of the convection matrix; assemble_convection is its 2x2
// block-diagonal replication.
CsrMatrix assemble_convection_scalar(const TriangleMesh& mesh, const VectorFieldP1& w);

// Dirichlet elimination and its inverse embedding (zeros at boundary dofs).
std::vector<double> reduce_velocity(const OperatorSet& ops, const VectorFieldP1& v);
VectorFieldP1 embed_velocity(const OperatorSet& ops, std::span<const double> reduced);
CsrMatrix reduce_scalar_matrix(const CsrMatrix& full, const OperatorSet& ops);

// Load vector of a closed-form function against the scalar P1 basis, degree-4
// quadrature; full vertex indexing.
std::vector<double> assemble_scalar_load(const TriangleMesh& mesh, const MeshAdjacency& adj,
                                         const std::function<double(double, double)>& f);

// Same for a vector-valued forcing; returns component-major [fx; fy] on all
// vertices.
std::vector<double> assemble_vector_load(
    const TriangleMesh& mesh, const MeshAdjacency& adj,
    const std::function<void(double, double, double*)>& f);

// Closed-form fields for error measurement.
struct ExactScalar {
    std::function<double(double, double)> value;
    std::function<std::array<double, 2>(double, double)> gradient;
};
struct ExactVector {
    std::function<std::array<double, 2>(double, double)> value;
    std::function<std::array<double, 4>(double, double)> gradient;  // row-major d u_i / d x_j
};

struct NormPair {
    double l2 = 0.0;
    double h1_semi = 0.0;
};

// L2 and H1-seminorm errors against a closed-form exact field, 6-point
// (degree-4) Gauss quadrature per triangle.
NormPair error_norms(const ScalarFieldP1& field, const ExactScalar& exact);
NormPair error_norms(const VectorFieldP1& field, const ExactVector& exact);

// Quadrature rules on the reference triangle in barycentric coordinates.
struct TriQuadratureRule {
    int points;
    const double (*bary)[3];
    const double* weights;  // sum to 1; integral = area * sum w_q f(x_q)
};
const TriQuadratureRule& quadrature_degree2();  // 3-point midpoint rule
const TriQuadratureRule& quadrature_degree4();  // 6-point rule

} // namespace projstab
