#include "projstab/fem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "projstab/kernels.hpp"

namespace projstab {

namespace {

const double kMidpointBary[3][3] = {
    {0.5, 0.5, 0.0},
    {0.0, 0.5, 0.5},
    {0.5, 0.0, 0.5},
};
const double kMidpointWeights[3] = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};

// 6-point rule, exact through degree 4.
const double kSixPointBary[6][3] = {
    {0.108103018168070, 0.445948490915965, 0.445948490915965},
    {0.445948490915965, 0.108103018168070, 0.445948490915965},
    {0.445948490915965, 0.445948490915965, 0.108103018168070},
    {0.816847572980459, 0.091576213509771, 0.091576213509771},
    {0.091576213509771, 0.816847572980459, 0.091576213509771},
    {0.091576213509771, 0.091576213509771, 0.816847572980459},
};
const double kSixPointWeights[6] = {
    0.223381589678011, 0.223381589678011, 0.223381589678011,
    0.109951743655322, 0.109951743655322, 0.109951743655322,
};

// Canonical element ordering key: the sorted vertex triple. Conforming meshes
// never repeat a triple, so this is a strict total order independent of the
// position of the triangle in the mesh's list.
std::array<index_t, 3> sorted_triple(const std::array<index_t, 3>& tri) {
    std::array<index_t, 3> s = tri;
    std::sort(s.begin(), s.end());
    return s;
}

} // namespace

const TriQuadratureRule& quadrature_degree2() {
    static const TriQuadratureRule rule{3, kMidpointBary, kMidpointWeights};
    return rule;
}

const TriQuadratureRule& quadrature_degree4() {
    static const TriQuadratureRule rule{6, kSixPointBary, kSixPointWeights};
    return rule;
}

MeshAdjacency build_adjacency(const TriangleMesh& mesh) {
    const index_t nv = mesh.vertex_count();
    const index_t nt = mesh.triangle_count();

    std::vector<index_t> order(nt);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](index_t a, index_t b) {
        return sorted_triple(mesh.triangles[a]) < sorted_triple(mesh.triangles[b]);
    });

    MeshAdjacency adj;
    adj.ptr.assign(static_cast<std::size_t>(nv) + 1, 0);
    for (const auto& tri : mesh.triangles)
        for (index_t v : tri) adj.ptr[v + 1]++;
    for (index_t v = 0; v < nv; ++v) adj.ptr[v + 1] += adj.ptr[v];

    adj.elem.resize(static_cast<std::size_t>(3) * nt);
    adj.local.resize(static_cast<std::size_t>(3) * nt);
    std::vector<index_t> cursor(adj.ptr.begin(), adj.ptr.end() - 1);
    for (index_t e : order) {
        const auto& tri = mesh.triangles[e];
        for (std::uint8_t lv = 0; lv < 3; ++lv) {
            const index_t pos = cursor[tri[lv]]++;
            adj.elem[pos] = e;
            adj.local[pos] = lv;
        }
    }
    return adj;
}

namespace {

// Assembles a scalar vertex-by-vertex operator from a per-element 3x3 kernel.
// Rows run in parallel; each row sums its incident elements in the canonical
// adjacency order.
template <class ElementKernel>
CsrMatrix assemble_scalar_operator(const TriangleMesh& mesh, const MeshAdjacency& adj,
                                   ElementKernel&& kernel) {
    const index_t nv = mesh.vertex_count();

    std::vector<std::vector<index_t>> row_cols(nv);
    for (index_t v = 0; v < nv; ++v) {
        auto& cols = row_cols[v];
        for (index_t k = adj.ptr[v]; k < adj.ptr[v + 1]; ++k)
            for (index_t u : mesh.triangles[adj.elem[k]]) cols.push_back(u);
        std::sort(cols.begin(), cols.end());
        cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    }
    CsrMatrix m = csr_from_pattern(nv, nv, row_cols);

    // Local matrices once per element, then a deterministic gather per row.
    const index_t nt = mesh.triangle_count();
    std::vector<std::array<double, 9>> local(nt);
#pragma omp parallel for schedule(static) num_threads(kernels::num_threads())
    for (index_t e = 0; e < nt; ++e) kernel(e, local[e]);

#pragma omp parallel for schedule(static) num_threads(kernels::num_threads())
    for (index_t v = 0; v < nv; ++v) {
        for (index_t k = adj.ptr[v]; k < adj.ptr[v + 1]; ++k) {
            const index_t e = adj.elem[k];
            const int lv = adj.local[k];
            const auto& tri = mesh.triangles[e];
            for (int lj = 0; lj < 3; ++lj) {
                const index_t col = tri[lj];
                const auto begin = m.col_idx.begin() + m.row_ptr[v];
                const auto end = m.col_idx.begin() + m.row_ptr[v + 1];
                const auto it = std::lower_bound(begin, end, col);
                m.values[static_cast<std::size_t>(it - m.col_idx.begin())] +=
                    local[e][static_cast<std::size_t>(3 * lv + lj)];
            }
        }
    }
    return m;
}

void element_mass(const TriangleMesh& mesh, index_t e, std::array<double, 9>& out) {
    const double a12 = mesh.element_areas[e] / 12.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) out[static_cast<std::size_t>(3 * i + j)] = a12 * (i == j ? 2.0 : 1.0);
}

void element_stiffness(const TriangleMesh& mesh, index_t e, std::array<double, 9>& out) {
    const TriangleGeometry g = triangle_geometry(mesh, e);
    const double f = 1.0 / (4.0 * g.area);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            out[static_cast<std::size_t>(3 * i + j)] = f * (g.b[i] * g.b[j] + g.c[i] * g.c[j]);
}

} // namespace

OperatorSet assemble_operators(const TriangleMesh& mesh) {
    OperatorSet ops;
    ops.mesh = &mesh;
    ops.adjacency = build_adjacency(mesh);

    ops.mass_scalar = assemble_scalar_operator(
        mesh, ops.adjacency,
        [&](index_t e, std::array<double, 9>& out) { element_mass(mesh, e, out); });
    ops.stiffness_scalar = assemble_scalar_operator(
        mesh, ops.adjacency,
        [&](index_t e, std::array<double, 9>& out) { element_stiffness(mesh, e, out); });

    const index_t nv = mesh.vertex_count();
    ops.lumped_mass.assign(nv, 0.0);
    for (index_t v = 0; v < nv; ++v)
        for (index_t k = ops.mass_scalar.row_ptr[v]; k < ops.mass_scalar.row_ptr[v + 1]; ++k)
            ops.lumped_mass[v] += ops.mass_scalar.values[k];

    ops.interior_of_vertex.assign(nv, -1);
    for (index_t v = 0; v < nv; ++v) {
        if (!mesh.boundary_flag[v]) {
            ops.interior_of_vertex[v] = static_cast<index_t>(ops.vertex_of_interior.size());
            ops.vertex_of_interior.push_back(v);
        }
    }

    ops.mass_interior = reduce_scalar_matrix(ops.mass_scalar, ops);
    ops.stiffness_interior = reduce_scalar_matrix(ops.stiffness_scalar, ops);
    ops.velocity_mass = csr_block_diag2(ops.mass_interior);
    ops.velocity_stiffness = csr_block_diag2(ops.stiffness_interior);

    const index_t ni = ops.interior_count();

    // Divergence D: pressure rows, reduced velocity columns. Per element the
    // contribution of velocity vertex j (x component) to every pressure row of
    // that element is b_j/6; y component c_j/6.
    {
        std::vector<std::vector<index_t>> row_cols(nv);
        for (index_t v = 0; v < nv; ++v) {
            auto& cols = row_cols[v];
            for (index_t k = ops.adjacency.ptr[v]; k < ops.adjacency.ptr[v + 1]; ++k)
                for (index_t u : mesh.triangles[ops.adjacency.elem[k]]) {
                    const index_t iu = ops.interior_of_vertex[u];
                    if (iu >= 0) {
                        cols.push_back(iu);
                        cols.push_back(iu + ni);
                    }
                }
            std::sort(cols.begin(), cols.end());
            cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
        }
        CsrMatrix d = csr_from_pattern(nv, 2 * ni, row_cols);
#pragma omp parallel for schedule(static) num_threads(kernels::num_threads())
        for (index_t v = 0; v < nv; ++v) {
            for (index_t k = ops.adjacency.ptr[v]; k < ops.adjacency.ptr[v + 1]; ++k) {
                const index_t e = ops.adjacency.elem[k];
                const TriangleGeometry g = triangle_geometry(mesh, e);
                const auto& tri = mesh.triangles[e];
                for (int lj = 0; lj < 3; ++lj) {
                    const index_t iu = ops.interior_of_vertex[tri[lj]];
                    if (iu < 0) continue;
                    const auto begin = d.col_idx.begin() + d.row_ptr[v];
                    const auto end = d.col_idx.begin() + d.row_ptr[v + 1];
                    auto it = std::lower_bound(begin, end, iu);
                    d.values[static_cast<std::size_t>(it - d.col_idx.begin())] += g.b[lj] / 6.0;
                    it = std::lower_bound(begin, end, iu + ni);
                    d.values[static_cast<std::size_t>(it - d.col_idx.begin())] += g.c[lj] / 6.0;
                }
            }
        }
        ops.divergence = std::move(d);
    }

    // Gradient G: reduced velocity rows, pressure columns. Per element the
    // contribution of pressure vertex j to every velocity row (x component)
    // is b_j/6; y component c_j/6.
    {
        std::vector<std::vector<index_t>> row_cols(2 * ni);
        for (index_t iu = 0; iu < ni; ++iu) {
            const index_t v = ops.vertex_of_interior[iu];
            std::vector<index_t> cols;
            for (index_t k = ops.adjacency.ptr[v]; k < ops.adjacency.ptr[v + 1]; ++k)
                for (index_t u : mesh.triangles[ops.adjacency.elem[k]]) cols.push_back(u);
            std::sort(cols.begin(), cols.end());
            cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
            row_cols[iu] = cols;
            row_cols[iu + ni] = std::move(cols);
        }
        CsrMatrix grad = csr_from_pattern(2 * ni, nv, row_cols);
#pragma omp parallel for schedule(static) num_threads(kernels::num_threads())
        for (index_t iu = 0; iu < ni; ++iu) {
            const index_t v = ops.vertex_of_interior[iu];
            for (index_t k = ops.adjacency.ptr[v]; k < ops.adjacency.ptr[v + 1]; ++k) {
                const index_t e = ops.adjacency.elem[k];
                const TriangleGeometry g = triangle_geometry(mesh, e);
                const auto& tri = mesh.triangles[e];
                for (int lj = 0; lj < 3; ++lj) {
                    const index_t col = tri[lj];
                    const auto begin = grad.col_idx.begin() + grad.row_ptr[iu];
                    const auto end = grad.col_idx.begin() + grad.row_ptr[iu + 1];
                    const auto it = std::lower_bound(begin, end, col);
                    const std::size_t slot = static_cast<std::size_t>(it - grad.col_idx.begin());
                    const std::size_t stride =
                        static_cast<std::size_t>(grad.row_ptr[iu + ni] - grad.row_ptr[iu]);
                    grad.values[slot] += g.b[lj] / 6.0;
                    grad.values[slot + static_cast<std::size_t>(grad.row_ptr[iu + ni]) -
                                static_cast<std::size_t>(grad.row_ptr[iu])] += g.c[lj] / 6.0;
                    (void)stride;
                }
            }
        }
        ops.gradient = std::move(grad);
    }

    return ops;
}

CsrMatrix assemble_convection_scalar(const TriangleMesh& mesh, const VectorFieldP1& w) {
    if (w.mesh != &mesh)
        throw std::invalid_argument("assemble_convection: field built on another mesh");
    const MeshAdjacency adj = build_adjacency(mesh);
    return assemble_scalar_operator(mesh, adj, [&](index_t e, std::array<double, 9>& out) {
        const TriangleGeometry g = triangle_geometry(mesh, e);
        const auto& tri = mesh.triangles[e];
        const double inv2a = 1.0 / (2.0 * g.area);
        double div_w = 0.0;
        for (int k = 0; k < 3; ++k)
            div_w += (w.x[tri[k]] * g.b[k] + w.y[tri[k]] * g.c[k]) * inv2a;
        const double a12 = g.area / 12.0;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                // (w . grad phi_j, phi_i): w.grad(phi_j) is linear, pair it
                // with phi_i through the element mass matrix.
                double advect = 0.0;
                for (int k = 0; k < 3; ++k) {
                    const double w_dot_gradj =
                        (w.x[tri[k]] * g.b[j] + w.y[tri[k]] * g.c[j]) * inv2a;
                    advect += w_dot_gradj * a12 * (i == k ? 2.0 : 1.0);
                }
                const double reaction = 0.5 * div_w * a12 * (i == j ? 2.0 : 1.0);
                out[static_cast<std::size_t>(3 * i + j)] = advect + reaction;
            }
        }
    });
}

CsrMatrix assemble_convection(const TriangleMesh& mesh, const VectorFieldP1& w) {
    return csr_block_diag2(assemble_convection_scalar(mesh, w));
}

std::vector<double> reduce_velocity(const OperatorSet& ops, const VectorFieldP1& v) {
    const index_t ni = ops.interior_count();
    std::vector<double> out(static_cast<std::size_t>(2) * ni);
    for (index_t i = 0; i < ni; ++i) {
        const index_t vtx = ops.vertex_of_interior[i];
        out[i] = v.x[vtx];
        out[i + ni] = v.y[vtx];
    }
    return out;
}

VectorFieldP1 embed_velocity(const OperatorSet& ops, std::span<const double> reduced) {
    VectorFieldP1 v(*ops.mesh);
    const index_t ni = ops.interior_count();
    for (index_t i = 0; i < ni; ++i) {
        const index_t vtx = ops.vertex_of_interior[i];
        v.x[vtx] = reduced[i];
        v.y[vtx] = reduced[i + ni];
    }
    return v;
}

CsrMatrix reduce_scalar_matrix(const CsrMatrix& full, const OperatorSet& ops) {
    const index_t ni = ops.interior_count();
    CsrMatrix r;
    r.n_rows = ni;
    r.n_cols = ni;
    r.row_ptr.reserve(static_cast<std::size_t>(ni) + 1);
    r.row_ptr.push_back(0);
    for (index_t i = 0; i < ni; ++i) {
        const index_t v = ops.vertex_of_interior[i];
        for (index_t k = full.row_ptr[v]; k < full.row_ptr[v + 1]; ++k) {
            const index_t ic = ops.interior_of_vertex[full.col_idx[k]];
            if (ic >= 0) {
                r.col_idx.push_back(ic);
                r.values.push_back(full.values[k]);
            }
        }
        r.row_ptr.push_back(static_cast<index_t>(r.col_idx.size()));
    }
    return r;
}

namespace {

template <class PointContribution>
std::vector<double> quadrature_load(const TriangleMesh& mesh, const MeshAdjacency& adj,
                                    int components, PointContribution&& point_values) {
    const TriQuadratureRule& rule = quadrature_degree4();
    const index_t nt = mesh.triangle_count();
    const index_t nv = mesh.vertex_count();

    // Per-element nodal contributions, then a deterministic gather.
    std::vector<double> elem_contrib(static_cast<std::size_t>(nt) * 3 * components, 0.0);
#pragma omp parallel for schedule(static) num_threads(kernels::num_threads())
    for (index_t e = 0; e < nt; ++e) {
        const auto& tri = mesh.triangles[e];
        const Vertex& p0 = mesh.vertices[tri[0]];
        const Vertex& p1 = mesh.vertices[tri[1]];
        const Vertex& p2 = mesh.vertices[tri[2]];
        double* out = &elem_contrib[static_cast<std::size_t>(e) * 3 * components];
        double fv[2];
        for (int q = 0; q < rule.points; ++q) {
            const double l0 = rule.bary[q][0], l1 = rule.bary[q][1], l2 = rule.bary[q][2];
            const double x = l0 * p0.x + l1 * p1.x + l2 * p2.x;
            const double y = l0 * p0.y + l1 * p1.y + l2 * p2.y;
            point_values(x, y, fv);
            const double wq = mesh.element_areas[e] * rule.weights[q];
            const double lam[3] = {l0, l1, l2};
            for (int lv = 0; lv < 3; ++lv)
                for (int c = 0; c < components; ++c)
                    out[lv * components + c] += wq * lam[lv] * fv[c];
        }
    }

    std::vector<double> load(static_cast<std::size_t>(nv) * components, 0.0);
#pragma omp parallel for schedule(static) num_threads(kernels::num_threads())
    for (index_t v = 0; v < nv; ++v) {
        for (index_t k = adj.ptr[v]; k < adj.ptr[v + 1]; ++k) {
            const index_t e = adj.elem[k];
            const int lv = adj.local[k];
            for (int c = 0; c < components; ++c)
                load[static_cast<std::size_t>(c) * nv + v] +=
                    elem_contrib[(static_cast<std::size_t>(e) * 3 + lv) * components + c];
        }
    }
    return load;
}

} // namespace

std::vector<double> assemble_scalar_load(const TriangleMesh& mesh, const MeshAdjacency& adj,
                                         const std::function<double(double, double)>& f) {
    return quadrature_load(mesh, adj, 1,
                           [&](double x, double y, double* out) { out[0] = f(x, y); });
}

std::vector<double> assemble_vector_load(
    const TriangleMesh& mesh, const MeshAdjacency& adj,
    const std::function<void(double, double, double*)>& f) {
    return quadrature_load(mesh, adj, 2,
                           [&](double x, double y, double* out) { f(x, y, out); });
}

namespace {

struct QuadraturePoint {
    double x, y;
    double lam[3];
    double weight;  // already scaled by element area
};

template <class PerPoint>
NormPair integrate_error(const TriangleMesh& mesh, PerPoint&& per_point) {
    const TriQuadratureRule& rule = quadrature_degree4();
    const index_t nt = mesh.triangle_count();
    const std::size_t total = static_cast<std::size_t>(nt) * rule.points;

    const double l2 = kernels::blocked_sum(total, [&](std::size_t idx) {
        const index_t e = static_cast<index_t>(idx / rule.points);
        const int q = static_cast<int>(idx % rule.points);
        return per_point(e, q, false);
    });
    const double h1 = kernels::blocked_sum(total, [&](std::size_t idx) {
        const index_t e = static_cast<index_t>(idx / rule.points);
        const int q = static_cast<int>(idx % rule.points);
        return per_point(e, q, true);
    });
    return {std::sqrt(l2), std::sqrt(h1)};
}

QuadraturePoint quad_point(const TriangleMesh& mesh, index_t e, int q) {
    const TriQuadratureRule& rule = quadrature_degree4();
    const auto& tri = mesh.triangles[e];
    QuadraturePoint p;
    p.lam[0] = rule.bary[q][0];
    p.lam[1] = rule.bary[q][1];
    p.lam[2] = rule.bary[q][2];
    p.x = p.lam[0] * mesh.vertices[tri[0]].x + p.lam[1] * mesh.vertices[tri[1]].x +
          p.lam[2] * mesh.vertices[tri[2]].x;
    p.y = p.lam[0] * mesh.vertices[tri[0]].y + p.lam[1] * mesh.vertices[tri[1]].y +
          p.lam[2] * mesh.vertices[tri[2]].y;
    p.weight = mesh.element_areas[e] * rule.weights[q];
    return p;
}

} // namespace

NormPair error_norms(const ScalarFieldP1& field, const ExactScalar& exact) {
    const TriangleMesh& mesh = *field.mesh;
    return integrate_error(mesh, [&](index_t e, int q, bool grad) {
        const QuadraturePoint p = quad_point(mesh, e, q);
        const auto& tri = mesh.triangles[e];
        if (!grad) {
            double vh = 0.0;
            for (int k = 0; k < 3; ++k) vh += p.lam[k] * field.values[tri[k]];
            const double d = vh - exact.value(p.x, p.y);
            return p.weight * d * d;
        }
        const TriangleGeometry g = triangle_geometry(mesh, e);
        const double inv2a = 1.0 / (2.0 * g.area);
        double gx = 0.0, gy = 0.0;
        for (int k = 0; k < 3; ++k) {
            gx += field.values[tri[k]] * g.b[k] * inv2a;
            gy += field.values[tri[k]] * g.c[k] * inv2a;
        }
        const auto eg = exact.gradient(p.x, p.y);
        const double dx = gx - eg[0], dy = gy - eg[1];
        return p.weight * (dx * dx + dy * dy);
    });
}

NormPair error_norms(const VectorFieldP1& field, const ExactVector& exact) {
    const TriangleMesh& mesh = *field.mesh;
    return integrate_error(mesh, [&](index_t e, int q, bool grad) {
        const QuadraturePoint p = quad_point(mesh, e, q);
        const auto& tri = mesh.triangles[e];
        if (!grad) {
            double vx = 0.0, vy = 0.0;
            for (int k = 0; k < 3; ++k) {
                vx += p.lam[k] * field.x[tri[k]];
                vy += p.lam[k] * field.y[tri[k]];
            }
            const auto ev = exact.value(p.x, p.y);
            const double dx = vx - ev[0], dy = vy - ev[1];
            return p.weight * (dx * dx + dy * dy);
        }
        const TriangleGeometry g = triangle_geometry(mesh, e);
        const double inv2a = 1.0 / (2.0 * g.area);
        double gh[4] = {0.0, 0.0, 0.0, 0.0};  // du_x/dx, du_x/dy, du_y/dx, du_y/dy
        for (int k = 0; k < 3; ++k) {
            gh[0] += field.x[tri[k]] * g.b[k] * inv2a;
            gh[1] += field.x[tri[k]] * g.c[k] * inv2a;
            gh[2] += field.y[tri[k]] * g.b[k] * inv2a;
            gh[3] += field.y[tri[k]] * g.c[k] * inv2a;
        }
        const auto eg = exact.gradient(p.x, p.y);
        double s = 0.0;
        for (int k = 0; k < 4; ++k) {
            const double d = gh[k] - eg[k];
            s += d * d;
        }
        return p.weight * s;
    });
}

} // namespace projstab
