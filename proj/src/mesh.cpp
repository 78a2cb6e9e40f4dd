#include "projstab/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

namespace projstab {

namespace {

double edge_length(const Vertex& a, const Vertex& b) {
    return std::hypot(b.x - a.x, b.y - a.y);
}

double triangle_diameter(const TriangleMesh& m, index_t t) {
    const auto& tri = m.triangles[t];
    double d = 0.0;
    for (int e = 0; e < 3; ++e)
        d = std::max(d, edge_length(m.vertices[tri[e]], m.vertices[tri[(e + 1) % 3]]));
    return d;
}

double signed_area(const Vertex& a, const Vertex& b, const Vertex& c) {
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

} // namespace

TriangleMesh build_structured_mesh(index_t n) {
    if (n < 1) throw std::invalid_argument("build_structured_mesh: n must be >= 1");

    TriangleMesh m;
    const index_t nv = (n + 1) * (n + 1);
    m.vertices.reserve(nv);
    m.boundary_flag.reserve(nv);
    for (index_t j = 0; j <= n; ++j) {
        for (index_t i = 0; i <= n; ++i) {
            m.vertices.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
            m.boundary_flag.push_back(i == 0 || i == n || j == 0 || j == n);
        }
    }
    m.n_interior = (n - 1) * (n - 1);

    const auto vid = [n](index_t i, index_t j) { return j * (n + 1) + i; };
    m.triangles.reserve(static_cast<std::size_t>(2) * n * n);
    for (index_t j = 0; j < n; ++j) {
        for (index_t i = 0; i < n; ++i) {
            const index_t a = vid(i, j), b = vid(i + 1, j);
            const index_t c = vid(i + 1, j + 1), d = vid(i, j + 1);
            m.triangles.push_back({a, b, c});
            m.triangles.push_back({a, c, d});
        }
    }

    m.element_areas.resize(m.triangles.size());
    double h = 0.0, min_diam = std::numeric_limits<double>::max();
    for (index_t t = 0; t < m.triangle_count(); ++t) {
        const auto& tri = m.triangles[t];
        m.element_areas[t] =
            signed_area(m.vertices[tri[0]], m.vertices[tri[1]], m.vertices[tri[2]]);
        const double d = triangle_diameter(m, t);
        h = std::max(h, d);
        min_diam = std::min(min_diam, d);
    }
    m.h = h;
    m.quasi_uniformity = h / min_diam;
    return m;
}

double mesh_diameter(const TriangleMesh& mesh) {
    double d = 0.0;
    for (index_t t = 0; t < mesh.triangle_count(); ++t)
        d = std::max(d, triangle_diameter(mesh, t));
    return d;
}

void TriangleMesh::validate() const {
    double total = 0.0;
    for (index_t t = 0; t < triangle_count(); ++t) {
        const auto& tri = triangles[t];
        const double a = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
        if (a <= 0.0) throw std::runtime_error("mesh: non-positive or misoriented element");
        if (std::abs(a - element_areas[t]) > 1e-15)
            throw std::runtime_error("mesh: stale element area");
        total += a;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::runtime_error("mesh: element areas do not sum to 1");

    // Conformity: each undirected edge belongs to at most two triangles, and
    // single-triangle edges must lie on the boundary.
    std::map<std::pair<index_t, index_t>, int> edge_count;
    for (const auto& tri : triangles) {
        for (int e = 0; e < 3; ++e) {
            index_t u = tri[e], v = tri[(e + 1) % 3];
            if (u > v) std::swap(u, v);
            edge_count[{u, v}]++;
        }
    }
    for (const auto& [edge, count] : edge_count) {
        if (count > 2) throw std::runtime_error("mesh: non-conforming edge");
        if (count == 1 && !(boundary_flag[edge.first] && boundary_flag[edge.second]))
            throw std::runtime_error("mesh: boundary edge with interior vertex");
    }

    index_t interior = 0;
    for (bool f : boundary_flag)
        if (!f) ++interior;
    if (interior != n_interior)
        throw std::runtime_error("mesh: interior vertex count mismatch");
}

void write_mesh_dump(const TriangleMesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open mesh dump file: " + path);
    out.precision(17);
    for (index_t v = 0; v < mesh.vertex_count(); ++v)
        out << "v " << mesh.vertices[v].x << ' ' << mesh.vertices[v].y << ' '
            << (mesh.boundary_flag[v] ? 1 : 0) << '\n';
    for (const auto& tri : mesh.triangles)
        out << "t " << tri[0] << ' ' << tri[1] << ' ' << tri[2] << '\n';
}

TriangleGeometry triangle_geometry(const TriangleMesh& mesh, index_t t) {
    const auto& tri = mesh.triangles[t];
    const Vertex& p0 = mesh.vertices[tri[0]];
    const Vertex& p1 = mesh.vertices[tri[1]];
    const Vertex& p2 = mesh.vertices[tri[2]];
    TriangleGeometry g;
    g.area = mesh.element_areas[t];
    g.b = {p1.y - p2.y, p2.y - p0.y, p0.y - p1.y};
    g.c = {p2.x - p1.x, p0.x - p2.x, p1.x - p0.x};
    return g;
}

} // namespace projstab
