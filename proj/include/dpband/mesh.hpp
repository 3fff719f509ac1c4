#pragma once

// Interface-conforming triangulation of the period cell.
//
// A structured grid of nx-by-ny rectangular cells covers Y = (0,d) x
// (-1/2,1/2); every cell is split into two triangles along one diagonal.
// The trap polygon is snapped to grid nodes and its edges must follow grid
// segments: horizontal or vertical runs, or unit diagonal steps.  Cells
// crossed by an anti-diagonal run get their split diagonal flipped so the
// polygon boundary is a union of triangle edges.  Axis-aligned rectangles
// whose sides sit on grid lines are therefore represented exactly.
//
// Every node on the interface carries two copies: the original grid node is
// the exterior copy (used by outside triangles), an appended node at the
// same coordinates is the interior copy (used by inside triangles).  A
// function in the resulting P1 space may jump across the interface, which
// is exactly the broken space the jump form acts on.
//
// Top and bottom lid nodes share the same x grid, so the quasi-periodic
// coupling is a pure node pairing.

#include "dpband/geometry.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <ostream>
#include <unordered_map>
#include <vector>

namespace dpband {

class MeshError : public std::runtime_error {
public:
    enum class Kind { RefineOrFail, InvalidGeometry, Internal };
    MeshError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
    Kind kind;
};

struct Triangle {
    std::array<int, 3> v{};  // CCW vertex indices
    bool inside = false;     // true: triangle lies in the trap B
};

struct InterfacePair {
    int exterior = -1;
    int interior = -1;
};

struct InterfaceEdge {
    int ext_a = -1, ext_b = -1;  // exterior-side edge
    int int_a = -1, int_b = -1;  // interior-side edge, same coordinates
    double length = 0.0;
};

struct LidPair {
    int bottom = -1;  // node on y = -1/2
    int top = -1;     // node on y = +1/2, same x
};

struct GridIndex {
    int i = 0, j = 0;
};

// Everything needed to rebuild the mesh at doubled resolution, so nested
// refinement reproduces coarse vertex coordinates bit-for-bit.
struct GridSpec {
    int nx = 0, ny = 0;
    double d = 1.0;
    std::vector<GridIndex> poly;  // snapped trap polygon, CCW, index coords
    bool chord = false;           // straight interface along j = ny/2
    int margin_cells = 1;
    bool refinable = true;        // scaled copies cannot be rebuilt
};

struct MeshedCell {
    std::vector<Vec2> vertices;
    std::vector<Triangle> triangles;
    std::vector<InterfacePair> interface_pairs;
    std::vector<InterfaceEdge> interface_edges;
    std::vector<LidPair> lid_pairs;
    double h = 0.0;  // realized edge length max(hx, hy)
    int base_vertex_count = 0;
    GridSpec grid;

    int vertex_count() const { return static_cast<int>(vertices.size()); }
    double triangle_area(const Triangle& t) const {
        const Vec2& a = vertices[t.v[0]];
        const Vec2& b = vertices[t.v[1]];
        const Vec2& c = vertices[t.v[2]];
        return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
    }
};

namespace detail {

inline int sgn(int v) { return (v > 0) - (v < 0); }

// Exact point-in-polygon for integer coordinates (crossing test).  The query
// point is never on the boundary: it is a triangle centroid scaled by 3 and
// the boundary is a union of triangle edges.
inline bool point_in_ipoly(std::int64_t px, std::int64_t py, const std::vector<GridIndex>& poly) {
    bool inside = false;
    const std::size_t n = poly.size();
    for (std::size_t k = 0; k < n; ++k) {
        const std::int64_t ax = 3LL * poly[k].i, ay = 3LL * poly[k].j;
        const std::int64_t bx = 3LL * poly[(k + 1) % n].i, by = 3LL * poly[(k + 1) % n].j;
        if ((ay > py) == (by > py)) continue;
        const std::int64_t lhs = (px - ax) * (by - ay);
        const std::int64_t rhs = (py - ay) * (bx - ax);
        const bool crosses = (by > ay) ? (lhs < rhs) : (lhs > rhs);
        if (crosses) inside = !inside;
    }
    return inside;
}

inline std::int64_t icross(GridIndex o, GridIndex a, GridIndex b) {
    return static_cast<std::int64_t>(a.i - o.i) * (b.j - o.j) -
           static_cast<std::int64_t>(a.j - o.j) * (b.i - o.i);
}

inline bool ion_segment(GridIndex a, GridIndex b, GridIndex p) {
    return std::min(a.i, b.i) <= p.i && p.i <= std::max(a.i, b.i) &&
           std::min(a.j, b.j) <= p.j && p.j <= std::max(a.j, b.j);
}

inline bool isegments_intersect(GridIndex a, GridIndex b, GridIndex c, GridIndex d) {
    const auto d1 = icross(c, d, a), d2 = icross(c, d, b);
    const auto d3 = icross(a, b, c), d4 = icross(a, b, d);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
        ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
        return true;
    if (d1 == 0 && ion_segment(c, d, a)) return true;
    if (d2 == 0 && ion_segment(c, d, b)) return true;
    if (d3 == 0 && ion_segment(a, b, c)) return true;
    if (d4 == 0 && ion_segment(a, b, d)) return true;
    return false;
}

inline void validate_ipoly(const std::vector<GridIndex>& p, int nx, int ny, int margin) {
    const std::size_t n = p.size();
    if (n < 3) throw MeshError(MeshError::Kind::InvalidGeometry, "snapped trap polygon has fewer than 3 vertices");
    for (const GridIndex& v : p) {
        if (v.i < margin || v.i > nx - margin || v.j < margin || v.j > ny - margin)
            throw MeshError(MeshError::Kind::RefineOrFail,
                            "trap too close to the cell boundary for this resolution; refine h or shrink the trap");
    }
    std::int64_t twice_area = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const GridIndex a = p[k], b = p[(k + 1) % n];
        if (a.i == b.i && a.j == b.j)
            throw MeshError(MeshError::Kind::RefineOrFail,
                            "trap polygon edge collapsed under snapping; refine h");
        const int di = b.i - a.i, dj = b.j - a.j;
        if (!(di == 0 || dj == 0 || std::abs(di) == std::abs(dj)))
            throw MeshError(MeshError::Kind::RefineOrFail,
                            "trap polygon edge is not representable on the grid "
                            "(must be horizontal, vertical, or a 45-degree diagonal in index space)");
        twice_area += static_cast<std::int64_t>(a.i) * b.j - static_cast<std::int64_t>(b.i) * a.j;
    }
    if (twice_area <= 0)
        throw MeshError(MeshError::Kind::InvalidGeometry, "snapped trap polygon is not positively oriented");
    for (std::size_t i = 0; i < n; ++i) {
        const GridIndex prev = p[(i + n - 1) % n], cur = p[i], next = p[(i + 1) % n];
        if (icross(cur, prev, next) == 0) {
            const std::int64_t dot = static_cast<std::int64_t>(prev.i - cur.i) * (next.i - cur.i) +
                                     static_cast<std::int64_t>(prev.j - cur.j) * (next.j - cur.j);
            if (dot > 0)
                throw MeshError(MeshError::Kind::InvalidGeometry, "snapped trap polygon folds back on itself");
        }
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
            if (adjacent) continue;
            if (isegments_intersect(p[i], p[(i + 1) % n], p[j], p[(j + 1) % n]))
                throw MeshError(MeshError::Kind::InvalidGeometry,
                                "snapped trap polygon is not simple at this resolution");
        }
    }
}

// Core builder.  Coordinates are single divisions of exact integers so that
// rebuilding at doubled resolution reproduces them bitwise.
inline MeshedCell build_structured(GridSpec spec) {
    const int nx = spec.nx, ny = spec.ny;
    if (nx < 1 || ny < 1) throw MeshError(MeshError::Kind::Internal, "grid must have at least one cell per direction");
    const double d = spec.d;
    const double hx = d / nx, hy = 1.0 / ny;

    MeshedCell mesh;
    mesh.grid = spec;
    mesh.h = std::max(hx, hy);

    const int nvx = nx + 1;
    auto node = [&](int i, int j) { return j * nvx + i; };
    mesh.base_vertex_count = nvx * (ny + 1);
    mesh.vertices.resize(mesh.base_vertex_count);
    for (int j = 0; j <= ny; ++j) {
        const double y = static_cast<double>(2 * j - ny) / (2.0 * ny);
        for (int i = 0; i <= nx; ++i) {
            mesh.vertices[node(i, j)] = {static_cast<double>(i) * d / nx, y};
        }
    }

    // Interface path: ordered node list and unit steps along the boundary.
    std::vector<GridIndex> path_nodes;
    std::vector<std::pair<GridIndex, GridIndex>> path_steps;
    // Cells whose diagonal must be flipped to the anti-diagonal.
    std::map<std::pair<int, int>, bool> diag_flip;  // true: BR-TL diagonal

    auto add_edge_steps = [&](GridIndex a, GridIndex b) {
        const int di = b.i - a.i, dj = b.j - a.j;
        const int steps = std::max(std::abs(di), std::abs(dj));
        const int ui = sgn(di), uj = sgn(dj);
        for (int s = 0; s < steps; ++s) {
            const GridIndex from{a.i + s * ui, a.j + s * uj};
            const GridIndex to{from.i + ui, from.j + uj};
            path_nodes.push_back(from);
            path_steps.emplace_back(from, to);
            if (ui != 0 && uj != 0) {
                const std::pair<int, int> cell{std::min(from.i, to.i), std::min(from.j, to.j)};
                const bool wants_flip = (ui != uj);  // NW/SE steps need the BR-TL diagonal
                auto [it, inserted] = diag_flip.emplace(cell, wants_flip);
                if (!inserted && it->second != wants_flip)
                    throw MeshError(MeshError::Kind::RefineOrFail,
                                    "trap polygon crosses a grid cell with both diagonals; refine h");
            }
        }
    };

    if (spec.chord) {
        if (ny % 2 != 0)
            throw MeshError(MeshError::Kind::RefineOrFail,
                            "straight interface at y=0 needs an even number of rows; adjust h");
        const int jm = ny / 2;
        for (int i = 0; i < nx; ++i) add_edge_steps({i, jm}, {i + 1, jm});
        path_nodes.push_back({nx, jm});  // open curve: include the right endpoint
    } else if (!spec.poly.empty()) {
        validate_ipoly(spec.poly, nx, ny, spec.margin_cells);
        for (std::size_t k = 0; k < spec.poly.size(); ++k)
            add_edge_steps(spec.poly[k], spec.poly[(k + 1) % spec.poly.size()]);
    }

    // Duplicate interface nodes: exterior copy = grid node, interior appended.
    std::unordered_map<int, int> dup;
    dup.reserve(path_nodes.size());
    for (const GridIndex& g : path_nodes) {
        const int ext = node(g.i, g.j);
        if (dup.count(ext)) {
            if (!spec.chord)
                throw MeshError(MeshError::Kind::InvalidGeometry, "interface path visits a node twice");
            continue;
        }
        const int inner = mesh.vertex_count();
        mesh.vertices.push_back(mesh.vertices[ext]);
        dup.emplace(ext, inner);
        mesh.interface_pairs.push_back({ext, inner});
    }

    // For the closed polygon, inside/outside is the exact integer crossing
    // test; for the chord, inside means the lower half y < 0.
    const bool has_interface = !path_steps.empty();
    auto centroid_inside = [&](int i0, int j0, int i1, int j1, int i2, int j2) {
        if (!has_interface) return false;
        const std::int64_t cx = i0 + i1 + i2, cy = static_cast<std::int64_t>(j0) + j1 + j2;
        if (spec.chord) return cy < 3LL * (ny / 2);
        return point_in_ipoly(cx, cy, spec.poly);
    };

    auto remap = [&](int v, bool inside) {
        if (!inside) return v;
        auto it = dup.find(v);
        return it == dup.end() ? v : it->second;
    };

    auto push_triangle = [&](int ai, int aj, int bi, int bj, int ci, int cj) {
        Triangle t;
        t.inside = centroid_inside(ai, aj, bi, bj, ci, cj);
        t.v = {remap(node(ai, aj), t.inside), remap(node(bi, bj), t.inside), remap(node(ci, cj), t.inside)};
        mesh.triangles.push_back(t);
    };

    mesh.triangles.reserve(2 * static_cast<std::size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const auto it = diag_flip.find({i, j});
            const bool flipped = it != diag_flip.end() && it->second;
            if (!flipped) {
                // BL-TR diagonal
                push_triangle(i, j, i + 1, j, i + 1, j + 1);
                push_triangle(i, j, i + 1, j + 1, i, j + 1);
            } else {
                // BR-TL diagonal
                push_triangle(i, j, i + 1, j, i, j + 1);
                push_triangle(i + 1, j, i + 1, j + 1, i, j + 1);
            }
        }
    }

    mesh.interface_edges.reserve(path_steps.size());
    for (const auto& [a, b] : path_steps) {
        InterfaceEdge e;
        e.ext_a = node(a.i, a.j);
        e.ext_b = node(b.i, b.j);
        e.int_a = dup.at(e.ext_a);
        e.int_b = dup.at(e.ext_b);
        const Vec2 pa = mesh.vertices[e.ext_a], pb = mesh.vertices[e.ext_b];
        e.length = std::hypot(pb.x - pa.x, pb.y - pa.y);
        mesh.interface_edges.push_back(e);
    }

    mesh.lid_pairs.reserve(nvx);
    for (int i = 0; i <= nx; ++i) mesh.lid_pairs.push_back({node(i, 0), node(i, ny)});
    return mesh;
}

} // namespace detail

// Conforming triangulation of the unit cell at target edge length h.  The
// trap polygon is snapped to the structured grid; see the header comment for
// what "representable" means.
inline MeshedCell build_cell_mesh(const CellGeometry& geom, double h) {
    geom.validate();
    if (!(h > 0.0)) throw MeshError(MeshError::Kind::InvalidGeometry, "target edge length h must be positive");
    GridSpec spec;
    spec.nx = std::max(1, static_cast<int>(std::lround(geom.d / h)));
    spec.ny = std::max(1, static_cast<int>(std::lround(1.0 / h)));
    spec.d = geom.d;
    if (geom.has_trap()) {
        const double hx = geom.d / spec.nx, hy = 1.0 / spec.ny;
        const double cell = std::min(hx, hy);
        spec.margin_cells = geom.inside_margin > 0.0
                                ? std::max(1, static_cast<int>(std::ceil(geom.inside_margin / cell - 1e-12)))
                                : 1;
        spec.poly.reserve(geom.trap->size());
        for (const Vec2& v : *geom.trap) {
            spec.poly.push_back({static_cast<int>(std::lround(v.x / hx)),
                                 static_cast<int>(std::lround((v.y + 0.5) / hy))});
        }
    }
    return detail::build_structured(std::move(spec));
}

// Full-width interface line at y = 0 used by the separable-oracle checks.
// The lower half plays the role of the interior side.
inline MeshedCell build_straight_interface_mesh(double d, double h) {
    if (!(d > 0.0) || !(h > 0.0))
        throw MeshError(MeshError::Kind::InvalidGeometry, "width and edge length must be positive");
    GridSpec spec;
    spec.nx = std::max(1, static_cast<int>(std::lround(d / h)));
    spec.ny = std::max(2, static_cast<int>(std::lround(1.0 / h)));
    if (spec.ny % 2 != 0) ++spec.ny;
    spec.d = d;
    spec.chord = true;
    return detail::build_structured(std::move(spec));
}

// Nested uniform refinement: every triangle splits in four, h halves, and
// coarse vertex coordinates reappear unchanged.
inline MeshedCell refine(const MeshedCell& mesh) {
    if (!mesh.grid.refinable)
        throw MeshError(MeshError::Kind::Internal, "mesh cannot be refined (derived copy without grid data)");
    GridSpec spec = mesh.grid;
    spec.nx *= 2;
    spec.ny *= 2;
    spec.margin_cells *= 2;
    for (GridIndex& g : spec.poly) {
        g.i *= 2;
        g.j *= 2;
    }
    return detail::build_structured(std::move(spec));
}

// Geometrically scaled copy (vertices and interface lengths multiplied by s).
// Used to assemble on the physical cell; it cannot be refined further.
inline MeshedCell scaled_copy(const MeshedCell& mesh, double s) {
    if (!(s > 0.0)) throw MeshError(MeshError::Kind::InvalidGeometry, "scale factor must be positive");
    MeshedCell out = mesh;
    for (Vec2& v : out.vertices) {
        v.x *= s;
        v.y *= s;
    }
    for (InterfaceEdge& e : out.interface_edges) e.length *= s;
    out.h = mesh.h * s;
    out.grid.refinable = false;
    return out;
}

// Plain-text dump: `v x y`, `t i j k tag`, `ip e i`, `lp b t`.
inline void dump_mesh(const MeshedCell& mesh, std::ostream& os) {
    char buf[96];
    for (const Vec2& v : mesh.vertices) {
        std::snprintf(buf, sizeof(buf), "v %.17g %.17g\n", v.x, v.y);
        os << buf;
    }
    for (const Triangle& t : mesh.triangles) {
        std::snprintf(buf, sizeof(buf), "t %d %d %d %d\n", t.v[0], t.v[1], t.v[2], t.inside ? 1 : 0);
        os << buf;
    }
    for (const InterfacePair& p : mesh.interface_pairs) {
        std::snprintf(buf, sizeof(buf), "ip %d %d\n", p.exterior, p.interior);
        os << buf;
    }
    for (const LidPair& p : mesh.lid_pairs) {
        std::snprintf(buf, sizeof(buf), "lp %d %d\n", p.bottom, p.top);
        os << buf;
    }
}

} // namespace dpband
