#include "dpband/mesh.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>
#include <sstream>

using namespace dpband;
using Catch::Approx;

namespace {

double total_area(const MeshedCell& m, bool inside_only = false) {
    double a = 0.0;
    for (const Triangle& t : m.triangles)
        if (!inside_only || t.inside) a += m.triangle_area(t);
    return a;
}

double interface_length(const MeshedCell& m) {
    double s = 0.0;
    for (const InterfaceEdge& e : m.interface_edges) s += e.length;
    return s;
}

CellGeometry diamond_geometry() {
    CellGeometry g;
    g.trap = Polygon{{0.75, 0.0}, {0.5, 0.25}, {0.25, 0.0}, {0.5, -0.25}};
    return g;
}

// triangles adjacent to a given undirected edge
int edge_use_count(const MeshedCell& m, int a, int b, bool inside) {
    int n = 0;
    for (const Triangle& t : m.triangles) {
        if (t.inside != inside) continue;
        for (int i = 0; i < 3; ++i) {
            const int u = t.v[i], v = t.v[(i + 1) % 3];
            if ((u == a && v == b) || (u == b && v == a)) ++n;
        }
    }
    return n;
}

} // namespace

TEST_CASE("trap-free 2x2 mesh has the expected counts") {
    CellGeometry g;  // no trap
    const MeshedCell m = build_cell_mesh(g, 0.5);
    REQUIRE(m.vertex_count() == 9);
    REQUIRE(m.triangles.size() == 8);
    REQUIRE(m.lid_pairs.size() == 3);
    REQUIRE(m.interface_pairs.empty());
    REQUIRE(m.interface_edges.empty());
    REQUIRE(total_area(m) == Approx(1.0).epsilon(1e-14));
}

TEST_CASE("canonical trap mesh is interface-conforming") {
    const CellGeometry g = canonical_geometry();
    const MeshedCell m = build_cell_mesh(g, 0.25);

    // every trap corner appears as a vertex
    for (const Vec2& corner : *g.trap) {
        bool found = false;
        for (const Vec2& v : m.vertices) found = found || (v.x == corner.x && v.y == corner.y);
        REQUIRE(found);
    }
    REQUIRE(m.interface_pairs.size() == 8);
    REQUIRE(m.interface_edges.size() == 8);
    REQUIRE(total_area(m) == Approx(1.0).epsilon(1e-12));
    REQUIRE(total_area(m, true) == Approx(0.25).epsilon(1e-14));
    REQUIRE(interface_length(m) == Approx(2.0).epsilon(1e-12));

    // duplicated nodes share coordinates; interface edges lie on the boundary
    for (const InterfacePair& p : m.interface_pairs) {
        REQUIRE(m.vertices[p.exterior].x == m.vertices[p.interior].x);
        REQUIRE(m.vertices[p.exterior].y == m.vertices[p.interior].y);
    }
    for (const InterfaceEdge& e : m.interface_edges) {
        for (int node : {e.ext_a, e.ext_b}) {
            const Vec2 v = m.vertices[node];
            const bool on_rect = (v.x == 0.25 || v.x == 0.75) ? (v.y >= -0.25 && v.y <= 0.25)
                                                              : ((v.y == -0.25 || v.y == 0.25) &&
                                                                 v.x >= 0.25 && v.x <= 0.75);
            REQUIRE(on_rect);
        }
        // each geometric segment appears once per side, with distinct copies
        REQUIRE(edge_use_count(m, e.ext_a, e.ext_b, false) == 1);
        REQUIRE(edge_use_count(m, e.int_a, e.int_b, true) == 1);
        REQUIRE(e.ext_a != e.int_a);
        REQUIRE(e.ext_b != e.int_b);
    }
}

TEST_CASE("all triangles are positively oriented and tags are consistent") {
    for (const CellGeometry& g : {canonical_geometry(), diamond_geometry()}) {
        const MeshedCell m = build_cell_mesh(g, 0.125);
        for (const Triangle& t : m.triangles) {
            REQUIRE(m.triangle_area(t) > 0.0);
            // centroid position agrees with the side tag
            const Vec2 a = m.vertices[t.v[0]], b = m.vertices[t.v[1]], c = m.vertices[t.v[2]];
            const Vec2 cen{(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
            bool in = false;
            const Polygon& poly = *g.trap;
            for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
                const Vec2 p = poly[i], q = poly[(i + 1) % n];
                if ((p.y > cen.y) != (q.y > cen.y)) {
                    const double xi = p.x + (cen.y - p.y) * (q.x - p.x) / (q.y - p.y);
                    if (cen.x < xi) in = !in;
                }
            }
            REQUIRE(t.inside == in);
        }
    }
}

TEST_CASE("diagonal trap edges are realized exactly") {
    const CellGeometry g = diamond_geometry();
    const MeshedCell m = build_cell_mesh(g, 0.125);
    REQUIRE(total_area(m, true) == Approx(0.125).epsilon(1e-14));
    REQUIRE(interface_length(m) == Approx(std::sqrt(2.0)).epsilon(1e-12));
    REQUIRE(m.interface_edges.size() == 8);  // four edges of two diagonal steps each
    REQUIRE(total_area(m) == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("nested refinement") {
    CellGeometry free_cell;
    const MeshedCell coarse = build_cell_mesh(free_cell, 0.5);
    const MeshedCell fine = refine(coarse);
    REQUIRE(fine.triangles.size() == 4 * coarse.triangles.size());
    REQUIRE(fine.h == 0.5 * coarse.h);

    const CellGeometry g = canonical_geometry();
    const MeshedCell mc = build_cell_mesh(g, 0.25);
    const MeshedCell mf = refine(mc);
    REQUIRE(mf.interface_edges.size() == 2 * mc.interface_edges.size());
    REQUIRE(mf.interface_pairs.size() == 2 * mc.interface_pairs.size());
    REQUIRE(total_area(mf, true) == Approx(0.25).epsilon(1e-14));

    // coarse vertex coordinates reappear bit-for-bit
    std::set<std::pair<double, double>> fine_coords;
    for (const Vec2& v : mf.vertices) fine_coords.insert({v.x, v.y});
    for (const Vec2& v : mc.vertices) REQUIRE(fine_coords.count({v.x, v.y}) == 1);
}

TEST_CASE("lid pairing is an exact bijection") {
    const CellGeometry g = canonical_geometry();
    const MeshedCell m = build_cell_mesh(g, 0.125);
    std::set<int> bottoms, tops;
    for (const LidPair& p : m.lid_pairs) {
        REQUIRE(m.vertices[p.bottom].y == -0.5);
        REQUIRE(m.vertices[p.top].y == 0.5);
        REQUIRE(m.vertices[p.bottom].x == m.vertices[p.top].x);
        bottoms.insert(p.bottom);
        tops.insert(p.top);
    }
    REQUIRE(bottoms.size() == m.lid_pairs.size());
    REQUIRE(tops.size() == m.lid_pairs.size());
    int bottom_nodes = 0, top_nodes = 0;
    for (const Vec2& v : m.vertices) {
        if (v.y == -0.5) ++bottom_nodes;
        if (v.y == 0.5) ++top_nodes;
    }
    REQUIRE(bottom_nodes == static_cast<int>(m.lid_pairs.size()));
    REQUIRE(top_nodes == static_cast<int>(m.lid_pairs.size()));
}

TEST_CASE("straight-interface mesh duplicates the full chord") {
    const MeshedCell m = build_straight_interface_mesh(1.0, 0.25);
    REQUIRE(m.interface_pairs.size() == 5);
    REQUIRE(m.interface_edges.size() == 4);
    REQUIRE(interface_length(m) == Approx(1.0).epsilon(1e-14));
    for (const Triangle& t : m.triangles) {
        const Vec2 a = m.vertices[t.v[0]], b = m.vertices[t.v[1]], c = m.vertices[t.v[2]];
        const double cy = (a.y + b.y + c.y) / 3.0;
        REQUIRE(t.inside == (cy < 0.0));
    }
}

TEST_CASE("scaled copies shrink coordinates and lengths") {
    const CellGeometry g = canonical_geometry();
    const MeshedCell m = build_cell_mesh(g, 0.25);
    const MeshedCell s = scaled_copy(m, 0.5);
    REQUIRE(s.vertices.size() == m.vertices.size());
    REQUIRE(total_area(s) == Approx(0.25).epsilon(1e-12));
    REQUIRE(interface_length(s) == Approx(1.0).epsilon(1e-12));
    REQUIRE_THROWS_AS(refine(s), MeshError);
}

TEST_CASE("best-effort snapping keeps general polygons meshable") {
    // the hexagon snaps onto grid nodes with representable edges at this h
    CellGeometry g;
    Polygon hex;
    for (int i = 0; i < 6; ++i) {
        const double th = i * std::numbers::pi / 3.0;
        hex.push_back({0.5 + 0.2 * std::cos(th), 0.2 * std::sin(th)});
    }
    g.trap = hex;
    const MeshedCell m = build_cell_mesh(g, 0.125);
    REQUIRE_FALSE(m.interface_edges.empty());
    REQUIRE(total_area(m) == Approx(1.0).epsilon(1e-12));
    for (const Triangle& t : m.triangles) REQUIRE(m.triangle_area(t) > 0.0);
}

TEST_CASE("unbuildable traps are rejected with the right error") {
    CellGeometry g;
    // one edge has slope 4/3 in index space: not representable on the grid
    g.trap = Polygon{{0.25, -0.25}, {0.75, -0.25}, {0.375, 0.25}};
    REQUIRE_THROWS_AS(build_cell_mesh(g, 0.125), MeshError);

    CellGeometry tiny;
    tiny.trap = rect_trap(0.5, 0.0, 0.02, 0.02);
    REQUIRE_THROWS_AS(build_cell_mesh(tiny, 0.125), MeshError);  // collapses under snapping

    CellGeometry close;
    close.trap = rect_trap(0.15, 0.0, 0.25, 0.25);  // 0.025 from the wall
    REQUIRE_THROWS_AS(build_cell_mesh(close, 0.125), MeshError);

    CellGeometry ok = canonical_geometry();
    REQUIRE_THROWS_AS(build_cell_mesh(ok, -0.1), MeshError);
}

TEST_CASE("mesh dump uses the documented line format") {
    const CellGeometry g = canonical_geometry();
    const MeshedCell m = build_cell_mesh(g, 0.25);
    std::ostringstream os;
    dump_mesh(m, os);
    std::istringstream is(os.str());
    std::string line;
    std::map<std::string, int> counts;
    while (std::getline(is, line)) {
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        ++counts[tag];
        if (tag == "v") {
            double x, y;
            REQUIRE(static_cast<bool>(ls >> x >> y));
        } else if (tag == "t") {
            int i, j, k, side;
            REQUIRE(static_cast<bool>(ls >> i >> j >> k >> side));
            REQUIRE((side == 0 || side == 1));
        } else if (tag == "ip" || tag == "lp") {
            int a, b;
            REQUIRE(static_cast<bool>(ls >> a >> b));
        } else {
            FAIL("unknown dump tag: " + tag);
        }
    }
    REQUIRE(counts["v"] == m.vertex_count());
    REQUIRE(counts["t"] == static_cast<int>(m.triangles.size()));
    REQUIRE(counts["ip"] == static_cast<int>(m.interface_pairs.size()));
    REQUIRE(counts["lp"] == static_cast<int>(m.lid_pairs.size()));
}
