#pragma once

// Period-cell geometry for a 2D Neumann waveguide with one polygonal trap
// per cell.  The unit cell is Y = (0,d) x (-1/2,1/2); the waveguide axis is
// the y direction and the cell "lids" are the segments y = +-1/2.  The trap
// B is a simple, positively oriented polygon whose closure stays strictly
// inside Y; its boundary S carries the jump coupling.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpband {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

using Polygon = std::vector<Vec2>;

class GeometryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline double signed_area(const Polygon& p) {
    double twice = 0.0;
    for (std::size_t i = 0, n = p.size(); i < n; ++i) {
        const Vec2& a = p[i];
        const Vec2& b = p[(i + 1) % n];
        twice += a.x * b.y - b.x * a.y;
    }
    return 0.5 * twice;
}

inline double perimeter(const Polygon& p) {
    double len = 0.0;
    for (std::size_t i = 0, n = p.size(); i < n; ++i) {
        const Vec2& a = p[i];
        const Vec2& b = p[(i + 1) % n];
        len += std::hypot(b.x - a.x, b.y - a.y);
    }
    return len;
}

namespace detail {

inline double cross(Vec2 o, Vec2 a, Vec2 b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

inline bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
           std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

// Proper or improper intersection of closed segments [a,b] and [c,d].
inline bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    const double d1 = cross(c, d, a);
    const double d2 = cross(c, d, b);
    const double d3 = cross(a, b, c);
    const double d4 = cross(a, b, d);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
        ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
        return true;
    if (d1 == 0 && on_segment(c, d, a)) return true;
    if (d2 == 0 && on_segment(c, d, b)) return true;
    if (d3 == 0 && on_segment(a, b, c)) return true;
    if (d4 == 0 && on_segment(a, b, d)) return true;
    return false;
}

} // namespace detail

// Simple = no repeated vertices, no zero-length or folded-back edges, and no
// intersection between non-adjacent edges.
inline bool is_simple(const Polygon& p) {
    const std::size_t n = p.size();
    if (n < 3) return false;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = p[i], b = p[(i + 1) % n];
        if (a.x == b.x && a.y == b.y) return false;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 prev = p[(i + n - 1) % n], cur = p[i], next = p[(i + 1) % n];
        const double cr = detail::cross(cur, prev, next);
        const double dot = (prev.x - cur.x) * (next.x - cur.x) + (prev.y - cur.y) * (next.y - cur.y);
        if (cr == 0.0 && dot > 0.0) return false; // spike
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
            if (adjacent) continue;
            if (detail::segments_intersect(p[i], p[(i + 1) % n], p[j], p[(j + 1) % n]))
                return false;
        }
    }
    return true;
}

// Coupling scaling rule eps -> a^eps.  The default satisfies a^eps/eps -> a
// with equality at every eps; the power rule exists to probe what happens
// when that limit hypothesis is stressed or violated.
struct CouplingRule {
    enum class Kind { Linear, Power };
    Kind kind = Kind::Linear;
    double coef = 1.0;     // Power: a^eps = coef * eps^exponent
    double exponent = 1.0;

    double a_eps(double a, double eps) const {
        return kind == Kind::Linear ? a * eps : coef * std::pow(eps, exponent);
    }
    static CouplingRule linear() { return {}; }
    static CouplingRule power(double coef, double exponent) {
        return {Kind::Power, coef, exponent};
    }
};

struct CellGeometry {
    double d = 1.0;                   // cross-section width, omega = (0,d)
    std::optional<Polygon> trap;      // simple CCW polygon, closure inside Y
    double epsilon = 1.0;             // dimensionless scale > 0
    double a = 1.0;                   // limit coupling constant, units 1/length
    CouplingRule rule;                // eps -> a^eps
    double inside_margin = 0.0;       // 0: mesh enforces one cell at its h

    bool has_trap() const { return trap.has_value() && !trap->empty(); }

    // Distance from the trap to the cell boundary; the minimum over the
    // polygon is attained at a vertex because the cell is a box.
    double boundary_clearance() const {
        if (!has_trap()) return 0.0;
        double dist = std::numeric_limits<double>::infinity();
        for (const Vec2& v : *trap) {
            dist = std::min({dist, v.x, d - v.x, v.y + 0.5, 0.5 - v.y});
        }
        return dist;
    }

    void validate() const {
        if (!(d > 0.0)) throw GeometryError("cross-section width d must be positive");
        if (!(epsilon > 0.0)) throw GeometryError("epsilon must be positive");
        if (a < 0.0) throw GeometryError("coupling constant a must be nonnegative");
        if (inside_margin < 0.0) throw GeometryError("inside margin must be nonnegative");
        if (!has_trap()) return;
        const Polygon& p = *trap;
        if (p.size() < 3) throw GeometryError("trap polygon needs at least 3 vertices");
        if (!is_simple(p)) throw GeometryError("trap polygon is not simple");
        const double area = signed_area(p);
        if (area == 0.0) throw GeometryError("trap polygon is degenerate (zero area)");
        if (area < 0.0) throw GeometryError("trap polygon must be positively oriented");
        if (boundary_clearance() <= inside_margin)
            throw GeometryError("trap closure is not strictly inside the period cell");
        if (area >= d) throw GeometryError("trap area must be smaller than the cell");
    }
};

struct Measures {
    double vol_Y = 0.0;
    double vol_B = 0.0;
    double vol_F = 0.0;
    double area_S = 0.0;
};

inline Measures measures(const CellGeometry& geom) {
    geom.validate();
    Measures m;
    m.vol_Y = geom.d * 1.0;
    if (geom.has_trap()) {
        m.vol_B = signed_area(*geom.trap);
        m.area_S = perimeter(*geom.trap);
    }
    m.vol_F = m.vol_Y - m.vol_B;
    return m;
}

struct GapConstants {
    double alpha = 0.0;
    double beta = 0.0;
};

// Gap endpoints determined by trap geometry alone:
//   alpha = a|S|/|B|,  beta = alpha * |Y|/(|Y|-|B|).
inline GapConstants limit_gap(const CellGeometry& geom) {
    const Measures m = measures(geom);
    if (!(m.vol_B > 0.0)) throw GeometryError("limit gap requires a trap with positive area");
    GapConstants g;
    g.alpha = geom.a * (m.area_S / m.vol_B);
    g.beta = g.alpha * (m.vol_Y / m.vol_F);
    return g;
}

inline double coupling_at(const CellGeometry& geom, double eps) {
    return geom.rule.a_eps(geom.a, eps);
}

// Coupling for the unscaled unit cell: physical eigenvalues at scale eps are
// the unit-cell eigenvalues computed with a~ = a^eps * eps, divided by eps^2.
inline double effective_unit_coupling(const CellGeometry& geom) {
    if (!(geom.epsilon > 0.0)) throw GeometryError("epsilon must be positive");
    return coupling_at(geom, geom.epsilon) * geom.epsilon;
}

// max |a^eps/eps - a| over the given eps values; zero for the default rule.
inline double coupling_limit_deviation(const CellGeometry& geom, std::span<const double> eps_list) {
    double dev = 0.0;
    for (double e : eps_list) {
        if (!(e > 0.0)) throw GeometryError("eps values must be positive");
        dev = std::max(dev, std::abs(coupling_at(geom, e) / e - geom.a));
    }
    return dev;
}

// Convenience builders used by configs and tests.
inline Polygon rect_trap(double cx, double cy, double w, double h) {
    return {{cx - 0.5 * w, cy - 0.5 * h},
            {cx + 0.5 * w, cy - 0.5 * h},
            {cx + 0.5 * w, cy + 0.5 * h},
            {cx - 0.5 * w, cy + 0.5 * h}};
}

inline CellGeometry canonical_geometry(double epsilon = 1.0) {
    CellGeometry g;
    g.d = 1.0;
    g.trap = rect_trap(0.5, 0.0, 0.5, 0.5);
    g.a = 1.0;
    g.epsilon = epsilon;
    return g;
}

} // namespace dpband
