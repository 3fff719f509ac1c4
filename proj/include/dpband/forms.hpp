#pragma once

// Discrete forms on the broken P1 space of a meshed cell:
//
//   K  broken stiffness      sum over triangles of grad u . grad v
//   J  interface jump form   sum over interface edges of (u+ - u-)(v+ - v-)
//   M  mass                  exact P1 mass matrix
//
// All three are assembled real symmetric on the full duplicated DOF set and
// then reduced by the lid condition: Dirichlet eliminates lid DOFs, the
// quasi-periodic condition slaves each top-lid DOF to exp(i phi) times its
// bottom partner (master-slave, so the reduced mass stays positive
// definite).  The reduced matrices are stored complex; their imaginary
// parts are exactly zero for Neumann, Dirichlet, phi = 0 and phi = pi.
//
// The coupling constant multiplies J when the pencil is formed, so one
// assembly serves every coupling.

#include "dpband/mesh.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <complex>
#include <numbers>

namespace dpband {

using Complex = std::complex<double>;
using SpMatD = Eigen::SparseMatrix<double>;
using SpMatC = Eigen::SparseMatrix<Complex>;

struct LidCondition {
    enum class Kind { Neumann, Dirichlet, Floquet };
    Kind kind = Kind::Neumann;
    double phi = 0.0;  // stored reduced to [0, 2*pi)

    static LidCondition neumann() { return {Kind::Neumann, 0.0}; }
    static LidCondition dirichlet() { return {Kind::Dirichlet, 0.0}; }
    static LidCondition floquet(double phi) {
        constexpr double two_pi = 2.0 * std::numbers::pi;
        phi = std::fmod(phi, two_pi);
        if (phi < 0.0) phi += two_pi;
        return {Kind::Floquet, phi};
    }

    bool real_phase() const {
        return kind != Kind::Floquet || phi == 0.0 || phi == std::numbers::pi;
    }
    // Exact +-1 at phi = 0 and pi so the real fast path sees true zeros.
    Complex phase() const {
        if (phi == 0.0) return {1.0, 0.0};
        if (phi == std::numbers::pi) return {-1.0, 0.0};
        return {std::cos(phi), std::sin(phi)};
    }
    std::string describe() const {
        switch (kind) {
            case Kind::Neumann: return "neumann";
            case Kind::Dirichlet: return "dirichlet";
            default: return "floquet:" + std::to_string(phi);
        }
    }
};

struct AssembledForms {
    SpMatC K, J, M;        // reduced, Hermitian; M positive definite
    SpMatC constraint;     // full x free master-slave map
    int dof_full = 0;
    int dof_free = 0;
    LidCondition lid;
    bool real_valued = true;  // imaginary parts exactly zero
};

namespace detail {

inline Eigen::Matrix3d local_stiffness(Vec2 p0, Vec2 p1, Vec2 p2) {
    const Vec2 e0{p2.x - p1.x, p2.y - p1.y};
    const Vec2 e1{p0.x - p2.x, p0.y - p2.y};
    const Vec2 e2{p1.x - p0.x, p1.y - p0.y};
    const double area2 = e2.x * (-e1.y) - e2.y * (-e1.x);  // 2*area, positive for CCW
    Eigen::Matrix3d k;
    const Vec2 e[3] = {e0, e1, e2};
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) k(a, b) = (e[a].x * e[b].x + e[a].y * e[b].y) / (2.0 * area2);
    return k;
}

inline Eigen::Matrix3d local_mass(Vec2 p0, Vec2 p1, Vec2 p2) {
    const double area = 0.5 * ((p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y));
    Eigen::Matrix3d m;
    m << 2, 1, 1, 1, 2, 1, 1, 1, 2;
    return (area / 12.0) * m;
}

// cross_sign couples the two sides of the interface; -1 is the jump form
// (u+ - u-)(v+ - v-).  +1 is only reachable through the fault-injection
// hook used to prove the oracle suite catches a wrong jump orientation.
inline AssembledForms assemble_with_jump_sign(const MeshedCell& mesh, LidCondition lid, double cross_sign) {
    const int n = mesh.vertex_count();
    std::vector<Eigen::Triplet<double>> kt, jt, mt;
    kt.reserve(9 * mesh.triangles.size());
    mt.reserve(9 * mesh.triangles.size());
    jt.reserve(16 * mesh.interface_edges.size());

    for (const Triangle& t : mesh.triangles) {
        const Vec2 p0 = mesh.vertices[t.v[0]], p1 = mesh.vertices[t.v[1]], p2 = mesh.vertices[t.v[2]];
        const Eigen::Matrix3d k = local_stiffness(p0, p1, p2);
        const Eigen::Matrix3d m = local_mass(p0, p1, p2);
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
                kt.emplace_back(t.v[a], t.v[b], k(a, b));
                mt.emplace_back(t.v[a], t.v[b], m(a, b));
            }
        }
    }

    for (const InterfaceEdge& e : mesh.interface_edges) {
        const double w = e.length / 6.0;
        const int ext[2] = {e.ext_a, e.ext_b};
        const int in[2] = {e.int_a, e.int_b};
        // edge mass (L/6) [[2,1],[1,2]] on each side, cross_sign between sides
        for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) {
                const double me = w * (a == b ? 2.0 : 1.0);
                jt.emplace_back(ext[a], ext[b], me);
                jt.emplace_back(in[a], in[b], me);
                jt.emplace_back(ext[a], in[b], cross_sign * me);
                jt.emplace_back(in[a], ext[b], cross_sign * me);
            }
        }
    }

    SpMatD K(n, n), J(n, n), M(n, n);
    K.setFromTriplets(kt.begin(), kt.end());
    J.setFromTriplets(jt.begin(), jt.end());
    M.setFromTriplets(mt.begin(), mt.end());

    // Lid constraint: 0 free, 1 eliminated, 2 slaved to the bottom partner.
    std::vector<int> role(n, 0);
    std::vector<int> master(n, -1);
    if (lid.kind == LidCondition::Kind::Dirichlet) {
        for (const LidPair& p : mesh.lid_pairs) {
            role[p.bottom] = 1;
            role[p.top] = 1;
        }
    } else if (lid.kind == LidCondition::Kind::Floquet) {
        for (const LidPair& p : mesh.lid_pairs) {
            role[p.top] = 2;
            master[p.top] = p.bottom;
        }
    }
    std::vector<int> free_index(n, -1);
    int n_free = 0;
    for (int i = 0; i < n; ++i)
        if (role[i] == 0) free_index[i] = n_free++;

    const Complex phase = lid.phase();
    std::vector<Eigen::Triplet<Complex>> ct;
    ct.reserve(n);
    for (int i = 0; i < n; ++i) {
        if (role[i] == 0) ct.emplace_back(i, free_index[i], Complex(1.0, 0.0));
        else if (role[i] == 2) ct.emplace_back(i, free_index[master[i]], phase);
    }
    SpMatC C(n, n_free);
    C.setFromTriplets(ct.begin(), ct.end());

    AssembledForms out;
    out.constraint = C;
    out.dof_full = n;
    out.dof_free = n_free;
    out.lid = lid;
    out.real_valued = lid.real_phase();
    const SpMatC Ch = C.adjoint();
    out.K = Ch * K.cast<Complex>() * C;
    out.J = Ch * J.cast<Complex>() * C;
    out.M = Ch * M.cast<Complex>() * C;
    return out;
}

} // namespace detail

inline AssembledForms assemble(const MeshedCell& mesh, LidCondition lid) {
    return detail::assemble_with_jump_sign(mesh, lid, -1.0);
}

struct Pencil {
    SpMatC A;  // K + c J, Hermitian positive semidefinite
    SpMatC M;  // Hermitian positive definite
    bool real_valued = true;
};

inline Pencil total_operator(const AssembledForms& forms, double coupling_c) {
    if (coupling_c < 0.0) throw std::invalid_argument("coupling must be nonnegative");
    Pencil p;
    p.A = forms.K + coupling_c * forms.J;
    p.M = forms.M;
    p.real_valued = forms.real_valued;
    return p;
}

// Coordinate triplet dump `row col re im` for external verification.
inline void dump_matrix(const SpMatC& m, std::ostream& os) {
    char buf[128];
    for (int k = 0; k < m.outerSize(); ++k) {
        for (SpMatC::InnerIterator it(m, k); it; ++it) {
            std::snprintf(buf, sizeof(buf), "%ld %ld %.17g %.17g\n",
                          static_cast<long>(it.row()), static_cast<long>(it.col()),
                          it.value().real(), it.value().imag());
            os << buf;
        }
    }
}

} // namespace dpband
