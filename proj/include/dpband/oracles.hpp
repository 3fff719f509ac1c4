#pragma once

// References that are independent of the assembly path:
//
//  - the separable spectrum of the trap-free cell (transverse Neumann modes
//    plus quasi-periodic or Neumann longitudinal modes);
//  - a 1D chain of jump vertices (derivative continuous, value jump equal
//    to derivative divided by c) handled with the period transfer matrix:
//    half-trace  D(k) = cos k - k sin k / (2c),  bands where |D| <= 1;
//  - a straight-interface cell whose spectrum is the direct sum of the two,
//    used to validate the 2D jump assembly end to end.
//
// The sign convention inside D is pinned by a discrete 1D chain in the test
// suite before the formula is trusted as an oracle.

#include "dpband/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace dpband {

class OracleFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

// Distance from phi to the nearest multiple of 2pi; canonical representative
// that makes the phi <-> 2pi - phi symmetry exact in floating point.
inline double phi_distance(double phi) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double r = std::fmod(phi, two_pi);
    if (r < 0.0) r += two_pi;
    return std::min(r, two_pi - r);
}

} // namespace detail

// Smallest `count` values of (pi j / d)^2 + (phi + 2 pi m)^2, j >= 0, m in Z.
inline std::vector<double> separable_floquet_eigs(double d, double phi, int count) {
    if (count < 1) throw std::invalid_argument("count must be positive");
    constexpr double pi = std::numbers::pi;
    constexpr double two_pi = 2.0 * pi;
    const double delta = detail::phi_distance(phi);
    double cutoff = (two_pi + delta) * (two_pi + delta) + (pi / d) * (pi / d) + 1.0;
    std::vector<double> vals;
    while (true) {
        vals.clear();
        for (int j = 0;; ++j) {
            const double t = (pi * j / d) * (pi * j / d);
            if (t > cutoff) break;
            for (int m = 0;; ++m) {
                const double lon1 = delta + two_pi * m;
                if (t + lon1 * lon1 > cutoff) break;
                vals.push_back(t + lon1 * lon1);
                const double lon2 = (two_pi - delta) + two_pi * m;
                if (t + lon2 * lon2 <= cutoff) vals.push_back(t + lon2 * lon2);
            }
        }
        if (static_cast<int>(vals.size()) >= count) break;
        cutoff *= 2.0;
    }
    std::sort(vals.begin(), vals.end());
    vals.resize(count);
    return vals;
}

// Smallest `count` values of (pi j / d)^2 + (pi m)^2, j, m >= 0.
inline std::vector<double> separable_neumann_eigs(double d, int count) {
    if (count < 1) throw std::invalid_argument("count must be positive");
    constexpr double pi = std::numbers::pi;
    double cutoff = (pi / d) * (pi / d) + pi * pi + 1.0;
    std::vector<double> vals;
    while (true) {
        vals.clear();
        for (int j = 0;; ++j) {
            const double t = (pi * j / d) * (pi * j / d);
            if (t > cutoff) break;
            for (int m = 0;; ++m) {
                const double lon = pi * m;
                if (t + lon * lon > cutoff) break;
                vals.push_back(t + lon * lon);
            }
        }
        if (static_cast<int>(vals.size()) >= count) break;
        cutoff *= 2.0;
    }
    std::sort(vals.begin(), vals.end());
    vals.resize(count);
    return vals;
}

// Period transfer matrix of the 1D chain: free flight of length 1 composed
// with a vertex where the value jumps by u'/c.  Half the trace gives the
// dispersion; |half-trace| <= 1 characterizes the allowed bands, and the
// free dispersion cos k is recovered as c -> infinity.
struct KPDispersion {
    double c = 1.0;
    double half_trace(double k) const { return std::cos(k) - k * std::sin(k) / (2.0 * c); }
};

inline double kp_half_trace(double c, double k) { return KPDispersion{c}.half_trace(k); }

namespace detail {

inline double bisect(const std::function<double(double)>& f, double lo, double hi) {
    double flo = f(lo);
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((flo < 0.0) != (fm < 0.0)) hi = mid;
        else {
            lo = mid;
            flo = fm;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace detail

// Band `band_index` (1-based) of the 1D chain as an interval in k^2.
//
// D((m-1) pi) = (-1)^(m-1) exactly, so band m starts at k = (m-1) pi; its
// top edge is the root of D(k) = (-1)^m in ((m-1) pi, m pi].  The forbidden
// dip just below m pi has width of order m pi / c, so after the coarse scan
// the bracket search falls back to probes approaching m pi geometrically,
// which resolves the near-free regime of very large c.
inline std::pair<double, double> kp_band_edges(double c, int band_index) {
    if (!(c > 0.0)) throw std::invalid_argument("coupling c must be positive");
    if (band_index < 1) throw std::invalid_argument("band index is 1-based");
    const KPDispersion disp{c};
    const int m = band_index;
    const double lo_k = (m - 1) * std::numbers::pi;
    const double hi_cap = m * std::numbers::pi;
    const double target = (m % 2 == 1) ? -1.0 : 1.0;  // (-1)^m
    const auto f = [&](double k) { return disp.half_trace(k) - target; };
    const double s0 = (m % 2 == 1) ? 1.0 : -1.0;  // sign of f just above lo_k

    const double step = std::numbers::pi / 50.0;
    double left = lo_k + 1e-6 * step;
    if (f(left) * s0 <= 0.0)
        return {lo_k * lo_k, left * left};  // band collapsed to the edge (c very small)
    for (double k = lo_k + step; k < hi_cap; k += step) {
        if (f(k) * s0 <= 0.0) {
            const double root = detail::bisect(f, left, k);
            return {lo_k * lo_k, root * root};
        }
        left = k;
    }
    // geometric probes toward the dip adjacent to m pi
    for (int j = 1; j <= 70; ++j) {
        const double k = hi_cap - 0.5 * (hi_cap - left);
        if (f(k) * s0 <= 0.0) {
            const double root = detail::bisect(f, left, k);
            return {lo_k * lo_k, root * root};
        }
        left = k;
    }
    // dip narrower than double precision: the free limit
    return {lo_k * lo_k, hi_cap * hi_cap};
}

// Ascending 1D eigenvalues at quasi-momentum phi: k^2 over the solutions of
// D(k) = cos(phi), plus the constant mode at phi = 0.
inline std::vector<double> kp_eigenvalues(double c, double phi, int count) {
    if (!(c > 0.0)) throw std::invalid_argument("coupling c must be positive");
    if (count < 1) throw std::invalid_argument("count must be positive");
    const KPDispersion disp{c};
    const double delta = detail::phi_distance(phi);
    const double target = std::cos(delta);
    std::vector<double> vals;
    if (delta == 0.0) vals.push_back(0.0);
    const double step = std::numbers::pi / 50.0;
    double k_prev = step * 1e-6;  // avoid the double root of D - 1 at k = 0
    double f_prev = disp.half_trace(k_prev) - target;
    for (double k = step; static_cast<int>(vals.size()) < count; k += step) {
        const double f = disp.half_trace(k) - target;
        if (f == 0.0) {
            const double root = k;
            vals.push_back(root * root);
        } else if ((f_prev < 0.0) != (f < 0.0)) {
            const double root =
                detail::bisect([&](double x) { return disp.half_trace(x) - target; }, k_prev, k);
            vals.push_back(root * root);
        }
        k_prev = k;
        f_prev = f;
        if (k > (2.0 * count + 10) * std::numbers::pi)
            throw OracleFailure("dispersion root scan exhausted at k=" + std::to_string(k) +
                                ", found " + std::to_string(vals.size()) + " of " + std::to_string(count));
    }
    vals.resize(count);
    return vals;
}

// Smallest `count` sums of a transverse Neumann mode and a 1D chain value.
inline std::vector<double> kp_separable_eigs(double d, double c, double phi, int count) {
    constexpr double pi = std::numbers::pi;
    const std::vector<double> lon = kp_eigenvalues(c, phi, count + 4);
    std::vector<double> vals;
    for (int j = 0;; ++j) {
        const double t = (pi * j / d) * (pi * j / d);
        if (t > lon[count + 3]) break;  // enough smaller sums already exist
        for (double l : lon) vals.push_back(t + l);
    }
    std::sort(vals.begin(), vals.end());
    vals.resize(count);
    return vals;
}

namespace detail {

// jump_sign = -1 is the real assembly; +1 is the deliberate fault used to
// demonstrate that this check catches a wrong jump orientation.
inline double straight_interface_error(double d, double c, double h, int k_max, const EigOptions& eig,
                                       double jump_sign) {
    const MeshedCell mesh = build_straight_interface_mesh(d, h);
    double worst = 0.0;
    for (double phi : {0.0, 0.5 * std::numbers::pi, std::numbers::pi}) {
        const AssembledForms forms = assemble_with_jump_sign(mesh, LidCondition::floquet(phi), jump_sign);
        const SpectrumSlice slice = smallest_eigs(total_operator(forms, c), k_max, eig);
        const std::vector<double> oracle = kp_separable_eigs(d, c, phi, k_max);
        for (int i = 0; i < k_max; ++i) {
            const double err = std::abs(slice.eigenvalues[i] - oracle[i]) / std::max(std::abs(oracle[i]), 1.0);
            worst = std::max(worst, err);
        }
    }
    return worst;
}

// Independent 1D discretization of the chain: lumped-mass three-point
// stencil on N intervals of the unit period, the vertex at x = 1/2 as a
// duplicated node carrying the jump term, quasi-periodic seam u_N =
// exp(i phi) u_0.  Pins the sign convention inside the half-trace formula.
inline std::pair<std::pair<double, double>, std::pair<double, double>> chain_band_edges(double c, int n_intervals,
                                                                                        const EigOptions& eig = {}) {
    if (n_intervals % 2 != 0) throw std::invalid_argument("interval count must be even");
    const int N = n_intervals;
    const double hs = 1.0 / N;
    const int mid = N / 2;
    // DOFs: grid nodes 0..N, plus the right copy of the vertex node at index N+1.
    const int n_full = N + 2;
    const int dup = N + 1;
    // node `mid` keeps the left-side value; `dup` carries the right side.
    std::vector<Eigen::Triplet<double>> kt, mt, jt;
    for (int i = 0; i < N; ++i) {
        const int lo = (i == mid) ? dup : i;
        const int hi = (i + 1 == mid) ? mid : i + 1;
        kt.emplace_back(lo, lo, 1.0 / hs);
        kt.emplace_back(hi, hi, 1.0 / hs);
        kt.emplace_back(lo, hi, -1.0 / hs);
        kt.emplace_back(hi, lo, -1.0 / hs);
        mt.emplace_back(lo, lo, 0.5 * hs);
        mt.emplace_back(hi, hi, 0.5 * hs);
    }
    jt.emplace_back(mid, mid, 1.0);
    jt.emplace_back(dup, dup, 1.0);
    jt.emplace_back(mid, dup, -1.0);
    jt.emplace_back(dup, mid, -1.0);

    auto edges_at = [&](double phi) {
        SpMatD K(n_full, n_full), M(n_full, n_full), J(n_full, n_full);
        K.setFromTriplets(kt.begin(), kt.end());
        M.setFromTriplets(mt.begin(), mt.end());
        J.setFromTriplets(jt.begin(), jt.end());
        // seam: u_N = +-u_0 (phi in {0, pi})
        const double phase = phi == 0.0 ? 1.0 : -1.0;
        std::vector<Eigen::Triplet<double>> ct;
        for (int i = 0; i < n_full; ++i) {
            if (i == N) ct.emplace_back(N, 0, phase);
            else ct.emplace_back(i, i < N ? i : N, 1.0);
        }
        SpMatD C(n_full, n_full - 1);
        C.setFromTriplets(ct.begin(), ct.end());
        const SpMatD Ar = C.transpose() * SpMatD(K + c * J) * C;
        const SpMatD Mr = C.transpose() * M * C;
        Pencil p;
        p.A = Ar.cast<Complex>();
        p.M = Mr.cast<Complex>();
        p.real_valued = true;
        EigOptions opt = eig;
        opt.force_iterative = n_full > opt.dense_threshold;
        const SpectrumSlice s = smallest_eigs(p, 2, opt);
        return std::pair<double, double>(s.eigenvalues[0], s.eigenvalues[1]);
    };
    const auto [l1_0, l2_0] = edges_at(0.0);
    const auto [l1_pi, l2_pi] = edges_at(std::numbers::pi);
    return {{l1_0, l1_pi}, {l2_pi, l2_0}};
}

} // namespace detail

// End-to-end validation of the 2D jump assembly on a separable geometry:
// the interface is the full cross-section line y = 0, so the 2D Floquet
// eigenvalues must equal transverse-Neumann plus 1D-chain values.  Returns
// the max relative discrepancy over the first k_max values at phi in
// {0, pi/2, pi}; throws when it exceeds `tol`.
inline double straight_interface_check(double d, double c, double h, int k_max, double tol,
                                       const EigOptions& eig = {}) {
    if (!(c > 0.0)) throw std::invalid_argument("zero coupling decouples the half-cells; c must be positive");
    const double worst = detail::straight_interface_error(d, c, h, k_max, eig, -1.0);
    if (worst > tol)
        throw OracleFailure("straight-interface check failed: max relative error " + std::to_string(worst) +
                            " exceeds " + std::to_string(tol));
    return worst;
}

} // namespace dpband
