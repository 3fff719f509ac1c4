#include "dpband/oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace dpband;
using Catch::Approx;

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kPi2 = kPi * kPi;
} // namespace

TEST_CASE("separable quasi-periodic spectrum at phi = 0") {
    const std::vector<double> v = separable_floquet_eigs(1.0, 0.0, 4);
    REQUIRE(v[0] == 0.0);
    REQUIRE(v[1] == Approx(kPi2).epsilon(1e-14));
    REQUIRE(v[2] == Approx(4.0 * kPi2).epsilon(1e-14));
    REQUIRE(v[3] == Approx(4.0 * kPi2).epsilon(1e-14));
}

TEST_CASE("separable quasi-periodic spectrum at phi = pi has a double ground value") {
    const std::vector<double> v = separable_floquet_eigs(1.0, kPi, 4);
    REQUIRE(v[0] == Approx(kPi2).epsilon(1e-14));
    REQUIRE(v[1] == Approx(kPi2).epsilon(1e-14));
    REQUIRE(v[0] == v[1]);
}

TEST_CASE("separable Neumann spectrum of the unit cell") {
    const std::vector<double> v = separable_neumann_eigs(1.0, 4);
    REQUIRE(v[0] == 0.0);
    REQUIRE(v[1] == Approx(kPi2).epsilon(1e-14));
    REQUIRE(v[2] == Approx(kPi2).epsilon(1e-14));
    REQUIRE(v[3] == Approx(2.0 * kPi2).epsilon(1e-14));
}

TEST_CASE("separable spectra are exactly symmetric under phi -> 2pi - phi") {
    for (double phi : {0.5 * kPi, 0.25 * kPi, 1.0}) {
        const auto a = separable_floquet_eigs(1.0, phi, 8);
        const auto b = separable_floquet_eigs(1.0, 2.0 * kPi - phi, 8);
        for (int i = 0; i < 8; ++i) REQUIRE(a[i] == b[i]);
    }
}

TEST_CASE("large coupling recovers the free dispersion") {
    const auto [lo, hi] = kp_band_edges(1e8, 1);
    REQUIRE(lo == 0.0);
    REQUIRE(hi == Approx(kPi2).epsilon(1e-6));
}

TEST_CASE("band edges satisfy |half-trace| = 1") {
    for (double c : {0.3, 1.0, 5.0}) {
        for (int b = 1; b <= 4; ++b) {
            const auto [lo, hi] = kp_band_edges(c, b);
            if (b > 1) REQUIRE(std::abs(std::abs(kp_half_trace(c, std::sqrt(lo))) - 1.0) < 1e-10);
            REQUIRE(std::abs(std::abs(kp_half_trace(c, std::sqrt(hi))) - 1.0) < 1e-10);
        }
    }
}

TEST_CASE("band edges interlace") {
    for (double c : {0.3, 1.0, 5.0}) {
        for (int b = 1; b <= 3; ++b) {
            const auto cur = kp_band_edges(c, b);
            const auto nxt = kp_band_edges(c, b + 1);
            REQUIRE(cur.first < cur.second);
            REQUIRE(cur.second <= nxt.first);
        }
    }
}

TEST_CASE("analytic dispersion matches the discrete chain to 0.1% at 1e4 nodes") {
    EigOptions eig;
    eig.tol = 1e-8;
    const auto [chain1, chain2] = detail::chain_band_edges(1.0, 10000, eig);
    const auto kp1 = kp_band_edges(1.0, 1);
    const auto kp2 = kp_band_edges(1.0, 2);
    REQUIRE(std::abs(chain1.first - kp1.first) < 1e-6);
    REQUIRE(std::abs(chain1.second - kp1.second) / kp1.second < 1e-3);
    REQUIRE(std::abs(chain2.first - kp2.first) / kp2.first < 1e-3);
    REQUIRE(std::abs(chain2.second - kp2.second) / kp2.second < 1e-3);
}

TEST_CASE("quasi-momentum eigenvalues sit inside their bands") {
    for (double c : {0.5, 1.0}) {
        for (double phi : {0.0, 0.3, 0.5 * kPi, kPi}) {
            const std::vector<double> eigs = kp_eigenvalues(c, phi, 4);
            REQUIRE(std::is_sorted(eigs.begin(), eigs.end()));
            for (double lam : eigs) {
                bool inside_some_band = false;
                for (int b = 1; b <= 6 && !inside_some_band; ++b) {
                    const auto [lo, hi] = kp_band_edges(c, b);
                    inside_some_band = lam >= lo - 1e-8 && lam <= hi + 1e-8;
                }
                REQUIRE(inside_some_band);
            }
            if (phi == 0.0) REQUIRE(eigs[0] == 0.0);
        }
    }
}

TEST_CASE("quasi-momentum eigenvalues solve the dispersion relation") {
    const std::vector<double> eigs = kp_eigenvalues(1.0, 0.5 * kPi, 4);
    for (double lam : eigs) REQUIRE(std::abs(kp_half_trace(1.0, std::sqrt(lam))) < 1e-10);
}

TEST_CASE("narrow cells reproduce the pure 1D chain values") {
    // d = 0.25: the first transverse excitation costs (4 pi)^2, so the
    // lowest composed values are the 1D chain values alone
    const std::vector<double> composed = kp_separable_eigs(0.25, 1.0, 0.7, 3);
    const std::vector<double> chain = kp_eigenvalues(1.0, 0.7, 3);
    for (int i = 0; i < 3; ++i) REQUIRE(composed[i] == chain[i]);
}

TEST_CASE("straight-interface FEM check against the composed oracle") {
    const double err = straight_interface_check(1.0, 1.0, 1.0 / 32, 4, 0.05);
    REQUIRE(err < 0.05);
    REQUIRE_THROWS_AS(straight_interface_check(1.0, 0.0, 0.25, 2, 0.1), std::invalid_argument);
}

TEST_CASE("a flipped jump sign is caught by the straight-interface check") {
    EigOptions eig;
    const double good = detail::straight_interface_error(1.0, 1.0, 1.0 / 16, 4, eig, -1.0);
    const double bad = detail::straight_interface_error(1.0, 1.0, 1.0 / 16, 4, eig, +1.0);
    REQUIRE(good < 0.05);
    REQUIRE(bad > 10.0 * good);
}

TEST_CASE("separable FEM error decreases at second order") {
    CellGeometry g;  // trap-free unit cell
    const std::vector<double> exact = separable_neumann_eigs(1.0, 4);
    const MeshedCell coarse = build_cell_mesh(g, 1.0 / 16);
    const MeshedCell fine = refine(coarse);
    const SpectrumSlice sc = solve_cell(g, coarse, LidCondition::neumann(), 4, {});
    const SpectrumSlice sf = solve_cell(g, fine, LidCondition::neumann(), 4, {});
    for (int i = 1; i < 4; ++i) {
        const double ratio = (sc.eigenvalues[i] - exact[i]) / (sf.eigenvalues[i] - exact[i]);
        REQUIRE(ratio > 2.8);
        REQUIRE(ratio < 5.5);
    }
}
