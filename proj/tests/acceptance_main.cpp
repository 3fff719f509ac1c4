// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure.  Tolerances are fixed here, not configurable.

#include "dpband/dpband.hpp"

#include <chrono>
#include <cstdio>

using namespace dpband;

namespace {

int g_failures = 0;

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

void report(int idx, const std::string& name, bool pass, const std::string& detail, double seconds) {
    std::printf("[%s] criterion %d (%s): %s  [%.1fs]\n", pass ? "PASS" : "FAIL", idx, name.c_str(),
                detail.c_str(), seconds);
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

constexpr double kAlpha = 8.0;
const double kBeta = 32.0 / 3.0;
constexpr double kTol = 1e-9;

EigOptions eig_opts() {
    EigOptions o;
    o.tol = kTol;
    return o;
}

// criteria 1 and 2 share one convergence study
void criteria_1_and_2() {
    Timer t;
    const CellGeometry geom = canonical_geometry();
    const std::vector<double> eps = {0.4, 0.2, 0.1, 0.05};
    StudyOptions opt;
    opt.h = 1.0 / 64;
    opt.phi_count = 17;
    opt.k_max = 2;
    opt.eig = eig_opts();
    opt.jobs = default_jobs();
    const ConvergenceReport rep = gap_convergence_study(geom, eps, opt);

    std::string detail;
    bool pass = rep.err_alpha_decreasing && rep.err_beta_decreasing;
    const double final_alpha = rep.records.back().err_alpha / kAlpha;
    const double final_beta = rep.records.back().err_beta / kBeta;
    pass = pass && final_alpha <= 0.05 && final_beta <= 0.05;
    detail = "rel err at eps=0.05: alpha " + fmt(final_alpha) + ", beta " + fmt(final_beta) +
             "; decreasing alpha/beta: " + (rep.err_alpha_decreasing ? "yes" : "no") + "/" +
             (rep.err_beta_decreasing ? "yes" : "no");
    report(1, "gap endpoints converge to (alpha, beta)", pass, detail, t.seconds());

    Timer t2;
    bool bounds = true;
    double worst_slack = 1e300;
    for (const ConvergenceRecord& rec : rep.records) {
        for (double v : {rec.l1D_coarse, rec.l1D_fine}) {
            bounds = bounds && v <= kAlpha + 10.0 * kTol;
            worst_slack = std::min(worst_slack, kAlpha + 10.0 * kTol - v);
        }
        for (double v : {rec.l2N_coarse, rec.l2N_fine}) {
            bounds = bounds && v <= kBeta + 10.0 * kTol;
            worst_slack = std::min(worst_slack, kBeta + 10.0 * kTol - v);
        }
    }
    // a third, coarser mesh for the same bound
    const MeshedCell m32 = build_cell_mesh(geom, 1.0 / 32);
    for (double e : eps) {
        CellGeometry g = geom;
        g.epsilon = e;
        const double l1d = solve_cell(g, m32, LidCondition::dirichlet(), 1, eig_opts()).eigenvalues[0];
        const double l2n = solve_cell(g, m32, LidCondition::neumann(), 2, eig_opts()).eigenvalues[1];
        bounds = bounds && l1d <= kAlpha + 10.0 * kTol && l2n <= kBeta + 10.0 * kTol;
        worst_slack = std::min({worst_slack, kAlpha + 10.0 * kTol - l1d, kBeta + 10.0 * kTol - l2n});
    }
    report(2, "trial-field upper bounds on every mesh and eps", bounds,
           "min slack " + fmt(worst_slack), t2.seconds());
}

void criterion_3() {
    Timer t;
    const CellGeometry geom = canonical_geometry();
    const MeshedCell mesh = build_cell_mesh(geom, 1.0 / 32);
    SweepOptions opt;
    opt.phi_count = 9;
    opt.k_max = 5;
    opt.eig = eig_opts();
    opt.eig.force_iterative = true;  // exercise the sparse path
    opt.jobs = default_jobs();
    const std::vector<double> eps = {0.4, 0.2, 0.1, 0.05};
    bool pass = true;
    double worst = 0.0;
    try {
        const std::vector<BandStructure> sweeps = band_structure_multi(geom, mesh, eps, opt);
        for (const BandStructure& bs : sweeps) {
            for (int k = 0; k < 5; ++k) {
                const double slack = 10.0 * kTol * std::max(1.0, bs.lambda_D[k]);
                for (double v : bs.bands[k].values) {
                    worst = std::max({worst, bs.lambda_N[k] - v, v - bs.lambda_D[k]});
                    pass = pass && v >= bs.lambda_N[k] - slack && v <= bs.lambda_D[k] + slack;
                }
            }
        }
    } catch (const std::exception& e) {
        pass = false;
        worst = std::numeric_limits<double>::quiet_NaN();
        std::printf("  criterion 3 aborted: %s\n", e.what());
    }
    report(3, "Neumann/Dirichlet enclosure, k <= 5, 9-point grid", pass,
           "max bracket violation " + fmt(worst), t.seconds());
}

void criterion_4() {
    Timer t;
    bool pass = true;
    double worst = 0.0;
    try {
        for (double e : {0.5, 0.1}) {
            CellGeometry g = canonical_geometry(e);
            const MeshedCell mesh = build_cell_mesh(g, 1.0 / 16);
            for (const LidCondition lid :
                 {LidCondition::floquet(std::numbers::pi / 3.0), LidCondition::neumann()}) {
                const double dev = scaling_check(g, mesh, lid, 5, eig_opts());
                worst = std::max(worst, dev);
                pass = pass && dev <= 1e-10;
            }
        }
    } catch (const std::exception& e) {
        pass = false;
        std::printf("  criterion 4 aborted: %s\n", e.what());
    }
    report(4, "physical cell vs rescaled unit cell, k <= 5", pass, "max rel deviation " + fmt(worst),
           t.seconds());
}

void criterion_5() {
    Timer t;
    const std::vector<double> eps = {0.2, 0.1, 0.05, 0.025};
    const MeshedCell mesh = build_cell_mesh(canonical_geometry(), 1.0 / 32);
    std::vector<double> lam2pi;
    bool pass = true;
    double slope = std::numeric_limits<double>::quiet_NaN();
    try {
        for (double e : eps) {
            const CellGeometry g = canonical_geometry(e);
            lam2pi.push_back(
                solve_cell(g, mesh, LidCondition::floquet(std::numbers::pi), 2, eig_opts()).eigenvalues[1]);
        }
        slope = fit_loglog(eps, lam2pi).slope;
        pass = slope >= -2.2 && slope <= -1.8;
    } catch (const std::exception& e) {
        pass = false;
        std::printf("  criterion 5 aborted: %s\n", e.what());
    }
    report(5, "second antiperiodic eigenvalue blows up like eps^-2", pass, "log-log slope " + fmt(slope),
           t.seconds());
}

void criterion_6() {
    Timer t;
    CellGeometry free_cell;  // no trap
    const std::vector<double> exact = separable_neumann_eigs(1.0, 4);
    bool pass = true;
    double worst_err = 0.0, worst_ratio_dev = 0.0;
    std::string errs;
    try {
        const MeshedCell coarse = build_cell_mesh(free_cell, 1.0 / 32);
        const MeshedCell fine = refine(coarse);  // h = 1/64
        const SpectrumSlice sc = solve_cell(free_cell, coarse, LidCondition::neumann(), 4, eig_opts());
        const SpectrumSlice sf = solve_cell(free_cell, fine, LidCondition::neumann(), 4, eig_opts());
        pass = std::abs(sf.eigenvalues[0]) <= 1e-2;
        errs = "per-mode |err| at h=1/64: " + fmt(std::abs(sf.eigenvalues[0]));
        for (int i = 1; i < 4; ++i) {
            const double ec = sc.eigenvalues[i] - exact[i];
            const double ef = sf.eigenvalues[i] - exact[i];
            const double ratio = ec / ef;
            errs += " " + fmt(std::abs(ef));
            worst_err = std::max(worst_err, std::abs(ef));
            worst_ratio_dev = std::max(worst_ratio_dev, std::abs(ratio - 4.0));
            pass = pass && ratio >= 3.0 && ratio <= 5.0 && std::abs(ef) <= 1e-2;
        }
        // Known limitation, reported honestly rather than relaxed: linear
        // elements on a two-triangles-per-quad grid carry a cross-derivative
        // term that puts the fourth mode at (pi^4/2) h^2 ~ 0.0119 > 1e-2; the
        // pure modes sit at pi^4 h^2 / 12 ~ 0.002 and the O(h^2) ratios hold.
    } catch (const std::exception& e) {
        pass = false;
        std::printf("  criterion 6 aborted: %s\n", e.what());
    }
    report(6, "trap-free Neumann spectrum at O(h^2), abs err <= 1e-2", pass,
           errs + "; max |ratio-4| " + fmt(worst_ratio_dev), t.seconds());
}

void criterion_7() {
    Timer t;
    bool pass = true;
    double err = std::numeric_limits<double>::quiet_NaN();
    try {
        err = straight_interface_check(1.0, 1.0, 1.0 / 64, 4, 0.01, eig_opts());
    } catch (const std::exception& e) {
        pass = false;
        std::printf("  criterion 7 aborted: %s\n", e.what());
    }
    report(7, "straight-interface spectrum matches transverse + chain oracle", pass,
           "max rel err " + fmt(err) + " (tol 0.01)", t.seconds());
}

void criterion_8() {
    Timer t;
    const CellGeometry geom = canonical_geometry();
    const MeshedCell mesh = build_cell_mesh(geom, 1.0 / 32);
    bool pass = true;
    double kernel = 0.0, sym = 0.0;
    try {
        const double l1n = solve_cell(geom, mesh, LidCondition::neumann(), 1, eig_opts()).eigenvalues[0];
        const double l10 = solve_cell(geom, mesh, LidCondition::floquet(0.0), 1, eig_opts()).eigenvalues[0];
        kernel = std::max(std::abs(l1n), std::abs(l10));
        pass = kernel <= 1e-8;
        for (double phi : {2.0 * std::numbers::pi / 5.0, std::numbers::pi / 3.0, 0.75 * std::numbers::pi}) {
            const SpectrumSlice a = solve_cell(geom, mesh, LidCondition::floquet(phi), 5, eig_opts());
            const SpectrumSlice b =
                solve_cell(geom, mesh, LidCondition::floquet(2.0 * std::numbers::pi - phi), 5, eig_opts());
            for (int i = 0; i < 5; ++i) sym = std::max(sym, std::abs(a.eigenvalues[i] - b.eigenvalues[i]));
        }
        pass = pass && sym <= 10.0 * kTol;
    } catch (const std::exception& e) {
        pass = false;
        std::printf("  criterion 8 aborted: %s\n", e.what());
    }
    report(8, "kernel at zero and phi-conjugation symmetry", pass,
           "|lambda_1| " + fmt(kernel) + ", max conjugation diff " + fmt(sym), t.seconds());
}

} // namespace

int main() {
    Timer total;
    std::printf("acceptance suite: canonical cell d=1, rect trap (0.25,0.75)x(-0.25,0.25), a=1, "
                "a^eps = a*eps\n");
    criteria_1_and_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    std::printf("%d of 8 criteria passed in %.1fs\n", 8 - g_failures, total.seconds());
    return g_failures == 0 ? 0 : 1;
}
