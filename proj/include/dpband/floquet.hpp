#pragma once

// Floquet sweep over the quasi-momentum.  The spectra at phi and 2pi - phi
// coincide (complex conjugation of the lid constraint), so pencils are
// solved on a uniform grid over [0, pi] with both endpoints included and
// mirrored into [0, 2pi) for reporting.  The Neumann and Dirichlet pencils
// bracket every Floquet eigenvalue from below and above; gap certificates
// use those brackets, which makes them immune to band edges that do not
// sit exactly at phi = 0 or pi.

#include "dpband/eigensolver.hpp"
#include "dpband/parallel.hpp"

#include <limits>
#include <span>

namespace dpband {

class SweepFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Band {
    std::vector<double> values;  // lambda_k^phi per grid point
    double lo = 0.0;             // min over the grid
    double hi = 0.0;             // max over the grid
};

struct BandStructure {
    std::vector<double> phi_grid;   // ascending in [0, 2pi)
    std::vector<Band> bands;        // k = 1..k_max
    std::vector<double> lambda_N;   // Neumann bracket per band
    std::vector<double> lambda_D;   // Dirichlet bracket per band
    double epsilon = 1.0;
    double coupling = 0.0;          // physical coupling a^eps

    int computed_phi_count() const { return (static_cast<int>(phi_grid.size()) + 2) / 2; }
    int phi_index(double phi) const {
        for (std::size_t i = 0; i < phi_grid.size(); ++i)
            if (phi_grid[i] == phi) return static_cast<int>(i);
        throw std::invalid_argument("phi is not a grid point");
    }
};

struct SweepOptions {
    int phi_count = 17;  // grid points on [0, pi], endpoints included
    int k_max = 5;
    EigOptions eig;
    int jobs = 1;
};

inline double phi_grid_point(int i, int phi_count) {
    if (i == phi_count - 1) return std::numbers::pi;
    return static_cast<double>(i) * std::numbers::pi / (phi_count - 1);
}

// Solves all lid conditions once per mesh and reuses each assembly across
// the whole coupling list; the eps sweep only changes the pencil.
inline std::vector<BandStructure> band_structure_multi(const CellGeometry& base, const MeshedCell& mesh,
                                                       std::span<const double> epsilons,
                                                       const SweepOptions& opt) {
    if (opt.phi_count < 2) throw std::invalid_argument("phi_count must be at least 2");
    if (opt.k_max < 2) throw std::invalid_argument("k_max must be at least 2");
    if (epsilons.empty()) throw std::invalid_argument("need at least one eps value");
    for (double e : epsilons)
        if (!(e > 0.0)) throw std::invalid_argument("eps values must be positive");

    const int P = opt.phi_count;
    const int n_tasks = P + 2;  // phi grid + Neumann + Dirichlet
    const int n_eps = static_cast<int>(epsilons.size());

    // results[task][eps][k]
    std::vector<std::vector<std::vector<double>>> results(
        n_tasks, std::vector<std::vector<double>>(n_eps));

    parallel_for(n_tasks, opt.jobs, [&](int task) {
        LidCondition lid = task < P ? LidCondition::floquet(phi_grid_point(task, P))
                                    : (task == P ? LidCondition::neumann() : LidCondition::dirichlet());
        const AssembledForms forms = assemble(mesh, lid);
        for (int e = 0; e < n_eps; ++e) {
            CellGeometry geom = base;
            geom.epsilon = epsilons[e];
            const double coupling = effective_unit_coupling(geom);
            try {
                SpectrumSlice slice = smallest_eigs(total_operator(forms, coupling), opt.k_max, opt.eig);
                const double inv_eps2 = 1.0 / (geom.epsilon * geom.epsilon);
                for (double& v : slice.eigenvalues) v *= inv_eps2;
                results[task][e] = std::move(slice.eigenvalues);
            } catch (const SolverFailure& f) {
                throw SweepFailure("eigensolve failed at lid " + lid.describe() + ", eps=" +
                                   std::to_string(geom.epsilon) + ": " + f.what());
            }
        }
    });

    constexpr double two_pi = 2.0 * std::numbers::pi;
    std::vector<BandStructure> out(n_eps);
    for (int e = 0; e < n_eps; ++e) {
        BandStructure& bs = out[e];
        bs.epsilon = epsilons[e];
        bs.coupling = coupling_at(base, epsilons[e]);
        bs.phi_grid.resize(2 * P - 2);
        for (int i = 0; i < P; ++i) bs.phi_grid[i] = phi_grid_point(i, P);
        for (int i = P; i < 2 * P - 2; ++i) bs.phi_grid[i] = two_pi - phi_grid_point(2 * P - 2 - i, P);
        bs.bands.resize(opt.k_max);
        for (int k = 0; k < opt.k_max; ++k) {
            Band& band = bs.bands[k];
            band.values.resize(bs.phi_grid.size());
            for (int i = 0; i < P; ++i) band.values[i] = results[i][e][k];
            for (int i = P; i < 2 * P - 2; ++i) band.values[i] = results[2 * P - 2 - i][e][k];
            band.lo = *std::min_element(band.values.begin(), band.values.end());
            band.hi = *std::max_element(band.values.begin(), band.values.end());
        }
        bs.lambda_N = results[P][e];
        bs.lambda_D = results[P + 1][e];
    }
    return out;
}

inline BandStructure band_structure(const CellGeometry& geom, const MeshedCell& mesh, int phi_count,
                                    int k_max, const EigOptions& eig = {}, int jobs = 1) {
    SweepOptions opt;
    opt.phi_count = phi_count;
    opt.k_max = k_max;
    opt.eig = eig;
    opt.jobs = jobs;
    const double eps = geom.epsilon;
    return band_structure_multi(geom, mesh, std::span<const double>(&eps, 1), opt).front();
}

struct Gap {
    enum class Status { Estimated, Certified };
    double lo = 0.0;
    double hi = 0.0;
    Status status = Status::Estimated;
};

struct GapReport {
    double window = 0.0;
    std::vector<Gap> gaps;
    double alpha_eps = std::numeric_limits<double>::quiet_NaN();  // lambda_1^+
    double beta_eps = std::numeric_limits<double>::quiet_NaN();   // lambda_2^-
};

// Estimated gaps come from grid extrema of consecutive bands; a gap is
// certified when the Dirichlet/Neumann brackets already separate, which is
// a statement independent of the phi grid resolution.
inline GapReport detect_gaps(const BandStructure& bs, double L) {
    if (!(L > 0.0)) throw std::invalid_argument("window must be positive");
    GapReport report;
    report.window = L;
    const int nb = static_cast<int>(bs.bands.size());
    for (int k = 0; k + 1 < nb; ++k) {
        Gap g;
        if (bs.lambda_D[k] < bs.lambda_N[k + 1]) {
            g = {bs.lambda_D[k], bs.lambda_N[k + 1], Gap::Status::Certified};
        } else if (bs.bands[k].hi < bs.bands[k + 1].lo) {
            g = {bs.bands[k].hi, bs.bands[k + 1].lo, Gap::Status::Estimated};
        } else {
            continue;
        }
        if (g.lo >= L) continue;
        g.hi = std::min(g.hi, L);
        if (!(g.hi > g.lo)) continue;
        report.gaps.push_back(g);
    }
    if (nb >= 2) {
        report.alpha_eps = bs.bands[0].hi;
        report.beta_eps = bs.bands[1].lo;
    }
    return report;
}

inline std::pair<double, double> first_gap_endpoints(const BandStructure& bs) {
    if (bs.bands.size() < 2) throw std::invalid_argument("need at least two bands for gap endpoints");
    return {bs.bands[0].hi, bs.bands[1].lo};
}

// Violations of the structural invariants, empty when clean.  tol is the
// eigensolver tolerance the sweep was run with.
inline std::vector<std::string> check_band_structure(const BandStructure& bs, double tol) {
    std::vector<std::string> bad;
    const int nb = static_cast<int>(bs.bands.size());
    for (int k = 0; k < nb; ++k) {
        const double slack = 10.0 * tol * std::max(1.0, bs.lambda_D[k]);
        for (std::size_t i = 0; i < bs.phi_grid.size(); ++i) {
            const double v = bs.bands[k].values[i];
            if (v < bs.lambda_N[k] - slack || v > bs.lambda_D[k] + slack)
                bad.push_back("enclosure violated at band " + std::to_string(k + 1) +
                              ", phi=" + std::to_string(bs.phi_grid[i]));
        }
    }
    if (nb >= 1 && std::abs(bs.bands[0].lo) > 10.0 * tol)
        bad.push_back("first band does not start at zero");
    return bad;
}

} // namespace dpband
