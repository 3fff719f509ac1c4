// Command-line front end: reads an experiment config, dispatches the
// solvers, and emits CSV/JSON results and SVG plots.
//
// Exit codes: 0 ok, 1 check failed, 2 config/geometry error, 3 numerical
// failure.  The output directory comes from -o, else the DPBAND_OUTPUT_DIR
// environment variable, else the config's study.output_dir.

#include "dpband/dpband.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace dpband;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitNumericalError = 3;

LidCondition parse_lid(const std::string& text) {
    if (text == "neumann") return LidCondition::neumann();
    if (text == "dirichlet") return LidCondition::dirichlet();
    const std::string prefix = "floquet:";
    if (text.rfind(prefix, 0) == 0) {
        std::size_t used = 0;
        const std::string arg = text.substr(prefix.size());
        const double phi = std::stod(arg, &used);
        if (used != arg.size()) throw std::invalid_argument("bad floquet angle '" + arg + "'");
        return LidCondition::floquet(phi);
    }
    throw std::invalid_argument("lid must be neumann, dirichlet, or floquet:PHI");
}

fs::path resolve_output_dir(const std::string& cli_dir, const ExperimentConfig& cfg) {
    if (!cli_dir.empty()) return cli_dir;
    if (const char* env = std::getenv("DPBAND_OUTPUT_DIR"); env && *env) return env;
    return cfg.output_dir;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

struct CommonArgs {
    std::string config_path;
    std::string output_dir;
    int jobs = 0;  // 0: machine parallelism
};

int run_cell_spectrum(const CommonArgs& args, double epsilon, const std::string& lid_text, int k,
                      const std::string& out_file) {
    const ExperimentConfig cfg = parse_config_file(args.config_path);
    const CellGeometry geom = cfg.geometry(epsilon);
    geom.validate();
    const LidCondition lid = parse_lid(lid_text);
    const MeshedCell mesh = build_cell_mesh(geom, cfg.h);
    const int count = k > 0 ? k : cfg.k_max;
    const SpectrumSlice slice = solve_cell(geom, mesh, lid, count, cfg.eig_options());

    std::ostringstream body;
    body << "# cell spectrum; lambda in 1/length^2\n";
    body << "# epsilon = " << fmt_g(epsilon) << ", lid = " << lid.describe() << ", h = " << fmt_g(mesh.h)
         << "\n";
    body << "k,lambda,residual\n";
    for (std::size_t i = 0; i < slice.eigenvalues.size(); ++i)
        body << (i + 1) << ',' << fmt_g(slice.eigenvalues[i]) << ',' << fmt_g(slice.residuals[i]) << '\n';
    if (out_file.empty()) {
        std::cout << body.str();
    } else {
        std::ofstream os = open_out(out_file);
        os << body.str();
        std::cout << "wrote " << out_file << "\n";
    }
    return kExitOk;
}

int run_band(const CommonArgs& args, double epsilon, double window_flag, const std::string& svg_path) {
    const ExperimentConfig cfg = parse_config_file(args.config_path);
    const CellGeometry geom = cfg.geometry(epsilon);
    geom.validate();
    const MeshedCell mesh = build_cell_mesh(geom, cfg.h);
    const double window = window_flag > 0.0 ? window_flag : cfg.window;

    const BandStructure bs =
        band_structure(geom, mesh, cfg.phi_count, std::max(2, cfg.k_max), cfg.eig_options(),
                       args.jobs > 0 ? args.jobs : default_jobs());
    const GapReport gaps = detect_gaps(bs, window);

    const fs::path dir = resolve_output_dir(args.output_dir, cfg);
    fs::create_directories(dir);
    {
        std::ofstream os = open_out(dir / "bands.csv");
        write_band_csv(os, bs);
    }
    {
        std::ofstream os = open_out(dir / "brackets.csv");
        write_brackets_csv(os, bs);
    }
    open_out(dir / "gaps.json") << gap_report_json(gaps, epsilon).dump(2) << "\n";
    if (!svg_path.empty()) {
        std::ofstream os = open_out(svg_path);
        write_band_svg(os, bs, window);
    }

    std::cout << "epsilon = " << fmt_g(epsilon) << ", bands <= " << bs.bands.size()
              << ", window = " << fmt_g(window) << "\n";
    for (const Gap& g : gaps.gaps)
        std::cout << "gap (" << fmt_g(g.lo) << ", " << fmt_g(g.hi) << ") "
                  << (g.status == Gap::Status::Certified ? "certified" : "estimated") << "\n";
    if (gaps.gaps.empty()) std::cout << "no gap detected in the window\n";
    std::cout << "wrote " << (dir / "bands.csv").string() << ", brackets.csv, gaps.json\n";
    return kExitOk;
}

int run_gap_convergence(const CommonArgs& args, const std::string& svg_path) {
    const ExperimentConfig cfg = parse_config_file(args.config_path);
    const CellGeometry geom = cfg.geometry();
    geom.validate();

    StudyOptions opt;
    opt.h = cfg.h;
    opt.phi_count = cfg.phi_count;
    opt.k_max = std::max(2, cfg.k_max);
    opt.eig = cfg.eig_options();
    opt.jobs = args.jobs > 0 ? args.jobs : default_jobs();
    const ConvergenceReport report = gap_convergence_study(geom, cfg.epsilons, opt);

    const fs::path dir = resolve_output_dir(args.output_dir, cfg);
    fs::create_directories(dir);
    {
        std::ofstream os = open_out(dir / "convergence.csv");
        write_convergence_csv(os, report);
    }
    open_out(dir / "convergence.json") << convergence_json(report).dump(2) << "\n";
    if (!svg_path.empty()) {
        std::ofstream os = open_out(svg_path);
        write_convergence_svg(os, report);
    }

    std::cout << "alpha = " << fmt_g(report.alpha) << ", beta = " << fmt_g(report.beta) << "\n";
    for (const ConvergenceRecord& rec : report.records)
        std::cout << "eps = " << fmt_g(rec.epsilon) << ": alpha_eps = " << fmt_g(rec.alpha_eps)
                  << " (err " << fmt_g(rec.err_alpha) << "), beta_eps = " << fmt_g(rec.beta_eps) << " (err "
                  << fmt_g(rec.err_beta) << ")\n";
    std::cout << "blow-up fit slope = " << fmt_g(report.blowup.slope) << "\n";
    std::cout << "wrote " << (dir / "convergence.csv").string() << ", convergence.json\n";
    return kExitOk;
}

int run_oracle_check(const CommonArgs& args, bool inject_jump_sign_fault) {
    const ExperimentConfig cfg = parse_config_file(args.config_path);
    EigOptions eig = cfg.eig_options();
    eig.tol = std::max(eig.tol, 1e-10);
    bool all_ok = true;
    auto report = [&](const std::string& name, bool ok, const std::string& detail) {
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << ": " << detail << "\n";
        all_ok = all_ok && ok;
    };

    // Trap-free Neumann cell against the separable spectrum, one halving.
    {
        CellGeometry free_cell;
        free_cell.d = cfg.d;
        const std::vector<double> exact = separable_neumann_eigs(cfg.d, 4);
        const MeshedCell coarse = build_cell_mesh(free_cell, cfg.h);
        const MeshedCell fine = refine(coarse);
        const SpectrumSlice sc = solve_cell(free_cell, coarse, LidCondition::neumann(), 4, eig);
        const SpectrumSlice sf = solve_cell(free_cell, fine, LidCondition::neumann(), 4, eig);
        bool ok = true;
        double worst_ratio = 0.0, worst_err = 0.0;
        for (int i = 1; i < 4; ++i) {
            const double ec = sc.eigenvalues[i] - exact[i];
            const double ef = sf.eigenvalues[i] - exact[i];
            const double ratio = ec / ef;
            worst_ratio = std::max(worst_ratio, std::abs(ratio - 4.0));
            worst_err = std::max(worst_err, std::abs(ef));
            ok = ok && ratio >= 3.0 && ratio <= 5.0 && std::abs(ef) <= 0.1;
        }
        report("separable-neumann-convergence", ok,
               "max |ratio-4| = " + fmt_g(worst_ratio) + ", fine-mesh err " + fmt_g(worst_err) +
                   " (abs floor 0.1)");
    }

    // Free-limit and edge definition of the 1D dispersion.
    {
        const auto band1 = kp_band_edges(1e8, 1);
        const double pi2 = std::numbers::pi * std::numbers::pi;
        bool ok = std::abs(band1.second - pi2) / pi2 < 1e-5 && band1.first == 0.0;
        double worst = 0.0;
        for (int b = 1; b <= 3; ++b) {
            const auto [lo, hi] = kp_band_edges(1.0, b);
            if (b > 1) worst = std::max(worst, std::abs(std::abs(kp_half_trace(1.0, std::sqrt(lo))) - 1.0));
            worst = std::max(worst, std::abs(std::abs(kp_half_trace(1.0, std::sqrt(hi))) - 1.0));
        }
        ok = ok && worst < 1e-9;
        report("kp-dispersion", ok, "free limit + |half-trace| = 1 at edges, residual " + fmt_g(worst));
    }

    // The analytic dispersion against the independent discrete chain.
    {
        EigOptions chain_eig = eig;
        chain_eig.tol = 1e-8;
        const auto [b1, b2] = detail::chain_band_edges(1.0, 10000, chain_eig);
        const auto k1 = kp_band_edges(1.0, 1);
        const auto k2 = kp_band_edges(1.0, 2);
        const double err = std::max({std::abs(b1.second - k1.second) / k1.second,
                                     std::abs(b2.first - k2.first) / k2.first,
                                     std::abs(b2.second - k2.second) / k2.second});
        report("kp-vs-discrete-chain", err < 1e-3, "band edges at 1e4 nodes, rel err " + fmt_g(err));
    }

    // 2D jump assembly against the composed separable + chain oracle.
    {
        const double tol = std::max(0.01, 40.0 * cfg.h * cfg.h);
        try {
            const double err = detail::straight_interface_error(cfg.d, 1.0, cfg.h, 4, eig,
                                                                inject_jump_sign_fault ? 1.0 : -1.0);
            report("straight-interface", err <= tol, "max rel err " + fmt_g(err) + " (tol " + fmt_g(tol) + ")");
        } catch (const SolverFailure& f) {
            report("straight-interface", false, f.what());
        }
    }

    // Kernel and conjugation symmetry on the configured geometry.
    {
        const CellGeometry geom = cfg.geometry();
        geom.validate();
        const MeshedCell mesh = build_cell_mesh(geom, cfg.h);
        const double l0 = solve_cell(geom, mesh, LidCondition::floquet(0.0), 1, eig).eigenvalues[0];
        const double phi = 2.0 * std::numbers::pi / 5.0;
        const SpectrumSlice sp = solve_cell(geom, mesh, LidCondition::floquet(phi), 3, eig);
        const SpectrumSlice sm =
            solve_cell(geom, mesh, LidCondition::floquet(2.0 * std::numbers::pi - phi), 3, eig);
        double sym = 0.0;
        for (int i = 0; i < 3; ++i)
            sym = std::max(sym, std::abs(sp.eigenvalues[i] - sm.eigenvalues[i]) /
                                    std::max(1.0, std::abs(sp.eigenvalues[i])));
        const bool ok = std::abs(l0) <= 1e-8 && sym <= 10.0 * eig.tol;
        report("kernel-and-symmetry", ok,
               "|lambda_1(phi=0)| = " + fmt_g(std::abs(l0)) + ", conjugation dev " + fmt_g(sym));
    }

    return all_ok ? kExitOk : kExitCheckFailed;
}

int run_debug_dump(const CommonArgs& args, double epsilon, const std::string& lid_text) {
    const ExperimentConfig cfg = parse_config_file(args.config_path);
    const CellGeometry geom = cfg.geometry(epsilon);
    geom.validate();
    const MeshedCell mesh = build_cell_mesh(geom, cfg.h);
    const LidCondition lid = parse_lid(lid_text);
    const AssembledForms forms = assemble(mesh, lid);

    const fs::path dir = resolve_output_dir(args.output_dir, cfg);
    fs::create_directories(dir);
    {
        std::ofstream os = open_out(dir / "mesh.txt");
        dump_mesh(mesh, os);
    }
    {
        std::ofstream os = open_out(dir / "K.txt");
        dump_matrix(forms.K, os);
    }
    {
        std::ofstream os = open_out(dir / "J.txt");
        dump_matrix(forms.J, os);
    }
    {
        std::ofstream os = open_out(dir / "M.txt");
        dump_matrix(forms.M, os);
    }
    std::cout << "wrote mesh.txt, K.txt, J.txt, M.txt to " << dir.string() << " (dof " << forms.dof_full
              << " -> " << forms.dof_free << ")\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"band-structure solver for a periodic waveguide with jump-coupled traps"};
    app.require_subcommand(1);

    CommonArgs args;
    double epsilon = 1.0;
    double window = 0.0;
    int k = 0;
    std::string lid_text = "neumann";
    std::string out_file, svg_path;
    bool inject_fault = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("config", args.config_path, "experiment config file")->required();
        cmd->add_option("-o,--output", args.output_dir, "output directory (or file for cell-spectrum)");
        cmd->add_option("--jobs", args.jobs, "parallelism for eps/phi sweeps (default: machine)");
    };

    CLI::App* cell = app.add_subcommand("cell-spectrum", "smallest cell eigenvalues for one lid condition");
    add_common(cell);
    cell->add_option("--epsilon", epsilon, "cell scale (default 1)");
    cell->add_option("--lid", lid_text, "neumann | dirichlet | floquet:PHI");
    cell->add_option("--k", k, "number of eigenvalues (default: numerics k_max)");

    CLI::App* band = app.add_subcommand("band", "band structure, brackets, and gap report at one epsilon");
    add_common(band);
    band->add_option("--epsilon", epsilon, "cell scale (default 1)");
    band->add_option("--L,--window", window, "spectral window (default: study window)");
    band->add_option("--svg", svg_path, "write a band-diagram SVG");

    CLI::App* conv = app.add_subcommand("gap-convergence", "gap-endpoint convergence over the eps list");
    add_common(conv);
    conv->add_option("--svg", svg_path, "write an endpoint-convergence SVG");

    CLI::App* oracle = app.add_subcommand("oracle-check", "run the independent-reference checks");
    add_common(oracle);
    oracle->add_flag("--inject-jump-sign-fault", inject_fault, "flip the jump coupling sign (test fixture)")
        ->group("");  // hidden

    CLI::App* dump = app.add_subcommand("debug-dump", "dump mesh and assembled matrices");
    add_common(dump);
    dump->add_option("--epsilon", epsilon, "cell scale (default 1)");
    dump->add_option("--lid", lid_text, "neumann | dirichlet | floquet:PHI");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitConfigError;
    }

    try {
        if (cell->parsed()) return run_cell_spectrum(args, epsilon, lid_text, k, args.output_dir);
        if (band->parsed()) return run_band(args, epsilon, window, svg_path);
        if (conv->parsed()) return run_gap_convergence(args, svg_path);
        if (oracle->parsed()) return run_oracle_check(args, inject_fault);
        if (dump->parsed()) return run_debug_dump(args, epsilon, lid_text);
    } catch (const ConfigError& e) {
        std::cerr << args.config_path << ":" << e.what() << "\n";
        return kExitConfigError;
    } catch (const GeometryError& e) {
        std::cerr << "geometry error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const MeshError& e) {
        std::cerr << "mesh error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const OracleFailure& e) {
        std::cerr << "check failed: " << e.what() << "\n";
        return kExitCheckFailed;
    } catch (const SolverFailure& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return kExitNumericalError;
    } catch (const SweepFailure& e) {
        std::cerr << "sweep failure: " << e.what() << "\n";
        return kExitNumericalError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumericalError;
    }
    return kExitConfigError;
}
