#pragma once

// CSV, JSON, and self-contained SVG emission.  Floating-point values are
// printed with %.17g so identical runs produce byte-identical files; every
// file declares the eigenvalue unit (1/length^2) in its header or metadata.

#include "dpband/asymptotics.hpp"

#include <json.hpp>

#include <cstdio>
#include <ostream>
#include <string>

namespace dpband {

inline std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_band_csv(std::ostream& os, const BandStructure& bs) {
    os << "# band structure; lambda in 1/length^2, phi in radians\n";
    os << "# epsilon = " << fmt_g(bs.epsilon) << ", coupling = " << fmt_g(bs.coupling) << "\n";
    os << "phi,k,lambda\n";
    for (std::size_t i = 0; i < bs.phi_grid.size(); ++i)
        for (std::size_t k = 0; k < bs.bands.size(); ++k)
            os << fmt_g(bs.phi_grid[i]) << ',' << (k + 1) << ',' << fmt_g(bs.bands[k].values[i]) << '\n';
}

inline void write_brackets_csv(std::ostream& os, const BandStructure& bs) {
    os << "# Neumann/Dirichlet brackets; lambda in 1/length^2\n";
    os << "k,lambda_N,lambda_D\n";
    for (std::size_t k = 0; k < bs.bands.size(); ++k)
        os << (k + 1) << ',' << fmt_g(bs.lambda_N[k]) << ',' << fmt_g(bs.lambda_D[k]) << '\n';
}

inline nlohmann::ordered_json gap_report_json(const GapReport& report, double epsilon) {
    nlohmann::ordered_json j;
    j["epsilon"] = epsilon;
    j["units"] = {{"lambda", "1/length^2"}};
    j["alpha_eps"] = report.alpha_eps;
    j["beta_eps"] = report.beta_eps;
    j["window"] = report.window;
    j["gaps"] = nlohmann::ordered_json::array();
    for (const Gap& g : report.gaps) {
        j["gaps"].push_back({{"lo", g.lo},
                             {"hi", g.hi},
                             {"status", g.status == Gap::Status::Certified ? "certified" : "estimated"}});
    }
    return j;
}

inline void write_convergence_csv(std::ostream& os, const ConvergenceReport& r) {
    os << "# gap-endpoint convergence; lambda in 1/length^2\n";
    os << "# alpha = " << fmt_g(r.alpha) << ", beta = " << fmt_g(r.beta) << ", h = " << fmt_g(r.h)
       << ", richardson = " << (r.richardson ? 1 : 0) << "\n";
    os << "epsilon,alpha_eps,beta_eps,l1D,l1pi,l2N,l20,err_alpha,err_beta\n";
    for (const ConvergenceRecord& rec : r.records) {
        os << fmt_g(rec.epsilon) << ',' << fmt_g(rec.alpha_eps) << ',' << fmt_g(rec.beta_eps) << ','
           << fmt_g(rec.l1D) << ',' << fmt_g(rec.l1pi) << ',' << fmt_g(rec.l2N) << ',' << fmt_g(rec.l20)
           << ',' << fmt_g(rec.err_alpha) << ',' << fmt_g(rec.err_beta) << '\n';
    }
}

inline nlohmann::ordered_json convergence_json(const ConvergenceReport& r) {
    nlohmann::ordered_json j;
    j["units"] = {{"lambda", "1/length^2"}};
    j["alpha"] = r.alpha;
    j["beta"] = r.beta;
    j["h"] = r.h;
    j["phi_count"] = r.phi_count;
    j["richardson"] = r.richardson;
    j["coupling_limit_dev"] = r.coupling_limit_dev;
    j["err_alpha_decreasing"] = r.err_alpha_decreasing;
    j["err_beta_decreasing"] = r.err_beta_decreasing;
    j["blowup_fit"] = {{"slope", r.blowup.slope}, {"intercept", r.blowup.intercept}};
    j["records"] = nlohmann::ordered_json::array();
    for (const ConvergenceRecord& rec : r.records) {
        j["records"].push_back({{"epsilon", rec.epsilon},
                                {"alpha_eps", rec.alpha_eps},
                                {"beta_eps", rec.beta_eps},
                                {"l1D", rec.l1D},
                                {"l1pi", rec.l1pi},
                                {"l2N", rec.l2N},
                                {"l20", rec.l20},
                                {"l2pi", rec.l2pi},
                                {"E_D", rec.E_D},
                                {"E_N", rec.E_N},
                                {"err_alpha", rec.err_alpha},
                                {"err_beta", rec.err_beta}});
    }
    return j;
}

namespace detail {

// Minimal line-plot canvas; everything inline, no external assets.
struct SvgCanvas {
    std::ostream& os;
    double width = 640, height = 440;
    double ml = 64, mr = 16, mt = 28, mb = 44;
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;

    double px(double x) const { return ml + (x - x0) / (x1 - x0) * (width - ml - mr); }
    double py(double y) const { return height - mb - (y - y0) / (y1 - y0) * (height - mt - mb); }

    void begin(const std::string& title, const std::string& xlabel, const std::string& ylabel) {
        os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << width << ' ' << height
           << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
        os << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
        os << "<text x=\"" << 0.5 * width << "\" y=\"16\" text-anchor=\"middle\">" << title << "</text>\n";
        os << "<text x=\"" << 0.5 * width << "\" y=\"" << height - 8 << "\" text-anchor=\"middle\">" << xlabel
           << "</text>\n";
        os << "<text x=\"14\" y=\"" << 0.5 * height
           << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " << 0.5 * height << ")\">" << ylabel
           << "</text>\n";
        // frame and ticks
        os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << width - ml - mr << "\" height=\""
           << height - mt - mb << "\" fill=\"none\" stroke=\"black\"/>\n";
        for (int t = 0; t <= 4; ++t) {
            const double fx = x0 + t * (x1 - x0) / 4.0;
            const double fy = y0 + t * (y1 - y0) / 4.0;
            char lab[40];
            std::snprintf(lab, sizeof(lab), "%.4g", fx);
            os << "<text x=\"" << px(fx) << "\" y=\"" << height - mb + 16 << "\" text-anchor=\"middle\">" << lab
               << "</text>\n";
            std::snprintf(lab, sizeof(lab), "%.4g", fy);
            os << "<text x=\"" << ml - 6 << "\" y=\"" << py(fy) + 4 << "\" text-anchor=\"end\">" << lab
               << "</text>\n";
        }
    }
    void polyline(const std::vector<double>& xs, const std::vector<double>& ys, const std::string& color,
                  bool dashed = false) {
        os << "<polyline fill=\"none\" stroke=\"" << color << "\"";
        if (dashed) os << " stroke-dasharray=\"5 4\"";
        os << " points=\"";
        for (std::size_t i = 0; i < xs.size(); ++i) {
            char pt[64];
            std::snprintf(pt, sizeof(pt), "%.2f,%.2f ", px(xs[i]), py(ys[i]));
            os << pt;
        }
        os << "\"/>\n";
    }
    void hline(double y, const std::string& color, bool dashed = true) {
        polyline({x0, x1}, {y, y}, color, dashed);
    }
    void band_rect(double lo, double hi, const std::string& color) {
        os << "<rect x=\"" << ml << "\" y=\"" << py(hi) << "\" width=\"" << width - ml - mr << "\" height=\""
           << py(lo) - py(hi) << "\" fill=\"" << color << "\" opacity=\"0.25\"/>\n";
    }
    void label(double x, double y, const std::string& text, const std::string& color) {
        os << "<text x=\"" << px(x) << "\" y=\"" << py(y) - 4 << "\" fill=\"" << color << "\">" << text
           << "</text>\n";
    }
    void end() { os << "</svg>\n"; }
};

inline const char* series_color(std::size_t i) {
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    return palette[i % 6];
}

} // namespace detail

inline void write_band_svg(std::ostream& os, const BandStructure& bs, double window) {
    detail::SvgCanvas c{os};
    c.x0 = 0.0;
    c.x1 = 2.0 * std::numbers::pi;
    c.y0 = 0.0;
    double ymax = window;
    for (const Band& b : bs.bands) ymax = std::max(ymax, std::min(b.hi, 4.0 * window));
    c.y1 = 1.05 * ymax;
    c.begin("band structure, epsilon = " + fmt_g(bs.epsilon), "phi", "lambda [1/length^2]");
    const GapReport gaps = detect_gaps(bs, window);
    for (const Gap& g : gaps.gaps) c.band_rect(g.lo, g.hi, "#cccccc");
    for (std::size_t k = 0; k < bs.bands.size(); ++k) {
        std::vector<double> ys = bs.bands[k].values;
        for (double& y : ys) y = std::min(y, c.y1);
        c.polyline(bs.phi_grid, ys, detail::series_color(k));
    }
    c.end();
}

inline void write_convergence_svg(std::ostream& os, const ConvergenceReport& r) {
    detail::SvgCanvas c{os};
    c.x0 = 0.0;
    c.x1 = r.records.empty() ? 1.0 : 1.05 * r.records.front().epsilon;
    c.y0 = 0.0;
    double ymax = r.beta;
    for (const ConvergenceRecord& rec : r.records) ymax = std::max({ymax, rec.alpha_eps, rec.beta_eps});
    c.y1 = 1.1 * ymax;
    c.begin("gap endpoints vs epsilon", "epsilon", "lambda [1/length^2]");
    std::vector<double> xs, as, bsv;
    for (const ConvergenceRecord& rec : r.records) {
        xs.push_back(rec.epsilon);
        as.push_back(rec.alpha_eps);
        bsv.push_back(rec.beta_eps);
    }
    c.hline(r.alpha, detail::series_color(0));
    c.hline(r.beta, detail::series_color(1));
    c.polyline(xs, as, detail::series_color(0));
    c.polyline(xs, bsv, detail::series_color(1));
    c.label(c.x1 * 0.55, r.alpha, "alpha_eps -> alpha", detail::series_color(0));
    c.label(c.x1 * 0.55, r.beta, "beta_eps -> beta", detail::series_color(1));
    c.end();
}

} // namespace dpband
