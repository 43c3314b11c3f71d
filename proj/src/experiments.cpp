#include "kfp/experiments.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <vector>

#include "kfp/errors.hpp"
#include "kfp/evolve.hpp"
#include "kfp/oscillator.hpp"
#include "kfp/resolvent.hpp"

namespace fs = std::filesystem;

namespace kfp {

using cplx = std::complex<double>;

namespace {

std::string join(const std::string& dir, const char* name) {
    return (fs::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw precondition_error("cannot create output directory '" + dir + "'");
}

// full truncated spectrum, sorted by real part. The dedicated spectrum
// operation refuses the polluted top of the matrix; the sweep table reports
// it on purpose, defect column included, so convergence studies can watch
// the pollution recede as N_v grows.
Eigen::VectorXcd raw_spectrum(const HermiteBasis& basis, double xi) {
    const OscillatorMatrix mat = assemble_oscillator(basis, xi);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(mat.entries, false);
    Eigen::VectorXcd eigs = es.eigenvalues();
    std::sort(eigs.data(), eigs.data() + eigs.size(),
              [](cplx a, cplx b) { return a.real() < b.real(); });
    return eigs;
}

} // namespace

KfpOperator operator_from_config(const Config& cfg) {
    const double L = cfg.get_double("grid.L");
    const int nx = cfg.get_int("grid.N_x");
    const int nv = cfg.get_int("grid.N_v");
    const double s = cfg.get_double("weight.s", 3.0);
    const double c = cfg.get_double("potential.c", 0.0);
    std::optional<Potential> pot;
    if (c != 0.0) pot.emplace(c, cfg.get_double("potential.rho"));
    return KfpOperator(L, nx, nv, pot, s);
}

State data_from_config(const KfpOperator& op, const Config& cfg, const std::string& key) {
    const std::string kind = cfg.get_string(key, "gaussian");
    const double width = cfg.get_double(key + ".width", 1.0);
    if (!(width > 0.0))
        throw precondition_error("data '" + key + "': width must be positive");
    bool odd;
    if (kind == "gaussian")
        odd = false;
    else if (kind == "odd-gaussian")
        odd = true;
    else
        throw precondition_error("data '" + key + "': unknown kind '" + kind
                                 + "' (gaussian | odd-gaussian)");
    State u = zero_state(op.grid().box_length, op.grid().n_x, op.basis().order());
    for (int m = 0; m < op.grid().n_x; ++m) {
        const double x = op.grid().point(m) / width;
        u.coeffs(0, m) = (odd ? x : 1.0) * std::exp(-x * x / 2.0);
    }
    return u;
}

void run_spectrum(const Config& cfg, const std::string& out_dir) {
    const int nv = cfg.get_int("grid.N_v");
    const int lmax = cfg.get_int("l_max", 5);
    if (lmax < 0 || lmax >= nv)
        throw precondition_error("spectrum: l_max must lie in [0, grid.N_v)");
    const std::vector<double> xis = cfg.get_list("xi_list");

    ensure_dir(out_dir);
    const HermiteBasis basis(nv);
    CsvWriter csv(join(out_dir, "spectrum.csv"), {"xi", "l", "re", "im", "defect"});
    for (double xi : xis) {
        const Eigen::VectorXcd eigs = raw_spectrum(basis, xi);
        for (int l = 0; l <= lmax; ++l) {
            const cplx e = eigs[l];
            csv.row({xi, double(l), e.real(), e.imag(), std::abs(e - cplx(l + xi * xi, 0.0))});
        }
    }
    csv.close();
}

void run_pseudospectrum(const Config& cfg, const std::string& out_dir) {
    const int nv = cfg.get_int("grid.N_v");
    const double xi = cfg.get_double("pseudo.xi", 1.0);
    const std::vector<double> res = cfg.get_list("pseudo.re_list");
    const std::vector<double> ims = cfg.get_list("pseudo.im_list");

    ensure_dir(out_dir);
    const HermiteBasis basis(nv);
    const OscillatorMatrix mat = assemble_oscillator(basis, xi);
    CsvWriter grid(join(out_dir, "pseudospectrum.csv"), {"re", "im", "log10_norm"});
    for (double a : res)
        for (double b : ims)
            grid.row({a, b, std::log10(resolvent_norm(mat, cplx(a, b)))});
    grid.close();

    const std::vector<double> rxis = cfg.get_list("ratio.xi_list", {0.0, 1.0, 10.0, 50.0});
    const std::vector<double> rlams = cfg.get_list("ratio.lambda_list", {0.0, 1.0, 10.0, 100.0});
    double lam_top = 0.0;
    for (double l : rlams) lam_top = std::max(lam_top, l);
    // the sweep needs the resonant velocity mode j ~ lambda inside the basis
    const int rnv = cfg.get_int("ratio.N_v",
                                std::max(nv, 2 * static_cast<int>(std::ceil(lam_top)) + 200));
    const HermiteBasis rbasis(rnv);
    CsvWriter ratio(join(out_dir, "subelliptic.csv"), {"xi", "lambda", "ratio"});
    for (double rxi : rxis)
        for (double rlam : rlams) ratio.row({rxi, rlam, subelliptic_ratio(rbasis, rxi, rlam)});
    ratio.close();
}

void run_threshold(const Config& cfg, const std::string& out_dir) {
    const KfpOperator op = operator_from_config(cfg);
    ensure_dir(out_dir);
    const ThresholdReport rep = solve_threshold_equation(op);

    {
        std::ofstream out(join(out_dir, "report.txt"), std::ios::binary);
        out << "residual = " << format_g15(rep.residual) << "\n"
            << "dist_gamma = " << format_g15(rep.dist_gamma) << "\n"
            << "d1.re = " << format_g15(rep.d1.real()) << "\n"
            << "d1.im = " << format_g15(rep.d1.imag()) << "\n"
            << "sigma0.re = " << format_g15(rep.sigma0.real()) << "\n"
            << "sigma0.im = " << format_g15(rep.sigma0.imag()) << "\n"
            << "smallest_singular_value = " << format_g15(rep.smallest_singular_value)
            << "\n";
        if (!out) throw std::runtime_error("cannot write file 'report.txt'");
    }

    CsvWriter mcsv(join(out_dir, "m.csv"), {"lambda", "re", "im"});
    for (const auto& [lam, m] : rep.m_values) mcsv.row({lam, m.real(), m.imag()});
    for (double lam : cfg.get_list("m_lambdas", {})) {
        const cplx m = compute_m(op, lam);
        mcsv.row({lam, m.real(), m.imag()});
    }
    mcsv.close();

    // profile table with the flux rows the prefix sums integrate; the ladder
    // here mirrors the profile computation so the columns agree bitwise
    State ux = rep.solution;
    to_x_space(ux);
    const int nx = op.grid().n_x;
    const int nv = op.basis().order();
    SvgSeries c1s, c2s;
    CsvWriter prof(join(out_dir, "profiles.csv"), {"x", "c1", "c2", "g0", "g1"});
    for (int m = 0; m < nx; ++m) {
        const double vp = op.gradient_table()[m];
        const double du0 = 0.5 * ux.coeffs(1, m).real();
        double du1 = -0.5 * ux.coeffs(0, m).real();
        if (nv > 2) du1 += 0.5 * std::sqrt(2.0) * ux.coeffs(2, m).real();
        prof.row({op.grid().point(m), rep.c1_profile[m], rep.c2_profile[m],
                  vp * du0, vp * du1});
        c1s.x.push_back(op.grid().point(m));
        c1s.y.push_back(rep.c1_profile[m]);
        c2s.x.push_back(op.grid().point(m));
        c2s.y.push_back(rep.c2_profile[m]);
    }
    prof.close();
    c1s.label = "C1";
    c2s.label = "C2";
    write_svg_chart(join(out_dir, "c1.svg"), "boundary flux C1", "x", "C1", {c1s});
    write_svg_chart(join(out_dir, "c2.svg"), "boundary flux C2", "x", "C2", {c2s});
}

void run_decay(const Config& cfg, const std::string& out_dir) {
    const KfpOperator op = operator_from_config(cfg);
    const std::vector<double> times = cfg.get_list("times");
    if (times.size() < 2)
        throw precondition_error("decay: needs at least two times for a fit");
    const double s = cfg.get_double("decay.s", 3.0);
    const double dt = cfg.get_double("dt", 0.01);
    const State u0 = data_from_config(op, cfg, "data");
    const State g = data_from_config(op, cfg, "g");

    const DecayFit fit = decay_fit(op, u0, times, s, dt);
    const std::vector<cplx> coeff = leading_coefficient(op, u0, g, times, dt);

    ensure_dir(out_dir);
    CsvWriter dcsv(join(out_dir, "decay.csv"), {"t", "weighted_norm"});
    SvgSeries data, fitline;
    data.label = "weighted norm";
    fitline.label = "fit";
    for (size_t i = 0; i < times.size(); ++i) {
        dcsv.row({times[i], fit.weighted_norms[i]});
        data.x.push_back(times[i]);
        data.y.push_back(fit.weighted_norms[i]);
        fitline.x.push_back(times[i]);
        fitline.y.push_back(std::exp(fit.intercept) * std::pow(times[i], fit.slope));
    }
    dcsv.close();
    CsvWriter ccsv(join(out_dir, "coefficient.csv"), {"t", "re", "im"});
    for (size_t i = 0; i < times.size(); ++i)
        ccsv.row({times[i], coeff[i].real(), coeff[i].imag()});
    ccsv.close();

    write_svg_chart(join(out_dir, "decay.svg"), "weighted decay", "t", "norm",
                    {data, fitline}, true, true,
                    "slope " + format_g15(fit.slope) + ", r2 " + format_g15(fit.r_squared));
}

void run_contour(const Config& cfg, const std::string& out_dir, std::ostream& log) {
    const KfpOperator op = operator_from_config(cfg);
    const double t = cfg.get_double("t", 2.0);
    if (!(t >= 0.5))
        throw precondition_error("contour: t must be at least 0.5 for the branch "
                                 "integrand to decay");
    if (t < 1.0)
        log << "warning: the branch integrand decays slowly for t < 1, "
               "expect a long node list\n";
    const double dt = cfg.get_double("dt", 0.01);
    const ContourSpec spec =
        make_contour(t, cfg.get_double("contour.C", 2.0), cfg.get_double("contour.delta", 1e-12),
                     cfg.get_double("contour.increment", 3.0), cfg.get_int("contour.arc_panels", 8));

    State f = data_from_config(op, cfg, "f");
    State g = data_from_config(op, cfg, "g");
    to_x_space(f);
    to_x_space(g);

    ensure_dir(out_dir);
    // summed manually rather than through contour_semigroup so each node's
    // integrand lands in the table
    CsvWriter nodes(join(out_dir, "nodes.csv"), {"node.re", "node.im", "weight.re",
                                                 "weight.im", "integrand.re", "integrand.im"});
    cplx acc(0.0, 0.0);
    for (const ContourNode& node : spec.nodes) {
        const State u = solve_resolvent(op, node.z, f);
        const cplx integrand = std::exp(-t * node.z) * pairing(u, g);
        acc += node.weight * integrand;
        nodes.row({node.z.real(), node.z.imag(), node.weight.real(), node.weight.imag(),
                   integrand.real(), integrand.imag()});
    }
    nodes.close();
    const cplx via_contour = acc / cplx(0.0, 2.0 * M_PI);
    const cplx via_evolve = pairing(evolve(op, f, t, dt), g);

    CsvWriter cmp(join(out_dir, "comparison.csv"),
                  {"t", "contour.re", "contour.im", "evolve.re", "evolve.im", "rel_diff"});
    cmp.row({t, via_contour.real(), via_contour.imag(), via_evolve.real(), via_evolve.imag(),
             std::abs(via_contour - via_evolve) / std::abs(via_evolve)});
    cmp.close();
}

} // namespace kfp
