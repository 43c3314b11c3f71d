#include "kfp/acceptance.hpp"

#include <Eigen/SVD>

#include <chrono>
#include <cmath>
#include <complex>
#include <functional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "kfp/evolve.hpp"
#include "kfp/io.hpp"
#include "kfp/oscillator.hpp"
#include "kfp/resolvent.hpp"

namespace kfp {

namespace {

using cplx = std::complex<double>;

State gaussian_state(const KfpOperator& op, double width, double center, bool odd = false) {
    State u = zero_state(op.grid().box_length, op.grid().n_x, op.basis().order());
    for (int m = 0; m < op.grid().n_x; ++m) {
        const double x = (op.grid().point(m) - center) / width;
        u.coeffs(0, m) = (odd ? x : 1.0) * std::exp(-x * x / 2.0);
    }
    return u;
}

struct Suite {
    std::ostream& out;
    bool all_ok = true;
    int index = 0;

    // body returns pass/fail and appends a short detail note
    void criterion(const std::string& label, double budget_s,
                   const std::function<bool(std::ostringstream&)>& body) {
        ++index;
        std::ostringstream detail;
        const auto t0 = std::chrono::steady_clock::now();
        bool ok = false;
        try {
            ok = body(detail);
        } catch (const std::exception& e) {
            detail << "exception: " << e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_budget = secs < budget_s;
        all_ok = all_ok && ok && in_budget;
        out << (ok && in_budget ? "pass" : "FAIL") << "  " << index << ". " << label;
        const std::string note = detail.str();
        if (!note.empty()) out << " (" << note << ")";
        std::ostringstream t;
        t.setf(std::ios::fixed);
        t.precision(1);
        t << secs;
        out << " [" << t.str() << "s, budget " << format_g15(budget_s) << "s"
            << (in_budget ? "" : " EXCEEDED") << "]\n";
        out.flush();
    }
};

} // namespace

bool run_acceptance_suite(std::ostream& out) {
    Suite suite{out};

    suite.criterion(
        "oscillator eigenvalues match l + xi^2 to 1e-6", 1.0, [](std::ostringstream& d) {
            const HermiteBasis basis(64);
            double worst = 0.0;
            for (double xi : {0.0, 0.5, 1.0, 2.0}) {
                const Eigen::VectorXcd eigs =
                    oscillator_spectrum(assemble_oscillator(basis, xi), 6);
                for (int l = 0; l <= 5; ++l)
                    worst = std::max(worst, std::abs(eigs[l] - cplx(l + xi * xi, 0.0)));
            }
            d << "worst defect " << format_g15(worst);
            return worst <= 1e-6;
        });

    suite.criterion(
        "spectral projectors are idempotent and intertwine", 5.0, [](std::ostringstream& d) {
            const HermiteBasis basis(64);
            double worst_idem = 0.0, worst_eig = 0.0;
            for (double xi : {0.0, 0.5, 1.0, 2.0})
                for (int l = 0; l <= 5; ++l) {
                    const auto [idem, eig] = riesz_residuals_ext(basis, xi, l);
                    worst_idem = std::max(worst_idem, idem);
                    worst_eig = std::max(worst_eig, eig);
                }
            d << "worst |P^2-P| " << format_g15(worst_idem) << ", worst |AP-zP| "
              << format_g15(worst_eig);
            return worst_idem <= 1e-8 && worst_eig <= 1e-6;
        });

    suite.criterion(
        "subelliptic gain is uniform across xi and lambda", 30.0, [](std::ostringstream& d) {
            const HermiteBasis basis(25000);
            double lo = 1e300, hi = 0.0;
            bool finite = true;
            for (double xi : {0.0, 0.05, 0.5, 5.0, 50.0})
                for (double lam : {0.0, 1.0, 10.0, 100.0, 1000.0, 10000.0}) {
                    const double r = subelliptic_ratio(basis, xi, lam);
                    finite = finite && std::isfinite(r) && r > 0.0;
                    lo = std::min(lo, r);
                    hi = std::max(hi, r);
                }
            d << "ratio range [" << format_g15(lo) << ", " << format_g15(hi) << "]";
            return finite && hi <= 10.0 * lo;
        });

    suite.criterion(
        "the filtered maxwellian is stationary to 1e-8", 1.0, [](std::ostringstream& d) {
            const KfpOperator op(400.0, 1024, 16, Potential(1.0, 5.0));
            const State gamma = op.maxwellian();
            const double rel = state_norm(op.apply(gamma)) / state_norm(gamma);
            d << "|P gamma| / |gamma| = " << format_g15(rel);
            return rel <= 1e-8;
        });

    suite.criterion(
        "the real part of the quadratic form is the ladder norm", 1.0,
        [](std::ostringstream& d) {
            const KfpOperator op(50.0, 128, 16, Potential(1.0, 5.0));
            std::mt19937_64 rng(20240701);
            std::normal_distribution<double> gauss;
            double worst = 0.0;
            for (int trial = 0; trial < 20; ++trial) {
                State u = zero_state(50.0, 128, 16);
                for (int m = 0; m < 128; ++m)
                    for (int j = 0; j < 16; ++j)
                        u.coeffs(j, m) = cplx(gauss(rng), gauss(rng));
                u.coeffs /= state_norm(u);
                const double re_form = pairing(op.apply(u), u).real();
                double ladder = 0.0;
                const double dx = op.grid().dx();
                for (int m = 0; m < 128; ++m)
                    for (int j = 0; j < 16; ++j)
                        ladder += dx * j * std::norm(u.coeffs(j, m));
                worst = std::max(worst, std::abs(re_form - ladder));
            }
            d << "worst |Re<Pu,u> - |au|^2| = " << format_g15(worst);
            return worst <= 1e-10;
        });

    suite.criterion(
        "the coupling pairing <W gamma, gamma0> vanishes", 1.0, [](std::ostringstream& d) {
            const KfpOperator op(400.0, 1024, 16, Potential(1.0, 5.0));
            const double s0 =
                std::abs(pairing(op.apply_w(op.maxwellian()), op.gamma0()));
            d << "|<W gamma, gamma0>| = " << format_g15(s0);
            return s0 <= 1e-10;
        });

    suite.criterion(
        "the threshold equation is solved by the maxwellian profile", 300.0,
        [](std::ostringstream& d) {
            const KfpOperator op(200.0, 256, 12, Potential(1.0, 5.0));
            const ThresholdReport rep = solve_threshold_equation(op);
            const double c2_edge = std::max(std::abs(rep.c2_profile[0]),
                                            std::abs(rep.c2_profile[op.grid().n_x - 1]));
            d << "residual " << format_g15(rep.residual) << ", dist "
              << format_g15(rep.dist_gamma) << ", |d1| " << format_g15(std::abs(rep.d1))
              << ", |C2 edge| " << format_g15(c2_edge);
            return rep.residual <= 0.05 && rep.dist_gamma <= 0.05
                   && std::abs(rep.d1) <= 1e-3 && c2_edge <= 1e-3;
        });

    suite.criterion(
        "the scattering coefficient tends to one at the edge", 120.0,
        [](std::ostringstream& d) {
            const KfpOperator op(400.0, 1024, 12, Potential(1.0, 5.0));
            const cplx m = compute_m(op, 1e-3);
            d << "m(-1e-3) = " << format_g15(m.real()) << " + " << format_g15(m.imag())
              << "i";
            return std::abs(m - cplx(1.0, 0.0)) <= 0.1;
        });

    suite.criterion(
        "the resolvent edge limit is the rank-one gamma pairing", 300.0,
        [](std::ostringstream& d) {
            const KfpOperator op(400.0, 2048, 12, Potential(1.0, 5.0));
            const State gamma = op.maxwellian();
            const std::vector<State> data = {gaussian_state(op, 1.0, 0.0),
                                             gaussian_state(op, 1.5, 0.0),
                                             gaussian_state(op, 1.0, 3.0)};
            const std::vector<double> lambdas = {9e-3, 4e-3, 1e-3};

            // shared solves: each R(-lambda) f serves every g
            Eigen::Matrix3cd limit, target;
            std::vector<std::vector<cplx>> vals(3, std::vector<cplx>(3));
            for (int i = 0; i < 3; ++i) {
                std::vector<std::vector<cplx>> sweep(3);
                for (double lam : lambdas) {
                    const State u = solve_resolvent(op, cplx(-lam, 0.0), data[i]);
                    for (int j = 0; j < 3; ++j)
                        sweep[j].push_back(std::sqrt(lam) * pairing(u, data[j]));
                }
                const double s1 = std::sqrt(lambdas[1]), s2 = std::sqrt(lambdas[2]);
                for (int j = 0; j < 3; ++j) {
                    limit(i, j) = (s1 * sweep[j][2] - s2 * sweep[j][1]) / (s1 - s2);
                    target(i, j) =
                        0.5 * pairing(data[i], gamma) * pairing(gamma, data[j]);
                }
            }
            double worst_rel = 0.0;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    worst_rel = std::max(worst_rel, std::abs(limit(i, j) - target(i, j))
                                                        / std::abs(target(i, j)));
            Eigen::JacobiSVD<Eigen::Matrix3cd> svd(limit);
            const double sv_ratio = svd.singularValues()[1] / svd.singularValues()[0];
            d << "worst entry error " << format_g15(worst_rel) << ", sv2/sv1 "
              << format_g15(sv_ratio);
            return worst_rel <= 0.1 && sv_ratio <= 0.1;
        });

    suite.criterion(
        "weighted decay follows t^{-1/2} with the gamma coefficient", 600.0,
        [](std::ostringstream& d) {
            const std::vector<double> times = {5.0, 8.0, 13.0, 21.0, 32.0, 50.0};
            bool ok = true;
            for (bool with_pot : {true, false}) {
                const KfpOperator op(400.0, 1024, 16,
                                     with_pot ? std::optional<Potential>(Potential(1.0, 5.0))
                                              : std::nullopt);
                const State u0 = gaussian_state(op, 1.0, 0.0);
                const State g = gaussian_state(op, 1.0, 0.0);
                const DecayFit fit = decay_fit(op, u0, times, 3.0, 0.01);
                const cplx coeff = leading_coefficient(op, u0, g, {5.0, 50.0}, 0.01).back();
                const State gamma = op.maxwellian();
                const cplx want = pairing(u0, gamma) * pairing(gamma, g);
                const double coeff_rel = std::abs(coeff - want) / std::abs(want);
                ok = ok && std::abs(fit.slope + 0.5) <= 0.05 && coeff_rel <= 0.1;
                d << (with_pot ? "well" : "free") << ": slope " << format_g15(fit.slope)
                  << ", coeff err " << format_g15(coeff_rel) << (with_pot ? "; " : "");
            }
            return ok;
        });

    suite.criterion(
        "the gamma pairing is conserved along the flow", 60.0, [](std::ostringstream& d) {
            const KfpOperator op(200.0, 512, 12, Potential(1.0, 5.0));
            State u = gaussian_state(op, 1.0, 0.0);
            const cplx c0 = conserved_pairing(op, u);
            double worst = 0.0;
            for (int leg = 0; leg < 4; ++leg) {
                u = evolve(op, u, 2.5, 5e-4);
                worst = std::max(worst, std::abs(conserved_pairing(op, u) - c0)
                                            / std::abs(c0));
            }
            d << "worst relative drift " << format_g15(worst);
            return worst <= 1e-8;
        });

    suite.criterion(
        "contour quadrature reproduces the stepped semigroup", 300.0,
        [](std::ostringstream& d) {
            const ContourSpec contour = make_contour(2.0, 2.0, 1e-8, 6.0, 8);
            double worst = 0.0;
            for (bool with_pot : {false, true}) {
                const KfpOperator op =
                    with_pot ? KfpOperator(200.0, 1536, 12, Potential(1.0, 5.0))
                             : KfpOperator(400.0, 1024, 16, std::nullopt);
                const State f = gaussian_state(op, 1.0, 0.0);
                const State g = gaussian_state(op, 1.0, 0.0);
                const cplx via_contour = contour_semigroup(op, f, g, 2.0, contour);
                const cplx via_evolve = pairing(evolve(op, f, 2.0, 0.01), g);
                worst = std::max(worst,
                                 std::abs(via_contour - via_evolve) / std::abs(via_evolve));
            }
            d << "worst relative mismatch " << format_g15(worst);
            return worst <= 1e-3;
        });

    out << (suite.all_ok ? "all criteria pass\n" : "FAILURES present\n");
    return suite.all_ok;
}

} // namespace kfp
