#pragma once

#include <complex>
#include <vector>

#include "kfp/operator.hpp"
#include "kfp/state.hpp"

namespace kfp {

// One quadrature point of the semigroup contour; the weight already carries
// the Gauss-Legendre factor times dz along the traversal direction.
struct ContourNode {
    std::complex<double> z;
    std::complex<double> weight;
};

// Quadrature path for e^{-tP} = (1/2 pi i) int e^{-tz} (P - z)^{-1} dz: two
// parabolic branches +-iC + lambda(1 +- iC lambda) joined by the left
// semicircle of radius C, ordered from the -i inf side to the +i inf side.
// That orientation winds the spectrum clockwise, which the (P - z)^{-1} form
// of the integrand absorbs. Every node keeps Re z >= -C.
struct ContourSpec {
    double delta = 1e-12;      // tail cut: branches stop where e^{-t lambda} = delta
    double vertical_cap = 2.0; // C
    std::vector<ContourNode> nodes;
};

// Composite 10-point Gauss-Legendre panels for the t given here. Panel edges
// sit at equal increments of t(lambda + C lambda^2), the combined decay and
// phase scale of the integrand, at most panel_increment per panel (at least
// 8 panels per branch); arc_panels panels cover the semicircle. Shrinking the
// increment or raising the panel count refines the rule.
ContourSpec make_contour(double t, double vertical_cap = 2.0, double delta = 1e-12,
                         double panel_increment = 3.0, int arc_panels = 8);

// Log-log least-squares record of a decay history.
struct DecayFit {
    std::vector<double> times;
    std::vector<double> weighted_norms; // |u(t)| in the <x>^{-s} weighted norm
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

// e^{-t P0} by per-wavenumber matrix exponentials, exact up to the velocity
// truncation. Requires a free operator and t >= 0.
State free_evolve_exact(const KfpOperator& op, const State& u0, double t);

// e^{-tP} by Strang splitting with exact sub-flows: a half step of the
// coupling, exp((dt/2) V'(x) d_v) per grid point (a skew ladder, so each
// half step is an isometry), the full free step per wavenumber, and the
// mirror half step. Interior half steps are merged. Runs ceil(t/dt) steps,
// the last one partial. Requires 0 < dt <= 0.1 and t >= 0; without a
// potential the composition collapses to the exact free flow stepped at dt.
State evolve(const KfpOperator& op, const State& u0, double t, double dt);

// <u, gamma> with the operator's stationary state. Constant along evolve:
// flipping the velocity parity turns P into its adjoint, so P* gamma = 0
// holds exactly for the discrete gradient table.
std::complex<double> conserved_pairing(const KfpOperator& op, const State& u);

// Evolves u0, records the <x>^{-s} weighted norm at the given times and fits
// log(norm) against log(t). Meaningful for localized data; the guards check
// s > 5/2, strictly increasing positive times, and max(times) <= (L/8)^2 so
// the diffusive spread stays inside the box.
DecayFit decay_fit(const KfpOperator& op, const State& u0,
                   const std::vector<double>& times, double s, double dt = 0.01);

// sqrt(4 pi t) <u(t), g> per recorded time; tends to <u0, gamma> <gamma, g>.
// Same guards as decay_fit.
std::vector<std::complex<double>>
leading_coefficient(const KfpOperator& op, const State& u0, const State& g,
                    const std::vector<double>& times, double dt = 0.01);

// (1/2 pi i) sum_i w_i e^{-t z_i} <R(z_i) f, g> over the contour nodes.
// Real-valued data over a conjugate-symmetric node set (as produced by
// make_contour) integrates the upper half only and returns the doubled
// imaginary part, which is exactly real. Requires t >= 0.5 so the branch
// integrand decays; a node parked near an eigenvalue surfaces as the
// resolvent's singularity_error naming that node.
std::complex<double> contour_semigroup(const KfpOperator& op, const State& f,
                                       const State& g, double t,
                                       const ContourSpec& contour);

} // namespace kfp
