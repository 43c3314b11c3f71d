#pragma once

#include <Eigen/Dense>
#include <complex>
#include <utility>
#include <vector>

#include "kfp/operator.hpp"
#include "kfp/state.hpp"

namespace kfp {

// Square root with the branch cut on the positive real axis, so Im(sqrt z) > 0
// away from the cut. In particular sqrt(-lambda) = i sqrt(lambda).
std::complex<double> sqrt_upper_branch(std::complex<double> z);

// Smallest spectral parameter the box can resolve. Below roughly (6/L)^2 the
// resolvent at -lambda feels the periodic images instead of the threshold, so
// probes and low-lying solves refuse lambda under this bound.
double box_guard_lambda(double box_length);

// Solves (P - z) u = f and returns u in the representation of f.
// Direct factorization when n_x * n_v <= 2^14 (free operators always go
// through the per-wavenumber block solve), otherwise a Krylov iteration
// preconditioned by the free resolvent. The returned u satisfies
// |P u - z u - f| <= 1e-9 |f|, checked; a near-singular system (condition
// beyond 1e12) raises singularity_error naming z.
State solve_resolvent(const KfpOperator& op, std::complex<double> z, const State& f);

// Weighted pairings of the resolvent along a descent to the spectral edge.
// values[i] = sqrt(lambda_i) <R(-lambda_i) f, g>; the limit is removed by
// one Richardson step in sqrt(lambda) from the two smallest entries.
struct ResolventProbe {
    Eigen::VectorXd lambdas;
    Eigen::VectorXcd values;
    std::complex<double> extrapolated_limit;
};

// Requires strictly decreasing lambdas, all above box_guard_lambda. For
// localized f, g the limit approximates (1/2) <f, gamma> <gamma, g>.
ResolventProbe probe_threshold(const KfpOperator& op, const State& f, const State& g,
                               const std::vector<double>& lambdas);

// Leading kernel of the free resolvent expansion at the spectral edge,
// (i/2) psi0(v) psi0(v').
std::complex<double> kernel_G_minus1(double v, double v_p);

// Next kernel in the expansion, -(1/2) psi0(v) psi0(v') |x - x'|.
double kernel_F0(double x, double x_p, double v, double v_p);

// Finite part of the free resolvent at the edge, G0 f, realized by removing
// the (2 sqrt(lambda))^{-1} <f, gamma0> gamma0 blow-up from R0(-lambda) f at
// the two lambdas of the pair and extrapolating in sqrt(lambda). The box adds
// a constant background proportional to <f, gamma0>, so the mode-0 row is only
// defined up to an additive constant; the result fixes it to zero mean.
// Requires a free operator, both lambdas above the box guard, and f localized
// with small <f, gamma0> mass (the lowest nonzero box wavenumber sits just
// above the guard and never converges for data with an appreciable mean).
// A descent whose complement difference does not shrink raises accuracy_error.
State approx_G0(const KfpOperator& op, const State& f,
                std::pair<double, double> lambda_pair);

struct ThresholdReport {
    State solution;          // u solving (1 + G0 W) u = gamma0
    double residual;         // weighted relative equation residual, s = -3
    double dist_gamma;       // weighted relative distance from the stationary state
    std::complex<double> d1; // transport coefficient of u
    Eigen::VectorXd c1_profile, c2_profile; // boundary flux profiles on the x grid
    std::complex<double> sigma0;            // <W u, gamma0>, vanishes for the true solution
    // Smallest singular value of the weighted dense matrix; 0 when the
    // iterative path was taken. A kernel would collapse it to rounding level.
    // On a periodic box it is small but structurally positive: the growing
    // harmonics of the operator, cut off by the box, sit at a scale set by
    // the box size and the descent pair, with their defect concentrated at
    // the edge where the <x>^{-3} weight suppresses it.
    double smallest_singular_value;
    std::vector<std::pair<double, std::complex<double>>> m_values; // lambda, m(-lambda)
};

// Solves the threshold equation (1 + G0 W) u = gamma0 in the polynomially
// weighted space where the kernel growth of G0 is tamed: columns are scaled
// by <x>^3 and rows by <x>^{-3}. Dense factorization up to 4096 unknowns,
// matrix-free Krylov above. Requires a decay rate rho > 4 when a potential
// is present; the free case returns gamma0 exactly.
ThresholdReport solve_threshold_equation(const KfpOperator& op);

// Transport coefficient
//   d1 = -(1/4) integral (x + v/2) psi0(v) V'(x) dv(u)
// evaluated with the operator's gradient table, so u = stationary state
// gives zero to rounding.
std::complex<double> compute_d1(const KfpOperator& op, const State& u);

// Boundary flux profiles against sgn(x - x'),
//   C1(x) = (1/4) sum dx sgn(x-x') [ (x-x') g0(x') - g1(x')/2 ]
//   C2(x) = -(1/8) sum dx sgn(x-x') g0(x')
// with g_j(x') the j-th Hermite row of V' dv(u). C1 tends to +-d1 and C2
// to zero at the box ends when u solves the threshold equation. Only the
// real part of u enters; profiles are returned on the x grid.
std::pair<Eigen::VectorXd, Eigen::VectorXd> compute_C_profiles(const KfpOperator& op,
                                                               const State& u);

// Threshold scattering coefficient m(-lambda), tending to a nonzero constant
// as lambda decreases to 0. Computed from a Krylov solve of
//   y + R0(-lambda) W y - (2 sqrt(lambda))^{-1} <W y, gamma0> gamma0 = gamma0,
// then m = 1 + (2 sqrt(lambda))^{-1} <W y, gamma0>. A free operator gives
// m = 1 exactly. Requires rho > 4 and lambda above the box guard.
std::complex<double> compute_m(const KfpOperator& op, double lambda);

} // namespace kfp
