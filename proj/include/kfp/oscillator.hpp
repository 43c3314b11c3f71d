#pragma once

#include <Eigen/Dense>
#include <complex>
#include <utility>

#include "kfp/hermite.hpp"

namespace kfp {

// Fourier-mode oscillator family: diag(0..N_v-1) + i xi MultV in the
// velocity basis. Complex symmetric, accretive, spectrum near {l + xi^2}.
struct OscillatorMatrix {
    double xi = 0.0;
    int order = 0;
    Eigen::MatrixXcd entries;
};

OscillatorMatrix assemble_oscillator(const HermiteBasis& basis, double xi);

// First `count` eigenvalues sorted by real part. count <= order - 8: the
// top of a truncated non-normal spectrum is polluted and never reported.
Eigen::VectorXcd oscillator_spectrum(const OscillatorMatrix& mat, int count);

// Rank-one spectral projector for the mode-l eigenvalue, built from the
// analytic eigenfunctions at shifted argument expanded by quadrature.
// Bilinear (unconjugated) normalization keeps it idempotent.
Eigen::MatrixXcd riesz_projection(const HermiteBasis& basis, double xi, int l);

// Residuals of the same projector computed end to end in __float128:
// {norm_F(P^2 - P), norm_F(A P - (l + xi^2) P)}. The projector norm grows
// like e^{4 xi^2}, so double rounding alone exceeds the interesting scale
// at xi = 2; the extended path keeps the residual floor far below it.
std::pair<double, double> riesz_residuals_ext(const HermiteBasis& basis, double xi, int l);

// 1 / sigma_min(mat - z). z within 1e-10 of an eigenvalue is refused.
double resolvent_norm(const OscillatorMatrix& mat, std::complex<double> z);

// norm of ((1 + |xi|^{2/3} + |lambda|^{1/2}) I - D^2 + M^2) applied to the
// inverse of (oscillator + 3/2 - i lambda). Banded solves plus power
// iteration with a fixed seed, so large orders stay cheap and runs are
// reproducible. Guards: |xi| <= 50, |lambda| <= 1e4.
double subelliptic_ratio(const HermiteBasis& basis, double xi, double lambda);

} // namespace kfp
