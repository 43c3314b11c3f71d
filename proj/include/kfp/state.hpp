#pragma once

#include <Eigen/Dense>
#include <complex>

namespace kfp {

enum class Repr { x_space, xi_space };

// coefficient block of a phase-space function: row j holds the j-th
// velocity-mode coefficient along x (or along the dual variable).
// xi-space stores dx times the unnormalized forward transform; with that
// scaling the two norm formulas below agree exactly.
struct State {
    double box_length = 0.0;
    int n_x = 0;
    int n_v = 0;
    Repr repr = Repr::x_space;
    Eigen::MatrixXcd coeffs; // n_v rows, n_x columns

    bool same_shape(const State& o) const {
        return box_length == o.box_length && n_x == o.n_x && n_v == o.n_v;
    }
};

State zero_state(double box_length, int n_x, int n_v, Repr repr = Repr::x_space);

// no-ops when already in the requested representation
void to_xi_space(State& u);
void to_x_space(State& u);

// sqrt(dx sum |u|^2) in x-space, sqrt(sum |u|^2 / L) in xi-space
double state_norm(const State& u);

// dx sum f conj(g); evaluated in whichever representation f uses
std::complex<double> pairing(const State& f, const State& g);

// row j scaled by (-1)^j, either representation
State velocity_flip(const State& u);

} // namespace kfp
