#include "kfp/state.hpp"

#include <cmath>

#include "kfp/errors.hpp"
#include "kfp/grid.hpp"

namespace kfp {

State zero_state(double box_length, int n_x, int n_v, Repr repr) {
    FourierGrid check(box_length, n_x); // validates box parameters
    if (n_v < 1) throw precondition_error("zero_state: n_v must be positive");
    State u;
    u.box_length = box_length;
    u.n_x = n_x;
    u.n_v = n_v;
    u.repr = repr;
    u.coeffs = Eigen::MatrixXcd::Zero(n_v, n_x);
    return u;
}

void to_xi_space(State& u) {
    if (u.repr == Repr::xi_space) return;
    fft_for(u.n_v, u.n_x).forward(u.coeffs);
    u.coeffs *= u.box_length / u.n_x;
    u.repr = Repr::xi_space;
}

void to_x_space(State& u) {
    if (u.repr == Repr::x_space) return;
    fft_for(u.n_v, u.n_x).backward(u.coeffs);
    u.coeffs /= u.box_length;
    u.repr = Repr::x_space;
}

double state_norm(const State& u) {
    double s = u.coeffs.squaredNorm();
    if (u.repr == Repr::x_space) return std::sqrt(s * u.box_length / u.n_x);
    return std::sqrt(s / u.box_length);
}

std::complex<double> pairing(const State& f, const State& g) {
    if (!f.same_shape(g)) throw precondition_error("pairing: shape mismatch");
    const State* gp = &g;
    State tmp;
    if (g.repr != f.repr) {
        tmp = g;
        if (f.repr == Repr::x_space)
            to_x_space(tmp);
        else
            to_xi_space(tmp);
        gp = &tmp;
    }
    std::complex<double> acc = (gp->coeffs.conjugate().cwiseProduct(f.coeffs)).sum();
    if (f.repr == Repr::x_space) return acc * (f.box_length / f.n_x);
    return acc / f.box_length;
}

State velocity_flip(const State& u) {
    State out = u;
    for (int j = 1; j < u.n_v; j += 2) out.coeffs.row(j) = -u.coeffs.row(j);
    return out;
}

} // namespace kfp
