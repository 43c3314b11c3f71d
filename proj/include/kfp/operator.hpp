#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>

#include "kfp/grid.hpp"
#include "kfp/hermite.hpp"
#include "kfp/state.hpp"

namespace kfp {

// algebraically decaying well V(x) = c (1+x^2)^{-rho/2}
struct Potential {
    Potential(double amplitude, double rho);

    double amplitude;
    double rho;

    double value(double x) const;
    double deriv(double x) const;
};

// kinetic transport operator on the box: per-wavenumber oscillator blocks
// plus the gradient coupling -V'(x) d_v. Immutable after construction;
// apply is re-entrant.
class KfpOperator {
  public:
    KfpOperator(double box_length, int n_x, int n_v, std::optional<Potential> potential,
                double weight_s = 3.0);

    const FourierGrid& grid() const { return grid_; }
    const HermiteBasis& basis() const { return basis_; }
    const std::optional<Potential>& potential() const { return pot_; }
    double weight_s() const { return weight_s_; }

    // gradient table the coupling actually multiplies by. Derived
    // spectrally from e^{-V/2} so that the transport and coupling terms
    // cancel exactly on the stationary state at any resolution; it matches
    // the analytic V' to the wrap-around error of the box.
    const Eigen::VectorXd& gradient_table() const { return vprime_; }

    State apply(const State& u) const;      // full operator
    State apply_free(const State& u) const; // coupling dropped
    State apply_w(const State& u) const;    // coupling only

    // stationary state on the ground velocity mode: the sampling of
    // e^{-V/2} with its lone Nyquist mode removed, which is what the
    // discrete operator annihilates exactly (flat when no potential is
    // set; not normalized, it tends to the flat state at the box edge)
    State maxwellian() const;
    State gamma0() const;

    // dx sum_m <x_m>^{2s} sum_j f conj(g)
    std::complex<double> weighted_pairing(const State& f, const State& g, double s) const;

  private:
    void check_shape(const State& u) const;

    FourierGrid grid_;
    HermiteBasis basis_;
    std::optional<Potential> pot_;
    double weight_s_;
    Eigen::VectorXd vprime_;
    Eigen::VectorXd ground_; // Nyquist-filtered e^{-V/2} samples
};

} // namespace kfp
