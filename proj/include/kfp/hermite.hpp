#pragma once

#include <complex>
#include <mutex>
#include <vector>

#include <Eigen/Dense>

namespace kfp {

// Probabilists' Hermite polynomial F_j, three-term recurrence.
// Guard: j <= 60 (F_j overflows double range for large |s| beyond that).
double hermite_poly(int j, double s);

// Normalized Hermite function phi_j(s) = (j! sqrt(2 pi))^{-1/2} e^{-s^2/4} F_j(s),
// evaluated by the normalized recurrence (stable for |s| up to ~20).
double hermite_fn(int j, double s);

// phi_j(v + 2 i xi), analytic continuation of the same recurrence.
// Guards: j < 30, |xi| <= 4 (values grow like e^{xi^2}).
std::complex<double> shifted_hermite(int j, double xi, double v);

// Velocity basis of the first `order` Hermite functions with a Gauss rule
// exact for all pairwise products. The rule is built on first use; ladder-only
// consumers (arbitrarily large order) never pay for it.
class HermiteBasis {
public:
    explicit HermiteBasis(int order);

    int order() const { return n_; }

    // 2*order nodes/weights; weights integrate products of the phi_j directly
    // (Christoffel weights for e^{-s^2/2} times e^{+s^2/2} at the node).
    const Eigen::VectorXd& quad_nodes() const;
    const Eigen::VectorXd& quad_weights() const;

    // Dense ladder matrices: v phi_j = sqrt(j+1) phi_{j+1} + sqrt(j) phi_{j-1},
    // d/dv phi_j = (sqrt(j) phi_{j-1} - sqrt(j+1) phi_{j+1})/2.
    Eigen::MatrixXd mult_v() const;
    Eigen::MatrixXd deriv_v() const;

    // closed-form band entries, usable at any order
    double mult_entry(int j) const;   // MultV(j+1, j) = sqrt(j+1)
    double deriv_lower(int j) const;  // DerivV(j+1, j) = -sqrt(j+1)/2
    double deriv_upper(int j) const;  // DerivV(j, j+1) = sqrt(j+1)/2

private:
    void build_quadrature() const;

    int n_;
    mutable std::once_flag quad_flag_;
    mutable Eigen::VectorXd nodes_, weights_;
};

namespace detail {

// Gauss rule derived from the weight e^{-s^2/2} (Jacobi matrix with zero
// diagonal and off-diagonals sqrt(k)), returned with the e^{+s^2/2}
// modification already folded in: sum_i w_i g(x_i) integrates g directly
// when g decays like a product of basis functions. The fold happens inside
// the Christoffel formula, never as an explicit e^{+x^2/2} factor, so no
// intermediate quantity grows with the node range.
void gauss_rule(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights);

// Same rule with nodes and weights polished to __float128.
void gauss_rule_ext(int n, std::vector<__float128>& nodes, std::vector<__float128>& weights);

} // namespace detail

} // namespace kfp
