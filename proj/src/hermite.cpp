#include "kfp/hermite.hpp"

#include <quadmath.h>

#include <cmath>
#include <type_traits>
#include <string>

#include "kfp/errors.hpp"

namespace kfp {

double hermite_poly(int j, double s) {
    if (j < 0 || j > 60)
        throw precondition_error("hermite_poly: order " + std::to_string(j) + " outside [0, 60]");
    double fm = 0.0, f = 1.0;
    for (int k = 0; k < j; ++k) {
        double fp = s * f - k * fm;
        fm = f;
        f = fp;
    }
    return f;
}

namespace {

// normalized recurrence phi_{j+1} = (s phi_j - sqrt(j) phi_{j-1}) / sqrt(j+1)
template <class S>
S phi_recurrence(int j, S s, S phi0) {
    S fm = S(0), f = phi0;
    for (int k = 0; k < j; ++k) {
        S fp = (s * f - std::sqrt(double(k)) * fm) / std::sqrt(double(k + 1));
        fm = f;
        f = fp;
    }
    return f;
}

} // namespace

double hermite_fn(int j, double s) {
    // normalized recurrence stays O(1), so the cap is generous
    if (j < 0 || j > 200)
        throw precondition_error("hermite_fn: order " + std::to_string(j) + " outside [0, 200]");
    double phi0 = std::pow(2 * M_PI, -0.25) * std::exp(-s * s / 4.0);
    return phi_recurrence<double>(j, s, phi0);
}

std::complex<double> shifted_hermite(int j, double xi, double v) {
    if (j < 0 || j >= 30)
        throw precondition_error("shifted_hermite: order " + std::to_string(j) + " outside [0, 30)");
    if (std::abs(xi) > 4.0)
        throw precondition_error("shifted_hermite: |xi| = " + std::to_string(std::abs(xi)) + " exceeds 4");
    std::complex<double> s(v, 2 * xi);
    std::complex<double> phi0 = std::pow(2 * M_PI, -0.25) * std::exp(-s * s / 4.0);
    return phi_recurrence<std::complex<double>>(j, s, phi0);
}

HermiteBasis::HermiteBasis(int order) : n_(order) {
    if (order < 4)
        throw precondition_error("HermiteBasis: order must be at least 4");
}

void HermiteBasis::build_quadrature() const {
    detail::gauss_rule(2 * n_, nodes_, weights_);
}

const Eigen::VectorXd& HermiteBasis::quad_nodes() const {
    std::call_once(quad_flag_, [this] { build_quadrature(); });
    return nodes_;
}

const Eigen::VectorXd& HermiteBasis::quad_weights() const {
    std::call_once(quad_flag_, [this] { build_quadrature(); });
    return weights_;
}

Eigen::MatrixXd HermiteBasis::mult_v() const {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n_, n_);
    for (int j = 0; j + 1 < n_; ++j) {
        M(j + 1, j) = mult_entry(j);
        M(j, j + 1) = mult_entry(j);
    }
    return M;
}

Eigen::MatrixXd HermiteBasis::deriv_v() const {
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n_, n_);
    for (int j = 0; j + 1 < n_; ++j) {
        D(j + 1, j) = deriv_lower(j);
        D(j, j + 1) = deriv_upper(j);
    }
    return D;
}

double HermiteBasis::mult_entry(int j) const { return std::sqrt(double(j + 1)); }
double HermiteBasis::deriv_lower(int j) const { return -0.5 * std::sqrt(double(j + 1)); }
double HermiteBasis::deriv_upper(int j) const { return 0.5 * std::sqrt(double(j + 1)); }

namespace detail {

namespace {

template <class S>
S sqrt_of(S v) {
    if constexpr (std::is_same_v<S, __float128>)
        return sqrtq(v);
    else
        return std::sqrt(v);
}

template <class S>
S phi0_of(S x) {
    if constexpr (std::is_same_v<S, __float128>)
        return powq(2 * M_PIq, -0.25Q) * expq(-x * x / 4);
    else
        return std::pow(2 * M_PI, -0.25) * std::exp(-x * x / 4.0);
}

// One node of the n-point rule, refined by Newton from a nearby start.
// Works on the basis functions themselves (Gaussian folded into the
// recurrence), so every intermediate is O(1) regardless of n or x.
// The eigenvector route w = mu0 q0^2 fails here: at edge nodes the first
// eigenvector component sits below the solver's absolute noise floor and
// the e^{+x^2/2} modification amplifies that noise catastrophically.
template <class S>
void node_and_weight(int n, S& x, S& w) {
    auto pair = [&](S t, S* fn, S* fn1) {
        S pm = S(0), p = phi0_of(t);
        for (int k = 0; k < n; ++k) {
            S pp = (t * p - sqrt_of(S(k)) * pm) / sqrt_of(S(k + 1));
            pm = p;
            p = pp;
        }
        *fn = p;
        *fn1 = pm;
    };
    const S sqn = sqrt_of(S(n));
    for (int it = 0; it < 6; ++it) {
        S fn, fn1;
        pair(x, &fn, &fn1);
        // d/dx phi_n = sqrt(n) phi_{n-1} - (x/2) phi_n
        S dp = sqn * fn1 - (x / 2) * fn;
        x -= fn / dp;
    }
    // Christoffel weight for the e^{-s^2/2} measure is 1/sum_k p_k(x)^2
    // over the orthonormal polynomials; written in basis functions the
    // e^{+x^2/2} modification cancels exactly: w = 1/sum_{k<n} phi_k(x)^2.
    S pm = S(0), p = phi0_of(x), ssum = p * p;
    for (int k = 0; k + 1 < n; ++k) {
        S pp = (x * p - sqrt_of(S(k)) * pm) / sqrt_of(S(k + 1));
        pm = p;
        p = pp;
        ssum += p * p;
    }
    w = S(1) / ssum;
}

Eigen::VectorXd jacobi_nodes(int n) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        J(k, k - 1) = std::sqrt(double(k));
        J(k - 1, k) = J(k, k - 1);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

} // namespace

void gauss_rule(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
    nodes = jacobi_nodes(n);
    weights.resize(n);
    for (int i = 0; i < n; ++i)
        node_and_weight<double>(n, nodes[i], weights[i]);
}

void gauss_rule_ext(int n, std::vector<__float128>& nodes, std::vector<__float128>& weights) {
    Eigen::VectorXd nd = jacobi_nodes(n);
    nodes.resize(n);
    weights.resize(n);
    for (int i = 0; i < n; ++i) {
        nodes[i] = nd[i];
        node_and_weight<__float128>(n, nodes[i], weights[i]);
    }
}

} // namespace detail

} // namespace kfp
