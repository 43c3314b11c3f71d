#include "kfp/oscillator.hpp"

#include <quadmath.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "kfp/detail/banded.hpp"
#include "kfp/errors.hpp"

namespace kfp {

using detail::TriLU;

using cplx = std::complex<double>;

OscillatorMatrix assemble_oscillator(const HermiteBasis& basis, double xi) {
    const int n = basis.order();
    OscillatorMatrix out;
    out.xi = xi;
    out.order = n;
    out.entries = Eigen::MatrixXcd::Zero(n, n);
    for (int j = 0; j < n; ++j) out.entries(j, j) = cplx(j, 0);
    for (int j = 0; j + 1 < n; ++j) {
        cplx e(0.0, xi * basis.mult_entry(j));
        out.entries(j + 1, j) = e;
        out.entries(j, j + 1) = e;
    }
    return out;
}

Eigen::VectorXcd oscillator_spectrum(const OscillatorMatrix& mat, int count) {
    if (count < 1)
        throw precondition_error("oscillator_spectrum: count must be positive");
    if (count > mat.order - 8)
        throw precondition_error("oscillator_spectrum: count " + std::to_string(count)
                                 + " exceeds order minus truncation buffer "
                                 + std::to_string(mat.order - 8));
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(mat.entries, false);
    if (es.info() != Eigen::Success)
        throw numerical_error("oscillator_spectrum: eigensolver did not converge");
    Eigen::VectorXcd all = es.eigenvalues();
    std::vector<int> idx(all.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (all[a].real() != all[b].real()) return all[a].real() < all[b].real();
        return all[a].imag() < all[b].imag();
    });
    Eigen::VectorXcd out(count);
    for (int i = 0; i < count; ++i) out[i] = all[idx[i]];
    return out;
}

namespace {

void check_riesz_range(double xi, int l) {
    if (std::abs(xi) > 2.0)
        throw precondition_error("riesz_projection: |xi| = " + std::to_string(std::abs(xi))
                                 + " exceeds 2");
    if (l < 0 || l > 8)
        throw precondition_error("riesz_projection: mode " + std::to_string(l)
                                 + " outside [0, 8]");
}

} // namespace

Eigen::MatrixXcd riesz_projection(const HermiteBasis& basis, double xi, int l) {
    check_riesz_range(xi, l);
    const int n = basis.order();
    const auto& s = basis.quad_nodes();
    const auto& w = basis.quad_weights();
    Eigen::VectorXcd c = Eigen::VectorXcd::Zero(n);
    std::vector<double> phi(n);
    for (int i = 0; i < s.size(); ++i) {
        const double x = s[i];
        phi[0] = std::pow(2 * M_PI, -0.25) * std::exp(-x * x / 4.0);
        for (int j = 0; j + 1 < n; ++j)
            phi[j + 1] = (x * phi[j] - (j > 0 ? std::sqrt(double(j)) * phi[j - 1] : 0.0))
                         / std::sqrt(double(j + 1));
        const cplx psi = shifted_hermite(l, xi, x);
        for (int j = 0; j < n; ++j) c[j] += w[i] * phi[j] * psi;
    }
    const double cn = c.norm();
    if (cn > 1e6)
        throw accuracy_error("riesz_projection: expansion coefficient norm "
                             + std::to_string(cn) + " exceeds 1e6");
    cplx s2 = cplx(0, 0);
    for (int j = 0; j < n; ++j) s2 += c[j] * c[j];
    if (std::abs(s2) < 1e-12 * cn * cn)
        throw accuracy_error("riesz_projection: bilinear normalizer vanishes");
    return (c * c.transpose()) / s2;
}

std::pair<double, double> riesz_residuals_ext(const HermiteBasis& basis, double xi, int l) {
    check_riesz_range(xi, l);
    const int n = basis.order();
    std::vector<__float128> nodes, weights;
    detail::gauss_rule_ext(2 * n, nodes, weights);

    std::vector<__complex128> c(n);
    for (int j = 0; j < n; ++j) c[j] = 0;
    std::vector<__float128> phi(n);
    for (size_t i = 0; i < nodes.size(); ++i) {
        const __float128 x = nodes[i];
        phi[0] = powq(2 * M_PIq, -0.25Q) * expq(-x * x / 4);
        for (int j = 0; j + 1 < n; ++j) {
            __float128 prev = j > 0 ? sqrtq(__float128(j)) * phi[j - 1] : __float128(0);
            phi[j + 1] = (x * phi[j] - prev) / sqrtq(__float128(j + 1));
        }
        // eigenfunction of the shifted oscillator: basis function at x + 2 i xi
        __complex128 z = 0;
        __real__ z = x;
        __imag__ z = 2 * xi;
        __complex128 pm = 0, p = powq(2 * M_PIq, -0.25Q) * cexpq(-z * z / 4);
        for (int k = 0; k < l; ++k) {
            __complex128 pp = (z * p - sqrtq(__float128(k)) * pm) / sqrtq(__float128(k + 1));
            pm = p;
            p = pp;
        }
        for (int j = 0; j < n; ++j) c[j] += weights[i] * phi[j] * p;
    }

    __complex128 s2 = 0;
    for (int j = 0; j < n; ++j) s2 += c[j] * c[j];
    __complex128 q = csqrtq(s2);
    for (int j = 0; j < n; ++j) c[j] /= q;

    std::vector<__complex128> P(size_t(n) * n);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) P[size_t(j) * n + k] = c[j] * c[k];

    // norm_F(P^2 - P) by explicit product
    __float128 r1 = 0;
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
            __complex128 acc = 0;
            for (int m = 0; m < n; ++m) acc += P[size_t(j) * n + m] * P[size_t(m) * n + k];
            acc -= P[size_t(j) * n + k];
            r1 += crealq(acc) * crealq(acc) + cimagq(acc) * cimagq(acc);
        }
    }

    // norm_F(A P - (l + xi^2) P) with tridiagonal A = diag(j) + i xi MultV
    const __float128 lam = __float128(l) + __float128(xi) * __float128(xi);
    __complex128 ixi = 0;
    __imag__ ixi = xi;
    __float128 r2 = 0;
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
            __complex128 acc = __float128(j) * P[size_t(j) * n + k];
            if (j > 0) acc += ixi * sqrtq(__float128(j)) * P[size_t(j - 1) * n + k];
            if (j + 1 < n) acc += ixi * sqrtq(__float128(j + 1)) * P[size_t(j + 1) * n + k];
            acc -= lam * P[size_t(j) * n + k];
            r2 += crealq(acc) * crealq(acc) + cimagq(acc) * cimagq(acc);
        }
    }
    return {double(sqrtq(r1)), double(sqrtq(r2))};
}

double resolvent_norm(const OscillatorMatrix& mat, cplx z) {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(mat.entries, false);
    if (es.info() != Eigen::Success)
        throw numerical_error("resolvent_norm: eigensolver did not converge");
    for (int i = 0; i < es.eigenvalues().size(); ++i)
        if (std::abs(es.eigenvalues()[i] - z) < 1e-10)
            throw singularity_error("resolvent_norm: z within 1e-10 of eigenvalue "
                                    + std::to_string(es.eigenvalues()[i].real()) + " + "
                                    + std::to_string(es.eigenvalues()[i].imag()) + "i");
    Eigen::MatrixXcd shifted = mat.entries;
    shifted.diagonal().array() -= z;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(shifted);
    return 1.0 / svd.singularValues()(svd.singularValues().size() - 1);
}

double subelliptic_ratio(const HermiteBasis& basis, double xi, double lambda) {
    if (std::abs(xi) > 50.0)
        throw precondition_error("subelliptic_ratio: |xi| = " + std::to_string(std::abs(xi))
                                 + " exceeds 50");
    if (std::abs(lambda) > 1e4)
        throw precondition_error("subelliptic_ratio: |lambda| = "
                                 + std::to_string(std::abs(lambda)) + " exceeds 1e4");
    const int n = basis.order();

    std::vector<cplx> sub(n - 1), diag(n), sup(n - 1);
    for (int j = 0; j < n; ++j) diag[j] = cplx(j + 1.5, -lambda);
    for (int j = 0; j + 1 < n; ++j) sub[j] = sup[j] = cplx(0.0, xi * basis.mult_entry(j));
    TriLU lu(sub, diag, sup);

    // -D^2 + M^2 is pentadiagonal with rows (3/4) sqrt((j+1)(j+2)) two off
    const double shift = 1.0 + std::cbrt(xi * xi) + std::sqrt(std::abs(lambda));
    Eigen::VectorXd t0(n), t2(std::max(n - 2, 0));
    for (int j = 0; j < n; ++j) t0[j] = shift + 2.5 * j + 1.25;
    for (int j = 0; j + 2 < n; ++j) t2[j] = 0.75 * std::sqrt(double(j + 1) * double(j + 2));
    auto apply_t = [&](const Eigen::VectorXcd& x) {
        Eigen::VectorXcd y(n);
        for (int j = 0; j < n; ++j) {
            cplx acc = t0[j] * x[j];
            if (j + 2 < n) acc += t2[j] * x[j + 2];
            if (j >= 2) acc += t2[j - 2] * x[j - 2];
            y[j] = acc;
        }
        return y;
    };

    // power iteration on the Gram operator of T A^{-1}
    std::mt19937_64 rng(20240501);
    std::normal_distribution<double> gauss;
    Eigen::VectorXcd v(n);
    for (int j = 0; j < n; ++j) v[j] = cplx(gauss(rng), gauss(rng));
    v /= v.norm();
    double mu = 0.0;
    for (int it = 0; it < 500; ++it) {
        Eigen::VectorXcd y = v;
        lu.solve(y);
        y = apply_t(y);
        y = apply_t(y);
        lu.solve_adjoint(y);
        double norm = y.norm();
        if (norm == 0.0) return 0.0;
        v = y / norm;
        if (std::abs(norm - mu) <= 1e-9 * norm) {
            mu = norm;
            break;
        }
        mu = norm;
    }
    return std::sqrt(mu);
}

} // namespace kfp
