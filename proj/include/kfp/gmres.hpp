#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "kfp/errors.hpp"

namespace kfp {

// Full (unrestarted) GMRES with modified Gram-Schmidt and Givens rotations.
// `matvec` maps VectorXcd -> VectorXcd. Solves A x = b to a relative residual
// of `tol`, starting from x = 0. Returns the iteration count; throws
// numerical_error when the basis fills up without reaching the tolerance.
template <class MatVec>
int gmres(const MatVec& matvec, const Eigen::VectorXcd& b, Eigen::VectorXcd& x,
          double tol, int max_iter) {
    using cplx = std::complex<double>;
    const double bnorm = b.norm();
    x = Eigen::VectorXcd::Zero(b.size());
    if (bnorm == 0.0) return 0;

    std::vector<Eigen::VectorXcd> basis;
    basis.reserve(max_iter + 1);
    basis.push_back(b / bnorm);

    Eigen::MatrixXcd hess = Eigen::MatrixXcd::Zero(max_iter + 1, max_iter);
    std::vector<cplx> cs(max_iter), sn(max_iter);
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(max_iter + 1);
    rhs[0] = bnorm;

    int k = 0;
    for (; k < max_iter; ++k) {
        Eigen::VectorXcd w = matvec(basis[k]);
        for (int i = 0; i <= k; ++i) {
            cplx h = basis[i].dot(w);
            hess(i, k) = h;
            w -= h * basis[i];
        }
        const double hk1 = w.norm();
        hess(k + 1, k) = hk1;

        for (int i = 0; i < k; ++i) {
            cplx t = cs[i] * hess(i, k) + sn[i] * hess(i + 1, k);
            hess(i + 1, k) = -std::conj(sn[i]) * hess(i, k) + std::conj(cs[i]) * hess(i + 1, k);
            hess(i, k) = t;
        }
        const double denom = std::hypot(std::abs(hess(k, k)), hk1);
        if (denom == 0.0) {
            cs[k] = 1.0;
            sn[k] = 0.0;
        } else {
            cs[k] = std::conj(hess(k, k)) / denom;
            sn[k] = hk1 / denom;
        }
        hess(k, k) = cs[k] * hess(k, k) + sn[k] * hess(k + 1, k);
        hess(k + 1, k) = 0.0;
        rhs[k + 1] = -std::conj(sn[k]) * rhs[k];
        rhs[k] = cs[k] * rhs[k];

        const double res = std::abs(rhs[k + 1]);
        if (res <= tol * bnorm || hk1 == 0.0) {
            ++k;
            break;
        }
        basis.push_back(w / hk1);
    }

    if (std::abs(rhs[k]) > tol * bnorm && k == max_iter)
        throw numerical_error("gmres: no convergence in " + std::to_string(max_iter)
                              + " iterations, residual "
                              + std::to_string(std::abs(rhs[k]) / bnorm));

    Eigen::VectorXcd y = hess.topLeftCorner(k, k)
                             .triangularView<Eigen::Upper>()
                             .solve(rhs.head(k));
    for (int i = 0; i < k; ++i) x += y[i] * basis[i];
    return k;
}

} // namespace kfp
