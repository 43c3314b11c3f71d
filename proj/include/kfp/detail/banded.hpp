#pragma once

#include <Eigen/Dense>
#include <complex>
#include <utility>
#include <vector>

namespace kfp::detail {

// partial-pivot LU of a complex tridiagonal, LAPACK gttrf layout
struct TriLU {
    using cplx = std::complex<double>;

    int n;
    std::vector<cplx> dl, d, du, du2;
    std::vector<int> swapped;

    TriLU(std::vector<cplx> sub, std::vector<cplx> diag, std::vector<cplx> sup)
        : n(int(diag.size())), dl(std::move(sub)), d(std::move(diag)), du(std::move(sup)),
          du2(n > 2 ? n - 2 : 0, cplx(0, 0)), swapped(n > 1 ? n - 1 : 0, 0) {
        for (int i = 0; i + 1 < n; ++i) {
            if (std::abs(d[i]) >= std::abs(dl[i])) {
                cplx f = dl[i] / d[i];
                dl[i] = f;
                d[i + 1] -= f * du[i];
            } else {
                cplx f = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = f;
                cplx t = du[i];
                du[i] = d[i + 1];
                d[i + 1] = t - f * d[i + 1];
                if (i + 2 < n) {
                    du2[i] = du[i + 1];
                    du[i + 1] = -f * du[i + 1];
                }
                swapped[i] = 1;
            }
        }
    }

    void solve(Eigen::VectorXcd& b) const {
        for (int i = 0; i + 1 < n; ++i) {
            if (!swapped[i]) {
                b[i + 1] -= dl[i] * b[i];
            } else {
                cplx t = b[i];
                b[i] = b[i + 1];
                b[i + 1] = t - dl[i] * b[i];
            }
        }
        b[n - 1] /= d[n - 1];
        if (n > 1) b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
        for (int i = n - 3; i >= 0; --i)
            b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
    }

    // conjugate-transpose solve via symmetry of the original matrix
    void solve_adjoint(Eigen::VectorXcd& b) const {
        b = b.conjugate();
        solve(b);
        b = b.conjugate();
    }

    // smallest |pivot|, a cheap proxy for closeness to singularity
    double min_pivot() const {
        double m = std::abs(d[0]);
        for (int i = 1; i < n; ++i) m = std::min(m, std::abs(d[i]));
        return m;
    }
};

} // namespace kfp::detail
