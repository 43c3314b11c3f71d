#include "kfp/resolvent.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "kfp/detail/banded.hpp"
#include "kfp/errors.hpp"
#include "kfp/gmres.hpp"

namespace kfp {

using cplx = std::complex<double>;
using detail::TriLU;

cplx sqrt_upper_branch(cplx z) {
    cplx w = std::sqrt(z);
    if (w.imag() < 0.0) w = -w;
    return w;
}

double box_guard_lambda(double box_length) {
    if (!(box_length > 0.0))
        throw precondition_error("box_guard_lambda: box length must be positive");
    return 36.0 / (box_length * box_length);
}

namespace {

std::string z_str(cplx z) {
    return std::to_string(z.real()) + (z.imag() < 0 ? " - " : " + ")
           + std::to_string(std::abs(z.imag())) + "i";
}

void require_shape(const KfpOperator& op, const State& f, const char* who) {
    if (f.n_x != op.grid().n_x || f.n_v != op.basis().order()
        || f.box_length != op.grid().box_length)
        throw precondition_error(std::string(who)
                                 + ": state shape does not match the operator");
}

Eigen::Map<const Eigen::VectorXcd> flat(const Eigen::MatrixXcd& m) {
    return {m.data(), m.size()};
}

// factors every per-wavenumber block B_k - z of the free operator
struct FreeBlockSolver {
    int n_x, n_v;
    std::vector<TriLU> lus;

    FreeBlockSolver(const KfpOperator& op, cplx z)
        : n_x(op.grid().n_x), n_v(op.basis().order()) {
        lus.reserve(n_x);
        for (int k = 0; k < n_x; ++k) {
            const double xi = op.grid().wavenumber(k);
            std::vector<cplx> sub(n_v - 1), diag(n_v), sup(n_v - 1);
            for (int j = 0; j < n_v; ++j) diag[j] = cplx(j, 0) - z;
            for (int j = 0; j + 1 < n_v; ++j)
                sub[j] = sup[j] = cplx(0.0, xi * op.basis().mult_entry(j));
            lus.emplace_back(std::move(sub), std::move(diag), std::move(sup));
        }
    }

    void solve_in_xi(Eigen::MatrixXcd& c) const {
        Eigen::VectorXcd col(n_v);
        for (int k = 0; k < n_x; ++k) {
            col = c.col(k);
            lus[k].solve(col);
            c.col(k) = col;
        }
    }
};

State free_solve(const FreeBlockSolver& pre, const State& f) {
    State u = f;
    to_xi_space(u);
    pre.solve_in_xi(u.coeffs);
    if (f.repr == Repr::x_space) to_x_space(u);
    return u;
}

State free_solve_checked(const FreeBlockSolver& pre, const State& f, double fnorm,
                         cplx z) {
    State u = free_solve(pre, f);
    const double un = state_norm(u);
    if (!std::isfinite(un) || un > 1e12 * fnorm)
        throw singularity_error("solve_resolvent: free blocks are singular at z = "
                                + z_str(z));
    return u;
}

// dense matrix of P - z in the x-point basis, index m * n_v + j
Eigen::MatrixXcd assemble_shifted(const KfpOperator& op, cplx z) {
    const int nx = op.grid().n_x;
    const int nv = op.basis().order();
    const long n = long(nx) * nv;

    // first column of the circulant spectral x-derivative
    Eigen::MatrixXcd cd(1, nx);
    for (int k = 0; k < nx; ++k) cd(0, k) = cplx(0.0, op.grid().wavenumber(k));
    fft_for(1, nx).backward(cd);
    cd /= double(nx);

    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(n, n);
    const auto& vp = op.gradient_table();
    for (int mp = 0; mp < nx; ++mp) {
        for (int m = 0; m < nx; ++m) {
            const cplx dxv = cd(0, (m - mp + nx) % nx);
            for (int j = 0; j < nv; ++j) {
                if (j > 0) a(m * nv + j, mp * nv + j - 1) += std::sqrt(double(j)) * dxv;
                if (j + 1 < nv)
                    a(m * nv + j, mp * nv + j + 1) += std::sqrt(double(j + 1)) * dxv;
            }
        }
        for (int j = 0; j < nv; ++j) {
            a(mp * nv + j, mp * nv + j) += cplx(j, 0) - z;
            if (j > 0) a(mp * nv + j, mp * nv + j - 1) += 0.5 * std::sqrt(double(j)) * vp[mp];
            if (j + 1 < nv)
                a(mp * nv + j, mp * nv + j + 1) -= 0.5 * std::sqrt(double(j + 1)) * vp[mp];
        }
    }
    return a;
}

// applies the solver, verifies the true residual against the pinned operator
// and retries once with the defect before giving up
template <class SolveFn>
State check_and_refine(const KfpOperator& op, cplx z, const State& f, double fnorm,
                       const SolveFn& solve_once) {
    State u = solve_once(f);
    for (int pass = 0;; ++pass) {
        State r = op.apply(u);
        r.coeffs = f.coeffs - r.coeffs + z * u.coeffs;
        const double rn = state_norm(r);
        if (rn <= 1e-9 * fnorm) return u;
        if (pass == 1)
            throw numerical_error("solve_resolvent: residual " + std::to_string(rn)
                                  + " above 1e-9 |f| at z = " + z_str(z));
        State du = solve_once(r);
        u.coeffs += du.coeffs;
    }
}

// h(lambda) = R0(-lambda) f - <f, gamma0>/(2 sqrt lambda) gamma0, extrapolated
// in sqrt(lambda). States in x representation throughout.
//
// The gamma0 component of h is <f,gamma0> (1/(L lambda) - 1/(2 sqrt lambda))
// exactly, for any f; it carries no information beyond the pairing and lands in
// the additive constant of the mode-0 row. With check on, convergence of the
// descent is judged on the complement in the <x>^-3 norm, the result's mode-0
// row is normalized to zero mean, and data whose complement content vanishes
// (pure edge-mode input) is refused.
State finite_part(const KfpOperator& op, const FreeBlockSolver& sa,
                  const FreeBlockSolver& sb, double la, double lb, const State& fx,
                  const State& gamma0, bool check) {
    State ha = free_solve(sa, fx);
    State hb = free_solve(sb, fx);
    const cplx ip = pairing(fx, gamma0);
    ha.coeffs.row(0).array() -= ip / (2.0 * std::sqrt(la));
    hb.coeffs.row(0).array() -= ip / (2.0 * std::sqrt(lb));
    if (check) {
        auto drop_mean = [](State s) {
            s.coeffs.row(0).array() -= s.coeffs.row(0).mean();
            return s;
        };
        auto wn = [&op](const State& s) {
            return std::sqrt(std::abs(op.weighted_pairing(s, s, -3.0)));
        };
        State hap = drop_mean(ha), hbp = drop_mean(hb);
        const double scale = wn(hbp);
        if (scale <= 1e-6 * wn(fx))
            throw accuracy_error("approx_G0: the data pairs entirely with the edge "
                                 "mode; there is no localized content to extrapolate");
        State d = hbp;
        d.coeffs -= hap.coeffs;
        if (wn(d) > 0.25 * scale)
            throw accuracy_error("approx_G0: descent to the edge is not converging; "
                                 "the data must be localized with small mean");
    }
    const double sa_ = std::sqrt(la), sb_ = std::sqrt(lb);
    State out = hb;
    out.coeffs = (sa_ * hb.coeffs - sb_ * ha.coeffs) / (sa_ - sb_);
    if (check) out.coeffs.row(0).array() -= out.coeffs.row(0).mean();
    return out;
}

} // namespace

State solve_resolvent(const KfpOperator& op, cplx z, const State& f) {
    require_shape(op, f, "solve_resolvent");
    const double fnorm = state_norm(f);
    if (fnorm == 0.0) return zero_state(f.box_length, f.n_x, f.n_v, f.repr);

    const long n = long(f.n_x) * f.n_v;

    if (!op.potential()) {
        FreeBlockSolver pre(op, z);
        auto solve_once = [&](const State& rhs) {
            return free_solve_checked(pre, rhs, fnorm, z);
        };
        return check_and_refine(op, z, f, fnorm, solve_once);
    }

    State fx = f;
    to_x_space(fx);
    State u = zero_state(f.box_length, f.n_x, f.n_v, Repr::x_space);

    if (n <= (1L << 14)) {
        Eigen::MatrixXcd a = assemble_shifted(op, z);
        Eigen::PartialPivLU<Eigen::Ref<Eigen::MatrixXcd>> lu(a);
        const double rc = lu.rcond();
        if (!(rc > 1e-12))
            throw singularity_error("solve_resolvent: system near singular at z = "
                                    + z_str(z));
        auto solve_once = [&](const State& rhs) {
            State out = rhs;
            Eigen::VectorXcd sol = lu.solve(flat(rhs.coeffs));
            out.coeffs = Eigen::Map<const Eigen::MatrixXcd>(sol.data(), rhs.n_v, rhs.n_x);
            return out;
        };
        u = check_and_refine(op, z, fx, fnorm, solve_once);
    } else {
        // Krylov on the preconditioned system (1 + R0(z) W) u = R0(z) f
        FreeBlockSolver pre(op, z);
        auto matvec = [&](const Eigen::VectorXcd& v) {
            State sv = zero_state(f.box_length, f.n_x, f.n_v, Repr::x_space);
            sv.coeffs = Eigen::Map<const Eigen::MatrixXcd>(v.data(), f.n_v, f.n_x);
            State rw = free_solve(pre, op.apply_w(sv));
            return Eigen::VectorXcd(v + flat(rw.coeffs));
        };
        auto solve_once = [&](const State& rhs) {
            State r0 = free_solve_checked(pre, rhs, state_norm(rhs), z);
            Eigen::VectorXcd sol;
            gmres(matvec, Eigen::VectorXcd(flat(r0.coeffs)), sol, 1e-11, 300);
            State out = rhs;
            out.coeffs = Eigen::Map<const Eigen::MatrixXcd>(sol.data(), rhs.n_v, rhs.n_x);
            return out;
        };
        u = check_and_refine(op, z, fx, fnorm, solve_once);
    }

    if (f.repr == Repr::xi_space) to_xi_space(u);
    return u;
}

ResolventProbe probe_threshold(const KfpOperator& op, const State& f, const State& g,
                               const std::vector<double>& lambdas) {
    require_shape(op, f, "probe_threshold");
    require_shape(op, g, "probe_threshold");
    if (lambdas.size() < 2)
        throw precondition_error("probe_threshold: need at least two lambdas to "
                                 "extrapolate");
    const double guard = box_guard_lambda(op.grid().box_length);
    for (size_t i = 0; i < lambdas.size(); ++i) {
        if (!(lambdas[i] > guard))
            throw precondition_error("probe_threshold: lambda = "
                                     + std::to_string(lambdas[i])
                                     + " is below the box guard "
                                     + std::to_string(guard));
        if (i > 0 && !(lambdas[i] < lambdas[i - 1]))
            throw precondition_error("probe_threshold: lambdas must decrease strictly");
    }

    const int n = int(lambdas.size());
    ResolventProbe out;
    out.lambdas = Eigen::Map<const Eigen::VectorXd>(lambdas.data(), n);
    out.values.resize(n);
    for (int i = 0; i < n; ++i) {
        State u = solve_resolvent(op, cplx(-lambdas[i], 0.0), f);
        out.values[i] = std::sqrt(lambdas[i]) * pairing(u, g);
    }
    const double s1 = std::sqrt(lambdas[n - 2]), s2 = std::sqrt(lambdas[n - 1]);
    out.extrapolated_limit = (s1 * out.values[n - 1] - s2 * out.values[n - 2]) / (s1 - s2);
    return out;
}

namespace {
double psi0(double v) { return std::pow(2 * M_PI, -0.25) * std::exp(-v * v / 4); }
} // namespace

cplx kernel_G_minus1(double v, double v_p) {
    return cplx(0.0, 0.5) * psi0(v) * psi0(v_p);
}

double kernel_F0(double x, double x_p, double v, double v_p) {
    return -0.5 * psi0(v) * psi0(v_p) * std::abs(x - x_p);
}

State approx_G0(const KfpOperator& op, const State& f,
                std::pair<double, double> lambda_pair) {
    require_shape(op, f, "approx_G0");
    if (op.potential())
        throw precondition_error("approx_G0: expects the free operator");
    const double la = std::max(lambda_pair.first, lambda_pair.second);
    const double lb = std::min(lambda_pair.first, lambda_pair.second);
    if (!(lb > box_guard_lambda(op.grid().box_length)))
        throw precondition_error("approx_G0: lambda pair reaches below the box guard");
    if (la == lb)
        throw precondition_error("approx_G0: lambdas must be distinct");

    State fx = f;
    to_x_space(fx);
    if (state_norm(fx) == 0.0)
        return zero_state(f.box_length, f.n_x, f.n_v, f.repr);
    FreeBlockSolver sa(op, cplx(-la, 0.0)), sb(op, cplx(-lb, 0.0));
    State out = finite_part(op, sa, sb, la, lb, fx, op.gamma0(), true);
    if (f.repr == Repr::xi_space) to_xi_space(out);
    return out;
}

ThresholdReport solve_threshold_equation(const KfpOperator& op) {
    const double box = op.grid().box_length;
    const int nx = op.grid().n_x;
    const int nv = op.basis().order();
    const long n = long(nx) * nv;
    const double la = 160.0 / (box * box), lb = 40.0 / (box * box);

    ThresholdReport rep;

    if (!op.potential()) {
        rep.solution = op.gamma0();
        rep.residual = 0.0;
        rep.dist_gamma = 0.0;
        rep.d1 = compute_d1(op, rep.solution);
        auto profiles = compute_C_profiles(op, rep.solution);
        rep.c1_profile = std::move(profiles.first);
        rep.c2_profile = std::move(profiles.second);
        rep.sigma0 = cplx(0.0, 0.0);
        rep.smallest_singular_value = 1.0; // the weighted matrix is the identity
        rep.m_values = {{la, compute_m(op, la)}, {lb, compute_m(op, lb)}};
        return rep;
    }
    if (!(op.potential()->rho > 4.0))
        throw precondition_error("solve_threshold_equation: potential decay rho = "
                                 + std::to_string(op.potential()->rho)
                                 + " must exceed 4");

    KfpOperator fop(box, nx, nv, std::nullopt, op.weight_s());
    FreeBlockSolver sa(fop, cplx(-la, 0.0)), sb(fop, cplx(-lb, 0.0));
    State g0s = op.gamma0();

    Eigen::VectorXd w3(nx);
    for (int m = 0; m < nx; ++m) {
        const double x = op.grid().point(m);
        w3[m] = std::pow(1.0 + x * x, 1.5);
    }

    // G0 W u in the x representation
    auto apply_g0w = [&](const State& ux) {
        return finite_part(op, sa, sb, la, lb, op.apply_w(ux), g0s, false);
    };

    Eigen::VectorXcd b(n);
    for (int m = 0; m < nx; ++m)
        for (int j = 0; j < nv; ++j) b[m * nv + j] = j == 0 ? 1.0 / w3[m] : 0.0;

    State u = zero_state(box, nx, nv, Repr::x_space);
    double ssv = 0.0;

    if (n <= 4096) {
        // weighted dense matrix, columns scaled by <x>^3 and rows by <x>^{-3}
        Eigen::MatrixXcd mat = Eigen::MatrixXcd::Identity(n, n);
        State e = zero_state(box, nx, nv, Repr::x_space);
        for (int mp = 0; mp < nx; ++mp) {
            for (int jp = 0; jp < nv; ++jp) {
                e.coeffs(jp, mp) = 1.0;
                State g = apply_g0w(e);
                e.coeffs(jp, mp) = 0.0;
                const long col = long(mp) * nv + jp;
                for (int m = 0; m < nx; ++m) {
                    const double scale = w3[mp] / w3[m];
                    for (int j = 0; j < nv; ++j)
                        mat(long(m) * nv + j, col) += scale * g.coeffs(j, m);
                }
            }
        }
        Eigen::PartialPivLU<Eigen::Ref<Eigen::MatrixXcd>> lu(mat);
        Eigen::VectorXcd ut = lu.solve(b);
        for (int m = 0; m < nx; ++m)
            for (int j = 0; j < nv; ++j) u.coeffs(j, m) = ut[m * nv + j] * w3[m];

        // smallest singular value by inverse power iteration on the factors
        std::mt19937_64 rng(20240613);
        std::normal_distribution<double> gauss;
        Eigen::VectorXcd v(n);
        for (long i = 0; i < n; ++i) v[i] = cplx(gauss(rng), gauss(rng));
        v /= v.norm();
        double mu = 0.0;
        for (int it = 0; it < 60; ++it) {
            Eigen::VectorXcd y = lu.solve(lu.adjoint().solve(v));
            const double nn = y.norm();
            if (nn == 0.0) break;
            v = y / nn;
            if (std::abs(nn - mu) <= 1e-6 * nn) {
                mu = nn;
                break;
            }
            mu = nn;
        }
        ssv = mu > 0.0 ? 1.0 / std::sqrt(mu) : 0.0;
    } else {
        auto matvec = [&](const Eigen::VectorXcd& v) {
            State sv = zero_state(box, nx, nv, Repr::x_space);
            for (int m = 0; m < nx; ++m)
                for (int j = 0; j < nv; ++j) sv.coeffs(j, m) = v[m * nv + j] * w3[m];
            State g = apply_g0w(sv);
            Eigen::VectorXcd out = v;
            for (int m = 0; m < nx; ++m)
                for (int j = 0; j < nv; ++j) out[m * nv + j] += g.coeffs(j, m) / w3[m];
            return out;
        };
        Eigen::VectorXcd ut;
        gmres(matvec, b, ut, 1e-10, 200);
        for (int m = 0; m < nx; ++m)
            for (int j = 0; j < nv; ++j) u.coeffs(j, m) = ut[m * nv + j] * w3[m];
    }

    rep.solution = u;
    rep.smallest_singular_value = ssv;

    auto weighted_norm = [&](const State& s) {
        return std::sqrt(std::abs(op.weighted_pairing(s, s, -3.0)));
    };
    State r = apply_g0w(u);
    r.coeffs += u.coeffs;
    r.coeffs -= g0s.coeffs;
    rep.residual = weighted_norm(r) / weighted_norm(g0s);

    State gamma = op.maxwellian();
    State dg = u;
    dg.coeffs -= gamma.coeffs;
    rep.dist_gamma = weighted_norm(dg) / weighted_norm(gamma);

    rep.sigma0 = pairing(op.apply_w(u), g0s);
    rep.d1 = compute_d1(op, u);
    auto profiles = compute_C_profiles(op, u);
    rep.c1_profile = std::move(profiles.first);
    rep.c2_profile = std::move(profiles.second);
    rep.m_values = {{la, compute_m(op, la)}, {lb, compute_m(op, lb)}};
    return rep;
}

cplx compute_d1(const KfpOperator& op, const State& u) {
    require_shape(op, u, "compute_d1");
    State ux = u;
    to_x_space(ux);
    const int nx = op.grid().n_x;
    const int nv = op.basis().order();
    const auto& vp = op.gradient_table();
    cplx acc(0.0, 0.0);
    for (int m = 0; m < nx; ++m) {
        const cplx du0 = 0.5 * ux.coeffs(1, m);
        cplx du1 = -0.5 * ux.coeffs(0, m);
        if (nv > 2) du1 += 0.5 * std::sqrt(2.0) * ux.coeffs(2, m);
        acc += vp[m] * (op.grid().point(m) * du0 + 0.5 * du1);
    }
    return -0.25 * op.grid().dx() * acc;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> compute_C_profiles(const KfpOperator& op,
                                                               const State& u) {
    require_shape(op, u, "compute_C_profiles");
    State ux = u;
    to_x_space(ux);
    const int nx = op.grid().n_x;
    const int nv = op.basis().order();
    const double dx = op.grid().dx();
    const auto& vp = op.gradient_table();

    Eigen::VectorXd g0(nx), g1(nx), xg0(nx);
    for (int m = 0; m < nx; ++m) {
        const double du0 = 0.5 * ux.coeffs(1, m).real();
        double du1 = -0.5 * ux.coeffs(0, m).real();
        if (nv > 2) du1 += 0.5 * std::sqrt(2.0) * ux.coeffs(2, m).real();
        g0[m] = vp[m] * du0;
        g1[m] = vp[m] * du1;
        xg0[m] = op.grid().point(m) * g0[m];
    }

    // sgn sums via prefix accumulation, sgn(0) = 0
    const double t0 = g0.sum(), tx = xg0.sum(), t1 = g1.sum();
    double b0 = 0.0, bx = 0.0, b1 = 0.0;
    Eigen::VectorXd c1(nx), c2(nx);
    for (int m = 0; m < nx; ++m) {
        const double s0 = b0 - (t0 - b0 - g0[m]);
        const double sx = bx - (tx - bx - xg0[m]);
        const double s1 = b1 - (t1 - b1 - g1[m]);
        c2[m] = -dx / 8.0 * s0;
        c1[m] = dx / 4.0 * (op.grid().point(m) * s0 - sx - 0.5 * s1);
        b0 += g0[m];
        bx += xg0[m];
        b1 += g1[m];
    }
    return {std::move(c1), std::move(c2)};
}

cplx compute_m(const KfpOperator& op, double lambda) {
    const double box = op.grid().box_length;
    if (!(lambda > box_guard_lambda(box)))
        throw precondition_error("compute_m: lambda = " + std::to_string(lambda)
                                 + " is below the box guard");
    if (!op.potential()) return cplx(1.0, 0.0);
    if (!(op.potential()->rho > 4.0))
        throw precondition_error("compute_m: potential decay rho = "
                                 + std::to_string(op.potential()->rho)
                                 + " must exceed 4");

    const int nx = op.grid().n_x;
    const int nv = op.basis().order();
    KfpOperator fop(box, nx, nv, std::nullopt, op.weight_s());
    FreeBlockSolver pre(fop, cplx(-lambda, 0.0));
    State g0s = op.gamma0();
    const double half = 1.0 / (2.0 * std::sqrt(lambda));

    auto matvec = [&](const Eigen::VectorXcd& v) {
        State sv = zero_state(box, nx, nv, Repr::x_space);
        sv.coeffs = Eigen::Map<const Eigen::MatrixXcd>(v.data(), nv, nx);
        State wv = op.apply_w(sv);
        State rv = free_solve(pre, wv);
        const cplx c = half * pairing(wv, g0s);
        Eigen::VectorXcd out = v + flat(rv.coeffs);
        out -= c * flat(g0s.coeffs);
        return out;
    };
    Eigen::VectorXcd y;
    gmres(matvec, Eigen::VectorXcd(flat(g0s.coeffs)), y, 1e-11, 300);

    State ys = zero_state(box, nx, nv, Repr::x_space);
    ys.coeffs = Eigen::Map<const Eigen::MatrixXcd>(y.data(), nv, nx);
    return 1.0 + half * pairing(op.apply_w(ys), g0s);
}

} // namespace kfp
