#include "kfp/evolve.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>
#include <vector>

#include "kfp/errors.hpp"
#include "kfp/oscillator.hpp"
#include "kfp/resolvent.hpp"

namespace kfp {

using cplx = std::complex<double>;

namespace {

void require_shape(const KfpOperator& op, const State& u, const char* who) {
    if (u.box_length != op.grid().box_length || u.n_x != op.grid().n_x ||
        u.n_v != op.basis().order())
        throw precondition_error(std::string(who) + ": state shape does not match the operator");
}

// 10-point Gauss-Legendre rule on [-1, 1]
constexpr double kGlNode[5] = {0.14887433898163121, 0.43339539412924719,
                               0.67940956829902441, 0.86506336668898451,
                               0.97390652851717172};
constexpr double kGlWeight[5] = {0.29552422471475287, 0.26926671930999635,
                                 0.21908636251598204, 0.14945134915058059,
                                 0.066671344308688138};

template <class F>
void gl_panel(double a, double b, const F& visit) {
    const double mid = 0.5 * (a + b), rad = 0.5 * (b - a);
    for (int i = 4; i >= 0; --i) visit(mid - rad * kGlNode[i], rad * kGlWeight[i]);
    for (int i = 0; i < 5; ++i) visit(mid + rad * kGlNode[i], rad * kGlWeight[i]);
}

// cached sub-flows for one step size
struct Stepper {
    double dt = 0.0;
    bool with_w = false;
    std::vector<Eigen::MatrixXcd> free_step; // exp(-dt block) per wavenumber
    std::vector<Eigen::MatrixXd> half, full; // coupling rotations per grid point
};

Stepper build_stepper(const KfpOperator& op, double dt) {
    const int nx = op.grid().n_x;
    Stepper st;
    st.dt = dt;
    st.with_w = op.potential().has_value();
    st.free_step.reserve(nx);
    for (int k = 0; k < nx; ++k) {
        Eigen::MatrixXcd q =
            assemble_oscillator(op.basis(), op.grid().wavenumber(k)).entries;
        st.free_step.push_back(Eigen::MatrixXcd((-dt * q).exp()));
    }
    if (st.with_w) {
        const Eigen::MatrixXd dv = op.basis().deriv_v();
        st.half.reserve(nx);
        st.full.reserve(nx);
        for (int m = 0; m < nx; ++m) {
            Eigen::MatrixXd h =
                Eigen::MatrixXd((0.5 * dt * op.gradient_table()[m] * dv).exp());
            st.full.push_back(h * h);
            st.half.push_back(std::move(h));
        }
    }
    return st;
}

void apply_columns(const std::vector<Eigen::MatrixXd>& mats, State& u) {
    for (int m = 0; m < u.n_x; ++m) u.coeffs.col(m) = mats[m] * u.coeffs.col(m);
}

// n whole steps; u enters and leaves in x representation
void advance(const Stepper& st, State& u, long n) {
    if (n <= 0) return;
    to_x_space(u);
    if (!st.with_w) {
        to_xi_space(u);
        for (long s = 0; s < n; ++s)
            for (int k = 0; k < u.n_x; ++k)
                u.coeffs.col(k) = st.free_step[k] * u.coeffs.col(k);
        to_x_space(u);
        return;
    }
    apply_columns(st.half, u);
    for (long s = 0; s < n; ++s) {
        to_xi_space(u);
        for (int k = 0; k < u.n_x; ++k)
            u.coeffs.col(k) = st.free_step[k] * u.coeffs.col(k);
        to_x_space(u);
        if (s + 1 < n) apply_columns(st.full, u);
    }
    apply_columns(st.half, u);
}

// delta of flow using whole steps from `main` plus one trailing partial step
void advance_interval(const KfpOperator& op, const Stepper& main, State& u,
                      double delta) {
    if (delta <= 0.0) return;
    long n = static_cast<long>(std::floor(delta / main.dt + 1e-9));
    double rem = delta - static_cast<double>(n) * main.dt;
    if (rem <= 1e-10 * main.dt) rem = 0.0;
    advance(main, u, n);
    if (rem > 0.0) advance(build_stepper(op, rem), u, 1);
}

void check_step(double t, double dt, const char* who) {
    if (!(t >= 0.0)) throw precondition_error(std::string(who) + ": t must be nonnegative");
    if (!(dt > 0.0) || dt > 0.1)
        throw precondition_error(std::string(who) + ": dt must lie in (0, 0.1]");
}

void check_times(const KfpOperator& op, const std::vector<double>& times,
                 const char* who) {
    if (times.empty())
        throw precondition_error(std::string(who) + ": needs at least one time");
    if (!(times.front() > 0.0))
        throw precondition_error(std::string(who) + ": times must be positive");
    for (size_t i = 0; i + 1 < times.size(); ++i)
        if (!(times[i] < times[i + 1]))
            throw precondition_error(std::string(who) + ": times must increase strictly");
    const double horizon = std::pow(op.grid().box_length / 8.0, 2);
    if (times.back() > horizon)
        throw precondition_error(std::string(who) + ": final time " +
                                 std::to_string(times.back()) +
                                 " exceeds the diffusive box horizon (L/8)^2 = " +
                                 std::to_string(horizon));
}

bool real_valued(const State& u) {
    const double scale = u.coeffs.cwiseAbs().maxCoeff();
    if (scale == 0.0) return true;
    return u.coeffs.imag().cwiseAbs().maxCoeff() <= 1e-13 * scale;
}

} // namespace

State free_evolve_exact(const KfpOperator& op, const State& u0, double t) {
    require_shape(op, u0, "free_evolve_exact");
    if (op.potential())
        throw precondition_error("free_evolve_exact: expects the free operator");
    if (!(t >= 0.0))
        throw precondition_error("free_evolve_exact: t must be nonnegative");
    State u = u0;
    if (t == 0.0) return u;
    const Repr orig = u0.repr;
    to_xi_space(u);
    for (int k = 0; k < u.n_x; ++k) {
        Eigen::MatrixXcd q =
            assemble_oscillator(op.basis(), op.grid().wavenumber(k)).entries;
        u.coeffs.col(k) = Eigen::MatrixXcd((-t * q).exp()) * u.coeffs.col(k);
    }
    if (orig == Repr::x_space) to_x_space(u);
    return u;
}

State evolve(const KfpOperator& op, const State& u0, double t, double dt) {
    require_shape(op, u0, "evolve");
    check_step(t, dt, "evolve");
    State u = u0;
    if (t == 0.0) return u;
    const Repr orig = u0.repr;
    to_x_space(u);
    advance_interval(op, build_stepper(op, dt), u, t);
    if (orig == Repr::xi_space) to_xi_space(u);
    return u;
}

cplx conserved_pairing(const KfpOperator& op, const State& u) {
    require_shape(op, u, "conserved_pairing");
    return pairing(u, op.maxwellian());
}

DecayFit decay_fit(const KfpOperator& op, const State& u0,
                   const std::vector<double>& times, double s, double dt) {
    require_shape(op, u0, "decay_fit");
    if (!(s > 2.5))
        throw precondition_error("decay_fit: weight exponent s must exceed 5/2");
    check_times(op, times, "decay_fit");
    check_step(times.back(), dt, "decay_fit");

    DecayFit fit;
    fit.times = times;
    State u = u0;
    to_x_space(u);
    const Stepper main = build_stepper(op, dt);
    double tcur = 0.0;
    for (double tt : times) {
        advance_interval(op, main, u, tt - tcur);
        tcur = tt;
        const double wn = std::sqrt(std::abs(op.weighted_pairing(u, u, -s)));
        if (!(wn > 0.0))
            throw numerical_error("decay_fit: weighted norm vanished; nothing to fit");
        fit.weighted_norms.push_back(wn);
    }

    const size_t n = times.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        const double lx = std::log(times[i]), ly = std::log(fit.weighted_norms[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double den = n * sxx - sx * sx;
    fit.slope = den != 0.0 ? (n * sxy - sx * sy) / den : 0.0;
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss_res = 0, ss_tot = 0;
    for (size_t i = 0; i < n; ++i) {
        const double ly = std::log(fit.weighted_norms[i]);
        const double fy = fit.intercept + fit.slope * std::log(times[i]);
        ss_res += (ly - fy) * (ly - fy);
        ss_tot += (ly - sy / n) * (ly - sy / n);
    }
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

std::vector<cplx> leading_coefficient(const KfpOperator& op, const State& u0,
                                      const State& g,
                                      const std::vector<double>& times, double dt) {
    require_shape(op, u0, "leading_coefficient");
    require_shape(op, g, "leading_coefficient");
    check_times(op, times, "leading_coefficient");
    check_step(times.back(), dt, "leading_coefficient");

    std::vector<cplx> vals;
    vals.reserve(times.size());
    State u = u0;
    to_x_space(u);
    const Stepper main = build_stepper(op, dt);
    double tcur = 0.0;
    for (double tt : times) {
        advance_interval(op, main, u, tt - tcur);
        tcur = tt;
        vals.push_back(std::sqrt(4.0 * M_PI * tt) * pairing(u, g));
    }
    return vals;
}

ContourSpec make_contour(double t, double vertical_cap, double delta,
                         double panel_increment, int arc_panels) {
    if (!(t > 0.0)) throw precondition_error("make_contour: t must be positive");
    if (!(vertical_cap > 0.0))
        throw precondition_error("make_contour: vertical cap must be positive");
    if (!(delta > 0.0) || delta >= 1.0)
        throw precondition_error("make_contour: delta must lie in (0, 1)");
    if (!(panel_increment > 0.0) || arc_panels < 1)
        throw precondition_error("make_contour: invalid panel parameters");

    const double cap = vertical_cap;
    const double lam_max = -std::log(delta) / t;
    auto g = [&](double lam) { return t * (lam + cap * lam * lam); };
    const int panels =
        std::max(8, static_cast<int>(std::ceil(g(lam_max) / panel_increment)));
    std::vector<double> edges{0.0};
    for (int i = 1; i <= panels; ++i) {
        const double gt = g(lam_max) * i / panels;
        edges.push_back((-1.0 + std::sqrt(1.0 + 4.0 * cap * gt / t)) / (2.0 * cap));
    }

    ContourSpec spec;
    spec.delta = delta;
    spec.vertical_cap = cap;
    spec.nodes.reserve(2 * panels * 10 + arc_panels * 10);

    // gl_panel accepts signed intervals; a > b walks the panel backward with
    // negated weights, so traversal direction is carried by the weight sign
    // branch below the axis, traversed from lam_max toward the axis
    for (int i = panels - 1; i >= 0; --i)
        gl_panel(edges[i + 1], edges[i], [&](double l, double w) {
            const cplx z(l, -cap - cap * l * l);
            spec.nodes.push_back({z, w * cplx(1.0, -2.0 * cap * l)});
        });
    // left semicircle from -iC through -C to +iC, theta falling
    for (int i = 0; i < arc_panels; ++i) {
        const double a = 1.5 * M_PI - M_PI * i / arc_panels;
        const double b = 1.5 * M_PI - M_PI * (i + 1) / arc_panels;
        gl_panel(a, b, [&](double th, double w) {
            const cplx z = cap * std::exp(cplx(0.0, th));
            spec.nodes.push_back({z, w * cplx(0.0, 1.0) * z});
        });
    }
    // branch above the axis out to lam_max
    for (int i = 0; i < panels; ++i)
        gl_panel(edges[i], edges[i + 1], [&](double l, double w) {
            const cplx z(l, cap + cap * l * l);
            spec.nodes.push_back({z, w * cplx(1.0, 2.0 * cap * l)});
        });
    return spec;
}

cplx contour_semigroup(const KfpOperator& op, const State& f, const State& g,
                       double t, const ContourSpec& contour) {
    require_shape(op, f, "contour_semigroup");
    require_shape(op, g, "contour_semigroup");
    if (!(t >= 0.5))
        throw precondition_error(
            "contour_semigroup: t must be at least 0.5 for the branch integrand to decay");
    if (contour.nodes.empty())
        throw precondition_error("contour_semigroup: the contour has no nodes");

    State fx = f, gx = g;
    to_x_space(fx);
    to_x_space(gx);

    long upper = 0, lower = 0, axis = 0;
    for (const auto& n : contour.nodes) {
        if (n.z.imag() > 0.0)
            ++upper;
        else if (n.z.imag() < 0.0)
            ++lower;
        else
            ++axis;
    }
    const bool halved = real_valued(fx) && real_valued(gx) && axis == 0 &&
                        upper == lower && upper > 0;

    cplx acc(0.0, 0.0);
    for (const auto& node : contour.nodes) {
        if (halved && node.z.imag() < 0.0) continue;
        State u = solve_resolvent(op, node.z, fx);
        acc += node.weight * std::exp(-t * node.z) * pairing(u, gx);
    }
    if (halved) return cplx(acc.imag() / M_PI, 0.0);
    return acc / cplx(0.0, 2.0 * M_PI);
}

} // namespace kfp
