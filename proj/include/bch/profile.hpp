#pragma once
#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "bch/errors.hpp"
#include "bch/jet.hpp"
#include "bch/ode.hpp"
#include "bch/seeds.hpp"

namespace bch {

inline constexpr double kEpsFocal = 1e-3;

inline double value_of(double v) { return v; }
inline double value_of(const Jet& j) { return j.value(); }

// R(x, y, z) = -((1+z^2)/3) sum_i (lambda0_i + z mu0_i) / (1 - lambda0_i y - x mu0_i);
// the governing profile equation is alpha'' = R(x_n, alpha, alpha'). Written
// generically over the jet ring so the Taylor recurrence can reuse it.
template <class T>
T ode_rhs_t(const Eigen::VectorXd& lambda0, const Eigen::VectorXd& mu0, const T& x, const T& y,
            const T& z, double eps_focal = kEpsFocal) {
    T sum = x * 0.0; // zero of the right shape
    for (int i = 0; i < lambda0.size(); ++i) {
        T denom = 1.0 - lambda0[i] * y - mu0[i] * x;
        if (value_of(denom) < eps_focal)
            throw FocalError("profile: evolution factor beta_" + std::to_string(i + 1) +
                             " hit the focal guard");
        sum += (lambda0[i] + mu0[i] * z) / denom;
    }
    return -((1.0 + z * z) / 3.0) * sum;
}

inline double ode_rhs(const IsoparSeed& seed, double x, double y, double z) {
    return ode_rhs_t<double>(seed.lambda0, seed.mu0, x, y, z);
}

// Sampled profile alpha(x_n) with derivatives: the integral curve of grad h in
// the fixed normal plane, per seed. Nodes are the integrator's accepted steps
// (or the quadrature grid for the closed form); between nodes (alpha, alpha')
// interpolate by cubic Hermite, and higher derivatives always come from the
// ODE itself so every jet stays consistent with alpha'' = R.
struct ProfileCurve {
    Eigen::VectorXd lambda0, mu0;
    std::vector<OdeNode> nodes; // ascending x, containing x = 0
    double x_lo = 0.0, x_hi = 0.0;
    std::string validity_reason_lo, validity_reason_hi;
    int branch = +1; // sign of alpha' for x > 0 (Eq. 6.3 branch bookkeeping)
    double eps_focal = kEpsFocal;
    std::string method; // "rk" or "quadrature"

    double beta(int i, double x, double a) const { return 1.0 - lambda0[i] * a - mu0[i] * x; }
    double beta_min(double x) const {
        auto [a, ap] = eval(x);
        double m = 1e300;
        for (int i = 0; i < lambda0.size(); ++i) m = std::min(m, beta(i, x, a));
        return m;
    }

    std::pair<double, double> eval(double x) const {
        if (x < x_lo - 1e-12 || x > x_hi + 1e-12)
            throw DomainError("profile: x_n outside validity interval");
        auto it = std::lower_bound(nodes.begin(), nodes.end(), x,
                                   [](const OdeNode& n, double v) { return n.x < v; });
        if (it == nodes.begin()) ++it;
        if (it == nodes.end()) --it;
        const OdeNode& n1 = *it;
        const OdeNode& n0 = *(it - 1);
        if (x == n0.x) return {n0.y[0], n0.y[1]};
        if (x == n1.x) return {n1.y[0], n1.y[1]};
        double a = hermite(n0.x, n0.y[0], n0.f[0], n1.x, n1.y[0], n1.f[0], x);
        double ap = hermite(n0.x, n0.y[1], n0.f[1], n1.x, n1.y[1], n1.f[1], x);
        return {a, ap};
    }

    double alpha(double x) const { return eval(x).first; }
    double alpha_p(double x) const { return eval(x).second; }
    double alpha_pp(double x) const {
        auto [a, ap] = eval(x);
        return ode_rhs_t<double>(lambda0, mu0, x, a, ap, 0.0);
    }
    double lambda_n(double x) const {
        auto [a, ap] = eval(x);
        double app = ode_rhs_t<double>(lambda0, mu0, x, a, ap, 0.0);
        return app / std::pow(1.0 + ap * ap, 1.5);
    }

    // Taylor coefficients of alpha at x up to degree `order`, obtained by the
    // standard recurrence (m+2)(m+1) a_{m+2} = [t^m] R(t, alpha, alpha').
    std::vector<double> taylor(double x, int order) const {
        auto [a0, a1] = eval(x);
        std::vector<double> a{a0, a1};
        for (int m = 0; m + 2 <= order; ++m) {
            Jet t = Jet::variable(1, m, 0, x);
            Jet aj = Jet::constant(1, m, 0.0);
            Jet zj = Jet::constant(1, m, 0.0);
            for (int i = 0; i <= m && i < static_cast<int>(a.size()); ++i) {
                std::array<int, 1> mi{i};
                int k = t.table().index_of(std::span<const int>(mi.data(), 1));
                aj.raw(k) = a[i];
                if (i + 1 < static_cast<int>(a.size())) zj.raw(k) = (i + 1) * a[i + 1];
            }
            Jet R = ode_rhs_t<Jet>(lambda0, mu0, t, aj, zj, 0.0);
            std::array<int, 1> mi{m};
            int k = t.table().index_of(std::span<const int>(mi.data(), 1));
            a.push_back(R.raw(k) / double((m + 1) * (m + 2)));
        }
        a.resize(order + 1, 0.0);
        return a;
    }

    // alpha evaluated on an incoming jet of the x_n coordinate.
    Jet alpha_jet(const Jet& xn) const {
        std::vector<double> d = taylor(xn.value(), xn.order());
        return xn.compose_series(d);
    }
    Jet alpha_p_jet(const Jet& xn) const {
        std::vector<double> d = taylor(xn.value(), xn.order() + 1);
        std::vector<double> dp(xn.order() + 1);
        for (int i = 0; i <= xn.order(); ++i) dp[i] = (i + 1) * d[i + 1];
        return xn.compose_series(dp);
    }
    Jet alpha_pp_jet(const Jet& xn) const {
        std::vector<double> d = taylor(xn.value(), xn.order() + 2);
        std::vector<double> dpp(xn.order() + 1);
        for (int i = 0; i <= xn.order(); ++i) dpp[i] = (i + 1) * (i + 2) * d[i + 2];
        return xn.compose_series(dpp);
    }
};

namespace detail {

inline void check_proper(const IsoparSeed& seed) {
    double sum = seed.lambda0.sum();
    double scale = 1.0 + seed.lambda0.cwiseAbs().maxCoeff();
    if (std::abs(sum) < 1e-12 * scale)
        throw MinimalSeedError(seed.name +
                               ": sum(lambda0) = 0 forces lambda_n = 0 at x_n = 0; the "
                               "evolved hypersurface would be minimal, not a proper BCH");
}

inline void sort_and_finalize(ProfileCurve& pc) {
    std::sort(pc.nodes.begin(), pc.nodes.end(),
              [](const OdeNode& a, const OdeNode& b) { return a.x < b.x; });
    pc.nodes.erase(std::unique(pc.nodes.begin(), pc.nodes.end(),
                               [](const OdeNode& a, const OdeNode& b) { return a.x == b.x; }),
                   pc.nodes.end());
    pc.x_lo = pc.nodes.front().x;
    pc.x_hi = pc.nodes.back().x;
}

} // namespace detail

// Adaptive RK integration of alpha'' = R from (alpha, alpha') = (0, 0), both
// directions, stopping at x_max or at the focal guard.
inline ProfileCurve solve_profile(const IsoparSeed& seed, double x_max, double tol = 1e-10) {
    if (x_max <= 0) throw DomainError("solve_profile: x_max must be positive");
    detail::check_proper(seed);
    ProfileCurve pc;
    pc.lambda0 = seed.lambda0;
    pc.mu0 = seed.mu0;
    pc.method = "rk";

    OdeRhs rhs = [&pc](double x, const Eigen::Vector2d& y) {
        double app = ode_rhs_t<double>(pc.lambda0, pc.mu0, x, y[0], y[1], pc.eps_focal / 2);
        return Eigen::Vector2d(y[1], app);
    };
    OdeStop stop = [&pc](double x, const Eigen::Vector2d& y) {
        for (int i = 0; i < pc.lambda0.size(); ++i)
            if (pc.beta(i, x, y[0]) < pc.eps_focal) return true;
        return false;
    };
    OdeOptions opt;
    opt.abs_tol = tol;
    opt.rel_tol = tol;

    OdeResult fwd = integrate_dp54(rhs, 0.0, Eigen::Vector2d::Zero(), x_max, opt, stop);
    OdeResult bwd = integrate_dp54(rhs, 0.0, Eigen::Vector2d::Zero(), -x_max, opt, stop);
    if (fwd.nodes.size() < 2 && bwd.nodes.size() < 2)
        throw FocalError(seed.name + ": validity interval collapsed at x_n = 0");
    pc.validity_reason_hi = fwd.reached_end ? "x_max reached" : fwd.stop_reason;
    pc.validity_reason_lo = bwd.reached_end ? "x_max reached" : bwd.stop_reason;
    pc.nodes = fwd.nodes;
    pc.nodes.insert(pc.nodes.end(), bwd.nodes.begin(), bwd.nodes.end());
    detail::sort_and_finalize(pc);
    return pc;
}

// Closed-form route for hyperplane seeds (all mu0 = 0): first integral
//   1 + alpha'^2 = prod_i (1 - lambda0_i alpha)^{2/3},
// quadrature x(alpha) = int_0^alpha dt / sqrt(F(t)) with the 1/sqrt(t)
// endpoint removed by t = s^2, and inversion by monotone marching plus Newton.
struct ClosedFormProfile {
    // F(a) = prod (1 - lambda0_i a)^{2/3} - 1, computed via expm1/log1p so the
    // small-a cancellation keeps full precision.
    static double F(const Eigen::VectorXd& lambda0, double a) {
        double s = 0.0;
        for (int i = 0; i < lambda0.size(); ++i) {
            double arg = -lambda0[i] * a;
            if (arg <= -1.0) throw FocalError("closed-form profile: focal factor reached zero");
            s += std::log1p(arg);
        }
        return std::expm1((2.0 / 3.0) * s);
    }
    // lambda_n(alpha) = -(1/3) (sum_i lambda0_i/(1 - lambda0_i alpha)) prod_i (1 - lambda0_i alpha)^{-1/3}
    static double lambda_n(const Eigen::VectorXd& lambda0, double a) {
        double sum = 0.0, logprod = 0.0;
        for (int i = 0; i < lambda0.size(); ++i) {
            double beta = 1.0 - lambda0[i] * a;
            sum += lambda0[i] / beta;
            logprod += std::log(beta);
        }
        return -(sum / 3.0) * std::exp(-logprod / 3.0);
    }
};

inline ProfileCurve closed_form_profile(const IsoparSeed& seed, double x_max) {
    if (x_max <= 0) throw DomainError("closed_form_profile: x_max must be positive");
    if (seed.mu0.cwiseAbs().maxCoeff() > 0.0)
        throw DomainError("closed_form_profile: requires a hyperplane seed (all mu0 = 0)");
    detail::check_proper(seed);
    if (seed.lambda0.sum() >= 0.0)
        throw DomainError("closed_form_profile: requires sum(lambda0) < 0");

    const Eigen::VectorXd& l0 = seed.lambda0;
    auto F = [&l0](double a) { return ClosedFormProfile::F(l0, a); };
    const double c0 = -(2.0 / 3.0) * l0.sum(); // F'(0)

    // x(alpha) via the substituted integrand 2s/sqrt(F(s^2)), regular at 0
    auto integrand = [&](double s) {
        if (s == 0.0) return 2.0 / std::sqrt(c0);
        double f = F(s * s);
        return 2.0 * s / std::sqrt(f);
    };
    using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
    auto x_of_alpha_inc = [&](double s_lo, double s_hi) {
        return GK::integrate(integrand, s_lo, s_hi, 12, 1e-12);
    };

    ProfileCurve pc;
    pc.lambda0 = seed.lambda0;
    pc.mu0 = seed.mu0;
    pc.method = "quadrature";

    // march alpha upward on a refining grid until x reaches x_max (or the
    // quadrature saturates: for steep F the end is at finite x)
    std::vector<std::pair<double, double>> ax; // (alpha, x)
    ax.emplace_back(0.0, 0.0);
    double a = 0.0, x = 0.0, da = 0.01;
    int guard = 0;
    while (x < x_max && guard++ < 100000) {
        double a_next = a + da;
        double x_next = x + x_of_alpha_inc(std::sqrt(a), std::sqrt(a_next));
        ax.emplace_back(a_next, x_next);
        // keep the x-spacing roughly uniform so inversion stays tame
        double dx = x_next - x;
        if (dx > 0.01) da *= 0.7;
        else if (dx < 0.002) da *= 1.4;
        a = a_next;
        x = x_next;
        if (a > 1e9) break;
    }
    double x_reach = std::min(x, x_max);

    // uniform x grid; invert x -> alpha by safeguarded Newton in s = sqrt(alpha),
    // where dx/ds = 2s/sqrt(F(s^2)) stays bounded away from zero near the origin
    int n_nodes = 400;
    pc.nodes.clear();
    std::size_t seg = 1;
    for (int k = 0; k <= n_nodes; ++k) {
        double xt = x_reach * k / n_nodes;
        while (seg + 1 < ax.size() && ax[seg].second < xt) ++seg;
        double a_lo = ax[seg - 1].first, x_lo = ax[seg - 1].second;
        double a_hi = ax[seg].first, x_hi2 = ax[seg].second;
        double s_seg = std::sqrt(a_lo);
        double sl = s_seg, sh = std::sqrt(a_hi);
        double frac = (x_hi2 > x_lo) ? (xt - x_lo) / (x_hi2 - x_lo) : 0.0;
        double s = std::sqrt(std::clamp(a_lo + (a_hi - a_lo) * frac, a_lo, a_hi));
        if (k == 0) s = 0.0;
        for (int it = 0; it < 80; ++it) {
            double G = x_lo + x_of_alpha_inc(s_seg, s) - xt;
            if (std::abs(G) < 1e-14 * (1.0 + std::abs(xt))) break;
            (G < 0 ? sl : sh) = s;
            double slope = integrand(s);
            double s_new = s - G / slope;
            if (!(s_new > sl && s_new < sh)) s_new = 0.5 * (sl + sh);
            if (s_new == s) break;
            s = s_new;
        }
        double at = s * s;
        double ap = (at > 0.0) ? std::sqrt(std::max(0.0, F(at))) : 0.0;
        double app = ode_rhs_t<double>(pc.lambda0, pc.mu0, xt, at, ap, 0.0);
        OdeNode node;
        node.x = xt;
        node.y << at, ap;
        node.f << ap, app;
        pc.nodes.push_back(node);
    }
    // even reflection for the - branch (mu0 = 0 makes the ODE autonomous)
    const std::size_t n_pos = pc.nodes.size();
    for (std::size_t k = 0; k < n_pos; ++k) {
        const OdeNode& nd = pc.nodes[k];
        if (nd.x == 0.0) continue;
        OdeNode m = nd;
        m.x = -nd.x;
        m.y[1] = -nd.y[1];
        m.f[0] = -nd.f[0];
        pc.nodes.push_back(m);
    }
    detail::sort_and_finalize(pc);
    pc.validity_reason_lo = pc.validity_reason_hi =
        (x_reach < x_max) ? "quadrature end reached before x_max" : "x_max reached";
    return pc;
}

} // namespace bch
