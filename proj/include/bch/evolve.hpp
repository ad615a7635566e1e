#pragma once
#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <span>
#include <utility>

#include "bch/chart.hpp"
#include "bch/curvature.hpp"
#include "bch/profile.hpp"
#include "bch/seeds.hpp"

namespace bch {

// The evolved immersion X(x', x_n) = Y(x') + alpha(x_n) N0(x') + x_n e_n(x'),
// with closed-form curvature evolution along the x_n lines:
//   beta_i  = 1 - alpha lambda0_i - x_n mu0_i,
//   lambda_i = (lambda0_i + alpha' mu0_i) gamma / beta_i,  gamma = 1/sqrt(1+alpha'^2),
//   lambda_n = alpha'' / (1+alpha'^2)^{3/2},
//   N = (N0 - alpha' e_n) gamma,  v_i = v0_i beta_i,  v_n = sqrt(1+alpha'^2).
struct EvolvedChart {
    IsoparSeed seed;
    std::shared_ptr<const ProfileCurve> profile;
    Chart chart; // dimension n into E^{n+1}

    int n() const { return seed.n; }
    double x_lo() const { return profile->x_lo; }
    double x_hi() const { return profile->x_hi; }

    double beta(int i, double xn) const {
        auto [a, ap] = profile->eval(xn);
        (void)ap;
        return 1.0 - seed.lambda0[i] * a - seed.mu0[i] * xn;
    }
    double gamma(double xn) const {
        double ap = profile->alpha_p(xn);
        return 1.0 / std::sqrt(1.0 + ap * ap);
    }
    Eigen::VectorXd lambdas_tangent(double xn) const {
        auto [a, ap] = profile->eval(xn);
        double g = 1.0 / std::sqrt(1.0 + ap * ap);
        Eigen::VectorXd out(n() - 1);
        for (int i = 0; i < n() - 1; ++i) {
            double b = 1.0 - seed.lambda0[i] * a - seed.mu0[i] * xn;
            out[i] = (seed.lambda0[i] + ap * seed.mu0[i]) * g / b;
        }
        return out;
    }
    // Sum over i < n of lambda_i (Eq. 5.11 shape).
    double sum_lambda_tangent(double xn) const { return lambdas_tangent(xn).sum(); }
    double lambda_n(double xn) const { return profile->lambda_n(xn); }
    double h_closed(double xn) const {
        return (sum_lambda_tangent(xn) + lambda_n(xn)) / double(n());
    }
    // Unit normal along the evolution, constant normal plane per seed point.
    Eigen::VectorXd normal_closed(std::span<const double> seed_pt, double xn) const {
        double ap = profile->alpha_p(xn);
        double g = 1.0 / std::sqrt(1.0 + ap * ap);
        return (seed.N0_value(seed_pt) - ap * seed.en_value(seed_pt)) * g;
    }
    // Metric weights (v_1..v_{n-1}, v_n) at (seed_pt, xn).
    Eigen::VectorXd weights(std::span<const double> seed_pt, double xn) const {
        Eigen::VectorXd v0 = seed.v0(seed_pt);
        auto [a, ap] = profile->eval(xn);
        Eigen::VectorXd out(n());
        for (int i = 0; i < n() - 1; ++i)
            out[i] = v0[i] * (1.0 - seed.lambda0[i] * a - seed.mu0[i] * xn);
        out[n() - 1] = std::sqrt(1.0 + ap * ap);
        return out;
    }

    // Domain box shrunk to a fraction of the validity interval in x_n.
    Box grid_box(double coverage = 1.0) const {
        Box b;
        const int m = n() - 1;
        b.lo = Eigen::VectorXd(n());
        b.hi = Eigen::VectorXd(n());
        b.lo.head(m) = seed.Y.box.lo;
        b.hi.head(m) = seed.Y.box.hi;
        double mid = 0.5 * (x_lo() + x_hi());
        b.lo[m] = mid + coverage * (x_lo() - mid);
        b.hi[m] = mid + coverage * (x_hi() - mid);
        return b;
    }
};

inline EvolvedChart evolve(const IsoparSeed& seed, std::shared_ptr<const ProfileCurve> profile) {
    EvolvedChart ec;
    ec.seed = seed;
    ec.profile = std::move(profile);

    const int m = seed.n - 1;
    Chart c;
    c.name = "bch(" + seed.name + ")";
    c.dim_domain = seed.n;
    c.dim_ambient = seed.n + 1;
    c.box = ec.grid_box(1.0);
    std::shared_ptr<const ProfileCurve> prof = ec.profile;
    JetMapFn Ymap = seed.Y.map, N0map = seed.N0, enmap = seed.en;
    c.map = [Ymap, N0map, enmap, prof, m](const JetVec& v) {
        JetVec sv(v.begin(), v.begin() + m);
        JetVec y = Ymap(sv);
        JetVec n0 = N0map(sv);
        JetVec en = enmap(sv);
        Jet a = prof->alpha_jet(v[m]);
        JetVec out;
        out.reserve(y.size());
        for (std::size_t k = 0; k < y.size(); ++k) out.push_back(y[k] + a * n0[k] + v[m] * en[k]);
        return out;
    };
    ec.chart = std::move(c);

    // orient the cofactor normal to agree with (N0 - alpha' e_n) gamma at x_n = 0
    Eigen::VectorXd probe = ec.chart.box.center();
    probe[m] = 0.0;
    Frame fr = Frame::at(ec.chart, std::span<const double>(probe.data(), probe.size()), 1);
    Eigen::VectorXd want = seed.N0_value(std::span<const double>(probe.data(), m));
    if (fr.N_values().dot(want) < 0.0) ec.chart.normal_sign = -1.0;
    return ec;
}

inline EvolvedChart build_bch(const IsoparSeed& seed, double x_max, double tol = 1e-10) {
    auto prof = std::make_shared<ProfileCurve>(solve_profile(seed, x_max, tol));
    return evolve(seed, prof);
}

// Closed-form sum of the tangential principal curvatures; BCH construction
// forces sum_i lambda_i + 3 lambda_n = 0 along the evolution.
inline double mean_curvature_sum(const EvolvedChart& ec, double xn) {
    return ec.sum_lambda_tangent(xn);
}

} // namespace bch
