#pragma once
#include <Eigen/Dense>
#include <functional>
#include <span>
#include <vector>

#include "bch/chart.hpp"
#include "bch/errors.hpp"
#include "bch/evolve.hpp"
#include "bch/jet.hpp"

namespace bch {

// Scalar field on a coordinate box evaluated to a requested jet order at a
// plain point (weights and principal-curvature functions of a twisted-diagonal
// metric g = sum v_i^2 dx_i^2).
using PointField = std::function<Jet(std::span<const double>, int)>;

struct OrthoMetric {
    int n = 0;
    Box box;
    std::vector<PointField> weights; // v_i > 0 on the box
    std::vector<PointField> lambdas; // principal curvature functions
};

// Christoffel symbols of a diagonal metric by the three nonzero patterns
//   Gamma^i_{ik} = E_{i,k}/(2E_i),  Gamma^i_{jj} = -E_{j,i}/(2E_i)  (E_i = v_i^2),
// everything else zero. Returned as Gamma[i](j,k).
inline std::vector<Eigen::MatrixXd> christoffel(const OrthoMetric& om, std::span<const double> p) {
    const int n = om.n;
    std::vector<Jet> E(n, Jet());
    for (int i = 0; i < n; ++i) {
        Jet v = om.weights[i](p, 1);
        if (v.value() <= 0.0) throw DomainError("OrthoMetric: weight must be positive");
        E[i] = v * v;
    }
    std::vector<Eigen::MatrixXd> G(n, Eigen::MatrixXd::Zero(n, n));
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            double gik = E[i].derivative(k).value() / (2.0 * E[i].value());
            G[i](i, k) = gik; // covers k == i as Gamma^i_{ii}
            G[i](k, i) = gik;
            if (k != i) G[i](k, k) = -E[k].derivative(i).value() / (2.0 * E[i].value());
        }
    return G;
}

// Dense general-metric formula Gamma^i_{jk} = (g^{ii}/2)(g_{ki,j} + g_{ij,k} - g_{jk,i})
// specialized to the diagonal case; oracle route for the pattern formulas.
inline std::vector<Eigen::MatrixXd> christoffel_dense(const OrthoMetric& om,
                                                      std::span<const double> p) {
    const int n = om.n;
    std::vector<Jet> E(n, Jet());
    for (int i = 0; i < n; ++i) {
        Jet v = om.weights[i](p, 1);
        E[i] = v * v;
    }
    auto g = [&](int a, int b) { return a == b ? E[a] : Jet::constant(E[a].nvars(), E[a].order(), 0.0); };
    std::vector<Eigen::MatrixXd> G(n, Eigen::MatrixXd::Zero(n, n));
    for (int i = 0; i < n; ++i) {
        double gii_inv = 1.0 / E[i].value();
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                double t = g(k, i).derivative(j).value() + g(i, j).derivative(k).value() -
                           g(j, k).derivative(i).value();
                G[i](j, k) = 0.5 * gii_inv * t;
            }
    }
    return G;
}

// Codazzi system for curvature-line coordinates: residual of
//   lambda_{i,j} - (lambda_j - lambda_i) Gamma^i_{ij} = 0 for all i != j.
inline double codazzi_residual(const OrthoMetric& om, std::span<const double> p) {
    const int n = om.n;
    auto G = christoffel(om, p);
    std::vector<Jet> lam(n, Jet());
    for (int i = 0; i < n; ++i) lam[i] = om.lambdas[i](p, 1);
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            double r = lam[i].derivative(j).value() -
                       (lam[j].value() - lam[i].value()) * G[i](i, j);
            worst = std::max(worst, std::abs(r));
        }
    return worst;
}

// Twisted-diagonal data of an evolved chart: v_i = v0_i beta_i, v_n = sqrt(1+alpha'^2),
// lambda_i = (lambda0_i + alpha' mu0_i) gamma / beta_i, lambda_n = alpha''/(1+alpha'^2)^{3/2}.
inline OrthoMetric ortho_from_evolved(const EvolvedChart& ec) {
    OrthoMetric om;
    const int n = ec.n();
    om.n = n;
    om.box = ec.grid_box(1.0);
    auto seedY = ec.seed.Y.map;
    auto prof = ec.profile;
    Eigen::VectorXd l0 = ec.seed.lambda0, m0 = ec.seed.mu0;
    for (int i = 0; i < n - 1; ++i) {
        om.weights.push_back([seedY, prof, l0, m0, i, n](std::span<const double> p, int ord) {
            JetVec vars = jet_variables(p, ord + 1);
            JetVec sv(vars.begin(), vars.begin() + (n - 1));
            JetVec y = seedY(sv);
            Jet s = y[0].derivative(i) * y[0].derivative(i);
            for (std::size_t a = 1; a < y.size(); ++a) s += y[a].derivative(i) * y[a].derivative(i);
            Jet v0 = sqrt(s);
            Jet xn = vars[n - 1].truncated(ord);
            Jet beta = 1.0 - l0[i] * prof->alpha_jet(xn) - m0[i] * xn;
            return v0 * beta;
        });
        om.lambdas.push_back([prof, l0, m0, i, n](std::span<const double> p, int ord) {
            Jet xn = Jet::variable(n, ord, n - 1, p[n - 1]);
            Jet a = prof->alpha_jet(xn);
            Jet ap = prof->alpha_p_jet(xn);
            Jet beta = 1.0 - l0[i] * a - m0[i] * xn;
            Jet gamma = pow(1.0 + ap * ap, -0.5);
            return (l0[i] + ap * m0[i]) * gamma / beta;
        });
    }
    om.weights.push_back([prof, n](std::span<const double> p, int ord) {
        Jet xn = Jet::variable(n, ord, n - 1, p[n - 1]);
        Jet ap = prof->alpha_p_jet(xn);
        return sqrt(1.0 + ap * ap);
    });
    om.lambdas.push_back([prof, n](std::span<const double> p, int ord) {
        Jet xn = Jet::variable(n, ord, n - 1, p[n - 1]);
        Jet ap = prof->alpha_p_jet(xn);
        Jet app = prof->alpha_pp_jet(xn);
        return app * pow(1.0 + ap * ap, -1.5);
    });
    return om;
}

} // namespace bch
