#pragma once
#include <Eigen/Dense>
#include <span>
#include <utility>

#include "bch/chart.hpp"
#include "bch/curvature.hpp"
#include "bch/expr.hpp"

namespace bch {

// Graph of a height function u over R^n with the closed-form metric
//   g_ij = delta_ij + u_i u_j,  g^ij = delta_ij - u_i u_j / W^2,  W = sqrt(1+|grad u|^2).
// Everything here differentiates u's expression tree through the jet engine;
// the generic chart pipeline in curvature.hpp is the cross-check route.
struct GraphChart {
    int n;
    Expr u;
    Box box;

    GraphChart(int n_, Expr u_, Box box_) : n(n_), u(std::move(u_)), box(std::move(box_)) {
        if (u.max_var() >= n) throw DomainError("GraphChart: expression exceeds dimension");
    }

    Chart chart(std::string name = "graph") const { return graph_chart(u, n, box, std::move(name)); }

    struct MetricJets {
        Jet uj;                  // u
        std::vector<Jet> ui;     // first partials
        Jet W2, W;               // 1 + |grad u|^2 and its root
        JetMatrix g, g_inv;
    };

    MetricJets metric_jets(std::span<const double> p, int order) const {
        if (!box.contains(p, 1e-12)) throw DomainError("GraphChart: point outside domain box");
        JetVec vars = jet_variables(p, order);
        MetricJets m;
        m.uj = u.eval(vars);
        m.ui.reserve(n);
        for (int i = 0; i < n; ++i) m.ui.push_back(m.uj.derivative(i));
        m.W2 = 1.0 + m.ui[0] * m.ui[0];
        for (int i = 1; i < n; ++i) m.W2 += m.ui[i] * m.ui[i];
        m.W = sqrt(m.W2);
        m.g.assign(n, std::vector<Jet>(n, Jet::constant(n, order - 1, 0.0)));
        m.g_inv = m.g;
        Jet inv_W2 = m.W2.reciprocal();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                m.g[i][j] = m.ui[i] * m.ui[j];
                if (i == j) m.g[i][j] += 1.0;
                m.g_inv[i][j] = -(m.ui[i] * m.ui[j] * inv_W2);
                if (i == j) m.g_inv[i][j] += 1.0;
            }
        return m;
    }
};

// Quasilinear minimal-graph residual sum_ij (W^2 delta_ij - u_i u_j) u_ij,
// the numerator of div(grad u / W); zero iff the graph is minimal at p.
// In dimension 2 this is (1+u_y^2)u_xx - 2 u_x u_y u_xy + (1+u_x^2)u_yy.
inline double minimal_graph_residual(const GraphChart& gc, std::span<const double> p) {
    auto m = gc.metric_jets(p, 2);
    double W2 = m.W2.value();
    double r = 0.0;
    for (int i = 0; i < gc.n; ++i)
        for (int j = 0; j < gc.n; ++j) {
            double uij = m.ui[i].derivative(j).value();
            double coef = (i == j ? W2 : 0.0) - m.ui[i].value() * m.ui[j].value();
            r += coef * uij;
        }
    return r;
}

namespace detail {

// c^m = (1/W) sum_k d_k (W g^{km}); the first-order coefficients of the metric
// Laplacian. Returns jets two orders below the input metric jets.
inline std::vector<Jet> laplacian_coeffs(const GraphChart::MetricJets& m, int n) {
    std::vector<Jet> c;
    c.reserve(n);
    Jet inv_W = m.W.reciprocal();
    for (int mm = 0; mm < n; ++mm) {
        Jet s = (m.W * m.g_inv[0][mm]).derivative(0);
        for (int k = 1; k < n; ++k) s += (m.W * m.g_inv[k][mm]).derivative(k);
        c.push_back(s * inv_W);
    }
    return c;
}

} // namespace detail

struct BiharmonicGraphResiduals {
    Eigen::VectorXd horizontal; // Delta^2 x_m, m = 1..n
    double vertical = 0.0;      // Delta^2 u
};

// Fourth-order biharmonic-graph residuals. The horizontal component m is
//   g^{ij} (c^m)_{,ij} + c^j (c^m)_{,j},  c^m = (1/W)(W g^{km})_{,k},
// and the vertical one expands Delta^2 u with the same inner bracket
//   B = g^{kl} u_{,kl} + c^l u_{,l}.
// Both vanish simultaneously iff Delta^2 X = 0 at p.
inline BiharmonicGraphResiduals biharmonic_graph_residuals(const GraphChart& gc,
                                                           std::span<const double> p) {
    const int n = gc.n;
    auto m = gc.metric_jets(p, 4);
    auto c = detail::laplacian_coeffs(m, n); // order 2
    BiharmonicGraphResiduals out;
    out.horizontal.resize(n);
    for (int comp = 0; comp < n; ++comp) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            Jet ci = c[comp].derivative(i); // order 1
            for (int j = 0; j < n; ++j)
                acc += m.g_inv[i][j].value() * ci.derivative(j).value();
            acc += c[i].value() * ci.value();
        }
        out.horizontal[comp] = acc;
    }
    // vertical: outer operator applied to B = g^{kl} u_{,kl} + c^l u_{,l}
    Jet B = Jet::constant(n, 2, 0.0);
    for (int k = 0; k < n; ++k) {
        for (int l = 0; l < n; ++l) B += m.g_inv[k][l] * m.ui[k].derivative(l);
        B += c[k] * m.ui[k];
    }
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        Jet Bi = B.derivative(i);
        for (int j = 0; j < n; ++j) acc += m.g_inv[i][j].value() * Bi.derivative(j).value();
        acc += c[i].value() * Bi.value();
    }
    out.vertical = acc;
    return out;
}

// Delta^2 f by the expanded form (inner bracket then outer operator); the
// composition of two divergence-form Laplacians is the independent route.
inline double bilaplacian_scalar(const GraphChart& gc, const Expr& f,
                                 std::span<const double> p) {
    const int n = gc.n;
    auto m = gc.metric_jets(p, 4);
    auto c = detail::laplacian_coeffs(m, n);
    JetVec vars = jet_variables(p, 4);
    Jet fj = f.eval(vars);
    Jet B = Jet::constant(n, 2, 0.0);
    for (int k = 0; k < n; ++k) {
        Jet fk = fj.derivative(k);
        for (int l = 0; l < n; ++l) B += m.g_inv[k][l] * fk.derivative(l);
        B += c[k] * fk;
    }
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        Jet Bi = B.derivative(i);
        for (int j = 0; j < n; ++j) acc += m.g_inv[i][j].value() * Bi.derivative(j).value();
        acc += c[i].value() * Bi.value();
    }
    return acc;
}

} // namespace bch
