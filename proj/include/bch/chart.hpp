#pragma once
#include <Eigen/Dense>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bch/errors.hpp"
#include "bch/expr.hpp"
#include "bch/jet.hpp"

namespace bch {

inline constexpr int kMaxJetOrder = 4;
inline constexpr double kPoleInset = 1e-2;

struct Box {
    Eigen::VectorXd lo, hi;

    int dim() const { return static_cast<int>(lo.size()); }

    bool contains(std::span<const double> p, double slack = 0.0) const {
        if (static_cast<int>(p.size()) != dim()) return false;
        for (int i = 0; i < dim(); ++i)
            if (p[i] < lo[i] - slack || p[i] > hi[i] + slack) return false;
        return true;
    }

    Eigen::VectorXd center() const { return 0.5 * (lo + hi); }

    // Uniform interior grid, `per_dim` points per axis, inset from the faces.
    std::vector<Eigen::VectorXd> grid(int per_dim, double inset_frac = 0.05) const {
        std::vector<Eigen::VectorXd> pts;
        int n = dim();
        std::vector<int> idx(n, 0);
        for (;;) {
            Eigen::VectorXd p(n);
            for (int i = 0; i < n; ++i) {
                double t = (per_dim == 1) ? 0.5 : inset_frac + (1 - 2 * inset_frac) * idx[i] / double(per_dim - 1);
                p[i] = lo[i] + t * (hi[i] - lo[i]);
            }
            pts.push_back(p);
            int i = 0;
            while (i < n && ++idx[i] == per_dim) idx[i++] = 0;
            if (i == n) break;
        }
        return pts;
    }

    // Deterministic low-discrepancy interior samples (Halton).
    std::vector<Eigen::VectorXd> halton(int count, double inset_frac = 0.02) const {
        static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19};
        std::vector<Eigen::VectorXd> pts;
        pts.reserve(count);
        for (int k = 1; k <= count; ++k) {
            Eigen::VectorXd p(dim());
            for (int i = 0; i < dim(); ++i) {
                int b = primes[i % 8];
                double f = 1.0, r = 0.0;
                int n = k;
                while (n > 0) {
                    f /= b;
                    r += f * (n % b);
                    n /= b;
                }
                double t = inset_frac + (1 - 2 * inset_frac) * r;
                p[i] = lo[i] + t * (hi[i] - lo[i]);
            }
            pts.push_back(p);
        }
        return pts;
    }
};

using JetMapFn = std::function<JetVec(const JetVec&)>;

// A smooth parametrization of an n-patch into E^{n+1} (hypersurface charts)
// or E^{n+2} (codimension-2 seeds), evaluable on jets so that composition and
// derivatives to order 4 come for free.
struct Chart {
    std::string name;
    int dim_domain = 0;
    int dim_ambient = 0;
    Box box;
    double normal_sign = 1.0; // applied to the cofactor normal
    JetMapFn map;

    JetVec eval(std::span<const double> p, int order) const {
        if (order < 0 || order > kMaxJetOrder)
            throw DomainError(name + ": jet order " + std::to_string(order) + " not supported (max 4)");
        if (!box.contains(p, 1e-12))
            throw DomainError(name + ": point outside domain box");
        JetVec vars = jet_variables(p, order);
        JetVec out = map(vars);
        if (static_cast<int>(out.size()) != dim_ambient)
            throw DomainError(name + ": map output dimension mismatch");
        return out;
    }

    Eigen::VectorXd position(std::span<const double> p) const {
        JetVec x = eval(p, 0);
        Eigen::VectorXd v(dim_ambient);
        for (int a = 0; a < dim_ambient; ++a) v[a] = x[a].value();
        return v;
    }
};

// All ambient partials of the chart at p up to `order` (the jet operation).
inline JetVec jet(const Chart& chart, std::span<const double> p, int order) {
    return chart.eval(p, order);
}

// Hypersurface normal by cofactor expansion, N_a = (-1)^a det(J without row a),
// scaled by the chart's orientation sign; |value| = sqrt(det g).
inline Eigen::VectorXd cofactor_normal_value(const Chart& c, std::span<const double> p) {
    const int n = c.dim_domain, m = c.dim_ambient;
    if (m != n + 1) throw DomainError(c.name + ": cofactor normal needs a hypersurface chart");
    JetVec x = c.eval(p, 1);
    Eigen::MatrixXd J(m, n);
    for (int a = 0; a < m; ++a)
        for (int i = 0; i < n; ++i) J(a, i) = x[a].derivative(i).value();
    Eigen::VectorXd nr(m);
    Eigen::MatrixXd minor(n, n);
    for (int a = 0; a < m; ++a) {
        int rr = 0;
        for (int r = 0; r < m; ++r) {
            if (r == a) continue;
            minor.row(rr++) = J.row(r);
        }
        nr[a] = ((a % 2 == 0) ? 1.0 : -1.0) * minor.determinant() * c.normal_sign;
    }
    return nr;
}

// Flips the chart's normal sign so the cofactor normal at `p` has positive
// inner product with `want`.
inline void orient_normal_towards(Chart& c, std::span<const double> p,
                                  const Eigen::VectorXd& want) {
    if (cofactor_normal_value(c, p).dot(want) < 0.0) c.normal_sign = -c.normal_sign;
}

// ---- catalog charts ----

inline Chart plane_chart(int n = 2, double extent = 2.0) {
    Chart c;
    c.name = "plane";
    c.dim_domain = n;
    c.dim_ambient = n + 1;
    c.box.lo = Eigen::VectorXd::Constant(n, -extent);
    c.box.hi = Eigen::VectorXd::Constant(n, extent);
    c.map = [n](const JetVec& v) {
        JetVec out(n + 1, Jet::constant(v[0].nvars(), v[0].order(), 0.0));
        for (int i = 0; i < n; ++i) out[i] = v[i];
        return out;
    };
    return c;
}

// Graph of a height function u over R^n.
inline Chart graph_chart(Expr u, int n, Box box, std::string name = "graph") {
    if (u.max_var() >= n) throw DomainError("graph_chart: expression exceeds dimension");
    Chart c;
    c.name = std::move(name);
    c.dim_domain = n;
    c.dim_ambient = n + 1;
    c.box = std::move(box);
    c.map = [u, n](const JetVec& v) {
        JetVec out;
        out.reserve(n + 1);
        for (int i = 0; i < n; ++i) out.push_back(v[i]);
        out.push_back(u.eval(v));
        return out;
    };
    return c;
}

namespace detail {

// Unit-sphere angular coordinates in E^{m+1}:
//   w_1 = cos t_1,  w_2 = sin t_1 cos t_2, ..., w_{m+1} = sin t_1 ... sin t_m.
inline JetVec unit_sphere_map(std::span<const Jet> t) {
    const int m = static_cast<int>(t.size());
    JetVec w;
    w.reserve(m + 1);
    Jet prod = Jet::constant(t[0].nvars(), t[0].order(), 1.0);
    for (int i = 0; i < m; ++i) {
        w.push_back(prod * cos(t[i]));
        prod = prod * sin(t[i]);
    }
    w.push_back(prod);
    return w;
}

inline Box sphere_box(int m) {
    Box b;
    b.lo = Eigen::VectorXd::Constant(m, kPoleInset);
    b.hi = Eigen::VectorXd::Constant(m, M_PI - kPoleInset);
    if (m >= 1) {
        // last angle runs a full turn minus the seam
        b.lo[m - 1] = -M_PI + kPoleInset;
        b.hi[m - 1] = M_PI - kPoleInset;
    }
    return b;
}

} // namespace detail

// Round sphere S^n(r) in E^{n+1}; the library default orientation is the
// inward normal, giving h = +1/r.
inline Chart sphere_chart(int n, double r) {
    Chart c;
    c.name = "sphere(n=" + std::to_string(n) + ",r=" + std::to_string(r) + ")";
    c.dim_domain = n;
    c.dim_ambient = n + 1;
    c.box = detail::sphere_box(n);
    c.map = [r](const JetVec& v) {
        JetVec w = detail::unit_sphere_map(v);
        for (auto& x : w) x *= r;
        return w;
    };
    Eigen::VectorXd probe = c.box.center();
    orient_normal_towards(c, std::span<const double>(probe.data(), probe.size()),
                          -c.position(std::span<const double>(probe.data(), probe.size())));
    return c;
}

// S^1(r) x R in E^3.
inline Chart cylinder_chart(double r, double extent = 1.5) {
    Chart c;
    c.name = "cylinder(r=" + std::to_string(r) + ")";
    c.dim_domain = 2;
    c.dim_ambient = 3;
    c.box.lo = Eigen::VectorXd(2);
    c.box.hi = Eigen::VectorXd(2);
    c.box.lo << -M_PI + kPoleInset, -extent;
    c.box.hi << M_PI - kPoleInset, extent;
    c.map = [r](const JetVec& v) {
        JetVec out;
        out.push_back(r * cos(v[0]));
        out.push_back(r * sin(v[0]));
        out.push_back(v[1]);
        return out;
    };
    Eigen::VectorXd probe = c.box.center();
    Eigen::VectorXd X = c.position(std::span<const double>(probe.data(), probe.size()));
    Eigen::VectorXd inward(3);
    inward << -X[0], -X[1], 0.0;
    orient_normal_towards(c, std::span<const double>(probe.data(), probe.size()), inward);
    return c;
}

// Minimal catenoid, waist radius c0.
inline Chart catenoid_chart(double c0 = 1.0, double extent = 1.0) {
    Chart c;
    c.name = "catenoid(c=" + std::to_string(c0) + ")";
    c.dim_domain = 2;
    c.dim_ambient = 3;
    c.box.lo = Eigen::VectorXd(2);
    c.box.hi = Eigen::VectorXd(2);
    c.box.lo << -extent, -M_PI + kPoleInset;
    c.box.hi << extent, M_PI - kPoleInset;
    c.map = [c0](const JetVec& v) {
        Jet rho = c0 * cosh(v[0] / c0);
        JetVec out;
        out.push_back(rho * cos(v[1]));
        out.push_back(rho * sin(v[1]));
        out.push_back(v[0]);
        return out;
    };
    return c;
}

// Torus of revolution in E^3, tube radius r around a circle of radius R.
inline Chart torus_chart(double R = 2.0, double r = 0.5) {
    Chart c;
    c.name = "torus(R=" + std::to_string(R) + ",r=" + std::to_string(r) + ")";
    c.dim_domain = 2;
    c.dim_ambient = 3;
    c.box.lo = Eigen::VectorXd(2);
    c.box.hi = Eigen::VectorXd(2);
    c.box.lo << -M_PI + kPoleInset, -M_PI + kPoleInset;
    c.box.hi << M_PI - kPoleInset, M_PI - kPoleInset;
    c.map = [R, r](const JetVec& v) {
        Jet w = R + r * cos(v[0]);
        JetVec out;
        out.push_back(w * cos(v[1]));
        out.push_back(w * sin(v[1]));
        out.push_back(r * sin(v[0]));
        return out;
    };
    Eigen::VectorXd probe = c.box.center();
    Eigen::VectorXd X = c.position(std::span<const double>(probe.data(), probe.size()));
    Eigen::VectorXd core(3); // nearest point on the core circle
    double rho = std::hypot(X[0], X[1]);
    core << R * X[0] / rho, R * X[1] / rho, 0.0;
    orient_normal_towards(c, std::span<const double>(probe.data(), probe.size()), core - X);
    return c;
}

// Chart precomposed with a domain diffeomorphism (jets compose exactly).
inline Chart reparametrized(const Chart& chart, JetMapFn diffeo, Box new_box,
                            std::string suffix = "~reparam") {
    Chart c = chart;
    c.name = chart.name + suffix;
    c.box = std::move(new_box);
    JetMapFn inner = std::move(diffeo);
    JetMapFn outer = chart.map;
    c.map = [inner, outer](const JetVec& v) { return outer(inner(v)); };
    return c;
}

// Riemann product Sigma^n x E^l inside E^{n+l+1}: the flat factor appends
// coordinates untouched.
inline Chart extend_cylinder(const Chart& base, int l, double extent = 1.0) {
    Chart c;
    c.name = base.name + "xE" + std::to_string(l);
    c.dim_domain = base.dim_domain + l;
    c.dim_ambient = base.dim_ambient + l;
    c.box.lo = Eigen::VectorXd(c.dim_domain);
    c.box.hi = Eigen::VectorXd(c.dim_domain);
    c.box.lo.head(base.dim_domain) = base.box.lo;
    c.box.hi.head(base.dim_domain) = base.box.hi;
    c.box.lo.tail(l).setConstant(-extent);
    c.box.hi.tail(l).setConstant(extent);
    c.normal_sign = base.normal_sign;
    int nb = base.dim_domain;
    JetMapFn inner = base.map;
    c.map = [inner, nb, l](const JetVec& v) {
        JetVec head(v.begin(), v.begin() + nb);
        JetVec out = inner(head);
        for (int i = 0; i < l; ++i) out.push_back(v[nb + i]);
        return out;
    };
    return c;
}

} // namespace bch
