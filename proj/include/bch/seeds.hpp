#pragma once
#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "bch/chart.hpp"
#include "bch/curvature.hpp"
#include "bch/errors.hpp"

namespace bch {

// A coordinate shift of the seed chart that is realized by an ambient
// isometry: Y(x + delta e_coord) = rot(delta) Y(x), and N0, e_n equivariant.
struct SeedIsometry {
    int coord = 0;
    std::function<Eigen::MatrixXd(double)> rot;
};

// Isoparametric codimension-2 seed U_0 in E^{n+1}: the chart Y of dimension
// n-1 plus an orthonormal parallel normal frame (N0, e_n). lambda0/mu0 are
// the (constant) principal curvatures per coordinate direction, with the
// Weingarten sign convention N0_{,i} = -lambda0_i Y_{,i} and
// e_{n,i} = -mu0_i Y_{,i}. Signs are arranged so sum(lambda0) < 0, which puts
// the evolved hypersurface on its h < 0 branch.
struct IsoparSeed {
    std::string name;
    std::string symmetry_tag;
    int n = 0; // evolved hypersurface dimension; the seed has dimension n-1
    Chart Y;
    JetMapFn N0, en;
    Eigen::VectorXd lambda0, mu0;
    SeedIsometry isometry;

    double sum_lambda0() const { return lambda0.sum(); }

    Eigen::VectorXd N0_value(std::span<const double> p) const {
        JetVec v = jet_variables(p, 0);
        JetVec w = N0(v);
        Eigen::VectorXd out(w.size());
        for (std::size_t a = 0; a < w.size(); ++a) out[a] = w[a].value();
        return out;
    }
    Eigen::VectorXd en_value(std::span<const double> p) const {
        JetVec v = jet_variables(p, 0);
        JetVec w = en(v);
        Eigen::VectorXd out(w.size());
        for (std::size_t a = 0; a < w.size(); ++a) out[a] = w[a].value();
        return out;
    }

    // Metric weights v0_i = |Y_{,i}| of the orthogonal seed coordinates.
    Eigen::VectorXd v0(std::span<const double> p) const {
        JetVec x = Y.eval(p, 1);
        Eigen::VectorXd out(n - 1);
        for (int i = 0; i < n - 1; ++i) {
            double s = 0.0;
            for (int a = 0; a < Y.dim_ambient; ++a) {
                double d = x[a].derivative(i).value();
                s += d * d;
            }
            out[i] = std::sqrt(s);
        }
        return out;
    }
};

// Pointwise seed diagnostics used by the invariant suite.
struct SeedFrameData {
    Eigen::MatrixXd A_N0, A_en;       // shape operators in the coordinate frame
    double frame_orthonormality = 0.0; // | <N0,N0>-1 |, | <en,en>-1 |, |<N0,en>|, |<N0,Y_i>|, ... max
    double normal_flatness = 0.0;      // max_i |<d_i N0, en>| / |Y_{,i}|
    Eigen::VectorXd lambda_recomputed, mu_recomputed;
};

inline SeedFrameData seed_frame_data(const IsoparSeed& seed, std::span<const double> p) {
    const int m = seed.n - 1;
    const int amb = seed.n + 1;
    Frame fy = Frame::at(seed.Y, p, 2);
    JetVec vars = jet_variables(p, 1);
    JetVec n0 = seed.N0(vars);
    JetVec e = seed.en(vars);

    SeedFrameData out;
    Eigen::VectorXd n0v(amb), ev(amb);
    for (int a = 0; a < amb; ++a) {
        n0v[a] = n0[a].value();
        ev[a] = e[a].value();
    }
    Eigen::MatrixXd J = fy.jacobian();
    double worst = std::max(std::abs(n0v.squaredNorm() - 1.0), std::abs(ev.squaredNorm() - 1.0));
    worst = std::max(worst, std::abs(n0v.dot(ev)));
    for (int i = 0; i < m; ++i) {
        worst = std::max(worst, std::abs(n0v.dot(J.col(i))) / J.col(i).norm());
        worst = std::max(worst, std::abs(ev.dot(J.col(i))) / J.col(i).norm());
    }
    out.frame_orthonormality = worst;

    // second fundamental forms in the two normal directions
    Eigen::MatrixXd iiN(m, m), iiE(m, m), g = fy.g_values();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            double sn = 0.0, se = 0.0;
            for (int a = 0; a < amb; ++a) {
                double xij = fy.Xi[i][a].derivative(j).value();
                sn += xij * n0v[a];
                se += xij * ev[a];
            }
            iiN(i, j) = sn;
            iiE(i, j) = se;
        }
    Eigen::MatrixXd ginv = g.inverse();
    out.A_N0 = ginv * iiN;
    out.A_en = ginv * iiE;

    double flat = 0.0;
    for (int i = 0; i < m; ++i) {
        double s = 0.0;
        for (int a = 0; a < amb; ++a) s += n0[a].derivative(i).value() * ev[a];
        flat = std::max(flat, std::abs(s) / J.col(i).norm());
    }
    out.normal_flatness = flat;

    out.lambda_recomputed.resize(m);
    out.mu_recomputed.resize(m);
    for (int i = 0; i < m; ++i) {
        out.lambda_recomputed[i] = out.A_N0(i, i);
        out.mu_recomputed[i] = out.A_en(i, i);
    }
    return out;
}

namespace detail {

inline Eigen::MatrixXd block_rotation(int amb, int i, int j, double delta) {
    Eigen::MatrixXd R = Eigen::MatrixXd::Identity(amb, amb);
    R(i, i) = std::cos(delta);
    R(j, j) = std::cos(delta);
    R(i, j) = -std::sin(delta);
    R(j, i) = std::sin(delta);
    return R;
}

inline std::string trim_num(double v) {
    std::string s = std::to_string(v);
    while (s.find('.') != std::string::npos && (s.back() == '0' || s.back() == '.')) {
        bool dot = s.back() == '.';
        s.pop_back();
        if (dot) break;
    }
    return s;
}

} // namespace detail

// U_0 = S^{n-1}(r) inside the hyperplane E^n x {0}. All mu0 vanish because
// e_n is the constant hyperplane normal; lambda0_i = -1/r with the outward
// radial N0, making sum(lambda0) < 0.
inline IsoparSeed sphere_seed(int n, double r) {
    if (n < 2) throw DomainError("sphere_seed: n >= 2 required");
    if (r <= 0) throw DomainError("sphere_seed: r > 0 required");
    const int m = n - 1;
    IsoparSeed s;
    s.name = "sphere:n=" + std::to_string(n) + ",r=" + detail::trim_num(r);
    s.symmetry_tag = "O(" + std::to_string(n) + ")";
    s.n = n;
    s.Y.name = s.name + "/Y";
    s.Y.dim_domain = m;
    s.Y.dim_ambient = n + 1;
    s.Y.box = detail::sphere_box(m);
    s.Y.map = [r, n](const JetVec& v) {
        JetVec w = detail::unit_sphere_map(v);
        JetVec out;
        out.reserve(n + 1);
        for (auto& x : w) out.push_back(x * r);
        out.push_back(Jet::constant(v[0].nvars(), v[0].order(), 0.0));
        return out;
    };
    s.N0 = [n](const JetVec& v) {
        JetVec w = detail::unit_sphere_map(v);
        w.push_back(Jet::constant(v[0].nvars(), v[0].order(), 0.0));
        return w;
    };
    s.en = [n](const JetVec& v) {
        JetVec w(n + 1, Jet::constant(v[0].nvars(), v[0].order(), 0.0));
        w[n] = Jet::constant(v[0].nvars(), v[0].order(), 1.0);
        return w;
    };
    s.lambda0 = Eigen::VectorXd::Constant(m, -1.0 / r);
    s.mu0 = Eigen::VectorXd::Zero(m);
    // shifting the last angle rotates the plane spanned by the last two
    // coordinates of the sphere block
    s.isometry.coord = m - 1;
    int amb = n + 1;
    s.isometry.rot = [amb, m](double d) { return detail::block_rotation(amb, m - 1, m, d); };
    return s;
}

// U_0 = S^p(r1) x S^q(r2) inside S^n(sqrt(r1^2+r2^2)), n = p+q+1. N0 is the
// outward unit normal of the big sphere (the normalized mean curvature side
// up to sign), so all lambda0_i = -1/rho; the mu0 split into the two factor
// blocks with opposite signs.
inline IsoparSeed product_sphere_seed(int p, int q, double r1, double r2) {
    if (p < 1 || q < 1) throw DomainError("product_sphere_seed: p,q >= 1 required");
    if (r1 <= 0 || r2 <= 0) throw DomainError("product_sphere_seed: radii must be positive");
    const int n = p + q + 1;
    const double rho = std::hypot(r1, r2);
    IsoparSeed s;
    s.name = "product:p=" + std::to_string(p) + ",q=" + std::to_string(q) +
             ",r1=" + detail::trim_num(r1) + ",r2=" + detail::trim_num(r2);
    s.symmetry_tag = "O(" + std::to_string(p + 1) + ")xO(" + std::to_string(q + 1) + ")";
    s.n = n;
    s.Y.name = s.name + "/Y";
    s.Y.dim_domain = p + q;
    s.Y.dim_ambient = n + 1;
    Box bp = detail::sphere_box(p), bq = detail::sphere_box(q);
    s.Y.box.lo = Eigen::VectorXd(p + q);
    s.Y.box.hi = Eigen::VectorXd(p + q);
    s.Y.box.lo << bp.lo, bq.lo;
    s.Y.box.hi << bp.hi, bq.hi;
    auto factors = [p, q](const JetVec& v) {
        std::span<const Jet> tp(v.data(), p), tq(v.data() + p, q);
        return std::make_pair(detail::unit_sphere_map(tp), detail::unit_sphere_map(tq));
    };
    s.Y.map = [factors, r1, r2](const JetVec& v) {
        auto [u, w] = factors(v);
        JetVec out;
        out.reserve(u.size() + w.size());
        for (auto& x : u) out.push_back(x * r1);
        for (auto& x : w) out.push_back(x * r2);
        return out;
    };
    s.N0 = [factors, r1, r2, rho](const JetVec& v) {
        auto [u, w] = factors(v);
        JetVec out;
        out.reserve(u.size() + w.size());
        for (auto& x : u) out.push_back(x * (r1 / rho));
        for (auto& x : w) out.push_back(x * (r2 / rho));
        return out;
    };
    s.en = [factors, r1, r2, rho](const JetVec& v) {
        auto [u, w] = factors(v);
        JetVec out;
        out.reserve(u.size() + w.size());
        for (auto& x : u) out.push_back(x * (r2 / rho));
        for (auto& x : w) out.push_back(x * (-r1 / rho));
        return out;
    };
    s.lambda0 = Eigen::VectorXd::Constant(p + q, -1.0 / rho);
    s.mu0 = Eigen::VectorXd(p + q);
    s.mu0.head(p).setConstant(-r2 / (r1 * rho));
    s.mu0.tail(q).setConstant(r1 / (r2 * rho));
    // rotate the last two coordinates of the q-factor block
    s.isometry.coord = p + q - 1;
    int amb = n + 1;
    int i = (p + 1) + q - 1, j = (p + 1) + q;
    s.isometry.rot = [amb, i, j](double d) { return detail::block_rotation(amb, i, j, d); };
    return s;
}

// U_0 = S^p(r) x R^q inside the hyperplane E^n x {0}; the flat factor
// contributes zero curvature in both normal directions.
inline IsoparSeed cylinder_seed(int p, int q, double r) {
    if (p < 1 || q < 0) throw DomainError("cylinder_seed: p >= 1, q >= 0 required");
    if (r <= 0) throw DomainError("cylinder_seed: r > 0 required");
    const int n = p + q + 1;
    IsoparSeed s;
    s.name = "cylinder:p=" + std::to_string(p) + ",q=" + std::to_string(q) +
             ",r=" + detail::trim_num(r);
    s.symmetry_tag = "O(" + std::to_string(p + 1) + ")xE(" + std::to_string(q) + ")";
    s.n = n;
    s.Y.name = s.name + "/Y";
    s.Y.dim_domain = p + q;
    s.Y.dim_ambient = n + 1;
    Box bp = detail::sphere_box(p);
    s.Y.box.lo = Eigen::VectorXd(p + q);
    s.Y.box.hi = Eigen::VectorXd(p + q);
    s.Y.box.lo.head(p) = bp.lo;
    s.Y.box.hi.head(p) = bp.hi;
    if (q > 0) {
        s.Y.box.lo.tail(q).setConstant(-1.0);
        s.Y.box.hi.tail(q).setConstant(1.0);
    }
    s.Y.map = [p, q, r, n](const JetVec& v) {
        std::span<const Jet> tp(v.data(), p);
        JetVec u = detail::unit_sphere_map(tp);
        JetVec out;
        out.reserve(n + 1);
        for (auto& x : u) out.push_back(x * r);
        for (int i = 0; i < q; ++i) out.push_back(v[p + i]);
        out.push_back(Jet::constant(v[0].nvars(), v[0].order(), 0.0));
        return out;
    };
    s.N0 = [p, n](const JetVec& v) {
        std::span<const Jet> tp(v.data(), p);
        JetVec u = detail::unit_sphere_map(tp);
        JetVec out(n + 1, Jet::constant(v[0].nvars(), v[0].order(), 0.0));
        for (std::size_t a = 0; a < u.size(); ++a) out[a] = u[a];
        return out;
    };
    s.en = [n](const JetVec& v) {
        JetVec out(n + 1, Jet::constant(v[0].nvars(), v[0].order(), 0.0));
        out[n] = Jet::constant(v[0].nvars(), v[0].order(), 1.0);
        return out;
    };
    s.lambda0 = Eigen::VectorXd::Zero(p + q);
    s.lambda0.head(p).setConstant(-1.0 / r);
    s.mu0 = Eigen::VectorXd::Zero(p + q);
    s.isometry.coord = p - 1;
    int amb = n + 1;
    s.isometry.rot = [amb, p](double d) { return detail::block_rotation(amb, p - 1, p, d); };
    return s;
}

// Veronese-type embedding of RP^2 into S^4(1/sqrt(3)) by quadratic monomials,
// with x = cos(theta), y = sin(theta)cos(phi), z = sin(theta)sin(phi).
inline Eigen::Matrix<double, 5, 1> veronese_rp2(double theta, double phi) {
    double x = std::cos(theta), y = std::sin(theta) * std::cos(phi),
           z = std::sin(theta) * std::sin(phi);
    Eigen::Matrix<double, 5, 1> X;
    X << y * z, x * z, x * y, (x * x - (y * y + z * z) / 2.0) / std::sqrt(3.0),
        (-y * y + z * z) / 2.0;
    return X;
}

// The same embedding as a jet-evaluable chart (a surface in E^5; exposed for
// verification only, not as an evolvable seed).
inline Chart veronese_chart() {
    Chart c;
    c.name = "veronese";
    c.dim_domain = 2;
    c.dim_ambient = 5;
    c.box.lo = Eigen::VectorXd(2);
    c.box.hi = Eigen::VectorXd(2);
    c.box.lo << kPoleInset, -M_PI + kPoleInset;
    c.box.hi << M_PI - kPoleInset, M_PI - kPoleInset;
    c.map = [](const JetVec& v) {
        Jet x = cos(v[0]);
        Jet st = sin(v[0]);
        Jet y = st * cos(v[1]);
        Jet z = st * sin(v[1]);
        JetVec out;
        out.push_back(y * z);
        out.push_back(x * z);
        out.push_back(x * y);
        out.push_back((x * x - (y * y + z * z) * 0.5) / std::sqrt(3.0));
        out.push_back((z * z - y * y) * 0.5);
        return out;
    };
    return c;
}

} // namespace bch
