#pragma once
#include <Eigen/Dense>
#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "bch/chart.hpp"
#include "bch/errors.hpp"
#include "bch/jet.hpp"

namespace bch {

inline constexpr double kEpsGram = 1e-10;      // degenerate-metric guard
inline constexpr double kClusterTol = 1e-7;    // eigenvalue clustering, relative

using JetMatrix = std::vector<std::vector<Jet>>;

// Gauss-Jordan with value pivoting over the jet ring; returns (det, inverse).
inline std::pair<Jet, JetMatrix> jet_det_inverse(JetMatrix m) {
    const int n = static_cast<int>(m.size());
    JetMatrix inv(n, std::vector<Jet>(n, Jet::constant(m[0][0].nvars(), m[0][0].order(), 0.0)));
    for (int i = 0; i < n; ++i) inv[i][i] += 1.0;
    Jet det = Jet::constant(m[0][0].nvars(), m[0][0].order(), 1.0);
    double sign = 1.0;
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(m[r][col].value()) > std::abs(m[piv][col].value())) piv = r;
        if (piv != col) {
            std::swap(m[piv], m[col]);
            std::swap(inv[piv], inv[col]);
            sign = -sign;
        }
        if (m[col][col].value() == 0.0) throw DegenerateMetricError("jet matrix is singular");
        det = det * m[col][col];
        Jet inv_piv = m[col][col].reciprocal();
        for (int c = 0; c < n; ++c) {
            m[col][c] = m[col][c] * inv_piv;
            inv[col][c] = inv[col][c] * inv_piv;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            Jet f = m[r][col];
            if (f.value() == 0.0) {
                bool zero = true;
                for (std::size_t k = 0; k < f.size(); ++k) zero = zero && f.raw(k) == 0.0;
                if (zero) continue;
            }
            for (int c = 0; c < n; ++c) {
                m[r][c] = m[r][c] - f * m[col][c];
                inv[r][c] = inv[r][c] - f * inv[col][c];
            }
        }
    }
    return {det * sign, inv};
}

inline Jet jet_det(const JetMatrix& m) {
    const int n = static_cast<int>(m.size());
    if (n == 1) return m[0][0];
    if (n == 2) return m[0][0] * m[1][1] - m[0][1] * m[1][0];
    // Laplace expansion along the first row; n stays small here (<= 5)
    Jet acc = Jet::constant(m[0][0].nvars(), m[0][0].order(), 0.0);
    for (int j = 0; j < n; ++j) {
        JetMatrix sub;
        sub.reserve(n - 1);
        for (int r = 1; r < n; ++r) {
            std::vector<Jet> row;
            row.reserve(n - 1);
            for (int c = 0; c < n; ++c)
                if (c != j) row.push_back(m[r][c]);
            sub.push_back(std::move(row));
        }
        Jet term = m[0][j] * jet_det(sub);
        acc = (j % 2 == 0) ? acc + term : acc - term;
    }
    return acc;
}

// Per-point geometry bundle: chart jets and everything the kernel derives from
// them. Building at order K gives the metric at order K-1 and curvatures at
// order K-2; K=4 is enough for every fourth-order quantity in the suite.
struct Frame {
    const Chart* chart = nullptr;
    Eigen::VectorXd p;
    int order = 0;
    int n = 0, m = 0;

    JetVec X;
    std::vector<JetVec> Xi;  // Xi[i][a]
    JetMatrix g, g_inv;
    Jet det_g, sqrt_det;
    bool hypersurface = false;
    JetVec N;
    JetMatrix II, A;
    Jet h, A2;

    static Frame at(const Chart& chart, std::span<const double> pt, int order) {
        Frame f;
        f.chart = &chart;
        f.p = Eigen::Map<const Eigen::VectorXd>(pt.data(), pt.size());
        f.order = order;
        f.n = chart.dim_domain;
        f.m = chart.dim_ambient;
        f.X = chart.eval(pt, order);

        f.Xi.resize(f.n);
        for (int i = 0; i < f.n; ++i) {
            f.Xi[i].reserve(f.m);
            for (int a = 0; a < f.m; ++a) f.Xi[i].push_back(f.X[a].derivative(i));
        }
        f.g.assign(f.n, std::vector<Jet>(f.n, Jet::constant(f.n, order - 1, 0.0)));
        for (int i = 0; i < f.n; ++i)
            for (int j = i; j < f.n; ++j) {
                Jet s = f.Xi[i][0] * f.Xi[j][0];
                for (int a = 1; a < f.m; ++a) s += f.Xi[i][a] * f.Xi[j][a];
                f.g[i][j] = s;
                f.g[j][i] = s;
            }
        auto [det, inv] = jet_det_inverse(f.g);
        f.det_g = det;
        f.g_inv = std::move(inv);
        if (f.det_g.value() <= kEpsGram)
            throw DegenerateMetricError(chart.name + ": det(g) <= eps_gram at sampled point");
        f.sqrt_det = sqrt(f.det_g);

        f.hypersurface = (f.m == f.n + 1);
        if (f.hypersurface && order >= 1) {
            // cofactor normal: N_a = (-1)^a det(J without row a); |N_raw| = sqrt(det g)
            f.N.reserve(f.m);
            for (int a = 0; a < f.m; ++a) {
                JetMatrix minor;
                minor.reserve(f.n);
                for (int r = 0; r < f.m; ++r) {
                    if (r == a) continue;
                    std::vector<Jet> row;
                    row.reserve(f.n);
                    for (int i = 0; i < f.n; ++i) row.push_back(f.Xi[i][r]);
                    minor.push_back(std::move(row));
                }
                Jet d = jet_det(minor) * ((a % 2 == 0) ? 1.0 : -1.0) * chart.normal_sign;
                f.N.push_back(d / f.sqrt_det);
            }
            if (order >= 2) {
                f.II.assign(f.n, std::vector<Jet>(f.n, Jet::constant(f.n, order - 2, 0.0)));
                for (int i = 0; i < f.n; ++i)
                    for (int j = i; j < f.n; ++j) {
                        Jet s = Jet::constant(f.n, order - 2, 0.0);
                        for (int a = 0; a < f.m; ++a) s += f.Xi[i][a].derivative(j) * f.N[a];
                        f.II[i][j] = s;
                        f.II[j][i] = s;
                    }
                f.A.assign(f.n, std::vector<Jet>(f.n, Jet::constant(f.n, order - 2, 0.0)));
                for (int i = 0; i < f.n; ++i)
                    for (int j = 0; j < f.n; ++j) {
                        Jet s = f.g_inv[i][0] * f.II[0][j];
                        for (int k = 1; k < f.n; ++k) s += f.g_inv[i][k] * f.II[k][j];
                        f.A[i][j] = s;
                    }
                f.h = f.A[0][0];
                for (int i = 1; i < f.n; ++i) f.h += f.A[i][i];
                f.h /= double(f.n);
                f.A2 = Jet::constant(f.n, order - 2, 0.0);
                for (int i = 0; i < f.n; ++i)
                    for (int j = 0; j < f.n; ++j) f.A2 += f.A[i][j] * f.A[j][i];
            }
        }
        return f;
    }

    // (1/sqrt|g|) d_j( sqrt|g| g^{ij} f_i ): drops the jet order by two.
    Jet laplacian(const Jet& f) const {
        std::vector<Jet> flux;
        flux.reserve(n);
        for (int j = 0; j < n; ++j) {
            Jet s = sqrt_det * g_inv[0][j] * f.derivative(0);
            for (int i = 1; i < n; ++i) s += sqrt_det * g_inv[i][j] * f.derivative(i);
            flux.push_back(s);
        }
        Jet div = flux[0].derivative(0);
        for (int j = 1; j < n; ++j) div += flux[j].derivative(j);
        return div / sqrt_det;
    }

    // Contravariant gradient components g^{ij} f_j (one order lower than f).
    std::vector<Jet> grad_coord(const Jet& f) const {
        std::vector<Jet> grad;
        grad.reserve(n);
        for (int i = 0; i < n; ++i) {
            Jet s = g_inv[i][0] * f.derivative(0);
            for (int j = 1; j < n; ++j) s += g_inv[i][j] * f.derivative(j);
            grad.push_back(s);
        }
        return grad;
    }

    Eigen::MatrixXd jacobian() const {
        Eigen::MatrixXd J(m, n);
        for (int a = 0; a < m; ++a)
            for (int i = 0; i < n; ++i) J(a, i) = Xi[i][a].value();
        return J;
    }
    Eigen::VectorXd to_ambient(const Eigen::VectorXd& coord_vec) const {
        return jacobian() * coord_vec;
    }
    Eigen::MatrixXd g_values() const {
        Eigen::MatrixXd G(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) G(i, j) = g[i][j].value();
        return G;
    }
    Eigen::MatrixXd II_values() const {
        Eigen::MatrixXd M(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) M(i, j) = II[i][j].value();
        return M;
    }
    Eigen::MatrixXd A_values() const {
        Eigen::MatrixXd M(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) M(i, j) = A[i][j].value();
        return M;
    }
    Eigen::VectorXd N_values() const {
        Eigen::VectorXd v(m);
        for (int a = 0; a < m; ++a) v[a] = N[a].value();
        return v;
    }
};

// Pointwise metric/curvature package of a hypersurface chart.
struct CurvatureData {
    Eigen::MatrixXd g, g_inv;
    double det_g = 0.0, sqrt_det = 0.0;
    Eigen::MatrixXd II, A;
    Eigen::VectorXd lambdas;        // ascending principal curvatures
    Eigen::MatrixXd frames;         // columns: g-orthonormal principal directions (coords)
    Eigen::MatrixXd frames_ambient; // same directions pushed to E^{n+1}
    double h = 0.0;
    double A2 = 0.0;
    Eigen::VectorXd N;
    std::string normal_convention;
};

inline CurvatureData curvature_at(const Chart& chart, std::span<const double> p) {
    if (chart.dim_ambient != chart.dim_domain + 1)
        throw DomainError(chart.name + ": curvature_at needs a hypersurface chart");
    Frame f = Frame::at(chart, p, 2);
    CurvatureData cd;
    cd.g = f.g_values();
    cd.det_g = f.det_g.value();
    cd.sqrt_det = f.sqrt_det.value();
    Eigen::MatrixXd ginv(f.n, f.n);
    for (int i = 0; i < f.n; ++i)
        for (int j = 0; j < f.n; ++j) ginv(i, j) = f.g_inv[i][j].value();
    cd.g_inv = ginv;
    cd.II = f.II_values();
    cd.A = f.A_values();
    cd.h = f.h.value();
    cd.A2 = f.A2.value();
    cd.N = f.N_values();
    // symmetrize against roundoff before the generalized eigensolve
    Eigen::MatrixXd gs = 0.5 * (cd.g + cd.g.transpose());
    Eigen::MatrixXd iis = 0.5 * (cd.II + cd.II.transpose());
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(iis, gs);
    if (es.info() != Eigen::Success)
        throw DegenerateMetricError(chart.name + ": principal-direction eigensolve failed");
    cd.lambdas = es.eigenvalues();
    cd.frames = es.eigenvectors();
    cd.frames_ambient = f.jacobian() * cd.frames;
    cd.normal_convention =
        "cofactor normal, sign " + std::string(chart.normal_sign >= 0 ? "+1" : "-1");
    return cd;
}

// Groups the (ascending) eigenvalues into multiplicity blocks.
inline std::vector<std::vector<int>> cluster_eigenvalues(const Eigen::VectorXd& lambdas,
                                                         double rel_tol = kClusterTol) {
    double scale = 1.0 + lambdas.cwiseAbs().maxCoeff();
    std::vector<std::vector<int>> blocks;
    for (int i = 0; i < lambdas.size(); ++i) {
        if (blocks.empty() || lambdas[i] - lambdas[blocks.back().back()] > rel_tol * scale)
            blocks.push_back({i});
        else
            blocks.back().push_back(i);
    }
    return blocks;
}

using ScalarField = std::function<Jet(const JetVec&)>;

inline ScalarField field_from_expr(const Expr& e) {
    return [e](const JetVec& v) { return e.eval(v); };
}

// Laplace-Beltrami of a scalar field on the chart domain, at p.
inline double laplace_beltrami(const Chart& chart, const ScalarField& f,
                               std::span<const double> p) {
    Frame fr = Frame::at(chart, p, 3);
    JetVec vars = jet_variables(p, 3);
    return fr.laplacian(f(vars)).value();
}

// Componentwise Laplacian of the position: the Beltrami field Delta X = n h N.
inline Eigen::VectorXd position_laplacian(const Chart& chart, std::span<const double> p) {
    Frame fr = Frame::at(chart, p, 2);
    Eigen::VectorXd out(fr.m);
    for (int a = 0; a < fr.m; ++a) out[a] = fr.laplacian(fr.X[a]).value();
    return out;
}

// Componentwise bilaplacian of the position (fourth order in the chart jets).
inline Eigen::VectorXd position_bilaplacian(const Chart& chart, std::span<const double> p) {
    Frame fr = Frame::at(chart, p, 4);
    Eigen::VectorXd out(fr.m);
    for (int a = 0; a < fr.m; ++a) out[a] = fr.laplacian(fr.laplacian(fr.X[a])).value();
    return out;
}

// Composition Delta(Delta f) via two divergence-form Laplacians.
inline double bilaplacian_composed(const Chart& chart, const ScalarField& f,
                                   std::span<const double> p) {
    Frame fr = Frame::at(chart, p, 4);
    JetVec vars = jet_variables(p, 4);
    return fr.laplacian(fr.laplacian(f(vars))).value();
}

struct DeltaHSplit {
    Eigen::VectorXd tangential; // ambient components of (Delta H)^T = -(2A + nh)grad h
    double normal = 0.0;        // (Delta H)^perp = Delta h - |A|^2 h
    double h = 0.0;
    double grad_h_norm = 0.0;   // |grad h|_g
};

// Tangential/normal split of Delta H. The tangential part is reported as
// |(2A + nh)grad h|; the displayed 2 nabla_{grad h} N - nh grad h equals its
// negative once Weingarten nabla_{grad h} N = -A(grad h) is substituted, and
// both have the same vanishing locus.
inline DeltaHSplit delta_H_split(const Chart& chart, std::span<const double> p) {
    Frame fr = Frame::at(chart, p, 4);
    DeltaHSplit out;
    out.h = fr.h.value();
    double lap_h = fr.laplacian(fr.h).value();
    auto grad = fr.grad_coord(fr.h);
    Eigen::VectorXd gh(fr.n);
    for (int i = 0; i < fr.n; ++i) gh[i] = grad[i].value();
    Eigen::MatrixXd A = fr.A_values();
    Eigen::VectorXd t_coord = -(2.0 * A * gh + fr.n * out.h * gh);
    out.tangential = fr.to_ambient(t_coord);
    out.normal = lap_h - fr.A2.value() * out.h;
    Eigen::VectorXd dh(fr.n);
    for (int i = 0; i < fr.n; ++i) dh[i] = fr.h.derivative(i).value();
    out.grad_h_norm = std::sqrt(std::max(0.0, gh.dot(dh)));
    return out;
}

// Per-direction biconservativity residual r_i = min(|grad_{e_i} h|, |n h + 2 lambda_i|).
inline Eigen::VectorXd eigenframe_condition(const Chart& chart, std::span<const double> p) {
    Frame fr = Frame::at(chart, p, 3);
    CurvatureData cd = curvature_at(chart, p);
    Eigen::VectorXd dh(fr.n);
    for (int i = 0; i < fr.n; ++i) dh[i] = fr.h.derivative(i).value();
    Eigen::VectorXd r(fr.n);
    for (int i = 0; i < fr.n; ++i) {
        double dir_deriv = cd.frames.col(i).dot(dh);
        double algebraic = fr.n * cd.h + 2.0 * cd.lambdas[i];
        r[i] = std::min(std::abs(dir_deriv), std::abs(algebraic));
    }
    return r;
}

// Defect of Delta N = -|A|^2 N - grad(n h)  (ambient gradient of n h).
inline double normal_laplacian_check(const Chart& chart, std::span<const double> p) {
    Frame fr = Frame::at(chart, p, 4);
    Eigen::VectorXd lapN(fr.m);
    for (int a = 0; a < fr.m; ++a) lapN[a] = fr.laplacian(fr.N[a]).value();
    auto grad = fr.grad_coord(fr.h);
    Eigen::VectorXd gh(fr.n);
    for (int i = 0; i < fr.n; ++i) gh[i] = grad[i].value();
    Eigen::VectorXd target = -fr.A2.value() * fr.N_values() - fr.n * fr.to_ambient(gh);
    return (lapN - target).norm();
}

} // namespace bch
