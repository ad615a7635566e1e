#pragma once
#include <map>
#include <string>
#include <vector>

#include "bch/chart.hpp"
#include "bch/curvature.hpp"
#include "bch/errors.hpp"
#include "bch/evolve.hpp"
#include "bch/ortho.hpp"
#include "bch/report.hpp"
#include "bch/verify.hpp"

namespace bch {

struct SuiteConfig {
    std::map<std::string, double> tol; // overrides keyed by tolerance name
    double coverage = 0.8;             // fraction of the validity interval used
    int levels = 5;
    int seed_grid = 3;
    int xn_samples = 7;

    double get(const std::string& name, double fallback) const {
        auto it = tol.find(name);
        return it == tol.end() ? fallback : it->second;
    }
};

inline const std::vector<std::string>& known_tolerance_names() {
    static const std::vector<std::string> names = {
        "eigenframe", "levelset", "codazzi", "umbilic_sphere", "umbilic_flat",
        "umbilic_defect", "symmetry", "bhh_floor", "structure", "seed_recovery"};
    return names;
}

// Index of the principal direction most aligned with the x_n coordinate line.
inline int lambda_n_index(const CurvatureData& cd, int n) {
    int best = 0;
    double bv = -1.0;
    double gnn = std::sqrt(cd.g(n - 1, n - 1));
    for (int i = 0; i < n; ++i) {
        double c = std::abs((cd.g * cd.frames.col(i))(n - 1)) / gnn;
        if (c > bv) {
            bv = c;
            best = i;
        }
    }
    return best;
}

namespace detail {

inline std::vector<Eigen::VectorXd> evolved_grid(const EvolvedChart& ec, double coverage,
                                                 int seed_grid, int xn_samples) {
    std::vector<Eigen::VectorXd> out;
    Box b = ec.grid_box(coverage);
    auto seed_pts = ec.seed.Y.box.grid(seed_grid);
    for (const auto& sp : seed_pts)
        for (int k = 0; k < xn_samples; ++k) {
            Eigen::VectorXd x(ec.n());
            x.head(ec.n() - 1) = sp;
            x[ec.n() - 1] =
                b.lo[ec.n() - 1] +
                (b.hi[ec.n() - 1] - b.lo[ec.n() - 1]) * k / std::max(1, xn_samples - 1);
            out.push_back(x);
        }
    return out;
}

} // namespace detail

// Pointwise biconservativity over a grid: the eigenframe system of residuals
// plus the two equivalent forms nh + 2 lambda_n and sum lambda_i + 3 lambda_n.
inline std::vector<ResidualReport> eigenframe_suite(const Chart& chart,
                                                    const std::vector<Eigen::VectorXd>& grid,
                                                    double tol) {
    ResidualReport r_max{.name = "eigenframe.max_residual", .tolerance = tol};
    ResidualReport r_nh{.name = "eigenframe.nh_plus_2lambda_n", .tolerance = tol};
    ResidualReport r_sum{.name = "eigenframe.sum_plus_3lambda_n", .tolerance = tol};
    const int n = chart.dim_domain;
    for (const auto& x : grid) {
        std::span<const double> xs(x.data(), x.size());
        Eigen::VectorXd r = eigenframe_condition(chart, xs);
        r_max.add(r.cwiseAbs().maxCoeff(), x);
        CurvatureData cd = curvature_at(chart, xs);
        int ln = lambda_n_index(cd, n);
        double lam_n = cd.lambdas[ln];
        r_nh.add(n * cd.h + 2.0 * lam_n, x);
        r_sum.add(cd.lambdas.sum() - lam_n + 3.0 * lam_n, x);
    }
    return {r_max, r_nh, r_sum};
}

inline std::vector<ResidualReport> codazzi_suite(const EvolvedChart& ec, const SuiteConfig& cfg) {
    ResidualReport rep{.name = "codazzi.residual", .tolerance = cfg.get("codazzi", 1e-7)};
    OrthoMetric om = ortho_from_evolved(ec);
    for (const auto& x : detail::evolved_grid(ec, cfg.coverage, cfg.seed_grid, cfg.xn_samples))
        rep.add(codazzi_residual(om, std::span<const double>(x.data(), x.size())), x);
    return {rep};
}

// Umbilic-leaf checks for every qualifying block (multiplicity >= 2, or flat
// blocks of any multiplicity); the lambda_n line itself is a curve, not a leaf.
inline std::vector<ResidualReport> umbilic_suite(const Chart& chart,
                                                 const Eigen::VectorXd& p, int skip_index,
                                                 const SuiteConfig& cfg) {
    ResidualReport sph{.name = "umbilic.sphere_fit_rms",
                       .tolerance = cfg.get("umbilic_sphere", 1e-5)};
    ResidualReport flat{.name = "umbilic.flat_fit_rms", .tolerance = cfg.get("umbilic_flat", 1e-8)};
    ResidualReport defect{.name = "umbilic.II_minus_gH",
                          .tolerance = cfg.get("umbilic_defect", 1e-5)};
    std::span<const double> ps(p.data(), p.size());
    CurvatureData cd = curvature_at(chart, ps);
    auto blocks = cluster_eigenvalues(cd.lambdas);
    int checked = 0;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        double lam = cd.lambdas[blocks[b][0]];
        bool is_flat = std::abs(lam) <= kFlatLambdaTol;
        bool contains_skip =
            skip_index >= 0 && std::find(blocks[b].begin(), blocks[b].end(), skip_index) !=
                                   blocks[b].end();
        if (!is_flat && (blocks[b].size() < 2 || contains_skip)) continue;
        LeafCheck lc = leaf_umbilic_check(chart, ps, static_cast<int>(b));
        ++checked;
        if (lc.kind == "sphere") {
            sph.add(lc.fit_rms, p);
            defect.add(lc.umbilic_defect, p);
        } else {
            flat.add(lc.fit_rms, p);
        }
    }
    if (checked == 0)
        throw DomainError(chart.name +
                          ": no eigenvalue block qualifies for the umbilic-leaf check");
    std::vector<ResidualReport> out;
    if (sph.samples) out.push_back(sph);
    if (flat.samples) out.push_back(flat);
    if (defect.samples) out.push_back(defect);
    return out;
}

inline std::vector<ResidualReport> bhh_suite_chart(const Chart& chart,
                                                   const std::vector<Eigen::VectorXd>& grid,
                                                   double floor_tol) {
    double h_max = 0.0;
    ResidualReport rep{.name = "bhh.normal_residual_floor",
                       .kind = ResidualReport::Kind::MinAbove,
                       .tolerance = floor_tol};
    for (const auto& x : grid) {
        auto split = delta_H_split(chart, std::span<const double>(x.data(), x.size()));
        h_max = std::max(h_max, std::abs(split.h));
        rep.add(split.normal, x);
    }
    if (h_max < 1e-10) {
        // minimal input: trivially biharmonic, the properness check is vacuous
        ResidualReport skip{.name = "bhh.skipped_minimal", .tolerance = 1.0};
        skip.add(0.0, grid.front());
        return {skip};
    }
    return {rep};
}

inline std::vector<ResidualReport> structure_suite(const EvolvedChart& ec,
                                                   const SuiteConfig& cfg) {
    double tol = cfg.get("structure", 1e-8);
    ResidualReport geo{.name = "structure.gradcurve_geodesic", .tolerance = tol};
    ResidualReport planar{.name = "structure.gradcurve_planarity", .tolerance = tol};
    ResidualReport fib{.name = "structure.gradcurve_fiber", .tolerance = tol};
    ResidualReport cong{.name = "structure.profile_congruence", .tolerance = tol};
    double xn_start = 0.15 * ec.x_hi();
    double s_max = 0.6 * (ec.x_hi() - xn_start);
    for (const auto& sp : ec.seed.Y.box.halton(4)) {
        auto gcc = gradient_curve_checks(ec, std::span<const double>(sp.data(), sp.size()),
                                         s_max, xn_start);
        Eigen::VectorXd x(ec.n());
        x.head(ec.n() - 1) = sp;
        x[ec.n() - 1] = xn_start;
        geo.add(gcc.geodesic_defect, x);
        planar.add(gcc.planarity_defect, x);
        fib.add(gcc.fiber_defect, x);
    }
    Eigen::VectorXd origin = Eigen::VectorXd::Zero(1);
    cong.add(profile_congruence(ec.seed, 6, 0.8 * std::min(ec.x_hi(), -ec.x_lo())), origin);
    return {geo, planar, fib, cong};
}

// Named-suite dispatch for an evolved hypersurface.
inline std::vector<ResidualReport> run_suite(const EvolvedChart& ec, const std::string& name,
                                             const SuiteConfig& cfg = {}) {
    auto grid = detail::evolved_grid(ec, cfg.coverage, cfg.seed_grid, cfg.xn_samples);
    if (name == "eigenframe") return eigenframe_suite(ec.chart, grid, cfg.get("eigenframe", 1e-6));
    if (name == "levelset" || name == "level-set") {
        std::vector<double> ts;
        Box b = ec.grid_box(cfg.coverage);
        for (int k = 0; k < cfg.levels; ++k)
            ts.push_back(b.lo[ec.n() - 1] +
                         (b.hi[ec.n() - 1] - b.lo[ec.n() - 1]) * k /
                             std::max(1, cfg.levels - 1));
        LevelSetOptions opt;
        opt.seed_grid = cfg.seed_grid;
        opt.tol_h_spread = opt.tol_curv_spread = opt.tol_flat = opt.tol_align =
            cfg.get("levelset", 1e-8);
        auto reps = level_set_suite(ec, ts, opt);
        // seed recovery: the x_n = 0 slice reproduces lambda0/mu0
        ResidualReport rec{.name = "levelset.seed_recovery",
                           .tolerance = cfg.get("seed_recovery", 1e-7)};
        Eigen::VectorXd sp = ec.seed.Y.box.center();
        auto [lam, mu] = slice_principal_curvatures(
            ec, std::span<const double>(sp.data(), sp.size()), 0.0);
        Eigen::VectorXd l0s = ec.seed.lambda0, m0s = ec.seed.mu0;
        std::sort(l0s.begin(), l0s.end());
        // mu eigenvalues come back sorted; sort the reference pairs consistently
        std::sort(m0s.begin(), m0s.end());
        Eigen::VectorXd mus = mu;
        std::sort(mus.begin(), mus.end());
        rec.add((lam - l0s).cwiseAbs().maxCoeff(), sp);
        rec.add((mus - m0s).cwiseAbs().maxCoeff(), sp);
        reps.push_back(rec);
        return reps;
    }
    if (name == "codazzi") return codazzi_suite(ec, cfg);
    if (name == "umbilic") {
        Eigen::VectorXd p = ec.grid_box(0.5 * cfg.coverage).center();
        p[ec.n() - 1] = 0.35 * ec.x_hi(); // off the symmetry plane
        CurvatureData cd = curvature_at(ec.chart, std::span<const double>(p.data(), p.size()));
        return umbilic_suite(ec.chart, p, lambda_n_index(cd, ec.n()), cfg);
    }
    if (name == "bhh") {
        ResidualReport rep = bhh_properness_check(ec, 0.625 * cfg.coverage, cfg.seed_grid,
                                                  cfg.xn_samples, cfg.get("bhh_floor", 1e-6));
        return {rep};
    }
    if (name == "symmetry") {
        ResidualReport rep{.name = "symmetry.equivariance", .tolerance = cfg.get("symmetry", 1e-8)};
        Eigen::VectorXd origin = Eigen::VectorXd::Zero(1);
        rep.add(symmetry_defect(ec), origin);
        return {rep};
    }
    if (name == "structure") return structure_suite(ec, cfg);
    throw DomainError("unknown suite '" + name + "'");
}

// Chart-level suites (no profile attached): eigenframe, umbilic, bhh.
inline std::vector<ResidualReport> run_suite(const Chart& chart, const std::string& name,
                                             const SuiteConfig& cfg = {}) {
    auto grid = chart.box.grid(chart.dim_domain >= 3 ? 3 : 4);
    if (name == "eigenframe") return eigenframe_suite(chart, grid, cfg.get("eigenframe", 1e-6));
    if (name == "umbilic") return umbilic_suite(chart, chart.box.center(), -1, cfg);
    if (name == "bhh") return bhh_suite_chart(chart, grid, cfg.get("bhh_floor", 1e-6));
    if (name == "levelset" || name == "level-set") {
        // mirror the evolved-path regularity rejection for CMC charts
        double max_grad = 0.0;
        for (const auto& x : grid)
            max_grad = std::max(
                max_grad, delta_H_split(chart, std::span<const double>(x.data(), x.size()))
                              .grad_h_norm);
        if (max_grad < 1e-10)
            throw DomainError(chart.name + ": no regular value of h (CMC input)");
        throw DomainError("level-set suite on a bare chart requires a seed-built input");
    }
    throw DomainError("suite '" + name + "' requires a seed-built (evolved) input");
}

} // namespace bch
