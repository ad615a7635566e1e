// bchtool: build proper biconservative hypersurfaces by normal evolution of
// isoparametric codimension-2 seeds, run the verification suites, evaluate
// graph residuals, and export profile curves.
//
// Exit codes: 0 pass, 1 verification failure, 2 usage/parse error,
//             3 numerical failure (focal collapse, degenerate metric, minimal seed).

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "bch/graph.hpp"
#include "bch/io.hpp"
#include "bch/seedspec.hpp"
#include "bch/suites.hpp"

namespace {

using namespace bch;

struct TolMap {
    std::map<std::string, double> values;
    double ode_tol = 1e-10;
};

// Pull the repeatable --tol.<name>=<value> flags out of argv before CLI11
// sees them; unknown tolerance names are hard usage errors.
TolMap extract_tolerances(std::vector<std::string>& args) {
    TolMap out;
    std::vector<std::string> kept;
    const std::string prefix = "--tol.";
    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (a.rfind(prefix, 0) != 0) {
            kept.push_back(a);
            continue;
        }
        std::string rest = a.substr(prefix.size());
        std::string name, value;
        auto eq = rest.find('=');
        if (eq != std::string::npos) {
            name = rest.substr(0, eq);
            value = rest.substr(eq + 1);
        } else {
            name = rest;
            if (i + 1 >= args.size())
                throw ParseError("missing value for --tol." + name, 0);
            value = args[++i];
        }
        const auto& known = known_tolerance_names();
        bool ok = (name == "ode") ||
                  std::find(known.begin(), known.end(), name) != known.end();
        if (!ok) throw ParseError("unknown tolerance name '" + name + "'", 0);
        double v = 0;
        try {
            v = std::stod(value);
        } catch (const std::exception&) {
            throw ParseError("malformed tolerance value for --tol." + name, 0);
        }
        if (name == "ode") out.ode_tol = v;
        else out.values[name] = v;
    }
    args = kept;
    return out;
}

void write_or_print(const std::string& path, const std::string& content) {
    if (path.empty()) {
        std::cout << content;
        return;
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open output file " + path);
    os << content;
}

std::string join_vec(const Eigen::VectorXd& v) {
    std::string s;
    for (int i = 0; i < v.size(); ++i) s += (i ? ";" : "") + fmt17(v[i]);
    return s;
}

const std::vector<std::string>& catalog_specs() {
    static const std::vector<std::string> specs = {
        "sphere:n=2,r=1",  "sphere:n=3,r=1", "sphere:n=3,r=2", "sphere:n=4,r=1",
        "product:p=1,q=1,r1=1,r2=1", "product:p=1,q=2,r1=1,r2=1", "cylinder:p=1,q=1,r=1",
        "cylinder:p=2,q=0,r=1"};
    return specs;
}

int cmd_catalog(const std::string& seed_spec, const std::string& out_path) {
    std::ostringstream os;
    os << "# bch seed catalog\n";
    os << "# seed | symmetry | lambda0 | mu0\n";
    std::vector<std::string> specs =
        seed_spec.empty() ? catalog_specs() : std::vector<std::string>{seed_spec};
    for (const auto& s : specs) {
        IsoparSeed seed = parse_seed_spec(s);
        os << seed.name << " | " << seed.symmetry_tag << " | " << join_vec(seed.lambda0)
           << " | " << join_vec(seed.mu0) << "\n";
    }
    if (seed_spec.empty()) {
        os << "veronese | SO(3)-equivariant RP^2 in S^4(1/sqrt(3)) | verification target | -\n";
        os << "# grammar: sphere:n=<int>,r=<real> | product:p=<int>,q=<int>,r1=<real>,r2=<real>"
              " | cylinder:p=<int>,q=<int>,r=<real>\n";
    }
    write_or_print(out_path, os.str());
    return 0;
}

EvolvedChart build_evolved(const std::string& seed_spec, double x_max, double ode_tol) {
    IsoparSeed seed = parse_seed_spec(seed_spec);
    auto prof = std::make_shared<ProfileCurve>(solve_profile(seed, x_max, ode_tol));
    return evolve(seed, prof);
}

// Small residual summary recorded in the build metadata; the round-trip
// invariant re-derives exactly these numbers from the serialized files.
std::vector<std::pair<std::string, std::string>> residual_summary(const EvolvedChart& ec) {
    SuiteConfig cfg;
    cfg.seed_grid = 2;
    cfg.xn_samples = 5;
    auto reps = run_suite(ec, "eigenframe", cfg);
    std::vector<std::pair<std::string, std::string>> kv;
    for (const auto& r : reps)
        kv.emplace_back("residual." + r.name, fmt17(r.max_abs));
    return kv;
}

int cmd_build(const std::string& seed_spec, double x_max, const std::string& out_prefix,
              double ode_tol) {
    EvolvedChart ec = build_evolved(seed_spec, x_max, ode_tol);
    if (out_prefix.empty()) throw ParseError("build requires --out <prefix>", 0);
    write_or_print(out_prefix + ".csv", profile_csv(*ec.profile));
    write_or_print(out_prefix + ".meta.txt", evolved_metadata(ec, residual_summary(ec)));
    std::cout << "built " << ec.chart.name << " with validity [" << fmt17(ec.x_lo()) << ", "
              << fmt17(ec.x_hi()) << "]\n"
              << "wrote " << out_prefix << ".csv and " << out_prefix << ".meta.txt\n";
    return 0;
}

EvolvedChart load_evolved(const std::string& prefix) {
    std::ifstream csv(prefix + ".csv", std::ios::binary);
    std::ifstream meta(prefix + ".meta.txt", std::ios::binary);
    if (!csv || !meta) throw Error("cannot read " + prefix + ".csv / .meta.txt");
    std::stringstream cs, ms;
    cs << csv.rdbuf();
    ms << meta.rdbuf();
    auto kv = parse_metadata(ms.str());
    if (!kv.count("seed")) throw ParseError("metadata missing 'seed' line", 0);
    IsoparSeed seed = parse_seed_spec(kv.at("seed"));
    auto rows = parse_profile_csv(cs.str());
    auto prof = std::make_shared<ProfileCurve>(profile_from_rows(rows, seed));
    return evolve(seed, prof);
}

int cmd_verify(const std::string& seed_spec, const std::string& chart_spec,
               const std::string& profile_prefix, std::vector<std::string> suites,
               double x_max, const TolMap& tols, const std::string& out_path) {
    int sources = !seed_spec.empty() + !chart_spec.empty() + !profile_prefix.empty();
    if (sources != 1)
        throw ParseError("verify needs exactly one of --seed, --chart, --profile", 0);
    SuiteConfig cfg;
    cfg.tol = tols.values;
    if (suites.empty())
        suites = {"eigenframe", "levelset", "codazzi", "umbilic", "bhh", "symmetry"};

    std::ostringstream os;
    os << "format: bch-verify-report v1\n";
    std::vector<ResidualReport> all;
    if (!chart_spec.empty()) {
        Chart chart = parse_chart_spec(chart_spec);
        os << "target: " << chart.name << "\n";
        for (const auto& s : suites) {
            os << "suite: " << s << "\n";
            auto reps = run_suite(chart, s, cfg);
            for (const auto& r : reps) {
                os << r.to_line() << "\n";
                all.push_back(r);
            }
        }
    } else {
        EvolvedChart ec = seed_spec.empty() ? load_evolved(profile_prefix)
                                            : build_evolved(seed_spec, x_max, tols.ode_tol);
        os << "target: " << ec.chart.name << "\n";
        os << "x_lo: " << fmt17(ec.x_lo()) << "\n";
        os << "x_hi: " << fmt17(ec.x_hi()) << "\n";
        for (const auto& s : suites) {
            os << "suite: " << s << "\n";
            auto reps = run_suite(ec, s, cfg);
            for (const auto& r : reps) {
                os << r.to_line() << "\n";
                all.push_back(r);
            }
        }
    }
    bool ok = all_pass(all);
    os << "overall: " << (ok ? "pass" : "fail") << "\n";
    write_or_print(out_path, os.str());
    return ok ? 0 : 1;
}

struct GridAxis {
    double lo, hi;
    int count;
};

std::vector<GridAxis> parse_grid_spec(const std::string& s, int n) {
    std::vector<GridAxis> axes;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        auto comma = s.find(',', pos);
        std::string item = s.substr(pos, comma == std::string::npos ? std::string::npos
                                                                    : comma - pos);
        auto c1 = item.find(':');
        auto c2 = item.find(':', c1 == std::string::npos ? c1 : c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw ParseError("grid spec: expected lo:hi:count", pos);
        GridAxis ax{};
        try {
            ax.lo = std::stod(item.substr(0, c1));
            ax.hi = std::stod(item.substr(c1 + 1, c2 - c1 - 1));
            ax.count = std::stoi(item.substr(c2 + 1));
        } catch (const std::exception&) {
            throw ParseError("grid spec: malformed number", pos);
        }
        if (ax.count < 1) throw ParseError("grid spec: count must be >= 1", pos);
        axes.push_back(ax);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (axes.size() == 1) axes.assign(n, axes[0]);
    if (static_cast<int>(axes.size()) != n)
        throw ParseError("grid spec: axis count does not match --n", 0);
    return axes;
}

int cmd_graph(const std::string& expr_str, int n, const std::string& grid_spec,
              const std::string& out_path) {
    Expr u = parse_expr(expr_str);
    if (u.max_var() >= n)
        throw ParseError("expression uses x" + std::to_string(u.max_var() + 1) +
                             " but --n is " + std::to_string(n),
                         0);
    auto axes = parse_grid_spec(grid_spec, n);
    Box box;
    box.lo = Eigen::VectorXd(n);
    box.hi = Eigen::VectorXd(n);
    for (int i = 0; i < n; ++i) {
        box.lo[i] = axes[i].lo;
        box.hi[i] = axes[i].hi;
    }
    GraphChart gc(n, u, box);

    std::ostringstream os;
    for (int i = 0; i < n; ++i) os << "x" << i + 1 << ",";
    os << "minimal_residual";
    for (int i = 0; i < n; ++i) os << ",biharmonic_h" << i + 1;
    os << ",biharmonic_vert\n";

    std::vector<int> idx(n, 0);
    for (;;) {
        Eigen::VectorXd p(n);
        for (int i = 0; i < n; ++i)
            p[i] = axes[i].count == 1
                       ? axes[i].lo
                       : axes[i].lo + (axes[i].hi - axes[i].lo) * idx[i] / (axes[i].count - 1);
        std::span<const double> ps(p.data(), static_cast<std::size_t>(n));
        double mr = minimal_graph_residual(gc, ps);
        auto bh = biharmonic_graph_residuals(gc, ps);
        for (int i = 0; i < n; ++i) os << fmt17(p[i]) << ",";
        os << fmt17(mr);
        for (int i = 0; i < n; ++i) os << "," << fmt17(bh.horizontal[i]);
        os << "," << fmt17(bh.vertical) << "\n";
        int i = 0;
        while (i < n && ++idx[i] == axes[i].count) idx[i++] = 0;
        if (i == n) break;
    }
    write_or_print(out_path, os.str());
    return 0;
}

int cmd_export_svg(const std::string& in_path, const std::string& out_path) {
    std::ifstream is(in_path, std::ios::binary);
    if (!is) throw Error("cannot read " + in_path);
    std::stringstream ss;
    ss << is.rdbuf();
    auto rows = parse_profile_csv(ss.str());
    write_or_print(out_path, profile_svg(rows));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        TolMap tols = extract_tolerances(args);

        CLI::App app{"proper biconservative hypersurfaces by normal evolution of "
                     "isoparametric codimension-2 seeds"};
        app.require_subcommand(1);

        std::string seed_spec, chart_spec, profile_prefix, out_path, expr_str, grid_spec =
                                                                                   "-1:1:5",
                    in_path;
        double x_max = 0.8;
        int n = 2;
        std::vector<std::string> suites;

        auto* catalog = app.add_subcommand("catalog", "list available seeds with (lambda0, mu0)");
        catalog->add_option("--seed", seed_spec, "show a single seed spec");
        catalog->add_option("--out", out_path, "write listing to a file");

        auto* build = app.add_subcommand("build", "solve the profile ODE and export the curve");
        build->add_option("--seed", seed_spec, "seed spec, e.g. sphere:n=2,r=1")->required();
        build->add_option("--xmax", x_max, "half-width of the requested x_n interval");
        build->add_option("--out", out_path, "output prefix (.csv, .meta.txt)")->required();

        auto* verify = app.add_subcommand("verify", "run verification suites");
        verify->add_option("--seed", seed_spec, "seed spec to build and verify");
        verify->add_option("--chart", chart_spec,
                           "catalog chart spec (sphere:n=..,r=.. | plane:n=.. | cylinder:r=.. |"
                           " catenoid:c=.. | torus:R=..,r=..)");
        verify->add_option("--profile", profile_prefix, "prefix of a previous build output");
        verify->add_option("--suite", suites,
                           "suite name (repeatable): eigenframe levelset codazzi umbilic bhh "
                           "symmetry structure")
            ->take_all();
        verify->add_option("--xmax", x_max, "half-width when building from --seed");
        verify->add_option("--out", out_path, "write the report to a file");

        auto* graph = app.add_subcommand("graph", "minimal/biharmonic graph residuals");
        graph->add_option("--expr", expr_str, "height function u over x1..xn")->required();
        graph->add_option("--n", n, "domain dimension");
        graph->add_option("--grid", grid_spec, "lo:hi:count (single or per-axis, comma-separated)");
        graph->add_option("--out", out_path, "write the CSV to a file");

        auto* svg = app.add_subcommand("export-svg", "plot a profile CSV as SVG");
        svg->add_option("--in", in_path, "profile CSV path")->required();
        svg->add_option("--out", out_path, "output SVG path");

        std::vector<std::string> rev(args.rbegin(), args.rend());
        try {
            app.parse(rev);
        } catch (const CLI::ParseError& e) {
            int code = app.exit(e);
            return code == 0 ? 0 : 2;
        }

        if (catalog->parsed()) return cmd_catalog(seed_spec, out_path);
        if (build->parsed()) return cmd_build(seed_spec, x_max, out_path, tols.ode_tol);
        if (verify->parsed())
            return cmd_verify(seed_spec, chart_spec, profile_prefix, suites, x_max, tols,
                              out_path);
        if (graph->parsed()) return cmd_graph(expr_str, n, grid_spec, out_path);
        if (svg->parsed()) return cmd_export_svg(in_path, out_path);
        return 2;
    } catch (const bch::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const bch::MinimalSeedError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const bch::FocalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const bch::DegenerateMetricError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const bch::DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
