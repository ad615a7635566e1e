#pragma once
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bch/errors.hpp"
#include "bch/evolve.hpp"
#include "bch/profile.hpp"
#include "bch/report.hpp"
#include "bch/seeds.hpp"

namespace bch {

// Full-precision decimal float: %.17g round-trips IEEE doubles exactly,
// which is what the golden-file and re-ingestion guarantees lean on.
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline const char* kProfileCsvHeader = "x_n,alpha,alpha_p,alpha_pp,lambda_n";

// Profile nodes as CSV; rows are the dense-output nodes themselves, so a
// reader reconstructs the curve bit-for-bit (up to decimal round trip).
inline std::string profile_csv(const ProfileCurve& pc) {
    std::ostringstream os;
    os << kProfileCsvHeader << "\n";
    for (const auto& nd : pc.nodes) {
        double app = nd.f[1];
        double lam_n = app / std::pow(1.0 + nd.y[1] * nd.y[1], 1.5);
        os << fmt17(nd.x) << "," << fmt17(nd.y[0]) << "," << fmt17(nd.y[1]) << ","
           << fmt17(app) << "," << fmt17(lam_n) << "\n";
    }
    return os.str();
}

struct ProfileCsvRow {
    double x_n, alpha, alpha_p, alpha_pp, lambda_n;
};

inline std::vector<ProfileCsvRow> parse_profile_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw ParseError("empty profile CSV", 0);
    // tolerate trailing carriage returns
    auto strip = [](std::string& s) {
        while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
    };
    strip(line);
    if (line != kProfileCsvHeader)
        throw ParseError("profile CSV header mismatch, expected '" +
                             std::string(kProfileCsvHeader) + "'",
                         0);
    std::vector<ProfileCsvRow> rows;
    std::size_t offset = line.size() + 1;
    while (std::getline(is, line)) {
        strip(line);
        if (line.empty()) {
            offset += 1;
            continue;
        }
        ProfileCsvRow r{};
        double* slots[5] = {&r.x_n, &r.alpha, &r.alpha_p, &r.alpha_pp, &r.lambda_n};
        std::size_t pos = 0;
        for (int c = 0; c < 5; ++c) {
            std::size_t next = (c == 4) ? line.size() : line.find(',', pos);
            if (next == std::string::npos)
                throw ParseError("profile CSV row has fewer than 5 columns", offset + pos);
            try {
                *slots[c] = std::stod(line.substr(pos, next - pos));
            } catch (const std::exception&) {
                throw ParseError("malformed number in profile CSV", offset + pos);
            }
            pos = next + 1;
        }
        rows.push_back(r);
        offset += line.size() + 1;
    }
    if (rows.empty()) throw ParseError("profile CSV has no data rows", offset);
    return rows;
}

// Rebuilds the dense profile from CSV rows plus the seed constants.
inline ProfileCurve profile_from_rows(const std::vector<ProfileCsvRow>& rows,
                                      const IsoparSeed& seed) {
    ProfileCurve pc;
    pc.lambda0 = seed.lambda0;
    pc.mu0 = seed.mu0;
    pc.method = "csv";
    for (const auto& r : rows) {
        OdeNode nd;
        nd.x = r.x_n;
        nd.y << r.alpha, r.alpha_p;
        nd.f << r.alpha_p, r.alpha_pp;
        pc.nodes.push_back(nd);
    }
    std::sort(pc.nodes.begin(), pc.nodes.end(),
              [](const OdeNode& a, const OdeNode& b) { return a.x < b.x; });
    pc.x_lo = pc.nodes.front().x;
    pc.x_hi = pc.nodes.back().x;
    pc.validity_reason_lo = pc.validity_reason_hi = "from CSV";
    return pc;
}

// ---- line-oriented metadata ------------------------------------------------

inline std::string evolved_metadata(const EvolvedChart& ec,
                                    const std::vector<std::pair<std::string, std::string>>&
                                        extra = {}) {
    std::ostringstream os;
    os << "format: bch-evolved-metadata v1\n";
    os << "seed: " << ec.seed.name << "\n";
    os << "symmetry: " << ec.seed.symmetry_tag << "\n";
    os << "dimension: " << ec.n() << "\n";
    os << "ambient: " << ec.n() + 1 << "\n";
    std::ostringstream l0, m0;
    for (int i = 0; i < ec.seed.lambda0.size(); ++i) {
        l0 << (i ? ";" : "") << fmt17(ec.seed.lambda0[i]);
        m0 << (i ? ";" : "") << fmt17(ec.seed.mu0[i]);
    }
    os << "lambda0: " << l0.str() << "\n";
    os << "mu0: " << m0.str() << "\n";
    os << "sum_lambda0: " << fmt17(ec.seed.sum_lambda0()) << "\n";
    os << "profile_method: " << ec.profile->method << "\n";
    os << "branch: " << (ec.profile->branch >= 0 ? "+" : "-") << "\n";
    os << "eps_focal: " << fmt17(ec.profile->eps_focal) << "\n";
    os << "x_lo: " << fmt17(ec.x_lo()) << "\n";
    os << "x_hi: " << fmt17(ec.x_hi()) << "\n";
    os << "validity_lo: " << ec.profile->validity_reason_lo << "\n";
    os << "validity_hi: " << ec.profile->validity_reason_hi << "\n";
    os << "nodes: " << ec.profile->nodes.size() << "\n";
    os << "normal_convention: N = (N0 - alpha' e_n)/sqrt(1+alpha'^2); h < 0 on the evolved "
          "hypersurface\n";
    os << "curvature_convention: A = g^{-1} II, II_ij = <X_ij, N>, h = tr(A)/n\n";
    for (const auto& [k, v] : extra) os << k << ": " << v << "\n";
    return os.str();
}

inline std::map<std::string, std::string> parse_metadata(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        while (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto pos = line.find(": ");
        if (pos == std::string::npos) continue;
        kv[line.substr(0, pos)] = line.substr(pos + 2);
    }
    return kv;
}

// ---- deterministic SVG of the planar profile curve -------------------------

inline std::string fmt3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    // avoid "-0.000"
    if (std::string(buf) == "-0.000") return "0.000";
    return buf;
}

// Fixed-viewbox polyline plot of (x_n, alpha(x_n)); same input bytes give the
// same output bytes.
inline std::string profile_svg(const std::vector<ProfileCsvRow>& rows) {
    if (rows.empty()) throw DomainError("profile_svg: no rows to plot");
    const double W = 800, H = 500, ml = 70, mr = 20, mt = 20, mb = 50;
    double x_min = rows.front().x_n, x_max = rows.front().x_n;
    double a_min = rows.front().alpha, a_max = rows.front().alpha;
    for (const auto& r : rows) {
        x_min = std::min(x_min, r.x_n);
        x_max = std::max(x_max, r.x_n);
        a_min = std::min(a_min, r.alpha);
        a_max = std::max(a_max, r.alpha);
    }
    if (x_max == x_min) { x_max += 1; x_min -= 1; }
    if (a_max == a_min) { a_max += 1; a_min -= 1; }
    double pad = 0.05 * (a_max - a_min);
    a_max += pad;
    a_min -= pad;
    auto px = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * (W - ml - mr); };
    auto py = [&](double a) { return H - mb - (a - a_min) / (a_max - a_min) * (H - mt - mb); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 500\">\n";
    os << "<rect width=\"800\" height=\"500\" fill=\"white\"/>\n";
    // axes through zero when visible, else along the box edge
    double x0 = (x_min <= 0 && 0 <= x_max) ? 0 : x_min;
    double a0 = (a_min <= 0 && 0 <= a_max) ? 0 : a_min;
    os << "<line x1=\"" << fmt3(px(x_min)) << "\" y1=\"" << fmt3(py(a0)) << "\" x2=\""
       << fmt3(px(x_max)) << "\" y2=\"" << fmt3(py(a0)) << "\" stroke=\"#888\"/>\n";
    os << "<line x1=\"" << fmt3(px(x0)) << "\" y1=\"" << fmt3(py(a_min)) << "\" x2=\""
       << fmt3(px(x0)) << "\" y2=\"" << fmt3(py(a_max)) << "\" stroke=\"#888\"/>\n";
    os << "<text x=\"" << fmt3(W / 2) << "\" y=\"" << fmt3(H - 12)
       << "\" font-family=\"monospace\" font-size=\"14\" text-anchor=\"middle\">x_n</text>\n";
    os << "<text x=\"18\" y=\"" << fmt3(H / 2)
       << "\" font-family=\"monospace\" font-size=\"14\" text-anchor=\"middle\" "
          "transform=\"rotate(-90 18 "
       << fmt3(H / 2) << ")\">alpha</text>\n";
    // tick labels at the extremes
    os << "<text x=\"" << fmt3(px(x_min)) << "\" y=\"" << fmt3(H - mb + 18)
       << "\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"middle\">" << fmt3(x_min)
       << "</text>\n";
    os << "<text x=\"" << fmt3(px(x_max)) << "\" y=\"" << fmt3(H - mb + 18)
       << "\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"middle\">" << fmt3(x_max)
       << "</text>\n";
    os << "<text x=\"" << fmt3(ml - 8) << "\" y=\"" << fmt3(py(a_max) + 4)
       << "\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"end\">" << fmt3(a_max)
       << "</text>\n";
    os << "<text x=\"" << fmt3(ml - 8) << "\" y=\"" << fmt3(py(a_min) + 4)
       << "\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"end\">" << fmt3(a_min)
       << "</text>\n";
    os << "<polyline fill=\"none\" stroke=\"#1f6feb\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < rows.size(); ++i)
        os << (i ? " " : "") << fmt3(px(rows[i].x_n)) << "," << fmt3(py(rows[i].alpha));
    os << "\"/>\n";
    os << "</svg>\n";
    return os.str();
}

} // namespace bch
