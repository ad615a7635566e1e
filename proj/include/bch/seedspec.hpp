#pragma once
#include <map>
#include <set>
#include <string>
#include <vector>

#include "bch/chart.hpp"
#include "bch/errors.hpp"
#include "bch/seeds.hpp"

namespace bch {

// Seed/chart spec grammar: name ':' k=v (',' k=v)*. Unknown or missing keys
// are hard errors; silent misconfiguration would corrupt golden runs.
namespace spec_detail {

struct ParsedSpec {
    std::string name;
    std::map<std::string, std::string> kv;
};

inline ParsedSpec parse_spec(const std::string& s) {
    ParsedSpec out;
    auto colon = s.find(':');
    out.name = s.substr(0, colon);
    if (out.name.empty()) throw ParseError("seed spec: empty name", 0);
    if (colon == std::string::npos) return out;
    std::size_t pos = colon + 1;
    while (pos < s.size()) {
        auto comma = s.find(',', pos);
        std::string item = s.substr(pos, comma == std::string::npos ? std::string::npos
                                                                    : comma - pos);
        auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ParseError("seed spec: expected k=v", pos);
        out.kv[item.substr(0, eq)] = item.substr(eq + 1);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

inline void require_keys(const ParsedSpec& ps, const std::set<std::string>& keys) {
    for (const auto& [k, v] : ps.kv)
        if (!keys.count(k))
            throw ParseError("seed spec '" + ps.name + "': unknown key '" + k + "'", 0);
    for (const auto& k : keys)
        if (!ps.kv.count(k))
            throw ParseError("seed spec '" + ps.name + "': missing key '" + k + "'", 0);
}

inline double num(const ParsedSpec& ps, const std::string& k) {
    try {
        return std::stod(ps.kv.at(k));
    } catch (const std::exception&) {
        throw ParseError("seed spec: malformed value for '" + k + "'", 0);
    }
}
inline int integer(const ParsedSpec& ps, const std::string& k) {
    double v = num(ps, k);
    int i = static_cast<int>(v);
    if (i != v) throw ParseError("seed spec: '" + k + "' must be an integer", 0);
    return i;
}

} // namespace spec_detail

inline IsoparSeed parse_seed_spec(const std::string& s) {
    using namespace spec_detail;
    ParsedSpec ps = parse_spec(s);
    if (ps.name == "sphere") {
        require_keys(ps, {"n", "r"});
        return sphere_seed(integer(ps, "n"), num(ps, "r"));
    }
    if (ps.name == "product") {
        require_keys(ps, {"p", "q", "r1", "r2"});
        return product_sphere_seed(integer(ps, "p"), integer(ps, "q"), num(ps, "r1"),
                                   num(ps, "r2"));
    }
    if (ps.name == "cylinder") {
        require_keys(ps, {"p", "q", "r"});
        return cylinder_seed(integer(ps, "p"), integer(ps, "q"), num(ps, "r"));
    }
    if (ps.name == "veronese")
        throw ParseError("seed spec: the veronese embedding is a verification target, not an "
                         "evolvable seed",
                         0);
    throw ParseError("seed spec: unknown seed family '" + ps.name + "'", 0);
}

// Catalog hypersurface charts addressable from the CLI for chart-level suites.
inline Chart parse_chart_spec(const std::string& s) {
    using namespace spec_detail;
    ParsedSpec ps = parse_spec(s);
    if (ps.name == "sphere") {
        require_keys(ps, {"n", "r"});
        return sphere_chart(integer(ps, "n"), num(ps, "r"));
    }
    if (ps.name == "plane") {
        require_keys(ps, {"n"});
        return plane_chart(integer(ps, "n"));
    }
    if (ps.name == "cylinder") {
        require_keys(ps, {"r"});
        return cylinder_chart(num(ps, "r"));
    }
    if (ps.name == "catenoid") {
        require_keys(ps, {"c"});
        return catenoid_chart(num(ps, "c"));
    }
    if (ps.name == "torus") {
        require_keys(ps, {"R", "r"});
        return torus_chart(num(ps, "R"), num(ps, "r"));
    }
    throw ParseError("chart spec: unknown chart '" + ps.name + "'", 0);
}

} // namespace bch
