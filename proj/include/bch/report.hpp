#pragma once
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace bch {

// Named residual statistics over a sample set. `Kind::MaxBelow` is the usual
// "every residual under tolerance" check; `Kind::MinAbove` is for floors
// (e.g. the biharmonic defect must stay away from zero).
struct ResidualReport {
    enum class Kind { MaxBelow, MinAbove };

    std::string name;
    Kind kind = Kind::MaxBelow;
    long samples = 0;
    double max_abs = 0.0;
    double min_abs = std::numeric_limits<double>::infinity();
    double sum_abs = 0.0;
    double tolerance = 0.0;
    Eigen::VectorXd worst_point;

    double mean_abs() const { return samples ? sum_abs / samples : 0.0; }
    bool pass() const {
        if (samples == 0) return false;
        return kind == Kind::MaxBelow ? max_abs <= tolerance : min_abs >= tolerance;
    }
    std::string verdict() const { return pass() ? "pass" : "fail"; }

    void add(double value, const Eigen::VectorXd& point) {
        double a = std::abs(value);
        ++samples;
        sum_abs += a;
        if (kind == Kind::MaxBelow ? a > max_abs : a < min_abs) worst_point = point;
        max_abs = std::max(max_abs, a);
        min_abs = std::min(min_abs, a);
    }

    void merge(const ResidualReport& other) {
        if (other.samples == 0) return;
        if ((kind == Kind::MaxBelow && other.max_abs > max_abs) ||
            (kind == Kind::MinAbove && other.min_abs < min_abs))
            worst_point = other.worst_point;
        samples += other.samples;
        sum_abs += other.sum_abs;
        max_abs = std::max(max_abs, other.max_abs);
        min_abs = std::min(min_abs, other.min_abs);
    }

    std::string to_line() const {
        std::ostringstream os;
        os.precision(6);
        os << std::scientific;
        os << name << ": samples=" << samples << " max=" << max_abs << " mean=" << mean_abs();
        if (kind == Kind::MinAbove) os << " min=" << min_abs;
        os << " tol=" << tolerance << " verdict=" << verdict();
        if (worst_point.size() > 0) {
            os << " worst=(";
            for (int i = 0; i < worst_point.size(); ++i)
                os << (i ? "," : "") << worst_point[i];
            os << ")";
        }
        return os.str();
    }
};

inline bool all_pass(const std::vector<ResidualReport>& reports) {
    return std::all_of(reports.begin(), reports.end(),
                       [](const ResidualReport& r) { return r.pass(); });
}

} // namespace bch
