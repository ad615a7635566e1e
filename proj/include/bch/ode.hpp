#pragma once
#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "bch/errors.hpp"

namespace bch {

// Embedded Dormand-Prince 5(4) pair for small smooth systems, with accepted
// nodes kept for cubic-Hermite dense output. The right side may throw to veto
// a step (focal guard); the driver then retries with a smaller step.

struct OdeOptions {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    double max_step = 0.02; // caps the Hermite interpolation error
    double init_step = 1e-3;
    int max_steps = 500000;
};

struct OdeNode {
    double x = 0.0;
    Eigen::Vector2d y = Eigen::Vector2d::Zero();
    Eigen::Vector2d f = Eigen::Vector2d::Zero(); // y' at the node
};

struct OdeResult {
    std::vector<OdeNode> nodes; // in integration order from x0
    bool reached_end = false;
    std::string stop_reason;
};

using OdeRhs = std::function<Eigen::Vector2d(double, const Eigen::Vector2d&)>;
// Returns true when (x, y) is outside the admissible region.
using OdeStop = std::function<bool(double, const Eigen::Vector2d&)>;

inline OdeResult integrate_dp54(const OdeRhs& rhs, double x0, Eigen::Vector2d y0, double x_end,
                                const OdeOptions& opt = {}, const OdeStop& stop = nullptr) {
    static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static const double a21 = 1.0 / 5;
    static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
    static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static const double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                        e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                        e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

    const double dir = (x_end >= x0) ? 1.0 : -1.0;
    OdeResult res;
    if (stop && stop(x0, y0)) {
        res.stop_reason = "initial state already outside the admissible region";
        return res;
    }
    Eigen::Vector2d y = y0, k1 = rhs(x0, y0);
    double x = x0;
    res.nodes.push_back({x, y, k1});
    double h = std::min(opt.init_step, std::abs(x_end - x0));
    if (h == 0.0) {
        res.reached_end = true;
        return res;
    }

    for (int step = 0; step < opt.max_steps; ++step) {
        h = std::min(h, opt.max_step);
        h = std::min(h, std::abs(x_end - x));
        if (h < 1e-14 * (1.0 + std::abs(x))) {
            res.stop_reason = res.stop_reason.empty() ? "step size underflow" : res.stop_reason;
            return res;
        }
        double hs = dir * h;
        bool rejected = false;
        Eigen::Vector2d k2, k3, k4, k5, k6, k7, y_new;
        double err = 0.0;
        try {
            k2 = rhs(x + c2 * hs, y + hs * (a21 * k1));
            k3 = rhs(x + c3 * hs, y + hs * (a31 * k1 + a32 * k2));
            k4 = rhs(x + c4 * hs, y + hs * (a41 * k1 + a42 * k2 + a43 * k3));
            k5 = rhs(x + c5 * hs, y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
            k6 = rhs(x + hs, y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
            y_new = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            k7 = rhs(x + hs, y_new);
            Eigen::Vector2d e = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
            for (int i = 0; i < 2; ++i) {
                double sc = opt.abs_tol +
                            opt.rel_tol * std::max(std::abs(y[i]), std::abs(y_new[i]));
                err += (e[i] / sc) * (e[i] / sc);
            }
            err = std::sqrt(err / 2.0);
        } catch (const Error&) {
            rejected = true; // stage left the admissible region; retry smaller
        }
        if (!rejected && err <= 1.0) {
            if (stop && stop(x + hs, y_new)) {
                // shrink toward the boundary instead of stepping past it
                h *= 0.5;
                if (h < 1e-13 * (1.0 + std::abs(x))) {
                    res.stop_reason = "stopped at admissible-region boundary";
                    return res;
                }
                continue;
            }
            x += hs;
            y = y_new;
            k1 = k7; // FSAL
            res.nodes.push_back({x, y, k1});
            if (std::abs(x - x_end) < 1e-14 * (1.0 + std::abs(x_end))) {
                res.reached_end = true;
                return res;
            }
            double fac = (err == 0.0) ? 5.0 : 0.9 * std::pow(err, -0.2);
            h *= std::clamp(fac, 0.2, 5.0);
        } else {
            double fac = rejected ? 0.5 : std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.5);
            h *= fac;
        }
    }
    res.stop_reason = "max step count exceeded";
    return res;
}

// Cubic Hermite on one component between two nodes (value + slope at both ends).
inline double hermite(double x0, double v0, double d0, double x1, double v1, double d1, double x) {
    double hlen = x1 - x0;
    double t = (x - x0) / hlen;
    double t2 = t * t, t3 = t2 * t;
    double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    return h00 * v0 + h10 * hlen * d0 + h01 * v1 + h11 * hlen * d1;
}

} // namespace bch
