#pragma once
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "bch/errors.hpp"

namespace bch {

// Truncated multivariate Taylor arithmetic ("jets"): a Jet holds the Taylor
// coefficients of a smooth function at a base point, in `nvars` variables,
// complete through total degree `order`. Propagating jets through a chart's
// elementary-function graph yields exact partial derivatives (up to roundoff),
// which is what the fourth-order curvature quantities need; finite differences
// are kept strictly as a test oracle.

inline constexpr int kJetMaxVars = 8;
inline constexpr int kJetMaxOrder = 8;

namespace detail {

inline std::size_t n_coeffs(int nvars, int order) {
    // C(nvars + order, order)
    std::size_t r = 1;
    for (int k = 1; k <= nvars; ++k) r = r * (order + k) / k;
    return r;
}

inline std::uint64_t pack_exponents(const std::array<std::uint8_t, kJetMaxVars>& e) {
    std::uint64_t key = 0;
    for (int i = 0; i < kJetMaxVars; ++i) key |= std::uint64_t(e[i]) << (8 * i);
    return key;
}

} // namespace detail

// Shared per-(nvars, order) index tables. Multi-indices are enumerated in
// graded order (degree-major), so for fixed nvars the enumeration of any lower
// order is a prefix of every higher one: truncation is a plain prefix copy.
class JetTable {
public:
    int nvars;
    int order;
    std::vector<std::array<std::uint8_t, kJetMaxVars>> exps;
    std::vector<int> degree;
    std::vector<double> factorial; // prod(a_i!) per multi-index
    // shift_up[i][k]: index of exps[k] + e_i, or -1 when that exceeds `order`.
    std::array<std::vector<int>, kJetMaxVars> shift_up;
    struct ProdTriple {
        std::int32_t a, b, target;
    };
    std::vector<ProdTriple> prod; // all (a,b) with deg(a)+deg(b) <= order
    const JetTable* lower = nullptr; // table for order-1 (nullptr at order 0)

    static const JetTable& get(int nvars, int order);

    std::size_t size() const { return exps.size(); }

    int index_of(std::span<const int> mi) const {
        std::array<std::uint8_t, kJetMaxVars> e{};
        int deg = 0;
        for (std::size_t i = 0; i < mi.size(); ++i) {
            e[i] = static_cast<std::uint8_t>(mi[i]);
            deg += mi[i];
        }
        if (deg > order) return -1;
        auto it = pos_.find(detail::pack_exponents(e));
        return it == pos_.end() ? -1 : it->second;
    }

private:
    std::map<std::uint64_t, int> pos_;
    JetTable(int nv, int ord);
};

inline JetTable::JetTable(int nv, int ord) : nvars(nv), order(ord) {
    if (nv < 1 || nv > kJetMaxVars) throw DomainError("jet: nvars out of range");
    if (ord < 0 || ord > kJetMaxOrder) throw DomainError("jet: order out of range");
    // graded enumeration: all multi-indices of degree d, d = 0..order,
    // reverse-lexicographic within each degree
    std::array<std::uint8_t, kJetMaxVars> cur{};
    for (int d = 0; d <= ord; ++d) {
        std::vector<int> comp(nv, 0);
        comp[0] = d;
        while (true) {
            cur.fill(0);
            double fact = 1.0;
            for (int i = 0; i < nv; ++i) {
                cur[i] = static_cast<std::uint8_t>(comp[i]);
                for (int k = 2; k <= comp[i]; ++k) fact *= k;
            }
            exps.push_back(cur);
            degree.push_back(d);
            factorial.push_back(fact);
            pos_[detail::pack_exponents(cur)] = static_cast<int>(exps.size()) - 1;
            if (nv == 1 || comp[nv - 1] == d) break;
            int i = nv - 2;
            while (i >= 0 && comp[i] == 0) --i;
            int tail = comp[nv - 1];
            comp[nv - 1] = 0;
            comp[i] -= 1;
            comp[i + 1] = tail + 1;
        }
    }
    for (int i = 0; i < nv; ++i) {
        shift_up[i].assign(exps.size(), -1);
        for (std::size_t k = 0; k < exps.size(); ++k) {
            auto e = exps[k];
            e[i] += 1;
            auto it = pos_.find(detail::pack_exponents(e));
            if (it != pos_.end()) shift_up[i][k] = it->second;
        }
    }
    for (std::size_t a = 0; a < exps.size(); ++a) {
        for (std::size_t b = 0; b < exps.size(); ++b) {
            if (degree[a] + degree[b] > ord) continue;
            std::array<std::uint8_t, kJetMaxVars> e{};
            for (int i = 0; i < kJetMaxVars; ++i)
                e[i] = static_cast<std::uint8_t>(exps[a][i] + exps[b][i]);
            prod.push_back({static_cast<std::int32_t>(a), static_cast<std::int32_t>(b),
                            pos_.at(detail::pack_exponents(e))});
        }
    }
}

inline const JetTable& JetTable::get(int nvars, int order) {
    static std::mutex mtx;
    static std::map<std::pair<int, int>, std::unique_ptr<JetTable>> cache;
    std::lock_guard<std::mutex> lock(mtx);
    // build the whole chain down to order 0 so truncation can walk `lower`
    struct Builder {
        std::map<std::pair<int, int>, std::unique_ptr<JetTable>>& c;
        JetTable* ensure(int nv, int ord) {
            auto key = std::make_pair(nv, ord);
            auto it = c.find(key);
            if (it != c.end()) return it->second.get();
            JetTable* lo = (ord > 0) ? ensure(nv, ord - 1) : nullptr;
            auto t = std::unique_ptr<JetTable>(new JetTable(nv, ord));
            t->lower = lo;
            return c.emplace(key, std::move(t)).first->second.get();
        }
    } b{cache};
    return *b.ensure(nvars, order);
}

class Jet {
public:
    Jet() : tab_(&JetTable::get(1, 0)), c_(1, 0.0) {}
    Jet(const JetTable& tab, double v) : tab_(&tab), c_(tab.size(), 0.0) { c_[0] = v; }

    static Jet constant(int nvars, int order, double v) {
        return Jet(JetTable::get(nvars, order), v);
    }
    static Jet variable(int nvars, int order, int i, double x0) {
        Jet j(JetTable::get(nvars, order), x0);
        if (order >= 1) {
            std::array<int, kJetMaxVars> mi{};
            mi[i] = 1;
            int k = j.tab_->index_of(std::span<const int>(mi.data(), nvars));
            j.c_[k] = 1.0;
        }
        return j;
    }

    int nvars() const { return tab_->nvars; }
    int order() const { return tab_->order; }
    const JetTable& table() const { return *tab_; }
    double value() const { return c_[0]; }
    double& raw(std::size_t k) { return c_[k]; }
    double raw(std::size_t k) const { return c_[k]; }
    std::size_t size() const { return c_.size(); }

    // Taylor coefficient for a multi-index.
    double coeff(std::span<const int> mi) const {
        int k = tab_->index_of(mi);
        return k < 0 ? 0.0 : c_[k];
    }
    double coeff(std::initializer_list<int> mi) const {
        return coeff(std::span<const int>(mi.begin(), mi.size()));
    }
    // Partial-derivative value d^|mi| f / dx^mi (coefficient times factorials).
    double deriv(std::span<const int> mi) const {
        int k = tab_->index_of(mi);
        if (k < 0) throw DomainError("jet: derivative order exceeds jet order");
        return c_[k] * tab_->factorial[k];
    }
    double deriv(std::initializer_list<int> mi) const {
        return deriv(std::span<const int>(mi.begin(), mi.size()));
    }

    Jet truncated(int new_order) const {
        if (new_order >= order()) return *this;
        const JetTable* t = tab_;
        while (t->order > new_order) t = t->lower;
        Jet r(*t, 0.0);
        for (std::size_t k = 0; k < r.c_.size(); ++k) r.c_[k] = c_[k];
        return r;
    }

    // d/dx_i, one order lower.
    Jet derivative(int i) const {
        if (order() == 0) throw DomainError("jet: cannot differentiate an order-0 jet");
        Jet r(*tab_->lower, 0.0);
        const auto& up = tab_->shift_up[i];
        for (std::size_t k = 0; k < r.c_.size(); ++k) {
            int src = up[k];
            r.c_[k] = c_[src] * (tab_->exps[src][i]);
        }
        return r;
    }

    Jet& operator+=(const Jet& b) { return *this = *this + b; }
    Jet& operator-=(const Jet& b) { return *this = *this - b; }
    Jet& operator*=(const Jet& b) { return *this = *this * b; }
    Jet& operator/=(const Jet& b) { return *this = *this / b; }
    Jet& operator+=(double b) { c_[0] += b; return *this; }
    Jet& operator-=(double b) { c_[0] -= b; return *this; }
    Jet& operator*=(double b) { for (auto& x : c_) x *= b; return *this; }
    Jet& operator/=(double b) { for (auto& x : c_) x /= b; return *this; }

    friend Jet operator-(const Jet& a) {
        Jet r = a;
        for (auto& x : r.c_) x = -x;
        return r;
    }
    friend Jet operator+(const Jet& a, const Jet& b) {
        if (a.order() > b.order()) return a.truncated(b.order()) + b;
        if (b.order() > a.order()) return a + b.truncated(a.order());
        Jet r = a;
        for (std::size_t k = 0; k < r.c_.size(); ++k) r.c_[k] += b.c_[k];
        return r;
    }
    friend Jet operator-(const Jet& a, const Jet& b) {
        if (a.order() > b.order()) return a.truncated(b.order()) - b;
        if (b.order() > a.order()) return a - b.truncated(a.order());
        Jet r = a;
        for (std::size_t k = 0; k < r.c_.size(); ++k) r.c_[k] -= b.c_[k];
        return r;
    }
    friend Jet operator*(const Jet& a, const Jet& b) {
        if (a.order() > b.order()) return a.truncated(b.order()) * b;
        if (b.order() > a.order()) return a * b.truncated(a.order());
        Jet r(*a.tab_, 0.0);
        for (const auto& t : a.tab_->prod)
            r.c_[t.target] += a.c_[t.a] * b.c_[t.b];
        return r;
    }
    friend Jet operator/(const Jet& a, const Jet& b) { return a * b.reciprocal(); }

    friend Jet operator+(const Jet& a, double s) { Jet r = a; r.c_[0] += s; return r; }
    friend Jet operator+(double s, const Jet& a) { return a + s; }
    friend Jet operator-(const Jet& a, double s) { Jet r = a; r.c_[0] -= s; return r; }
    friend Jet operator-(double s, const Jet& a) { Jet r = -a; r.c_[0] += s; return r; }
    friend Jet operator*(const Jet& a, double s) {
        Jet r = a;
        for (auto& x : r.c_) x *= s;
        return r;
    }
    friend Jet operator*(double s, const Jet& a) { return a * s; }
    friend Jet operator/(const Jet& a, double s) { return a * (1.0 / s); }
    friend Jet operator/(double s, const Jet& a) { return a.reciprocal() * s; }

    // Compose a univariate power series sum_k d[k] * w^k with the nilpotent
    // part w = *this - value(). Workhorse behind every elementary function.
    Jet compose_series(std::span<const double> d) const {
        Jet w = *this;
        w.c_[0] = 0.0;
        int K = std::min<int>(static_cast<int>(d.size()) - 1, order());
        Jet r(*tab_, d[K]);
        for (int k = K - 1; k >= 0; --k) {
            r = r * w;
            r.c_[0] += d[k];
        }
        return r;
    }

    Jet reciprocal() const {
        double v = c_[0];
        if (v == 0.0) throw DomainError("jet: division by zero value");
        std::vector<double> d(order() + 1);
        double p = 1.0 / v;
        for (int k = 0; k <= order(); ++k) {
            d[k] = p;
            p *= -1.0 / v;
        }
        return compose_series(d);
    }

private:
    const JetTable* tab_;
    std::vector<double> c_;
};

inline Jet exp(const Jet& a) {
    double v = std::exp(a.value());
    std::vector<double> d(a.order() + 1);
    double f = 1.0;
    for (int k = 0; k <= a.order(); ++k) {
        d[k] = v / f;
        f *= (k + 1);
    }
    return a.compose_series(d);
}

inline Jet log(const Jet& a) {
    double v = a.value();
    if (v <= 0.0) throw DomainError("jet: log of non-positive value");
    std::vector<double> d(a.order() + 1);
    d[0] = std::log(v);
    double p = 1.0 / v;
    for (int k = 1; k <= a.order(); ++k) {
        d[k] = ((k % 2) ? p : -p) / k;
        p /= v;
    }
    return a.compose_series(d);
}

inline Jet sqrt(const Jet& a) {
    double v = a.value();
    if (v <= 0.0) throw DomainError("jet: sqrt of non-positive value");
    std::vector<double> d(a.order() + 1);
    double s = std::sqrt(v);
    d[0] = s;
    // d[k] = binom(1/2, k) v^{1/2-k}
    double coef = 1.0;
    double pw = s;
    for (int k = 1; k <= a.order(); ++k) {
        coef *= (0.5 - (k - 1)) / k;
        pw /= v;
        d[k] = coef * pw;
    }
    return a.compose_series(d);
}

inline Jet pow(const Jet& a, double r) {
    double v = a.value();
    if (r == std::floor(r) && std::abs(r) < 64) {
        // integer powers work for any base value
        int m = static_cast<int>(r);
        if (m == 0) return Jet::constant(a.nvars(), a.order(), 1.0);
        Jet p = (m > 0) ? a : a.reciprocal();
        int e = std::abs(m);
        Jet acc = p;
        for (int k = 1; k < e; ++k) acc = acc * p;
        return acc;
    }
    if (v <= 0.0) throw DomainError("jet: pow with non-positive base and fractional exponent");
    std::vector<double> d(a.order() + 1);
    double coef = 1.0;
    double pw = std::pow(v, r);
    d[0] = pw;
    for (int k = 1; k <= a.order(); ++k) {
        coef *= (r - (k - 1)) / k;
        pw /= v;
        d[k] = coef * pw;
    }
    return a.compose_series(d);
}

inline Jet sin(const Jet& a) {
    double s = std::sin(a.value()), c = std::cos(a.value());
    std::vector<double> d(a.order() + 1);
    double f = 1.0;
    for (int k = 0; k <= a.order(); ++k) {
        double der;
        switch (k % 4) {
            case 0: der = s; break;
            case 1: der = c; break;
            case 2: der = -s; break;
            default: der = -c; break;
        }
        d[k] = der / f;
        f *= (k + 1);
    }
    return a.compose_series(d);
}

inline Jet cos(const Jet& a) {
    double s = std::sin(a.value()), c = std::cos(a.value());
    std::vector<double> d(a.order() + 1);
    double f = 1.0;
    for (int k = 0; k <= a.order(); ++k) {
        double der;
        switch (k % 4) {
            case 0: der = c; break;
            case 1: der = -s; break;
            case 2: der = -c; break;
            default: der = s; break;
        }
        d[k] = der / f;
        f *= (k + 1);
    }
    return a.compose_series(d);
}

inline Jet cosh(const Jet& a) { return (exp(a) + exp(-a)) * 0.5; }
inline Jet sinh(const Jet& a) { return (exp(a) - exp(-a)) * 0.5; }

using JetVec = std::vector<Jet>;

// Variable jets for a base point: the standard entry into jet evaluation.
inline JetVec jet_variables(std::span<const double> p, int order) {
    JetVec v;
    v.reserve(p.size());
    for (std::size_t i = 0; i < p.size(); ++i)
        v.push_back(Jet::variable(static_cast<int>(p.size()), order, static_cast<int>(i), p[i]));
    return v;
}

} // namespace bch
