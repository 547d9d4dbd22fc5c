#pragma once

/**
 * @file interval_maps.hpp
 * @brief Strictly increasing piecewise-linear self-maps of [0,1] and the
 *        per-level family h_l with fixed points {0, r_l, 1}.
 *
 * h_l is the symmetric five-breakpoint map
 *
 *     (0,0) (r/2, r/2 - a) (r,r) ((1+r)/2, (1+r)/2 + a) (1,1),
 *     a = min(r, 1-r) / (2(l+2)),
 *
 * which pushes points away from r toward the endpoints and has sup-distance
 * to the identity exactly a. Its inverse is the same polyline with the
 * coordinates swapped, so every orbit stays rational.
 */

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "chaoslab/errors.hpp"
#include "chaoslab/rational.hpp"

namespace chaoslab {

class PLMap {
public:
    using Breakpoint = std::pair<Rational, Rational>;

    explicit PLMap(std::vector<Breakpoint> points) : points_(std::move(points)) {
        if (points_.size() < 2) throw DomainError("PLMap: need at least two breakpoints");
        if (points_.front() != Breakpoint{Rational(0), Rational(0)} ||
            points_.back() != Breakpoint{Rational(1), Rational(1)})
            throw DomainError("PLMap: breakpoints must start at (0,0) and end at (1,1)");
        for (std::size_t i = 1; i < points_.size(); ++i) {
            if (!(points_[i - 1].first < points_[i].first) ||
                !(points_[i - 1].second < points_[i].second))
                throw DomainError("PLMap: breakpoints must be strictly increasing in x and y");
        }
    }

    static PLMap identity() { return PLMap({{Rational(0), Rational(0)}, {Rational(1), Rational(1)}}); }

    const std::vector<Breakpoint>& breakpoints() const { return points_; }

    Rational operator()(const Rational& x) const {
        if (x < 0 || x > 1) throw DomainError("PLMap: argument outside [0,1]");
        auto it = std::upper_bound(points_.begin(), points_.end(), x,
                                   [](const Rational& v, const Breakpoint& b) { return v < b.first; });
        if (it == points_.end()) return points_.back().second;
        const Breakpoint& hi = *it;
        const Breakpoint& lo = *(it - 1);
        if (x == lo.first) return lo.second;
        Rational y = lo.second + (x - lo.first) * (hi.second - lo.second) / (hi.first - lo.first);
        return y;
    }

    PLMap inverse() const {
        std::vector<Breakpoint> swapped;
        swapped.reserve(points_.size());
        for (const auto& [x, y] : points_) swapped.emplace_back(y, x);
        return PLMap(std::move(swapped));
    }

    friend bool operator==(const PLMap& a, const PLMap& b) { return a.points_ == b.points_; }

private:
    std::vector<Breakpoint> points_;
};

inline Rational apply(const PLMap& map, const Rational& x) { return map(x); }

/// n-fold application. Stops early on a fixed point.
inline Rational iterate(const PLMap& map, Rational x, const BigInt& n) {
    if (n < 0) throw DomainError("iterate: negative iteration count");
    if (x < 0 || x > 1) throw DomainError("iterate: argument outside [0,1]");
    for (BigInt i = 0; i < n; ++i) {
        Rational y = map(x);
        if (y == x) break;
        x = std::move(y);
    }
    return x;
}

struct LevelMaps {
    unsigned long l = 0;
    Rational r;
    Rational alpha;  // sup-norm of h - Id
    PLMap h = PLMap::identity();
    PLMap h_inv = PLMap::identity();
    BigInt n = 0;     // escape time, 0 until computed
    Rational eps = 0; // margin, 0 until computed
};

inline Rational level_alpha(unsigned long l, const Rational& r) {
    Rational side = r < 1 - r ? r : Rational(1 - r);
    return side / (2 * Rational(static_cast<long>(l) + 2));
}

inline LevelMaps make_h(unsigned long l, const Rational& r) {
    if (r <= 0 || r >= 1) throw DomainError("make_h: r_l must lie in (0,1)");
    LevelMaps m;
    m.l = l;
    m.r = r;
    m.alpha = level_alpha(l, r);
    Rational left = r / 2;
    Rational right = (1 + r) / 2;
    m.h = PLMap({{Rational(0), Rational(0)},
                 {left, Rational(left - m.alpha)},
                 {r, r},
                 {right, Rational(right + m.alpha)},
                 {Rational(1), Rational(1)}});
    m.h_inv = m.h.inverse();
    return m;
}

// Endpoints r - 1/l and r + 1/l whose escape defines n_l. A side whose
// endpoint falls outside (0,1) is vacuous.
struct EscapeEndpoints {
    bool lower_active = false;
    bool upper_active = false;
    Rational lower, upper, threshold;  // threshold = 1/l
};

inline EscapeEndpoints escape_endpoints(const LevelMaps& maps, unsigned long l) {
    if (l < 1) throw DomainError("escape threshold index must be positive");
    EscapeEndpoints e;
    e.threshold = Rational(1, static_cast<long>(l));
    e.threshold.canonicalize();
    e.lower = maps.r - e.threshold;
    e.upper = maps.r + e.threshold;
    e.lower_active = e.lower > 0;
    e.upper_active = e.upper < 1;
    return e;
}

// Both inclusions of the escape condition at iteration count n.
inline bool escape_holds(const LevelMaps& maps, unsigned long l, const BigInt& n) {
    EscapeEndpoints e = escape_endpoints(maps, l);
    if (e.lower_active && !(iterate(maps.h, e.lower, n) < e.threshold)) return false;
    if (e.upper_active && !(iterate(maps.h, e.upper, n) > 1 - e.threshold)) return false;
    return true;
}

/// Smallest n >= 1 with h^n([0, r-1/l]) in [0, 1/l) and h^n([r+1/l, 1]) in (1-1/l, 1].
/// By monotonicity only the endpoints r -+ 1/l need checking.
inline BigInt compute_n_l(const LevelMaps& maps, unsigned long l) {
    EscapeEndpoints e = escape_endpoints(maps, l);
    BigInt n = 1;
    Rational lo = e.lower_active ? maps.h(e.lower) : Rational(0);
    Rational hi = e.upper_active ? maps.h(e.upper) : Rational(1);
    while ((e.lower_active && !(lo < e.threshold)) || (e.upper_active && !(hi > 1 - e.threshold))) {
        if (e.lower_active) lo = maps.h(lo);
        if (e.upper_active) hi = maps.h(hi);
        ++n;
    }
    return n;
}

/// eps_l = min(h^{n_l}(1/l), 1 - h^{n_l}(1 - 1/l)).
inline Rational compute_eps_l(const LevelMaps& maps, unsigned long l) {
    if (l < 1) throw DomainError("compute_eps_l: l must be positive");
    if (maps.n < 1) throw DomainError("compute_eps_l: n_l not computed");
    Rational t(1, static_cast<long>(l));
    t.canonicalize();
    Rational a = iterate(maps.h, t, maps.n);
    Rational b = 1 - iterate(maps.h, Rational(1 - t), maps.n);
    return a < b ? a : b;
}

inline nlohmann::json breakpoints_to_json(const PLMap& map) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [x, y] : map.breakpoints()) arr.push_back({to_string(x), to_string(y)});
    return arr;
}

inline nlohmann::json to_json(const LevelMaps& m) {
    return {{"l", m.l},
            {"r", to_string(m.r)},
            {"alpha", to_string(m.alpha)},
            {"n", to_string(m.n)},
            {"eps", to_string(m.eps)},
            {"h", breakpoints_to_json(m.h)},
            {"h_inv", breakpoints_to_json(m.h_inv)}};
}

}  // namespace chaoslab
