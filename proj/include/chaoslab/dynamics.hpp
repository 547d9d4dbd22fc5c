#pragma once

/**
 * @file dynamics.hpp
 * @brief States and maps of the cylinder system (X, F) and its fiber factor (Y, f).
 *
 * X is a countable stack of unit-height cylinders of radius 2 - 1/k converging
 * to a limit cylinder of radius 2. F moves a point from cylinder k to k+1,
 * rotating it by Psi(k, z) and moving its height by g_k; the limit cylinder is
 * fixed pointwise. Y drops the angle, and project() is the semiconjugacy.
 */

#include <concepts>
#include <optional>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "chaoslab/errors.hpp"
#include "chaoslab/exact_arith.hpp"
#include "chaoslab/rational.hpp"
#include "chaoslab/schedule.hpp"

namespace chaoslab {

/// Cylinder (or fiber) index: a positive integer k, or the limit.
class Cylinder {
public:
    static Cylinder limit() { return Cylinder(); }
    static Cylinder at(BigInt k) {
        if (k < 1) throw DomainError("cylinder index must be positive");
        Cylinder c;
        c.k_ = std::move(k);
        return c;
    }

    bool is_limit() const { return !k_.has_value(); }
    const BigInt& index() const {
        if (!k_) throw DomainError("limit cylinder has no index");
        return *k_;
    }

    /// 2 - 1/k, or 2 on the limit.
    Rational radius() const {
        if (!k_) return Rational(2);
        return 2 - make_rational(BigInt(1), *k_);
    }

    Cylinder advanced(const BigInt& steps) const { return k_ ? at(*k_ + steps) : *this; }

    friend bool operator==(const Cylinder&, const Cylinder&) = default;

private:
    Cylinder() = default;
    std::optional<BigInt> k_;
};

inline void check_height(const Rational& z) {
    if (z < 0 || z > 1) throw DomainError("height must lie in [0,1]");
}

struct CylinderPoint {
    Cylinder cyl = Cylinder::limit();
    Angle phi;
    Rational z;

    CylinderPoint(Cylinder c, Angle a, Rational h) : cyl(std::move(c)), phi(std::move(a)), z(std::move(h)) {
        check_height(z);
    }

    friend bool operator==(const CylinderPoint&, const CylinderPoint&) = default;
};

struct FiberPoint {
    Cylinder cyl = Cylinder::limit();
    Rational z;

    FiberPoint(Cylinder c, Rational h) : cyl(std::move(c)), z(std::move(h)) { check_height(z); }

    friend bool operator==(const FiberPoint&, const FiberPoint&) = default;
};

template <class P>
concept OrbitPoint = std::same_as<P, CylinderPoint> || std::same_as<P, FiberPoint>;

inline Rational max3(const Rational& a, const Rational& b, const Rational& c) {
    const Rational& ab = a < b ? b : a;
    return ab < c ? c : ab;
}

/// Max-metric on X: max(|r_u - r_v|, |z_u - z_v|, rho(phi_u, phi_v)).
inline Rational dist_X(const CylinderPoint& u, const CylinderPoint& v) {
    return max3(abs(u.cyl.radius() - v.cyl.radius()), abs(u.z - v.z), circle_dist(u.phi, v.phi));
}

inline Rational dist_Y(const FiberPoint& u, const FiberPoint& v) {
    Rational dr = abs(u.cyl.radius() - v.cyl.radius());
    Rational dz = abs(u.z - v.z);
    return dr < dz ? dz : dr;
}

inline Rational dist(const CylinderPoint& u, const CylinderPoint& v) { return dist_X(u, v); }
inline Rational dist(const FiberPoint& u, const FiberPoint& v) { return dist_Y(u, v); }

inline CylinderPoint step_F(const Schedule& s, const CylinderPoint& p) {
    if (p.cyl.is_limit()) return p;
    const BigInt& k = p.cyl.index();
    GStep g = resolve_g(s, k);
    return {Cylinder::at(k + 1), p.phi.rotated(level_psi(g.block.l, p.z)), (*g.map)(p.z)};
}

inline FiberPoint step_f(const Schedule& s, const FiberPoint& q) {
    if (q.cyl.is_limit()) return q;
    const BigInt& k = q.cyl.index();
    GStep g = resolve_g(s, k);
    return {Cylinder::at(k + 1), (*g.map)(q.z)};
}

inline CylinderPoint step(const Schedule& s, const CylinderPoint& p) { return step_F(s, p); }
inline FiberPoint step(const Schedule& s, const FiberPoint& q) { return step_f(s, q); }

inline FiberPoint project(const CylinderPoint& p) { return {p.cyl, p.z}; }

/// Applies the map n times, calling visitor(i, point) with the state after step i.
template <OrbitPoint P, class Visitor>
P orbit(const Schedule& s, P p, const BigInt& n, Visitor&& visitor) {
    if (n < 0) throw DomainError("orbit: negative step count");
    for (BigInt i = 1; i <= n; ++i) {
        p = step(s, p);
        visitor(i, std::as_const(p));
    }
    return p;
}

template <OrbitPoint P>
P orbit(const Schedule& s, P p, const BigInt& n) {
    return orbit(s, std::move(p), n, [](const BigInt&, const P&) {});
}

/// Number of upcoming steps during which g_k is the identity (heights frozen,
/// rotation by a constant angle). Zero outside ID blocks; nullopt on the limit.
template <OrbitPoint P>
std::optional<BigInt> frozen_run(const Schedule& s, const P& p) {
    if (p.cyl.is_limit()) return std::nullopt;
    const BigInt& k = p.cyl.index();
    const LevelRecord& rec = s.level_of(k);
    if (k >= rec.m2 && k < rec.m3) return BigInt(rec.m3 - k);
    return BigInt(0);
}

/// Per-step rotation while frozen (zero on the limit).
inline Rational frozen_rate(const Schedule& s, const CylinderPoint& p) {
    if (p.cyl.is_limit()) return Rational(0);
    return level_psi(s.level_of(p.cyl.index()).l, p.z);
}

// `steps` steps inside a frozen run, in closed form.
inline CylinderPoint jump_frozen(const Schedule& s, const CylinderPoint& p, const BigInt& steps) {
    if (p.cyl.is_limit()) return p;
    return {p.cyl.advanced(steps), p.phi.rotated(Rational(steps) * frozen_rate(s, p)), p.z};
}

inline FiberPoint jump_frozen(const Schedule&, const FiberPoint& q, const BigInt& steps) {
    return {q.cyl.advanced(steps), q.z};
}

/// F^n(p) (or f^n(p)) without stepping through identity blocks one index at a time.
template <OrbitPoint P>
P advance(const Schedule& s, P p, BigInt n) {
    if (n < 0) throw DomainError("advance: negative step count");
    while (n > 0) {
        std::optional<BigInt> run = frozen_run(s, p);
        if (!run) return p;
        if (*run > 0) {
            BigInt len = *run < n ? *run : n;
            p = jump_frozen(s, p, len);
            n -= len;
        } else {
            p = step(s, p);
            n -= 1;
        }
    }
    return p;
}

/// project(F^i(p)) == f^i(project(p)) for every 0 <= i <= n.
inline bool semiconjugacy_check(const Schedule& s, const CylinderPoint& p, const BigInt& n) {
    CylinderPoint x = p;
    FiberPoint y = project(p);
    if (!(project(x) == y)) return false;
    for (BigInt i = 1; i <= n; ++i) {
        x = step_F(s, x);
        y = step_f(s, y);
        if (!(project(x) == y)) return false;
    }
    return true;
}

// Point literals: {"k":"1"|"limit","phi":"1/3","z":"2/5"}; "phi" absent means a fiber point.
inline Cylinder cylinder_from_json(const nlohmann::json& j) {
    std::string k = j.at("k").get<std::string>();
    if (k == "limit") return Cylinder::limit();
    return Cylinder::at(parse_bigint(k));
}

inline std::string cylinder_to_string(const Cylinder& c) {
    return c.is_limit() ? std::string("limit") : to_string(c.index());
}

inline CylinderPoint cylinder_point_from_json(const nlohmann::json& j) {
    return {cylinder_from_json(j), Angle(parse_rational(j.at("phi").get<std::string>())),
            parse_rational(j.at("z").get<std::string>())};
}

inline FiberPoint fiber_point_from_json(const nlohmann::json& j) {
    return {cylinder_from_json(j), parse_rational(j.at("z").get<std::string>())};
}

inline nlohmann::json to_json(const CylinderPoint& p) {
    return {{"k", cylinder_to_string(p.cyl)}, {"phi", to_string(p.phi.value())}, {"z", to_string(p.z)}};
}

inline nlohmann::json to_json(const FiberPoint& q) {
    return {{"k", cylinder_to_string(q.cyl)}, {"z", to_string(q.z)}};
}

}  // namespace chaoslab
