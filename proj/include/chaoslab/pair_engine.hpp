#pragma once

/**
 * @file pair_engine.hpp
 * @brief Exact statistics of the distance between two orbits over long time
 *        windows.
 *
 * A time window is cut into segments. Where both points sit in identity blocks
 * (or on the limit cylinder) their heights are frozen and their angles move
 * by constant steps, so the whole segment is handled in closed form with
 * floor_sum-based counting. Everything else (the short h_l / h_l^{-1} blocks)
 * is stepped exactly. The result equals plain step-by-step evaluation.
 */

#include <optional>
#include <type_traits>
#include <utility>
#include <vector>

#include "chaoslab/dynamics.hpp"
#include "chaoslab/errors.hpp"
#include "chaoslab/exact_arith.hpp"
#include "chaoslab/rational.hpp"
#include "chaoslab/schedule.hpp"

namespace chaoslab {

/// Full max-metric, or only its angular term rho(phi_u, phi_v).
enum class Metric { Full, AngleOnly };

/// Angular distance on X; the fiber factor has no angle.
inline Rational angle_dist(const CylinderPoint& u, const CylinderPoint& v) { return circle_dist(u.phi, v.phi); }

template <OrbitPoint P>
Rational metric_dist(const P& u, const P& v, Metric metric) {
    if constexpr (std::is_same_v<P, CylinderPoint>) {
        if (metric == Metric::AngleOnly) return angle_dist(u, v);
    } else {
        if (metric == Metric::AngleOnly) throw DomainError("fiber points carry no angle");
    }
    return dist(u, v);
}

/// |radius_u - radius_v| for the states j steps into a frozen run; nonincreasing in j.
class RadiusGap {
public:
    RadiusGap(const Cylinder& a, const Cylinder& b) {
        if (!a.is_limit()) ka_ = a.index();
        if (!b.is_limit()) kb_ = b.index();
    }

    bool identically_zero() const { return (!ka_ && !kb_) || (ka_ && kb_ && *ka_ == *kb_); }

    Rational at(const BigInt& j) const {
        if (identically_zero()) return Rational(0);
        if (!ka_) return make_rational(BigInt(1), *kb_ + j);
        if (!kb_) return make_rational(BigInt(1), *ka_ + j);
        return abs(make_rational(BigInt(1), *ka_ + j) - make_rational(BigInt(1), *kb_ + j));
    }

    /// Smallest j in [0, n) with at(j) < x (or <= x), n if there is none.
    BigInt first_below(const Rational& x, const BigInt& n, bool inclusive) const {
        auto ok = [&](const BigInt& j) { return inclusive ? at(j) <= x : at(j) < x; };
        BigInt lo = 0, hi = n;
        while (lo < hi) {
            BigInt mid = (lo + hi) / 2;
            if (ok(mid))
                hi = mid;
            else
                lo = mid + 1;
        }
        return lo;
    }

private:
    std::optional<BigInt> ka_, kb_;
};

/// Closed-form view of a frozen segment: states u_j, v_j for j in [0, len).
template <OrbitPoint P>
struct FrozenSegment {
    const Schedule& s;
    const P& u;
    const P& v;
    BigInt len;

    Rational height_gap() const { return abs(u.z - v.z); }
    RadiusGap radius_gap() const { return RadiusGap(u.cyl, v.cyl); }

    // phi_u - phi_v at j is angle_offset() + j * angle_step().
    Rational angle_offset() const requires std::is_same_v<P, CylinderPoint> {
        return u.phi.value() - v.phi.value();
    }
    Rational angle_step() const requires std::is_same_v<P, CylinderPoint> {
        return frozen_rate(s, u) - frozen_rate(s, v);
    }

    BigInt count_close(const Rational& delta, Metric metric) const {
        if constexpr (std::is_same_v<P, CylinderPoint>) {
            if (metric == Metric::AngleOnly) return count_near_zero(angle_offset(), angle_step(), delta, len);
        }
        if (!(height_gap() < delta)) return 0;
        BigInt first = radius_gap().first_below(delta, len, false);
        if constexpr (std::is_same_v<P, CylinderPoint>) {
            Rational step = angle_step();
            return count_near_zero(angle_offset() + Rational(first) * step, step, delta, len - first);
        } else {
            return len - first;
        }
    }

    Rational max_dist(Metric metric) const {
        if constexpr (std::is_same_v<P, CylinderPoint>) {
            Rational rho = max_circle_norm(angle_offset(), angle_step(), len);
            if (metric == Metric::AngleOnly) return rho;
            return max3(height_gap(), radius_gap().at(0), rho);
        } else {
            Rational r = radius_gap().at(0);
            return r < height_gap() ? height_gap() : r;
        }
    }

    Rational min_dist(Metric metric) const {
        if constexpr (std::is_same_v<P, CylinderPoint>) {
            if (metric == Metric::AngleOnly) return min_circle_norm(angle_offset(), angle_step(), len);
            Rational m = min_radius_or_angle();
            return m < height_gap() ? height_gap() : m;
        } else {
            Rational r = radius_gap().at(len - 1);
            return r < height_gap() ? height_gap() : r;
        }
    }

private:
    // min over j of max(radius_gap(j), rho_j). rho_j lives on the grid 1/M;
    // radius_gap decreases in j.
    Rational min_radius_or_angle() const requires std::is_same_v<P, CylinderPoint> {
        RadiusGap rg = radius_gap();
        if (rg.identically_zero()) return min_circle_norm(angle_offset(), angle_step(), len);
        GridProgression g(angle_offset(), angle_step(), len);
        auto first_le = [&](const BigInt& x) { return rg.first_below(make_rational(x, g.M), len, true); };
        auto feasible = [&](const BigInt& x) {
            BigInt j0 = first_le(x);
            return j0 < len && g.count_within(x, j0, len) >= 1;
        };
        BigInt top = g.M / 2;
        if (!feasible(top)) return rg.at(len - 1);  // radius term dominates everywhere
        BigInt lo = 0, hi = top;
        while (lo < hi) {
            BigInt mid = (lo + hi) / 2;
            if (feasible(mid))
                hi = mid;
            else
                lo = mid + 1;
        }
        const BigInt& x = lo;
        Rational candidate = make_rational(x, g.M);
        if (x == 0) return candidate;
        // A smaller value can only be a radius value in ((x-1)/M, x/M) at an index
        // whose angle already sits at or below (x-1)/M.
        BigInt from = rg.first_below(candidate, len, false);
        BigInt to = first_le(x - 1);
        if (from >= to || g.count_within(x - 1, from, to) == 0) return candidate;
        BigInt a = from, b = to - 1;  // largest j in [from, to) with an angle hit in [j, to)
        while (a < b) {
            BigInt mid = (a + b + 1) / 2;
            if (g.count_within(x - 1, mid, to) >= 1)
                a = mid;
            else
                b = mid - 1;
        }
        return rg.at(a);
    }
};

namespace detail {

inline void require_in_horizon(const Schedule& s, const Cylinder& c, const BigInt& t_last) {
    if (c.is_limit()) return;
    if (c.index() + t_last >= s.horizon())
        throw HorizonError("window reaches cylinder " + to_string(BigInt(c.index() + t_last)) +
                           " beyond schedule horizon " + to_string(s.horizon()));
}

inline std::optional<BigInt> min_run(const std::optional<BigInt>& a, const std::optional<BigInt>& b) {
    if (!a) return b;
    if (!b) return a;
    return *a < *b ? a : b;
}

}  // namespace detail

/// Walks times [t_begin, t_end) of the pair (F^t u, F^t v). Calls
/// single(t, u_t, v_t) for stepped times and run(t, FrozenSegment) for
/// closed-form segments starting at time t.
template <OrbitPoint P, class Single, class Run>
void sweep_pair(const Schedule& s, P u, P v, const BigInt& t_begin, const BigInt& t_end, Single&& single,
                Run&& run) {
    if (t_begin < 0) throw DomainError("sweep_pair: negative time");
    if (t_end <= t_begin) return;
    detail::require_in_horizon(s, u.cyl, t_end - 1);
    detail::require_in_horizon(s, v.cyl, t_end - 1);
    u = advance(s, std::move(u), t_begin);
    v = advance(s, std::move(v), t_begin);
    BigInt t = t_begin;
    while (t < t_end) {
        std::optional<BigInt> r = detail::min_run(frozen_run(s, u), frozen_run(s, v));
        BigInt remaining = t_end - t;
        BigInt len = r ? (*r < remaining ? *r : remaining) : remaining;
        if (len >= 1) {
            run(t, FrozenSegment<P>{s, u, v, len});
            t += len;
            if (t < t_end) {
                u = jump_frozen(s, u, len);
                v = jump_frozen(s, v, len);
            }
        } else {
            single(t, u, v);
            t += 1;
            if (t < t_end) {
                u = step(s, u);
                v = step(s, v);
            }
        }
    }
}

/// #{t in [t_begin, t_end) : d(F^t u, F^t v) < delta}, closed form over frozen segments.
template <OrbitPoint P>
BigInt count_close(const Schedule& s, const P& u, const P& v, const Rational& delta, const BigInt& t_begin,
                   const BigInt& t_end, Metric metric = Metric::Full) {
    BigInt total = 0;
    sweep_pair(
        s, u, v, t_begin, t_end,
        [&](const BigInt&, const P& a, const P& b) {
            if (metric_dist(a, b, metric) < delta) total += 1;
        },
        [&](const BigInt&, const FrozenSegment<P>& seg) { total += seg.count_close(delta, metric); });
    return total;
}

/// Same count by plain stepping; cost linear in t_end.
template <OrbitPoint P>
BigInt count_close_stepwise(const Schedule& s, P u, P v, const Rational& delta, const BigInt& t_begin,
                            const BigInt& t_end, Metric metric = Metric::Full) {
    BigInt total = 0;
    for (BigInt t = 0; t < t_end; ++t) {
        if (t >= t_begin && metric_dist(u, v, metric) < delta) total += 1;
        if (t + 1 < t_end) {
            u = step(s, u);
            v = step(s, v);
        }
    }
    return total;
}

struct DistanceExtremes {
    Rational min, max;
    BigInt argmin_time, argmax_time;  // first segment start attaining the value
};

/// Exact min and max of the distance over times [t_begin, t_end).
template <OrbitPoint P>
DistanceExtremes distance_extremes(const Schedule& s, const P& u, const P& v, const BigInt& t_begin,
                                   const BigInt& t_end, Metric metric = Metric::Full) {
    if (t_end <= t_begin) throw DomainError("distance_extremes: empty window");
    std::optional<DistanceExtremes> acc;
    auto take = [&](const BigInt& t, const Rational& lo, const Rational& hi) {
        if (!acc) {
            acc = DistanceExtremes{lo, hi, t, t};
            return;
        }
        if (lo < acc->min) {
            acc->min = lo;
            acc->argmin_time = t;
        }
        if (hi > acc->max) {
            acc->max = hi;
            acc->argmax_time = t;
        }
    };
    sweep_pair(
        s, u, v, t_begin, t_end,
        [&](const BigInt& t, const P& a, const P& b) {
            Rational d = metric_dist(a, b, metric);
            take(t, d, d);
        },
        [&](const BigInt& t, const FrozenSegment<P>& seg) { take(t, seg.min_dist(metric), seg.max_dist(metric)); });
    return *acc;
}

enum class ProfileMode { Empirical, BlockExact };

inline const char* to_string(ProfileMode m) { return m == ProfileMode::Empirical ? "EMPIRICAL" : "BLOCK_EXACT"; }

/// (1/normalizer) * #{t in [start, end) : d < delta}; the Definition-style window
/// at horizon m is start = 1, end = m, normalizer = m.
struct DistributionProfile {
    Rational delta;
    BigInt start, end, normalizer;
    BigInt count;
    Rational fraction;
    ProfileMode mode = ProfileMode::BlockExact;
};

inline nlohmann::json to_json(const DistributionProfile& p) {
    return {{"delta", to_string(p.delta)},   {"start", to_string(p.start)},
            {"end", to_string(p.end)},       {"normalizer", to_string(p.normalizer)},
            {"count", to_string(p.count)},   {"fraction", to_string(p.fraction)},
            {"mode", to_string(p.mode)}};
}

/// Profiles at horizon m by direct iteration of both orbits.
template <OrbitPoint P>
std::vector<DistributionProfile> empirical_phi(const Schedule& s, P u, P v, const BigInt& m,
                                               const std::vector<Rational>& deltas) {
    if (m < 1) throw DomainError("empirical_phi: horizon must be positive");
    detail::require_in_horizon(s, u.cyl, m - 1);
    detail::require_in_horizon(s, v.cyl, m - 1);
    std::vector<BigInt> counts(deltas.size(), BigInt(0));
    for (BigInt t = 1; t < m; ++t) {
        u = step(s, u);
        v = step(s, v);
        Rational d = dist(u, v);
        for (std::size_t i = 0; i < deltas.size(); ++i)
            if (d < deltas[i]) counts[i] += 1;
    }
    std::vector<DistributionProfile> out;
    for (std::size_t i = 0; i < deltas.size(); ++i)
        out.push_back({deltas[i], 1, m, m, counts[i], make_rational(counts[i], m), ProfileMode::Empirical});
    return out;
}

/// Profiles at horizon m computed segment-wise in closed form.
template <OrbitPoint P>
std::vector<DistributionProfile> block_exact_phi(const Schedule& s, const P& u, const P& v, const BigInt& m,
                                                 const std::vector<Rational>& deltas) {
    if (m < 1) throw DomainError("block_exact_phi: horizon must be positive");
    std::vector<DistributionProfile> out;
    for (const Rational& delta : deltas) {
        BigInt c = count_close(s, u, v, delta, BigInt(1), m);
        out.push_back({delta, 1, m, m, c, make_rational(c, m), ProfileMode::BlockExact});
    }
    return out;
}

}  // namespace chaoslab
