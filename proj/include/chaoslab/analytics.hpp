#pragma once

/**
 * @file analytics.hpp
 * @brief Distributional-chaos analytics: witness blocks for the fiber factor,
 *        the case split for pairs in X, equidistribution certificates over
 *        identity blocks, Li-Yorke extremes, and finite-horizon pair verdicts.
 *
 * All statements are exact and finite-horizon. The liminf/limsup in the
 * definitions are replaced by window fractions at the natural horizons of the
 * schedule (ends of h_l and identity blocks); verdicts say "consistent with".
 */

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chaoslab/dynamics.hpp"
#include "chaoslab/errors.hpp"
#include "chaoslab/exact_arith.hpp"
#include "chaoslab/pair_engine.hpp"
#include "chaoslab/rational.hpp"
#include "chaoslab/schedule.hpp"

namespace chaoslab {

inline std::vector<Rational> default_delta_grid() {
    return {Rational(1, 10), Rational(1, 4), Rational(1, 3), Rational(1, 2), Rational(9, 10)};
}

inline Rational threshold_of(unsigned long l) { return Rational(1, static_cast<long>(threshold_index(l))); }

// ---------------------------------------------------------------------------
// Factor (Y, f): heights entering identity blocks and witness levels
// ---------------------------------------------------------------------------

/// Height of a fiber-1 point when it enters the identity block of level l,
/// by composing whole blocks: every earlier level contributes h^{-n} o h^{n}.
inline Rational height_at_id_entry(const Schedule& s, Rational z, unsigned long l) {
    check_height(z);
    for (unsigned long j = 0; j < l; ++j) {
        const LevelMaps& maps = s.level(j).maps;
        z = iterate(maps.h_inv, iterate(maps.h, z, maps.n), maps.n);
    }
    const LevelMaps& maps = s.level(l).maps;
    return iterate(maps.h, z, maps.n);
}

enum class WitnessKind { None, S, Q, Both };

inline const char* to_string(WitnessKind w) {
    switch (w) {
        case WitnessKind::None: return "none";
        case WitnessKind::S: return "s";
        case WitnessKind::Q: return "q";
        case WitnessKind::Both: return "s+q";
    }
    return "?";
}

// s: heights within 1/l of each other during the identity block.
// q: one height within 1/l of 0 and the other within 1/l of 1.
inline WitnessKind witness_kind(const Rational& a, const Rational& b, unsigned long l) {
    Rational t = threshold_of(l);
    bool s_type = abs(a - b) < t;
    const Rational& lo = a < b ? a : b;
    const Rational& hi = a < b ? b : a;
    bool q_type = lo < t && hi > 1 - t;
    if (s_type && q_type) return WitnessKind::Both;
    if (s_type) return WitnessKind::S;
    if (q_type) return WitnessKind::Q;
    return WitnessKind::None;
}

struct WindowBounds {
    Rational delta;
    BigInt count;            // exact
    Rational lower, exact, upper;  // fractions over the window
};

struct FactorLevelReport {
    unsigned long l = 0;
    Rational z_u, z_v;       // heights during the identity block
    Rational id_distance;    // constant fiber distance there
    BigInt id_length;        // m3 - m2
    WitnessKind witness = WitnessKind::None;
    BigInt horizon;          // window is times (0, horizon): cylinders 2 .. m3-1
    std::vector<WindowBounds> bounds;
};

/// Per-level report for the fiber-1 pair (1, z_u), (1, z_v) over levels
/// [l_first, l_last]. Window bounds count identity blocks exactly and treat
/// h_l / h_l^{-1} indices as hits (upper) or misses (lower).
inline std::vector<FactorLevelReport> factor_block_profile(const Schedule& s, const Rational& z_u,
                                                           const Rational& z_v, unsigned long l_first,
                                                           unsigned long l_last,
                                                           const std::vector<Rational>& deltas) {
    if (z_u == z_v) throw DomainError("factor_block_profile: heights must differ");
    check_height(z_u);
    check_height(z_v);
    l_last = std::min<unsigned long>(l_last, s.size() - 1);
    std::vector<FactorLevelReport> out;
    std::vector<Rational> id_dist(s.size());
    for (unsigned long l = 0; l <= l_last; ++l) {
        id_dist[l] = abs(height_at_id_entry(s, z_u, l) - height_at_id_entry(s, z_v, l));
    }
    FiberPoint u(Cylinder::at(1), z_u), v(Cylinder::at(1), z_v);
    for (unsigned long l = l_first; l <= l_last; ++l) {
        const LevelRecord& rec = s.level(l);
        FactorLevelReport r;
        r.l = l;
        r.z_u = height_at_id_entry(s, z_u, l);
        r.z_v = height_at_id_entry(s, z_v, l);
        r.id_distance = abs(r.z_u - r.z_v);
        r.id_length = rec.gap;
        r.witness = witness_kind(r.z_u, r.z_v, l);
        r.horizon = rec.m3 - 1;
        for (const Rational& delta : deltas) {
            WindowBounds b;
            b.delta = delta;
            BigInt hits = 0, misses = 0;
            for (unsigned long j = 0; j <= l; ++j) {
                if (id_dist[j] < delta)
                    hits += s.level(j).gap;
                else
                    misses += s.level(j).gap;
            }
            b.count = count_close(s, u, v, delta, BigInt(1), r.horizon);
            b.lower = make_rational(hits, r.horizon);
            b.exact = make_rational(b.count, r.horizon);
            b.upper = make_rational(r.horizon - 1 - misses, r.horizon);
            r.bounds.push_back(std::move(b));
        }
        out.push_back(std::move(r));
    }
    return out;
}

struct WitnessLevels {
    std::vector<unsigned long> s_levels, q_levels;
};

/// Levels 1..L_max (within the schedule) where the pair is s-type or q-type.
inline WitnessLevels find_dc1_witness_blocks(const Schedule& s, const Rational& z_u, const Rational& z_v,
                                             unsigned long L_max) {
    if (z_u == z_v) throw DomainError("find_dc1_witness_blocks: heights must differ");
    WitnessLevels w;
    unsigned long last = std::min<unsigned long>(L_max, s.size() - 1);
    for (unsigned long l = 1; l <= last; ++l) {
        WitnessKind k = witness_kind(height_at_id_entry(s, z_u, l), height_at_id_entry(s, z_v, l), l);
        if (k == WitnessKind::S || k == WitnessKind::Both) w.s_levels.push_back(l);
        if (k == WitnessKind::Q || k == WitnessKind::Both) w.q_levels.push_back(l);
    }
    return w;
}

/// For an s-type level l: the window (0, m3 - 1) at delta = 2/l contains the
/// whole identity block, whose share of the window is at least 1 - 2/(l+1).
struct SWitnessShare {
    unsigned long l = 0;
    Rational delta;
    BigInt count, horizon;
    Rational fraction;  // count / horizon
    Rational id_share;  // (m3 - m2) / horizon
    Rational bound;     // 1 - 2/(l+1)
    bool holds = false; // fraction >= id_share >= bound
};

inline SWitnessShare s_witness_share(const Schedule& s, const Rational& z_u, const Rational& z_v, unsigned long l) {
    if (l < 1 || l >= s.size()) throw DomainError("s_witness_share: level outside the schedule");
    const LevelRecord& rec = s.level(l);
    SWitnessShare w;
    w.l = l;
    w.delta = make_rational(2L, static_cast<long>(l));
    w.horizon = rec.m3 - 1;
    FiberPoint u(Cylinder::at(1), z_u), v(Cylinder::at(1), z_v);
    w.count = count_close(s, u, v, w.delta, BigInt(1), w.horizon);
    w.fraction = make_rational(w.count, w.horizon);
    w.id_share = make_rational(rec.gap, w.horizon);
    w.bound = 1 - make_rational(2L, static_cast<long>(l) + 1);
    w.holds = w.fraction >= w.id_share && w.id_share >= w.bound;
    return w;
}

inline nlohmann::json to_json(const SWitnessShare& w) {
    return {{"level", w.l},
            {"delta", to_string(w.delta)},
            {"count", to_string(w.count)},
            {"horizon", to_string(w.horizon)},
            {"fraction", to_string(w.fraction)},
            {"id_share", to_string(w.id_share)},
            {"bound", to_string(w.bound)},
            {"holds", w.holds}};
}

inline nlohmann::json to_json(const FactorLevelReport& r) {
    nlohmann::json bounds = nlohmann::json::array();
    for (const WindowBounds& b : r.bounds)
        bounds.push_back({{"delta", to_string(b.delta)},
                          {"count", to_string(b.count)},
                          {"lower", to_string(b.lower)},
                          {"exact", to_string(b.exact)},
                          {"upper", to_string(b.upper)}});
    return {{"level", r.l},
            {"z_u", to_string(r.z_u)},
            {"z_v", to_string(r.z_v)},
            {"id_distance", to_string(r.id_distance)},
            {"id_length", to_string(r.id_length)},
            {"witness", to_string(r.witness)},
            {"horizon", to_string(r.horizon)},
            {"windows", bounds}};
}

// ---------------------------------------------------------------------------
// Extension (X, F): case split
// ---------------------------------------------------------------------------

enum class CaseKind { A, B, C, D, NonscrambledByRadius };

inline const char* to_string(CaseKind c) {
    switch (c) {
        case CaseKind::A: return "A";
        case CaseKind::B: return "B";
        case CaseKind::C: return "C";
        case CaseKind::D: return "D";
        case CaseKind::NonscrambledByRadius: return "NONSCRAMBLED_BY_RADIUS";
    }
    return "?";
}

struct CaseTag {
    CaseKind kind = CaseKind::A;
    std::optional<BigInt> shared_k;       // A, B
    std::optional<unsigned long> height_level;  // smallest L with |z_u - z_v| > 1/L (B, C)
    std::optional<BigInt> offset;         // |k_u - k_v| (C)
    std::optional<CylinderPoint> substitute;  // w for D: inner cylinder, limit angle, height 0
    bool inner_is_u = true;               // D: which point is off the limit cylinder
};

inline unsigned long smallest_height_level(const Rational& gap) {
    // smallest integer L >= 1 with gap > 1/L
    return static_cast<unsigned long>(floor_of(1 / gap).get_ui()) + 1;
}

inline CaseTag extension_case_classify(const CylinderPoint& u, const CylinderPoint& v) {
    if (u == v) throw DomainError("extension_case_classify: points must differ");
    CaseTag tag;
    bool lu = u.cyl.is_limit(), lv = v.cyl.is_limit();
    if (lu && lv) {
        tag.kind = CaseKind::NonscrambledByRadius;
        return tag;
    }
    if (lu != lv) {
        const CylinderPoint& inner = lu ? v : u;
        const CylinderPoint& outer = lu ? u : v;
        tag.kind = CaseKind::D;
        tag.inner_is_u = !lu;
        tag.substitute = CylinderPoint(inner.cyl, outer.phi, Rational(0));
        return tag;
    }
    const BigInt& ku = u.cyl.index();
    const BigInt& kv = v.cyl.index();
    if (ku == kv) {
        tag.shared_k = ku;
        if (u.z == v.z) {
            tag.kind = CaseKind::A;
        } else {
            tag.kind = CaseKind::B;
            tag.height_level = smallest_height_level(abs(u.z - v.z));
        }
        return tag;
    }
    if (u.z == v.z) {
        tag.kind = CaseKind::NonscrambledByRadius;
        tag.offset = abs(ku - kv);
        return tag;
    }
    tag.kind = CaseKind::C;
    tag.offset = abs(ku - kv);
    tag.height_level = smallest_height_level(abs(u.z - v.z));
    return tag;
}

inline nlohmann::json to_json(const CaseTag& t) {
    nlohmann::json j = {{"case", to_string(t.kind)}};
    if (t.shared_k) j["shared_k"] = to_string(*t.shared_k);
    if (t.height_level) j["height_level"] = *t.height_level;
    if (t.offset) j["offset"] = to_string(*t.offset);
    if (t.substitute) j["substitute"] = to_json(*t.substitute);
    return j;
}

/// Case A: same cylinder and height, so both rotate by the same angle and F
/// preserves their distance. Checked step by step over `steps` steps.
struct IsometryCertificate {
    Rational distance;
    BigInt steps;
    bool holds = false;
};

inline IsometryCertificate isometry_certificate(const Schedule& s, const CylinderPoint& u, const CylinderPoint& v,
                                                const BigInt& steps) {
    IsometryCertificate c;
    c.distance = dist_X(u, v);
    c.steps = steps;
    c.holds = true;
    CylinderPoint a = u, b = v;
    for (BigInt i = 0; i < steps; ++i) {
        a = step_F(s, a);
        b = step_F(s, b);
        if (dist_X(a, b) != c.distance) {
            c.holds = false;
            break;
        }
    }
    return c;
}

struct ExtensionBound {
    CaseKind kind = CaseKind::B;
    unsigned long l = 0;
    Rational delta;
    Rational z_u, z_v;          // heights during the level-l identity block
    Rational rotation_gap;      // |Delta psi| = |z_u - z_v| / l there
    bool margin_ok = false;     // |z_u - z_v| > eps_l, i.e. |Delta psi| > eps_l / l
    bool lemma_applicable = false;  // block length > 2 / |Delta psi|
    BigInt block_length;        // p = m3 - m2
    BigInt offset = 0;          // case C cylinder offset
    BigInt angle_count;         // #{0 < i < p : rho < delta} over the identity block
    BigInt distance_count;      // same window, full metric
    Rational fraction;          // angle_count / p
    Rational bound;             // 3 delta (+ 2 offset / p in case C)
    bool holds = false;         // fraction < bound
    bool delta_too_large = false;  // delta >= 1/2: 3 delta exceeds 1, nothing to certify
    BigInt window_horizon;      // whole window is times (0, window_horizon)
    Rational phistar_upper;     // all non-identity indices of the window counted as hits
};

namespace detail {

inline void require_true_schedule(const Schedule& s) {
    if (s.truncated()) throw ConstraintError("certificates require true schedule (this one is capped)");
}

}  // namespace detail

/// Exact angular proximity count over the level-l identity block for a
/// case B or case C pair, against the equidistribution bound 3 delta.
inline ExtensionBound extension_phistar_bound(const Schedule& s, const CylinderPoint& u, const CylinderPoint& v,
                                              const Rational& delta, unsigned long l) {
    detail::require_true_schedule(s);
    CaseTag tag = extension_case_classify(u, v);
    if (tag.kind != CaseKind::B && tag.kind != CaseKind::C)
        throw DomainError(std::string("extension_phistar_bound: needs a case B or C pair, got ") + to_string(tag.kind));
    if (delta <= 0) throw DomainError("extension_phistar_bound: delta must be positive");
    if (l < 1 || l >= s.size()) throw DomainError("extension_phistar_bound: level outside the schedule");
    if (!(abs(u.z - v.z) > Rational(1, static_cast<long>(l))))
        throw DomainError("extension_phistar_bound: need |z_u - z_v| > 1/l");

    const LevelRecord& rec = s.level(l);
    // Trailing point: the one on the lower cylinder; the window is its identity block.
    bool u_trails = u.cyl.index() <= v.cyl.index();
    const CylinderPoint& trail = u_trails ? u : v;
    const CylinderPoint& lead = u_trails ? v : u;
    const BigInt& k0 = trail.cyl.index();
    if (k0 > rec.m2) throw DomainError("extension_phistar_bound: pair starts after the level's identity block");

    ExtensionBound b;
    b.kind = tag.kind;
    b.l = l;
    b.delta = delta;
    b.block_length = rec.gap;
    b.offset = lead.cyl.index() - k0;
    b.delta_too_large = delta >= Rational(1, 2);

    BigInt t_entry = rec.m2 - k0;  // trailing point reaches cylinder m2
    CylinderPoint te = advance(s, trail, t_entry);
    CylinderPoint le = advance(s, lead, t_entry + b.offset);  // lead point on cylinder m2 as well
    b.z_u = u_trails ? te.z : le.z;
    b.z_v = u_trails ? le.z : te.z;
    Rational height_gap = abs(te.z - le.z);
    b.rotation_gap = height_gap / Rational(static_cast<long>(l));
    b.margin_ok = height_gap > rec.maps.eps;
    b.lemma_applicable = b.rotation_gap > 0 && Rational(rec.gap) > 2 / b.rotation_gap;

    const BigInt& p = rec.gap;
    if (tag.kind == CaseKind::B) {
        const CylinderPoint& ue = u_trails ? te : le;
        const CylinderPoint& ve = u_trails ? le : te;
        // rho(phi_u + i psi_u, phi_v + i psi_v) = rho(phi_u, phi_v + i (psi_v - psi_u))
        Rational dr = level_psi(l, ve.z) - level_psi(l, ue.z);
        b.angle_count = arc_hit_count(p, ue.phi, ve.phi, dr, delta);
        b.bound = 3 * delta;
    } else {
        b.angle_count = count_close(s, trail, lead, delta, t_entry + 1, t_entry + p, Metric::AngleOnly);
        b.bound = 3 * delta + make_rational(2 * b.offset, p);
    }
    b.distance_count = count_close(s, trail, lead, delta, t_entry + 1, t_entry + p, Metric::Full);
    b.fraction = make_rational(b.angle_count, p);
    b.holds = !b.delta_too_large && b.fraction < b.bound;

    b.window_horizon = rec.m3 - k0;
    b.phistar_upper = make_rational(b.window_horizon - p + b.angle_count, b.window_horizon);
    return b;
}

inline nlohmann::json to_json(const ExtensionBound& b) {
    return {{"case", to_string(b.kind)},
            {"level", b.l},
            {"delta", to_string(b.delta)},
            {"z_u", to_string(b.z_u)},
            {"z_v", to_string(b.z_v)},
            {"rotation_gap", to_string(b.rotation_gap)},
            {"margin_ok", b.margin_ok},
            {"lemma_applicable", b.lemma_applicable},
            {"block_length", to_string(b.block_length)},
            {"offset", to_string(b.offset)},
            {"angle_count", to_string(b.angle_count)},
            {"distance_count", to_string(b.distance_count)},
            {"fraction", to_string(b.fraction)},
            {"bound", to_string(b.bound)},
            {"holds", b.holds},
            {"delta_too_large", b.delta_too_large},
            {"window_horizon", to_string(b.window_horizon)},
            {"phistar_upper", to_string(b.phistar_upper)}};
}

/// Case D: v sits on the limit cylinder, so its angle never moves; the
/// substitute w (inner cylinder, v's angle, height 0) never rotates either.
/// The angular statistics of (u, v) and (u, w) coincide.
struct SubstitutionCertificate {
    CylinderPoint inner, limit_point, substitute;
    CaseKind reduced_kind = CaseKind::A;
    BigInt window_end;  // times [1, window_end)
    std::vector<Rational> deltas;
    std::vector<BigInt> counts_limit, counts_substitute;
    bool holds = false;  // counts equal at every delta
};

inline SubstitutionCertificate case_d_reduction(const Schedule& s, const CylinderPoint& u, const CylinderPoint& v,
                                                const std::vector<Rational>& deltas,
                                                std::optional<BigInt> window_end = std::nullopt) {
    CaseTag tag = extension_case_classify(u, v);
    if (tag.kind != CaseKind::D) throw DomainError("case_d_reduction: needs one point on the limit cylinder");
    const CylinderPoint& inner = tag.inner_is_u ? u : v;
    const CylinderPoint& outer = tag.inner_is_u ? v : u;
    SubstitutionCertificate c{inner, outer, *tag.substitute, CaseKind::A, BigInt(0), {}, {}, {}, false};
    c.reduced_kind = inner == c.substitute ? CaseKind::A : extension_case_classify(inner, c.substitute).kind;
    c.window_end = window_end ? *window_end : BigInt(s.horizon() - inner.cyl.index());
    c.deltas = deltas;
    c.holds = true;
    for (const Rational& d : deltas) {
        BigInt a = count_close(s, inner, outer, d, BigInt(1), c.window_end, Metric::AngleOnly);
        BigInt b = count_close(s, inner, c.substitute, d, BigInt(1), c.window_end, Metric::AngleOnly);
        c.holds = c.holds && a == b;
        c.counts_limit.push_back(std::move(a));
        c.counts_substitute.push_back(std::move(b));
    }
    return c;
}

inline nlohmann::json to_json(const SubstitutionCertificate& c) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < c.deltas.size(); ++i)
        rows.push_back({{"delta", to_string(c.deltas[i])},
                        {"count_with_limit_point", to_string(c.counts_limit[i])},
                        {"count_with_substitute", to_string(c.counts_substitute[i])}});
    return {{"inner", to_json(c.inner)},
            {"limit_point", to_json(c.limit_point)},
            {"substitute", to_json(c.substitute)},
            {"reduced_case", to_string(c.reduced_kind)},
            {"window_end", to_string(c.window_end)},
            {"angle_counts", rows},
            {"holds", c.holds}};
}

// ---------------------------------------------------------------------------
// Li-Yorke extremes and pair verdicts
// ---------------------------------------------------------------------------

struct LiYorkeReport {
    BigInt horizon;  // times [0, horizon)
    Rational min_distance, max_distance;
    BigInt min_time, max_time;
};

template <OrbitPoint P>
LiYorkeReport li_yorke_check(const Schedule& s, const P& u, const P& v, const BigInt& horizon) {
    if (u == v) throw DomainError("li_yorke_check: points must differ");
    DistanceExtremes e = distance_extremes(s, u, v, BigInt(0), horizon);
    return {horizon, e.min, e.max, e.argmin_time, e.argmax_time};
}

enum class DCClass { NONE, DC3, DC2, DC1 };

inline const char* to_string(DCClass c) {
    switch (c) {
        case DCClass::NONE: return "NONE";
        case DCClass::DC3: return "DC3";
        case DCClass::DC2: return "DC2";
        case DCClass::DC1: return "DC1";
    }
    return "?";
}

struct DeltaSummary {
    Rational delta;
    std::vector<Rational> fractions;  // one per horizon, in time order
    Rational phi_low, phi_high;       // min / max over horizons
    Rational max_drop, max_rise;      // largest later-minus-earlier decrease / increase
};

struct PairVerdict {
    DCClass classification = DCClass::NONE;
    bool upper_near_one = false;   // Phi* ~ 1 at every delta of the grid
    bool lower_near_zero = false;  // Phi(delta) ~ 0 at some delta, after Phi* ~ 1 there
    bool oscillates = false;       // fractions both rise and fall by at least the slack
    Rational slack;                // 2 / (l_top + 1)
    unsigned long top_level = 0;
    ProfileMode mode = ProfileMode::BlockExact;
    std::vector<BigInt> horizons;
    std::vector<DeltaSummary> summaries;
    LiYorkeReport li_yorke;
    nlohmann::json certificates = nlohmann::json::array();
};

struct ClassifyOptions {
    std::vector<Rational> deltas = default_delta_grid();
    std::vector<BigInt> extra_horizons;
    std::optional<BigInt> max_horizon;  // cap on examined horizons (times)
};

namespace detail {

template <OrbitPoint P>
BigInt reference_index(const P& u, const P& v) {
    if (u.cyl.is_limit() && v.cyl.is_limit()) return 1;
    if (u.cyl.is_limit()) return v.cyl.index();
    if (v.cyl.is_limit()) return u.cyl.index();
    return std::min(u.cyl.index(), v.cyl.index());
}

// Last time whose state is still inside the schedule, plus one.
template <OrbitPoint P>
BigInt computable_horizon(const Schedule& s, const P& u, const P& v) {
    BigInt k = 1;
    if (!u.cyl.is_limit()) k = u.cyl.index();
    if (!v.cyl.is_limit()) k = std::max(k, BigInt(v.cyl.index()));
    return s.horizon() - k;
}

inline DeltaSummary summarize(const Rational& delta, std::vector<Rational> fr) {
    DeltaSummary d;
    d.delta = delta;
    d.fractions = std::move(fr);
    d.phi_low = *std::min_element(d.fractions.begin(), d.fractions.end());
    d.phi_high = *std::max_element(d.fractions.begin(), d.fractions.end());
    d.max_drop = 0;
    d.max_rise = 0;
    Rational run_max = d.fractions.front(), run_min = d.fractions.front();
    for (const Rational& f : d.fractions) {
        if (run_max - f > d.max_drop) d.max_drop = run_max - f;
        if (f - run_min > d.max_rise) d.max_rise = f - run_min;
        if (f > run_max) run_max = f;
        if (f < run_min) run_min = f;
    }
    return d;
}

}  // namespace detail

/// Finite-horizon verdict from window fractions at the natural horizons
/// (entry and end of every identity block, levels >= 1) plus any extra ones.
/// Capped schedules are evaluated by stepping, true ones block-exactly.
template <OrbitPoint P>
PairVerdict classify_pair_DC(const Schedule& s, const P& u, const P& v, const ClassifyOptions& opt = {}) {
    if (u == v) throw DomainError("classify_pair_DC: points must differ");
    if (opt.deltas.empty()) throw DomainError("classify_pair_DC: empty delta grid");
    PairVerdict verdict;
    verdict.mode = s.truncated() ? ProfileMode::Empirical : ProfileMode::BlockExact;

    BigInt limit = detail::computable_horizon(s, u, v);
    if (opt.max_horizon && *opt.max_horizon < limit) limit = *opt.max_horizon;
    BigInt kref = detail::reference_index(u, v);

    std::vector<BigInt> horizons;
    for (const LevelRecord& rec : s.levels()) {
        if (rec.l == 0) continue;
        for (const BigInt& m : {BigInt(rec.m2 - kref), BigInt(rec.m3 - kref)}) {
            if (m >= 2 && m <= limit) {
                horizons.push_back(m);
                if (m == rec.m3 - kref) verdict.top_level = std::max(verdict.top_level, rec.l);
            }
        }
    }
    for (const BigInt& m : opt.extra_horizons)
        if (m >= 2 && m <= limit) horizons.push_back(m);
    std::sort(horizons.begin(), horizons.end());
    horizons.erase(std::unique(horizons.begin(), horizons.end()), horizons.end());
    if (horizons.empty()) throw HorizonError("classify_pair_DC: no horizon fits inside the schedule");
    verdict.horizons = horizons;
    verdict.slack = verdict.top_level > 0 ? make_rational(2L, static_cast<long>(verdict.top_level) + 1) : Rational(1);

    std::vector<std::vector<Rational>> fr(opt.deltas.size());
    for (const BigInt& m : horizons) {
        std::vector<DistributionProfile> prof = verdict.mode == ProfileMode::Empirical
                                                    ? empirical_phi(s, u, v, m, opt.deltas)
                                                    : block_exact_phi(s, u, v, m, opt.deltas);
        for (std::size_t i = 0; i < prof.size(); ++i) fr[i].push_back(prof[i].fraction);
    }
    for (std::size_t i = 0; i < opt.deltas.size(); ++i)
        verdict.summaries.push_back(detail::summarize(opt.deltas[i], fr[i]));

    const Rational& tau = verdict.slack;
    verdict.upper_near_one = std::all_of(verdict.summaries.begin(), verdict.summaries.end(),
                                         [&](const DeltaSummary& d) { return d.phi_high >= 1 - tau; });
    verdict.oscillates = std::any_of(verdict.summaries.begin(), verdict.summaries.end(), [&](const DeltaSummary& d) {
        return d.max_drop >= tau && d.max_rise >= tau;
    });
    verdict.lower_near_zero = std::any_of(verdict.summaries.begin(), verdict.summaries.end(),
                                          [&](const DeltaSummary& d) { return d.max_drop >= 1 - 2 * tau; });
    if (verdict.upper_near_one && verdict.oscillates && verdict.lower_near_zero)
        verdict.classification = DCClass::DC1;
    else if (verdict.upper_near_one && verdict.oscillates)
        verdict.classification = DCClass::DC2;
    else if (verdict.oscillates)
        verdict.classification = DCClass::DC3;

    verdict.li_yorke = li_yorke_check(s, u, v, limit);

    if constexpr (std::is_same_v<P, CylinderPoint>) {
        CaseTag tag = extension_case_classify(u, v);
        nlohmann::json c = {{"kind", "case"}, {"tag", to_json(tag)}};
        verdict.certificates.push_back(c);
        if (tag.kind == CaseKind::A) {
            BigInt steps = std::min(BigInt(1000), limit);
            IsometryCertificate iso = isometry_certificate(s, u, v, steps);
            verdict.certificates.push_back({{"kind", "isometry"},
                                            {"distance", to_string(iso.distance)},
                                            {"steps", to_string(iso.steps)},
                                            {"holds", iso.holds}});
        } else if ((tag.kind == CaseKind::B || tag.kind == CaseKind::C) && !s.truncated()) {
            for (unsigned long l = 1; l < s.size(); ++l) {
                if (!(abs(u.z - v.z) > Rational(1, static_cast<long>(l)))) continue;
                for (const Rational& d : opt.deltas) {
                    if (d >= Rational(1, 3)) continue;
                    try {
                        ExtensionBound b = extension_phistar_bound(s, u, v, d, l);
                        nlohmann::json j = to_json(b);
                        j["kind"] = "equidistribution";
                        verdict.certificates.push_back(std::move(j));
                    } catch (const DomainError&) {
                    } catch (const HorizonError&) {
                    }
                }
            }
        } else if (tag.kind == CaseKind::D) {
            SubstitutionCertificate sc = case_d_reduction(s, u, v, opt.deltas, limit);
            nlohmann::json j = to_json(sc);
            j["kind"] = "substitution";
            verdict.certificates.push_back(std::move(j));
        }
    } else {
        if (u.cyl == Cylinder::at(1) && v.cyl == Cylinder::at(1)) {
            WitnessLevels w = find_dc1_witness_blocks(s, u.z, v.z, s.size() - 1);
            verdict.certificates.push_back({{"kind", "witness_levels"}, {"s", w.s_levels}, {"q", w.q_levels}});
        }
        bool zero_lower = std::any_of(verdict.summaries.begin(), verdict.summaries.end(), [](const DeltaSummary& d) {
            return d.phi_high == 0;
        });
        if (zero_lower) {
            nlohmann::json zero = nlohmann::json::array();
            for (const DeltaSummary& d : verdict.summaries)
                if (d.phi_high == 0) zero.push_back(to_string(d.delta));
            verdict.certificates.push_back({{"kind", "phi_zero"}, {"deltas", zero}});
        }
    }
    return verdict;
}

inline nlohmann::json to_json(const PairVerdict& v) {
    nlohmann::json horizons = nlohmann::json::array();
    for (const BigInt& h : v.horizons) horizons.push_back(to_string(h));
    nlohmann::json sums = nlohmann::json::array();
    for (const DeltaSummary& d : v.summaries) {
        nlohmann::json fr = nlohmann::json::array();
        for (const Rational& f : d.fractions) fr.push_back(to_string(f));
        sums.push_back({{"delta", to_string(d.delta)},
                        {"fractions", fr},
                        {"phi_low", to_string(d.phi_low)},
                        {"phi_high", to_string(d.phi_high)},
                        {"max_drop", to_string(d.max_drop)},
                        {"max_rise", to_string(d.max_rise)}});
    }
    return {{"classification", to_string(v.classification)},
            {"upper_near_one", v.upper_near_one},
            {"lower_near_zero", v.lower_near_zero},
            {"oscillates", v.oscillates},
            {"slack", to_string(v.slack)},
            {"top_level", v.top_level},
            {"mode", to_string(v.mode)},
            {"horizons", horizons},
            {"profiles", sums},
            {"li_yorke",
             {{"horizon", to_string(v.li_yorke.horizon)},
              {"min_distance", to_string(v.li_yorke.min_distance)},
              {"max_distance", to_string(v.li_yorke.max_distance)},
              {"min_time", to_string(v.li_yorke.min_time)},
              {"max_time", to_string(v.li_yorke.max_time)}}},
            {"certificates", v.certificates}};
}

}  // namespace chaoslab
