#pragma once

/**
 * @file schedule.hpp
 * @brief The block schedule m_1 < m_2 < ... deciding which interval map and
 *        which rotation act on each cylinder index k.
 *
 * Level l owns the cylinder indices [m1, m4) and splits them into
 *
 *     [m1, m2)  g_k = h_l        (length n_l)
 *     [m2, m3)  g_k = Id         (length gap_l)
 *     [m3, m4)  g_k = h_l^{-1}   (length n_l)
 *
 * with the next level starting at m4. The rotation angle on level l is
 * Psi(k, z) = z / l (level 0 uses z itself).
 */

#include <algorithm>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chaoslab/errors.hpp"
#include "chaoslab/interval_maps.hpp"
#include "chaoslab/rational.hpp"

namespace chaoslab {

inline constexpr const char* kScheduleSchema = "chaoslab.schedule/1";

enum class Phase { H, ID, HINV };

inline const char* to_string(Phase p) {
    switch (p) {
        case Phase::H: return "H";
        case Phase::ID: return "ID";
        case Phase::HINV: return "HINV";
    }
    return "?";
}

struct LevelRecord {
    unsigned long l = 0;
    LevelMaps maps;
    BigInt m1, m2, m3, m4;
    BigInt gap;            // m3 - m2
    bool clamped = false;  // gap was cut down by a cap
};

struct BlockDescriptor {
    unsigned long l = 0;
    Phase phase = Phase::H;
    BigInt start, end;  // half-open [start, end)

    friend bool operator==(const BlockDescriptor&, const BlockDescriptor&) = default;
};

class Schedule {
public:
    Schedule() = default;
    Schedule(std::vector<LevelRecord> levels, std::optional<BigInt> cap)
        : levels_(std::move(levels)), cap_(std::move(cap)) {
        if (levels_.empty()) throw DomainError("schedule needs at least one level");
        truncated_ = std::any_of(levels_.begin(), levels_.end(),
                                 [](const LevelRecord& r) { return r.clamped; });
    }

    const std::vector<LevelRecord>& levels() const { return levels_; }
    const LevelRecord& level(unsigned long l) const { return levels_.at(l); }
    std::size_t size() const { return levels_.size(); }
    const std::optional<BigInt>& cap() const { return cap_; }
    bool truncated() const { return truncated_; }

    /// First cylinder index past the built levels; steps need k < horizon().
    const BigInt& horizon() const { return levels_.back().m4; }

    /// Level owning cylinder index k.
    const LevelRecord& level_of(const BigInt& k) const {
        if (k < 1) throw DomainError("cylinder index must be positive");
        if (k >= horizon())
            throw HorizonError("cylinder index " + to_string(k) + " beyond schedule horizon " +
                               to_string(horizon()));
        auto it = std::upper_bound(levels_.begin(), levels_.end(), k,
                                   [](const BigInt& v, const LevelRecord& r) { return v < r.m1; });
        return *(it - 1);
    }

private:
    std::vector<LevelRecord> levels_;
    std::optional<BigInt> cap_;
    bool truncated_ = false;
};

/// i-th reduced fraction of (0,1), ordered by denominator then numerator:
/// 1/2, 1/3, 2/3, 1/4, 3/4, 1/5, ...
inline Rational rational_enumeration(unsigned long i) {
    if (i < 1) throw DomainError("rational_enumeration: index must be >= 1");
    unsigned long seen = 0;
    for (unsigned long q = 2;; ++q) {
        for (unsigned long p = 1; p < q; ++p) {
            if (std::gcd(p, q) != 1) continue;
            if (++seen == i) return make_rational(static_cast<long>(p), static_cast<long>(q));
        }
    }
}

// Index used for the 1/l thresholds; level 0 borrows level 1's.
inline unsigned long threshold_index(unsigned long l) { return l == 0 ? 1 : l; }

inline LevelMaps build_level_maps(unsigned long l, const Rational& r) {
    LevelMaps maps = make_h(l, r);
    maps.n = compute_n_l(maps, threshold_index(l));
    maps.eps = compute_eps_l(maps, threshold_index(l));
    return maps;
}

// gap_l before any cap: max(floor(2l/eps)+1, (l+1)*m2), or max(3, m2) on level 0.
inline BigInt required_gap(unsigned long l, const Rational& eps, const BigInt& m2) {
    if (l == 0) return std::max(BigInt(3), m2);
    BigInt margin = floor_of(Rational(2 * static_cast<long>(l)) / eps) + 1;
    BigInt ratio = BigInt(static_cast<long>(l) + 1) * m2;
    return std::max(margin, ratio);
}

/// Builds levels 0..L-1. A cap clamps every gap to at most `cap` (such schedules
/// are flagged truncated and only good for step-by-step smoke runs).
inline Schedule build_schedule(unsigned long L, std::optional<BigInt> cap = std::nullopt);

struct LevelCheck {
    unsigned long l = 0;
    bool lengths_ok = false;    // m2 - m1 = m4 - m3 = n_l, gap = m3 - m2 > 0
    bool inclusion_ok = false;  // escape inclusions hold at n_l
    bool minimal_ok = false;    // ... and fail at n_l - 1 (true when n_l = 1)
    bool margin_ok = false;     // gap > 2l/eps_l (l >= 1)
    bool ratio_ok = false;      // m2/m3 <= 1/(l+1)
    bool maps_ok = false;       // h, h_inv, alpha, n_l, eps_l match a fresh construction

    bool all() const {
        return lengths_ok && inclusion_ok && minimal_ok && margin_ok && ratio_ok && maps_ok;
    }
};

inline LevelCheck check_level(const LevelRecord& rec) {
    LevelCheck c;
    c.l = rec.l;
    const LevelMaps& maps = rec.maps;
    c.lengths_ok = rec.m2 - rec.m1 == maps.n && rec.m4 - rec.m3 == maps.n &&
                   rec.gap == rec.m3 - rec.m2 && rec.gap > 0 && maps.n >= 1;

    LevelMaps fresh = build_level_maps(rec.l, maps.r);
    c.maps_ok = fresh.h == maps.h && fresh.h_inv == maps.h_inv && fresh.alpha == maps.alpha &&
                fresh.n == maps.n && fresh.eps == maps.eps;

    unsigned long t = threshold_index(rec.l);
    c.inclusion_ok = escape_holds(maps, t, maps.n);
    c.minimal_ok = maps.n == 1 || !escape_holds(maps, t, maps.n - 1);
    c.margin_ok = rec.l == 0 || Rational(rec.gap) > Rational(2 * static_cast<long>(rec.l)) / maps.eps;
    c.ratio_ok = make_rational(rec.m2, rec.m3) <= Rational(1, static_cast<long>(rec.l) + 1);
    return c;
}

/// Throws ConstraintError unless the schedule tiles [1, horizon) and every
/// unclamped level meets all constraints (clamped levels may miss the margin
/// and ratio constraints only).
inline void verify_schedule(const Schedule& s) {
    BigInt expected_start = 1;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const LevelRecord& rec = s.levels()[i];
        if (rec.l != i) throw ConstraintError("levels must be numbered 0, 1, 2, ...");
        if (rec.m1 != expected_start)
            throw ConstraintError("level " + std::to_string(rec.l) + " does not start where the previous ended");
        LevelCheck c = check_level(rec);
        bool ok = c.lengths_ok && c.inclusion_ok && c.minimal_ok && c.maps_ok &&
                  (rec.clamped || (c.margin_ok && c.ratio_ok));
        if (!ok) throw ConstraintError("level " + std::to_string(rec.l) + " violates schedule constraints");
        if (!rec.clamped && s.cap() && rec.gap > *s.cap())
            throw ConstraintError("level " + std::to_string(rec.l) + " exceeds the cap without being marked");
        expected_start = rec.m4;
    }
}

inline Schedule build_schedule(unsigned long L, std::optional<BigInt> cap) {
    if (L < 1) throw DomainError("build_schedule: need at least one level");
    if (cap && *cap < 1) throw DomainError("build_schedule: cap must be positive");
    std::vector<LevelRecord> levels;
    levels.reserve(L);
    BigInt m1 = 1;
    for (unsigned long l = 0; l < L; ++l) {
        LevelRecord rec;
        rec.l = l;
        rec.maps = build_level_maps(l, rational_enumeration(l + 1));
        rec.m1 = m1;
        rec.m2 = m1 + rec.maps.n;
        rec.gap = required_gap(l, rec.maps.eps, rec.m2);
        if (cap && rec.gap > *cap) {
            rec.gap = *cap;
            rec.clamped = true;
        }
        rec.m3 = rec.m2 + rec.gap;
        rec.m4 = rec.m3 + rec.maps.n;
        m1 = rec.m4;
        levels.push_back(std::move(rec));
    }
    Schedule s(std::move(levels), std::move(cap));
    try {
        verify_schedule(s);
    } catch (const ConstraintError& e) {
        throw ConstraintError(std::string("internal error: constructed schedule invalid: ") + e.what());
    }
    return s;
}

inline const PLMap& identity_map() {
    static const PLMap id = PLMap::identity();
    return id;
}

struct GStep {
    BlockDescriptor block;
    const PLMap* map;  // h_l, identity, or h_l^{-1}; owned by the schedule
};

inline GStep resolve_g(const Schedule& s, const BigInt& k) {
    const LevelRecord& rec = s.level_of(k);
    if (k < rec.m2) return {{rec.l, Phase::H, rec.m1, rec.m2}, &rec.maps.h};
    if (k < rec.m3) return {{rec.l, Phase::ID, rec.m2, rec.m3}, &identity_map()};
    return {{rec.l, Phase::HINV, rec.m3, rec.m4}, &rec.maps.h_inv};
}

/// Rotation angle Psi(k, z): z on level 0, z/l on level l >= 1.
inline Rational level_psi(unsigned long l, const Rational& z) {
    if (l == 0) return z;
    return z / Rational(static_cast<long>(l));
}

inline Rational resolve_psi(const Schedule& s, const BigInt& k, const Rational& z) {
    if (z < 0 || z > 1) throw DomainError("resolve_psi: height outside [0,1]");
    return level_psi(s.level_of(k).l, z);
}

inline nlohmann::json to_json(const Schedule& s) {
    nlohmann::json levels = nlohmann::json::array();
    for (const LevelRecord& rec : s.levels()) {
        nlohmann::json j = to_json(rec.maps);
        j["m"] = {to_string(rec.m1), to_string(rec.m2), to_string(rec.m3), to_string(rec.m4)};
        j["clamped"] = rec.clamped;
        levels.push_back(std::move(j));
    }
    nlohmann::json out;
    out["schema"] = kScheduleSchema;
    out["cap"] = s.cap() ? nlohmann::json(to_string(*s.cap())) : nlohmann::json(nullptr);
    out["truncated"] = s.truncated();
    out["levels"] = std::move(levels);
    return out;
}

/// Parses and re-verifies a schedule file; anything that does not rebuild to
/// the same maps and satisfy the constraints is rejected with ConstraintError.
inline Schedule schedule_from_json(const nlohmann::json& j) {
    try {
        if (j.at("schema").get<std::string>() != kScheduleSchema)
            throw ConstraintError("unsupported schedule schema");
        std::optional<BigInt> cap;
        if (!j.at("cap").is_null()) cap = parse_bigint(j.at("cap").get<std::string>());
        std::vector<LevelRecord> levels;
        for (const auto& lj : j.at("levels")) {
            LevelRecord rec;
            rec.l = lj.at("l").get<unsigned long>();
            rec.maps = build_level_maps(rec.l, parse_rational(lj.at("r").get<std::string>()));
            if (to_string(rec.maps.alpha) != lj.at("alpha").get<std::string>() ||
                to_string(rec.maps.n) != lj.at("n").get<std::string>() ||
                to_string(rec.maps.eps) != lj.at("eps").get<std::string>())
                throw ConstraintError("level " + std::to_string(rec.l) + ": alpha/n/eps do not match r");
            if (lj.contains("h") && lj.at("h") != breakpoints_to_json(rec.maps.h))
                throw ConstraintError("level " + std::to_string(rec.l) + ": breakpoints do not match r");
            const auto& m = lj.at("m");
            if (m.size() != 4) throw ConstraintError("each level needs four m values");
            rec.m1 = parse_bigint(m[0].get<std::string>());
            rec.m2 = parse_bigint(m[1].get<std::string>());
            rec.m3 = parse_bigint(m[2].get<std::string>());
            rec.m4 = parse_bigint(m[3].get<std::string>());
            rec.gap = rec.m3 - rec.m2;
            rec.clamped = lj.value("clamped", false);
            if (rec.clamped && !cap) throw ConstraintError("clamped level in an uncapped schedule");
            if (rec.clamped && rec.gap != *cap) throw ConstraintError("clamped gap differs from cap");
            levels.push_back(std::move(rec));
        }
        if (levels.empty()) throw ConstraintError("schedule has no levels");
        Schedule s(std::move(levels), std::move(cap));
        if (j.at("truncated").get<bool>() != s.truncated())
            throw ConstraintError("truncated flag inconsistent with levels");
        verify_schedule(s);
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ConstraintError(std::string("malformed schedule file: ") + e.what());
    } catch (const DomainError& e) {
        throw ConstraintError(std::string("malformed schedule file: ") + e.what());
    }
}

}  // namespace chaoslab
