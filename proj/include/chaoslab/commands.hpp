#pragma once

/**
 * @file commands.hpp
 * @brief The command layer behind the chaoslab executable.
 *
 * Each command takes a RunConfig, writes one report (JSON or CSV) and returns
 * an exit code. Reports embed a schema tag, the config and a SHA-256
 * fingerprint of the canonical schedule JSON. Sampling is drawn sequentially
 * from the seed before any parallel work, and results are merged by index, so
 * output bytes do not depend on CHAOS_LAB_THREADS.
 */

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "chaoslab/analytics.hpp"
#include "chaoslab/dynamics.hpp"
#include "chaoslab/errors.hpp"
#include "chaoslab/exact_arith.hpp"
#include "chaoslab/rational.hpp"
#include "chaoslab/rng.hpp"
#include "chaoslab/schedule.hpp"

namespace chaoslab::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kConstraint = 3, kHorizon = 4 };

struct RunConfig {
    std::string command;
    std::optional<unsigned long> levels;
    std::optional<BigInt> cap;  // nullopt: true schedule
    std::optional<BigInt> steps;
    std::uint64_t seed = 42;
    std::optional<unsigned long> samples;
    std::vector<Rational> deltas;
    std::optional<std::string> schedule_path;
    std::optional<std::string> out;
    std::string format = "json";
    std::optional<std::string> u, v;  // point literals
    BigInt stride = 1;
    std::optional<BigInt> horizon;
    std::optional<std::string> mode;
};

inline nlohmann::json config_to_json(const RunConfig& c) {
    auto opt_big = [](const std::optional<BigInt>& x) {
        return x ? nlohmann::json(to_string(*x)) : nlohmann::json(nullptr);
    };
    auto opt_str = [](const std::optional<std::string>& x) {
        return x ? nlohmann::json(*x) : nlohmann::json(nullptr);
    };
    nlohmann::json deltas = nlohmann::json::array();
    for (const Rational& d : c.deltas) deltas.push_back(to_string(d));
    return {{"command", c.command},
            {"levels", c.levels ? nlohmann::json(*c.levels) : nlohmann::json(nullptr)},
            {"cap", opt_big(c.cap)},
            {"steps", opt_big(c.steps)},
            {"seed", c.seed},
            {"samples", c.samples ? nlohmann::json(*c.samples) : nlohmann::json(nullptr)},
            {"deltas", deltas},
            {"schedule", opt_str(c.schedule_path)},
            {"format", c.format},
            {"u", opt_str(c.u)},
            {"v", opt_str(c.v)},
            {"stride", to_string(c.stride)},
            {"horizon", opt_big(c.horizon)},
            {"mode", opt_str(c.mode)}};
}

// ---------------------------------------------------------------------------
// Plumbing
// ---------------------------------------------------------------------------

inline std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 failed");
    std::ostringstream os;
    os << std::hex << std::setfill('0');
    for (unsigned int i = 0; i < len; ++i) os << std::setw(2) << static_cast<int>(digest[i]);
    return os.str();
}

inline std::string schedule_fingerprint(const Schedule& s) { return "sha256:" + sha256_hex(to_json(s).dump()); }

inline unsigned worker_count() {
    const char* env = std::getenv("CHAOS_LAB_THREADS");
    if (!env || !*env) return 1;
    char* end = nullptr;
    unsigned long n = std::strtoul(env, &end, 10);
    if (*end != '\0' || n == 0) return 1;
    return static_cast<unsigned>(std::min<unsigned long>(n, 256));
}

/// results[i] = f(i) for i in [0, n), computed by up to worker_count() threads.
template <class R, class F>
std::vector<R> parallel_map(std::size_t n, F&& f) {
    std::vector<std::optional<R>> slots(n);
    std::vector<std::exception_ptr> errors(n);
    unsigned workers = std::max(1u, std::min<unsigned>(worker_count(), static_cast<unsigned>(n)));
    auto work = [&](unsigned w) {
        for (std::size_t i = w; i < n; i += workers) {
            try {
                slots[i].emplace(f(i));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }
    std::vector<R> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (errors[i]) std::rethrow_exception(errors[i]);
        out.push_back(std::move(*slots[i]));
    }
    return out;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void emit(const RunConfig& c, const std::string& text) {
    if (!c.out) {
        std::cout << text;
        return;
    }
    std::ofstream f(*c.out, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + *c.out);
    f << text;
    if (!f) throw std::runtime_error("write failed: " + *c.out);
}

inline Schedule load_schedule(const RunConfig& c) {
    if (c.schedule_path) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_file(*c.schedule_path));
        } catch (const nlohmann::json::parse_error& e) {
            throw ConstraintError(std::string("schedule file is not JSON: ") + e.what());
        }
        return schedule_from_json(j);
    }
    unsigned long L = c.levels.value_or(6);
    if (L < 1) throw DomainError("--levels must be at least 1");
    return build_schedule(L, c.cap);
}

inline nlohmann::json envelope(const std::string& name, const RunConfig& c, const Schedule* s,
                               nlohmann::json result) {
    nlohmann::json j;
    j["schema"] = "chaoslab." + name + "/1";
    j["config"] = config_to_json(c);
    j["schedule_fingerprint"] = s ? nlohmann::json(schedule_fingerprint(*s)) : nlohmann::json(nullptr);
    j["result"] = std::move(result);
    return j;
}

inline std::string csv_header(const std::string& name, const RunConfig& c, const Schedule* s) {
    std::ostringstream os;
    os << "# schema: chaoslab." << name << "/1\n";
    os << "# config: " << config_to_json(c).dump() << "\n";
    os << "# schedule_fingerprint: " << (s ? schedule_fingerprint(*s) : std::string("none")) << "\n";
    os << "# approximate: decimal columns are rounded to 12 places; use --format json for exact values\n";
    return os.str();
}

inline void require_format(const RunConfig& c) {
    if (c.format != "json" && c.format != "csv") throw DomainError("--format must be json or csv");
}

inline nlohmann::json parse_point_literal(const std::string& text) {
    try {
        nlohmann::json j = nlohmann::json::parse(text);
        if (!j.is_object()) throw DomainError("point literal must be a JSON object");
        return j;
    } catch (const nlohmann::json::exception& e) {
        throw DomainError(std::string("bad point literal: ") + e.what());
    }
}

inline bool is_cylinder_literal(const nlohmann::json& j) { return j.contains("phi"); }

inline CylinderPoint to_cylinder_point(const nlohmann::json& j) {
    try {
        return cylinder_point_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw DomainError(std::string("bad point literal: ") + e.what());
    }
}

inline FiberPoint to_fiber_point(const nlohmann::json& j) {
    try {
        return fiber_point_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw DomainError(std::string("bad point literal: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// schedule-build
// ---------------------------------------------------------------------------

inline int cmd_schedule_build(const RunConfig& c, std::ostream& log = std::cerr) {
    require_format(c);
    if (!c.levels || *c.levels < 1) throw DomainError("schedule-build needs --levels >= 1");
    Schedule s = build_schedule(*c.levels, c.cap);
    nlohmann::json j = to_json(s);
    j["fingerprint"] = schedule_fingerprint(s);
    j["config"] = config_to_json(c);
    if (c.format == "csv") {
        std::ostringstream os;
        os << csv_header("schedule", c, &s);
        os << "l,r,n,eps,eps_decimal,m1,m2,m3,m4,gap,clamped\n";
        for (const LevelRecord& rec : s.levels())
            os << rec.l << ',' << to_string(rec.maps.r) << ',' << to_string(rec.maps.n) << ','
               << to_string(rec.maps.eps) << ',' << to_decimal(rec.maps.eps) << ',' << to_string(rec.m1) << ','
               << to_string(rec.m2) << ',' << to_string(rec.m3) << ',' << to_string(rec.m4) << ','
               << to_string(rec.gap) << ',' << (rec.clamped ? "true" : "false") << '\n';
        emit(c, os.str());
    } else {
        emit(c, j.dump(2) + "\n");
    }
    log << "schedule: " << s.size() << " levels, horizon " << to_string(s.horizon())
        << (s.truncated() ? " (capped)" : "") << "\n";
    for (const LevelRecord& rec : s.levels())
        log << "  l=" << rec.l << " r=" << to_string(rec.maps.r) << " n=" << to_string(rec.maps.n)
            << " eps~" << to_decimal(rec.maps.eps, 6) << " m digits=" << rec.m1.get_str().size() << '/'
            << rec.m2.get_str().size() << '/' << rec.m3.get_str().size() << '/' << rec.m4.get_str().size()
            << (rec.clamped ? " clamped" : "") << "\n";
    return kOk;
}

// ---------------------------------------------------------------------------
// lemma1
// ---------------------------------------------------------------------------

struct Lemma1Sample {
    Angle theta_u, theta_v;
    Rational r_u, r_v, delta;
    BigInt p;
};

inline constexpr std::uint64_t kLemma1MaxDen = 1000000;

/// Draws a parameter set meeting the hypotheses: distinct rotations, delta in
/// (0, 1/2], p = floor(2/dr) + 1 + uniform[0, 10^e) with e cycling 0..12.
inline Lemma1Sample draw_lemma1_sample(Rng& rng, std::size_t index) {
    Lemma1Sample x;
    x.theta_u = Angle(rng.unit_rational(kLemma1MaxDen));
    x.theta_v = Angle(rng.unit_rational(kLemma1MaxDen));
    x.r_u = rng.unit_rational(kLemma1MaxDen);
    do {
        x.r_v = rng.unit_rational(kLemma1MaxDen);
    } while (x.r_v == x.r_u);
    x.delta = rng.positive_unit_rational(kLemma1MaxDen) / 2;
    Rational dr = abs(x.r_u - x.r_v);
    BigInt p_min = floor_of(2 / dr) + 1;
    BigInt span = 1;
    for (std::size_t e = 0; e < index % 13; ++e) span *= 10;
    x.p = p_min + rng.below(span);
    return x;
}

inline nlohmann::json to_json(const Lemma1Sample& x, const Lemma1Report& r) {
    return {{"theta_u", to_string(x.theta_u.value())},
            {"theta_v", to_string(x.theta_v.value())},
            {"r_u", to_string(x.r_u)},
            {"r_v", to_string(x.r_v)},
            {"delta", to_string(x.delta)},
            {"p", to_string(r.p)},
            {"count", to_string(r.count)},
            {"fraction", to_string(r.fraction)},
            {"bound", to_string(r.bound)},
            {"holds", r.holds},
            {"turn_count_bound", to_string(r.turn_count_bound)},
            {"within_turn_bound", r.within_turn_bound}};
}

struct Lemma1Summary {
    std::size_t samples = 0, violations = 0, turn_violations = 0;
    Rational worst_ratio;  // max fraction / (3 delta)
    std::size_t worst_index = 0;
    BigInt max_p;
    std::vector<Lemma1Sample> drawn;
    std::vector<Lemma1Report> reports;
};

inline Lemma1Summary run_lemma1(std::size_t samples, std::uint64_t seed) {
    Lemma1Summary sum;
    Rng rng(seed);
    for (std::size_t i = 0; i < samples; ++i) sum.drawn.push_back(draw_lemma1_sample(rng, i));
    sum.reports = parallel_map<Lemma1Report>(samples, [&](std::size_t i) {
        const Lemma1Sample& x = sum.drawn[i];
        return lemma1_bound_check(x.theta_u, x.theta_v, x.r_u, x.r_v, x.delta, x.p);
    });
    sum.samples = samples;
    sum.worst_ratio = -1;
    sum.max_p = 0;
    for (std::size_t i = 0; i < samples; ++i) {
        const Lemma1Report& r = sum.reports[i];
        if (!r.holds) ++sum.violations;
        if (!r.within_turn_bound) ++sum.turn_violations;
        Rational ratio = r.fraction / r.bound;
        if (ratio > sum.worst_ratio) {
            sum.worst_ratio = ratio;
            sum.worst_index = i;
        }
        if (r.p > sum.max_p) sum.max_p = r.p;
    }
    return sum;
}

inline int cmd_lemma1(const RunConfig& c, std::ostream& log = std::cerr) {
    require_format(c);
    std::size_t n = c.samples.value_or(1000);
    if (n < 1) throw DomainError("--samples must be at least 1");
    Lemma1Summary sum = run_lemma1(n, c.seed);
    if (c.format == "csv") {
        std::ostringstream os;
        os << csv_header("lemma1", c, nullptr);
        os << "index,p,delta,count,fraction,fraction_decimal,bound,holds,turn_count_bound,within_turn_bound\n";
        for (std::size_t i = 0; i < n; ++i) {
            const Lemma1Report& r = sum.reports[i];
            os << i << ',' << to_string(r.p) << ',' << to_string(sum.drawn[i].delta) << ',' << to_string(r.count)
               << ',' << to_string(r.fraction) << ',' << to_decimal(r.fraction) << ',' << to_string(r.bound) << ','
               << (r.holds ? "true" : "false") << ',' << to_string(r.turn_count_bound) << ','
               << (r.within_turn_bound ? "true" : "false") << '\n';
        }
        emit(c, os.str());
    } else {
        nlohmann::json violations = nlohmann::json::array();
        nlohmann::json turn_violations = nlohmann::json::array();
        for (std::size_t i = 0; i < n; ++i) {
            nlohmann::json row = to_json(sum.drawn[i], sum.reports[i]);
            row["index"] = i;
            if (!sum.reports[i].holds) violations.push_back(row);
            if (!sum.reports[i].within_turn_bound) turn_violations.push_back(std::move(row));
        }
        nlohmann::json worst = to_json(sum.drawn[sum.worst_index], sum.reports[sum.worst_index]);
        worst["index"] = sum.worst_index;
        nlohmann::json result = {{"samples", n},
                                 {"violations", sum.violations},
                                 {"turn_count_violations", sum.turn_violations},
                                 {"worst_ratio", to_string(sum.worst_ratio)},
                                 {"worst_ratio_decimal", to_decimal(sum.worst_ratio)},
                                 {"worst_sample", worst},
                                 {"max_p", to_string(sum.max_p)},
                                 {"violating_samples", violations},
                                 {"turn_count_violating_samples", turn_violations}};
        emit(c, envelope("lemma1", c, nullptr, std::move(result)).dump(2) + "\n");
    }
    log << "lemma1: " << n << " samples, " << sum.violations << " with fraction >= 3*delta, "
        << sum.turn_violations << " above the turn-count bound, worst fraction/(3 delta) ~ "
        << to_decimal(sum.worst_ratio, 6) << "\n";
    return sum.violations == 0 && sum.turn_violations == 0 ? kOk : kConstraint;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

namespace detail {

template <OrbitPoint P>
void trace_columns(std::ostream& os, const P& p) {
    os << ',' << cylinder_to_string(p.cyl);
    if constexpr (std::is_same_v<P, CylinderPoint>) os << ',' << to_decimal(p.phi.value());
    os << ',' << to_decimal(p.z);
}

template <OrbitPoint P>
nlohmann::json trace_row(const BigInt& i, const P& u, const std::optional<P>& v) {
    nlohmann::json row = {{"i", to_string(i)}, {"u", to_json(u)}};
    if (v) {
        row["v"] = to_json(*v);
        row["distance"] = to_string(dist(u, *v));
    }
    return row;
}

template <OrbitPoint P>
std::string simulate_points(const RunConfig& c, const Schedule& s, P u, std::optional<P> v) {
    BigInt steps = c.steps.value_or(BigInt(100));
    if (steps < 0) throw DomainError("--steps must be nonnegative");
    if (c.stride < 1) throw DomainError("--stride must be positive");
    // Fail before emitting anything if the orbit would leave the schedule.
    for (const P* p : {&u, v ? &*v : nullptr})
        if (p && !p->cyl.is_limit() && p->cyl.index() + steps > s.horizon())
            throw HorizonError("simulate: " + to_string(steps) + " steps from cylinder " +
                               to_string(p->cyl.index()) + " leave the schedule (horizon " +
                               to_string(s.horizon()) + ")");
    constexpr bool angled = std::is_same_v<P, CylinderPoint>;
    std::ostringstream os;
    nlohmann::json rows = nlohmann::json::array();
    bool csv = c.format == "csv";
    if (csv) {
        os << csv_header("simulate", c, &s);
        os << "i,k" << (angled ? ",phi" : "") << ",z";
        if (v) os << ",k_v" << (angled ? ",phi_v" : "") << ",z_v,distance";
        os << '\n';
    }
    auto record = [&](const BigInt& i, const P& a, const std::optional<P>& b) {
        if (csv) {
            os << to_string(i);
            trace_columns(os, a);
            if (b) {
                trace_columns(os, *b);
                os << ',' << to_decimal(dist(a, *b));
            }
            os << '\n';
        } else {
            rows.push_back(trace_row(i, a, b));
        }
    };
    // Row i is the state after i steps, i = 1..steps.
    for (BigInt i = 1; i <= steps; ++i) {
        u = step(s, u);
        if (v) v = step(s, *v);
        if (i % c.stride == 0 || i == steps) record(i, u, v);
    }
    if (csv) return os.str();
    return envelope("simulate", c, &s, {{"rows", rows}}).dump(2) + "\n";
}

}  // namespace detail

inline int cmd_simulate(const RunConfig& c, std::ostream& = std::cerr) {
    require_format(c);
    if (!c.u) throw DomainError("simulate needs --u");
    Schedule s = load_schedule(c);
    nlohmann::json uj = parse_point_literal(*c.u);
    std::optional<nlohmann::json> vj;
    if (c.v) vj = parse_point_literal(*c.v);
    if (vj && is_cylinder_literal(uj) != is_cylinder_literal(*vj))
        throw DomainError("--u and --v must both have an angle or both omit it");
    std::string text;
    if (is_cylinder_literal(uj)) {
        std::optional<CylinderPoint> v;
        if (vj) v = to_cylinder_point(*vj);
        text = detail::simulate_points(c, s, to_cylinder_point(uj), v);
    } else {
        std::optional<FiberPoint> v;
        if (vj) v = to_fiber_point(*vj);
        text = detail::simulate_points(c, s, to_fiber_point(uj), v);
    }
    emit(c, text);
    return kOk;
}

// ---------------------------------------------------------------------------
// classify
// ---------------------------------------------------------------------------

inline std::vector<Rational> deltas_or_default(const RunConfig& c) {
    std::vector<Rational> d = c.deltas.empty() ? default_delta_grid() : c.deltas;
    for (const Rational& x : d)
        if (x <= 0) throw DomainError("--delta values must be positive");
    return d;
}

inline int cmd_classify(const RunConfig& c, std::ostream& log = std::cerr) {
    require_format(c);
    if (!c.u || !c.v) throw DomainError("classify needs --u and --v");
    Schedule s = load_schedule(c);
    nlohmann::json uj = parse_point_literal(*c.u), vj = parse_point_literal(*c.v);
    if (is_cylinder_literal(uj) != is_cylinder_literal(vj))
        throw DomainError("--u and --v must both have an angle or both omit it");
    ClassifyOptions opt;
    opt.deltas = deltas_or_default(c);
    opt.max_horizon = c.horizon;
    PairVerdict verdict = is_cylinder_literal(uj)
                              ? classify_pair_DC(s, to_cylinder_point(uj), to_cylinder_point(vj), opt)
                              : classify_pair_DC(s, to_fiber_point(uj), to_fiber_point(vj), opt);
    if (c.format == "csv") {
        std::ostringstream os;
        os << csv_header("classify", c, &s);
        os << "# classification: " << to_string(verdict.classification) << "\n";
        os << "delta,horizon,fraction,fraction_decimal\n";
        for (const DeltaSummary& d : verdict.summaries)
            for (std::size_t i = 0; i < verdict.horizons.size(); ++i)
                os << to_string(d.delta) << ',' << to_string(verdict.horizons[i]) << ',' << to_string(d.fractions[i])
                   << ',' << to_decimal(d.fractions[i]) << '\n';
        emit(c, os.str());
    } else {
        emit(c, envelope("classify", c, &s, to_json(verdict)).dump(2) + "\n");
    }
    log << "classify: " << to_string(verdict.classification) << " (" << to_string(verdict.mode) << ", "
        << verdict.horizons.size() << " horizons)\n";
    return kOk;
}

// ---------------------------------------------------------------------------
// certify
// ---------------------------------------------------------------------------

struct FactorCertificate {
    Rational z_u, z_v;
    WitnessLevels witnesses;
    std::vector<FactorLevelReport> levels;
    std::vector<SWitnessShare> s_shares;
    std::vector<Rational> phi_zero_deltas;  // deltas whose count is 0 at every level window
    bool holds = true;                      // every s-share check holds
};

inline FactorCertificate certify_factor_pair(const Schedule& s, const Rational& z_u, const Rational& z_v,
                                             const std::vector<Rational>& deltas) {
    FactorCertificate fc;
    fc.z_u = z_u;
    fc.z_v = z_v;
    unsigned long top = s.size() - 1;
    fc.witnesses = find_dc1_witness_blocks(s, z_u, z_v, top);
    if (top >= 1) fc.levels = factor_block_profile(s, z_u, z_v, 1, top, deltas);
    for (unsigned long l : fc.witnesses.s_levels) {
        fc.s_shares.push_back(s_witness_share(s, z_u, z_v, l));
        fc.holds = fc.holds && fc.s_shares.back().holds;
    }
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        bool zero = !fc.levels.empty() && std::all_of(fc.levels.begin(), fc.levels.end(), [&](const auto& r) {
            return r.bounds[i].count == 0;
        });
        if (zero) fc.phi_zero_deltas.push_back(deltas[i]);
    }
    return fc;
}

inline nlohmann::json to_json(const FactorCertificate& fc) {
    auto informative = [](const std::vector<unsigned long>& ls, unsigned long from) {
        return std::count_if(ls.begin(), ls.end(), [&](unsigned long l) { return l >= from; });
    };
    nlohmann::json levels = nlohmann::json::array();
    for (const auto& r : fc.levels) levels.push_back(to_json(r));
    nlohmann::json shares = nlohmann::json::array();
    for (const auto& w : fc.s_shares) shares.push_back(to_json(w));
    nlohmann::json zero = nlohmann::json::array();
    for (const Rational& d : fc.phi_zero_deltas) zero.push_back(to_string(d));
    return {{"z_u", to_string(fc.z_u)},
            {"z_v", to_string(fc.z_v)},
            {"s_levels", fc.witnesses.s_levels},
            {"q_levels", fc.witnesses.q_levels},
            // level 1 q-type and s-type at l = 1 hold for every pair; these counts skip them
            {"informative_s_levels", informative(fc.witnesses.s_levels, 2)},
            {"informative_q_levels", informative(fc.witnesses.q_levels, 3)},
            {"levels", levels},
            {"s_witness_shares", shares},
            {"phi_zero_deltas", zero},
            {"holds", fc.holds}};
}

struct ExtensionCertificate {
    CylinderPoint u, v;
    CaseTag tag;
    nlohmann::json detail;
    bool holds = true;
};

inline ExtensionCertificate certify_extension_pair(const Schedule& s, const CylinderPoint& u, const CylinderPoint& v,
                                                   const std::vector<Rational>& deltas) {
    ExtensionCertificate ec{u, v, extension_case_classify(u, v), nlohmann::json::object(), true};
    switch (ec.tag.kind) {
        case CaseKind::A: {
            BigInt steps = 1000;
            if (u.cyl.index() + steps >= s.horizon()) steps = s.horizon() - u.cyl.index() - 1;
            IsometryCertificate iso = isometry_certificate(s, u, v, steps);
            ec.holds = iso.holds;
            ec.detail = {{"kind", "isometry"},
                         {"distance", to_string(iso.distance)},
                         {"steps", to_string(iso.steps)},
                         {"holds", iso.holds}};
            break;
        }
        case CaseKind::B:
        case CaseKind::C: {
            nlohmann::json bounds = nlohmann::json::array();
            const BigInt k0 = std::min(u.cyl.index(), v.cyl.index());
            for (unsigned long l = 1; l < s.size(); ++l) {
                if (!(abs(u.z - v.z) > make_rational(1L, static_cast<long>(l)))) continue;
                if (k0 > s.level(l).m2) continue;
                for (const Rational& d : deltas) {
                    ExtensionBound b = extension_phistar_bound(s, u, v, d, l);
                    if (!b.delta_too_large) ec.holds = ec.holds && b.holds && b.phistar_upper < 1;
                    bounds.push_back(to_json(b));
                }
            }
            ec.detail = {{"kind", "equidistribution"}, {"bounds", bounds}};
            break;
        }
        case CaseKind::D: {
            SubstitutionCertificate sc = case_d_reduction(s, u, v, deltas);
            ec.holds = sc.holds;
            ec.detail = to_json(sc);
            ec.detail["kind"] = "substitution";
            break;
        }
        case CaseKind::NonscrambledByRadius: {
            Rational gap = u.cyl.is_limit() ? Rational(0)
                                            : abs(make_rational(BigInt(1), u.cyl.index()) -
                                                  make_rational(BigInt(1), v.cyl.index()));
            ec.detail = {{"kind", "radius"}, {"initial_radius_gap", to_string(gap)}};
            break;
        }
    }
    return ec;
}

inline nlohmann::json to_json(const ExtensionCertificate& ec) {
    return {{"u", to_json(ec.u)},
            {"v", to_json(ec.v)},
            {"case", to_json(ec.tag)},
            {"certificate", ec.detail},
            {"holds", ec.holds}};
}

namespace detail {

inline Rational random_height(Rng& rng) { return rng.unit_rational(1000); }

// Heights 1000 apart in denominator at most, with |z_u - z_v| > 1/l.
inline std::pair<Rational, Rational> heights_apart(Rng& rng, unsigned long l) {
    Rational t = make_rational(1L, static_cast<long>(l));
    while (true) {
        Rational a = random_height(rng), b = random_height(rng);
        if (abs(a - b) > t) return {a, b};
    }
}

inline BigInt random_index(Rng& rng, const BigInt& hi) {
    return BigInt(1) + rng.below(hi < 1 ? BigInt(1) : hi);
}

/// Sampled extension pairs cycling A, B (levels 2..top), C, D.
inline std::vector<std::pair<CylinderPoint, CylinderPoint>> sample_extension_pairs(const Schedule& s, Rng& rng,
                                                                                   std::size_t n) {
    std::vector<std::pair<CylinderPoint, CylinderPoint>> out;
    unsigned long top = static_cast<unsigned long>(s.size()) - 1;
    unsigned long b_level = 2;
    for (std::size_t i = 0; out.size() < n; ++i) {
        switch (i % 4) {
            case 0: {
                Cylinder k = Cylinder::at(random_index(rng, BigInt(50)));
                Rational z = random_height(rng);
                Angle a(rng.unit_rational(1000)), b(rng.unit_rational(1000));
                if (a == b) continue;
                out.emplace_back(CylinderPoint(k, a, z), CylinderPoint(k, b, z));
                break;
            }
            case 1: {
                if (top < 2) continue;
                unsigned long l = b_level;
                b_level = b_level >= std::min<unsigned long>(top, 5) ? 2 : b_level + 1;
                auto [za, zb] = heights_apart(rng, l);
                Cylinder k = Cylinder::at(random_index(rng, s.level(l).m1));
                out.emplace_back(CylinderPoint(k, Angle(rng.unit_rational(1000)), za),
                                 CylinderPoint(k, Angle(rng.unit_rational(1000)), zb));
                break;
            }
            case 2: {
                if (top < 2) continue;
                auto [za, zb] = heights_apart(rng, 2);
                BigInt k = random_index(rng, BigInt(20));
                BigInt off = random_index(rng, BigInt(5));
                out.emplace_back(CylinderPoint(Cylinder::at(k), Angle(rng.unit_rational(1000)), za),
                                 CylinderPoint(Cylinder::at(k + off), Angle(rng.unit_rational(1000)), zb));
                break;
            }
            default: {
                Cylinder k = Cylinder::at(random_index(rng, BigInt(50)));
                out.emplace_back(CylinderPoint(k, Angle(rng.unit_rational(1000)), random_height(rng)),
                                 CylinderPoint(Cylinder::limit(), Angle(rng.unit_rational(1000)), random_height(rng)));
                break;
            }
        }
    }
    return out;
}

}  // namespace detail

inline int cmd_certify(const RunConfig& c, std::ostream& log = std::cerr) {
    require_format(c);
    if (!c.mode) throw DomainError("certify needs --mode factor-dc1|extension-nodc");
    if (*c.mode != "factor-dc1" && *c.mode != "extension-nodc")
        throw DomainError("--mode must be factor-dc1 or extension-nodc");
    if (c.format != "json") throw DomainError("certify writes JSON only");
    Schedule s = load_schedule(c);
    if (s.truncated()) throw ConstraintError("certificates require true schedule (this one is capped)");
    std::vector<Rational> deltas = deltas_or_default(c);
    Rng rng(c.seed);
    std::optional<nlohmann::json> uj, vj;
    if (c.u || c.v) {
        if (!c.u || !c.v) throw DomainError("certify needs both --u and --v, or neither");
        uj = parse_point_literal(*c.u);
        vj = parse_point_literal(*c.v);
    }
    nlohmann::json items = nlohmann::json::array();
    std::size_t failed = 0;

    if (*c.mode == "factor-dc1") {
        std::vector<std::pair<Rational, Rational>> pairs;
        if (uj) {
            FiberPoint a = to_fiber_point(*uj), b = to_fiber_point(*vj);
            if (a.cyl != Cylinder::at(1) || b.cyl != Cylinder::at(1))
                throw DomainError("factor certificates are for fiber-1 points");
            pairs.emplace_back(a.z, b.z);
        } else {
            std::size_t n = c.samples.value_or(50);
            pairs.emplace_back(Rational(1), Rational(0));
            while (pairs.size() < n + 1) {
                Rational a = detail::random_height(rng), b = detail::random_height(rng);
                if (a != b) pairs.emplace_back(a, b);
            }
        }
        auto certs = parallel_map<FactorCertificate>(
            pairs.size(), [&](std::size_t i) { return certify_factor_pair(s, pairs[i].first, pairs[i].second, deltas); });
        for (const auto& fc : certs) {
            if (!fc.holds) ++failed;
            items.push_back(to_json(fc));
        }
    } else {
        std::vector<std::pair<CylinderPoint, CylinderPoint>> pairs;
        if (uj) {
            pairs.emplace_back(to_cylinder_point(*uj), to_cylinder_point(*vj));
        } else {
            pairs = detail::sample_extension_pairs(s, rng, c.samples.value_or(40));
        }
        std::vector<Rational> cert_deltas = c.deltas.empty() ? std::vector<Rational>{Rational(1, 10)} : deltas;
        auto certs = parallel_map<ExtensionCertificate>(pairs.size(), [&](std::size_t i) {
            return certify_extension_pair(s, pairs[i].first, pairs[i].second, cert_deltas);
        });
        for (const auto& ec : certs) {
            if (!ec.holds) ++failed;
            items.push_back(to_json(ec));
        }
    }
    nlohmann::json result = {{"mode", *c.mode}, {"pairs", items.size()}, {"failed", failed}, {"certificates", items}};
    emit(c, envelope("certify", c, &s, std::move(result)).dump(2) + "\n");
    log << "certify " << *c.mode << ": " << items.size() << " pairs, " << failed << " failed\n";
    return failed == 0 ? kOk : kConstraint;
}

/// Runs a command and maps library exceptions to exit codes.
inline int run_command(const RunConfig& c, std::ostream& log = std::cerr) {
    try {
        if (c.command == "schedule-build") return cmd_schedule_build(c, log);
        if (c.command == "lemma1") return cmd_lemma1(c, log);
        if (c.command == "simulate") return cmd_simulate(c, log);
        if (c.command == "classify") return cmd_classify(c, log);
        if (c.command == "certify") return cmd_certify(c, log);
        log << "error: unknown command " << c.command << "\n";
        return kUsage;
    } catch (const HorizonError& e) {
        log << "horizon error: " << e.what() << "\n";
        return kHorizon;
    } catch (const ConstraintError& e) {
        log << "constraint error: " << e.what() << "\n";
        return kConstraint;
    } catch (const DomainError& e) {
        log << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const PreconditionError& e) {
        log << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace chaoslab::cli
