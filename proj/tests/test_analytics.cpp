#include <gtest/gtest.h>

#include "chaoslab/analytics.hpp"
#include "support/oracles.hpp"

using namespace chaoslab;

namespace {

Rational q(long p, long d = 1) { return make_rational(p, d); }

CylinderPoint cp(long k, Rational phi, Rational z) {
    return {k == 0 ? Cylinder::limit() : Cylinder::at(k), Angle(phi), z};
}
FiberPoint fp(long k, Rational z) { return {k == 0 ? Cylinder::limit() : Cylinder::at(k), z}; }

const Schedule& capped() {
    static const Schedule s = build_schedule(7, BigInt(700));
    return s;
}
const Schedule& true6() {
    static const Schedule s = build_schedule(6);
    return s;
}

CylinderPoint random_point(oracle::Gen& g, long max_k) {
    return cp(g.range(0, max_k), g.unit(60), g.closed_unit(60));
}

}  // namespace

TEST(PairEngine, CountsMatchBruteForceOnCappedSchedule) {
    const Schedule& s = capped();
    oracle::Gen g(10);
    for (int rep = 0; rep < 40; ++rep) {
        CylinderPoint u = random_point(g, 30), v = random_point(g, 30);
        if (u == v) continue;
        long m = g.range(2, 1500);
        for (Rational d : std::vector<Rational>{q(1, 10), q(1, 3), q(9, 10), Rational(g.unit(40) + q(1, 100))}) {
            BigInt want = oracle::phi_count(s, oracle::from(u), oracle::from(v), m, d, true);
            ASSERT_EQ(count_close(s, u, v, d, BigInt(1), BigInt(m)), want) << rep;
            ASSERT_EQ(count_close_stepwise(s, u, v, d, BigInt(1), BigInt(m)), want);
            BigInt want_y = oracle::phi_count(s, oracle::from(u), oracle::from(v), m, d, false);
            ASSERT_EQ(count_close(s, project(u), project(v), d, BigInt(1), BigInt(m)), want_y);
        }
    }
}

TEST(PairEngine, ClosedFormMatchesSteppingOnTrueSchedule) {
    const Schedule& s = true6();
    oracle::Gen g(11);
    for (int rep = 0; rep < 12; ++rep) {
        CylinderPoint u = random_point(g, 60), v = random_point(g, 60);
        if (u == v) continue;
        BigInt end = s.horizon() - 61;
        for (Rational d : {q(1, 10), q(1, 4), q(1, 2)}) {
            for (Metric metric : {Metric::Full, Metric::AngleOnly}) {
                ASSERT_EQ(count_close(s, u, v, d, BigInt(0), end, metric),
                          count_close_stepwise(s, u, v, d, BigInt(0), end, metric));
            }
            ASSERT_EQ(count_close(s, project(u), project(v), d, BigInt(3), end),
                      count_close_stepwise(s, project(u), project(v), d, BigInt(3), end));
        }
    }
}

TEST(PairEngine, WindowBeyondHorizonIsRejected) {
    const Schedule& s = capped();
    CylinderPoint u = cp(1, q(0), q(1, 3)), v = cp(2, q(0), q(1, 3));
    EXPECT_THROW(count_close(s, u, v, q(1, 2), BigInt(0), s.horizon()), HorizonError);
    CylinderPoint a = cp(0, q(0), q(1, 3)), b = cp(0, q(1, 2), q(1, 3));
    // Limit points never move, so any window length is fine. The pair sits at distance exactly 1/2.
    EXPECT_EQ(count_close(s, a, b, q(1, 2), BigInt(0), BigInt("1000000000000")), 0);
    EXPECT_EQ(count_close(s, a, b, q(3, 5), BigInt(0), BigInt("1000000000000")), BigInt("1000000000000"));
}

TEST(PairEngine, ExtremesMatchBruteForce) {
    const Schedule& s = capped();
    oracle::Gen g(12);
    for (int rep = 0; rep < 40; ++rep) {
        CylinderPoint u = random_point(g, 30), v = random_point(g, 30);
        if (u == v) continue;
        long m = g.range(1, 1500);
        oracle::State a = oracle::from(u), b = oracle::from(v);
        Rational lo = oracle::dist(a, b), hi = lo;
        for (long t = 1; t < m; ++t) {
            a = oracle::step(s, a);
            b = oracle::step(s, b);
            Rational d = oracle::dist(a, b);
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
        DistanceExtremes e = distance_extremes(s, u, v, BigInt(0), BigInt(m));
        ASSERT_EQ(e.min, lo) << rep;
        ASSERT_EQ(e.max, hi) << rep;
    }
}

TEST(Profiles, Examples) {
    const Schedule& s = capped();
    CylinderPoint u = cp(1, q(1, 5), q(2, 7));
    auto same = empirical_phi(s, u, u, BigInt(100), {q(1, 10), q(1, 1000)});
    for (const auto& p : same) EXPECT_EQ(p.fraction, q(99, 100));  // indices 0 < t < 100
    auto ends = empirical_phi(s, fp(1, q(0)), fp(1, q(1)), BigInt(500), {q(1, 2)});
    EXPECT_EQ(ends[0].count, 0);
    EXPECT_EQ(ends[0].fraction, 0);
    EXPECT_THROW(empirical_phi(s, u, u, BigInt(0), {q(1, 2)}), DomainError);
}

TEST(Profiles, BlockExactEqualsEmpirical) {
    const Schedule& s = capped();
    oracle::Gen g(13);
    for (int rep = 0; rep < 20; ++rep) {
        CylinderPoint u = random_point(g, 20), v = random_point(g, 20);
        if (u == v) continue;
        BigInt m = g.range(2, 2000);
        auto grid = default_delta_grid();
        auto a = empirical_phi(s, u, v, m, grid);
        auto b = block_exact_phi(s, u, v, m, grid);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            ASSERT_EQ(a[i].count, b[i].count);
            ASSERT_EQ(a[i].fraction, b[i].fraction);
            if (i > 0) {
                ASSERT_LE(b[i - 1].fraction, b[i].fraction);
            }
        }
    }
}

TEST(Factor, BlockCompositionEqualsStepping) {
    for (const Schedule* s : {&capped(), &true6()}) {
        oracle::Gen g(14);
        for (int rep = 0; rep < 20; ++rep) {
            Rational z = g.closed_unit(500);
            for (unsigned long l = 0; l < s->size(); ++l) {
                FiberPoint at = advance(*s, fp(1, z), BigInt(s->level(l).m2 - 1));
                ASSERT_EQ(height_at_id_entry(*s, z, l), at.z);
            }
        }
    }
    // The same through plain stepping on the capped schedule.
    const Schedule& s = capped();
    Rational z = q(5, 17);
    FiberPoint x = fp(1, z);
    for (unsigned long l = 0; l < s.size(); ++l) {
        x = orbit(s, x, BigInt(s.level(l).m2 - x.cyl.index()));
        EXPECT_EQ(x.z, height_at_id_entry(s, z, l));
    }
}

TEST(Factor, EndpointPair) {
    const Schedule& s = true6();
    auto rep = factor_block_profile(s, q(1), q(0), 1, 5, default_delta_grid());
    ASSERT_EQ(rep.size(), 5u);
    for (const auto& r : rep) {
        EXPECT_EQ(r.id_distance, 1);
        EXPECT_EQ(r.witness, WitnessKind::Q);
        for (const auto& b : r.bounds) {
            EXPECT_EQ(b.count, 0);
            EXPECT_EQ(b.lower, 0);
        }
    }
    WitnessLevels w = find_dc1_witness_blocks(s, q(1), q(0), 5);
    EXPECT_TRUE(w.s_levels.empty());
    EXPECT_EQ(w.q_levels, (std::vector<unsigned long>{1, 2, 3, 4, 5}));
    WitnessLevels none = find_dc1_witness_blocks(s, q(1), q(0), 0);
    EXPECT_TRUE(none.s_levels.empty());
    EXPECT_TRUE(none.q_levels.empty());
    EXPECT_THROW(factor_block_profile(s, q(1, 3), q(1, 3), 1, 5, default_delta_grid()), DomainError);
}

TEST(Factor, BoundsBracketExactCounts) {
    const Schedule& s = true6();
    oracle::Gen g(15);
    for (int rep = 0; rep < 15; ++rep) {
        Rational a = g.closed_unit(400), b = g.closed_unit(400);
        if (a == b) continue;
        for (const auto& r : factor_block_profile(s, a, b, 1, 5, default_delta_grid())) {
            for (const auto& w : r.bounds) {
                ASSERT_LE(w.lower, w.exact);
                ASSERT_LE(w.exact, w.upper);
                BigInt direct = count_close_stepwise(s, fp(1, a), fp(1, b), w.delta, BigInt(1), r.horizon);
                ASSERT_EQ(w.count, direct);
            }
        }
    }
}

TEST(Factor, SideConditionsGiveWitnessTypes) {
    const Schedule& s = true6();
    for (unsigned long l = 3; l < s.size(); ++l) {
        const LevelMaps& m = s.level(l).maps;
        Rational t = q(1, static_cast<long>(l));
        // Heights already at the level entrance, placed on one or both sides of r_l -+ 1/l.
        Rational lo1 = (m.r - t) / 3, lo2 = (m.r - t) / 2, hi = (m.r + t + 1) / 2;
        if (!(lo1 > 0) || !(hi < 1)) continue;
        Rational a = iterate(m.h, lo1, m.n), b = iterate(m.h, lo2, m.n), c = iterate(m.h, hi, m.n);
        EXPECT_LT(abs(a - b), t);
        EXPECT_GT(abs(a - c), 1 - 2 * t);
        EXPECT_EQ(witness_kind(a, c, l), WitnessKind::Q);
        EXPECT_NE(witness_kind(a, b, l), WitnessKind::None);
    }
    // Heights a hair apart stay close everywhere: s-type at every level >= 2.
    WitnessLevels w = find_dc1_witness_blocks(s, q(1, 7), q(1, 7) + q(1, 1000000), 5);
    EXPECT_EQ(w.s_levels, (std::vector<unsigned long>{1, 2, 3, 4, 5}));
}

TEST(Factor, SWitnessShare) {
    const Schedule& s = true6();
    oracle::Gen g(16);
    int checked = 0;
    for (int rep = 0; rep < 40; ++rep) {
        Rational a = g.closed_unit(300), b = g.closed_unit(300);
        if (a == b) continue;
        for (unsigned long l : find_dc1_witness_blocks(s, a, b, 5).s_levels) {
            SWitnessShare w = s_witness_share(s, a, b, l);
            ASSERT_TRUE(w.holds) << a << ' ' << b << " level " << l;
            ASSERT_GE(w.fraction, 1 - q(2, static_cast<long>(l) + 1));
            ++checked;
        }
    }
    EXPECT_GT(checked, 0);
}

TEST(Cases, Examples) {
    EXPECT_EQ(extension_case_classify(cp(2, q(0), q(1, 3)), cp(2, q(1, 2), q(1, 3))).kind, CaseKind::A);
    CaseTag b = extension_case_classify(cp(1, q(0), q(1, 3)), cp(1, q(1, 5), q(2, 3)));
    EXPECT_EQ(b.kind, CaseKind::B);
    EXPECT_EQ(*b.shared_k, 1);
    EXPECT_EQ(*b.height_level, 4u);  // 1/3 > 1/4 but not > 1/3
    CaseTag c = extension_case_classify(cp(3, q(0), q(0)), cp(7, q(0), q(1)));
    EXPECT_EQ(c.kind, CaseKind::C);
    EXPECT_EQ(*c.offset, 4);
    EXPECT_EQ(*c.height_level, 2u);
    CaseTag d = extension_case_classify(cp(5, q(1, 9), q(2, 3)), cp(0, q(4, 9), q(1, 5)));
    EXPECT_EQ(d.kind, CaseKind::D);
    EXPECT_EQ(*d.substitute, cp(5, q(4, 9), q(0)));
    EXPECT_EQ(extension_case_classify(cp(0, q(0), q(1, 2)), cp(0, q(1, 3), q(1, 2))).kind,
              CaseKind::NonscrambledByRadius);
    EXPECT_EQ(extension_case_classify(cp(1, q(0), q(1, 2)), cp(4, q(1, 3), q(1, 2))).kind,
              CaseKind::NonscrambledByRadius);
    EXPECT_THROW(extension_case_classify(cp(1, q(0), q(1, 2)), cp(1, q(0), q(1, 2))), DomainError);
}

TEST(Extension, EndpointHeightsGiveExactRotationGap) {
    const Schedule& s = true6();
    for (unsigned long l = 2; l < s.size(); ++l) {
        CylinderPoint u = cp(1, q(0), q(1)), v = cp(1, q(0), q(0));
        ExtensionBound b = extension_phistar_bound(s, u, v, q(1, 10), l);
        EXPECT_EQ(b.rotation_gap, q(1, static_cast<long>(l)));
        EXPECT_EQ(b.block_length, s.level(l).gap);
        // The window count by direct stepping over the identity block.
        BigInt t0 = s.level(l).m2 - 1;
        BigInt direct = count_close_stepwise(s, u, v, q(1, 10), t0 + 1, t0 + b.block_length, Metric::AngleOnly);
        EXPECT_EQ(b.angle_count, direct) << "level " << l;
        EXPECT_EQ(b.fraction, make_rational(b.angle_count, b.block_length));
        EXPECT_EQ(b.holds, b.fraction < q(3, 10));
        EXPECT_LE(b.phistar_upper, 1);
    }
}

TEST(Extension, CaseBAndCCountsMatchStepping) {
    const Schedule& s = true6();
    oracle::Gen g(17);
    int done = 0;
    while (done < 12) {
        long k = g.range(1, 40), off = done % 2 ? g.range(1, 6) : 0;
        Rational a = g.closed_unit(100), b = g.closed_unit(100);
        unsigned long l = static_cast<unsigned long>(g.range(2, 5));
        if (!(abs(a - b) > q(1, static_cast<long>(l)))) continue;
        CylinderPoint u = cp(k, g.unit(100), a), v = cp(k + off, g.unit(100), b);
        ExtensionBound e = extension_phistar_bound(s, u, v, q(1, 10), l);
        EXPECT_EQ(e.kind, off ? CaseKind::C : CaseKind::B);
        BigInt t0 = s.level(l).m2 - k;
        BigInt direct = count_close_stepwise(s, u, v, q(1, 10), t0 + 1, t0 + e.block_length, Metric::AngleOnly);
        EXPECT_EQ(e.angle_count, direct);
        EXPECT_EQ(e.bound, q(3, 10) + make_rational(BigInt(2 * off), e.block_length));
        ++done;
    }
}

TEST(Extension, Refusals) {
    const Schedule& s = true6();
    CylinderPoint u = cp(1, q(0), q(1)), v = cp(1, q(1, 2), q(0));
    EXPECT_THROW(extension_phistar_bound(capped(), u, v, q(1, 10), 3), ConstraintError);
    EXPECT_THROW(extension_phistar_bound(s, cp(1, q(0), q(1, 3)), cp(1, q(1, 2), q(1, 3)), q(1, 10), 3),
                 DomainError);
    EXPECT_THROW(extension_phistar_bound(s, cp(1, q(0), q(1, 3)), cp(1, q(1, 2), q(1, 2)), q(1, 10), 3),
                 DomainError);  // |dz| = 1/6 is not > 1/3
    EXPECT_THROW(extension_phistar_bound(s, u, v, q(1, 10), 0), DomainError);
    EXPECT_THROW(extension_phistar_bound(s, u, v, q(1, 10), 6), DomainError);
    ExtensionBound big = extension_phistar_bound(s, u, v, q(1, 2), 3);
    EXPECT_TRUE(big.delta_too_large);
    EXPECT_FALSE(big.holds);
    EXPECT_EQ(big.angle_count, big.block_length - 1);
}

TEST(Extension, CaseDSubstitution) {
    const Schedule& s = true6();
    oracle::Gen g(18);
    for (int rep = 0; rep < 10; ++rep) {
        CylinderPoint inner = cp(g.range(1, 50), g.unit(90), g.closed_unit(90));
        CylinderPoint lim = cp(0, g.unit(90), g.closed_unit(90));
        SubstitutionCertificate c = case_d_reduction(s, lim, inner, default_delta_grid());
        EXPECT_TRUE(c.holds);
        EXPECT_EQ(c.counts_limit, c.counts_substitute);
        EXPECT_EQ(c.substitute.phi, lim.phi);
        EXPECT_EQ(c.substitute.z, 0);
    }
    EXPECT_THROW(case_d_reduction(s, cp(1, q(0), q(0)), cp(2, q(0), q(1)), default_delta_grid()), DomainError);
}

TEST(LiYorke, Examples) {
    const Schedule& s = true6();
    CylinderPoint a = cp(0, q(0), q(1, 3)), b = cp(0, q(1, 4), q(1, 2));
    LiYorkeReport r = li_yorke_check(s, a, b, BigInt(1000));
    EXPECT_EQ(r.min_distance, dist_X(a, b));
    EXPECT_EQ(r.max_distance, dist_X(a, b));
    LiYorkeReport e = li_yorke_check(s, fp(1, q(1)), fp(1, q(0)), BigInt(s.horizon() - 1));
    EXPECT_EQ(e.min_distance, 1);
    EXPECT_EQ(e.max_distance, 1);
    // A pair with s- and q-type levels comes close and moves far apart.
    Rational za = q(1, 7), zb = q(3, 11);
    WitnessLevels w = find_dc1_witness_blocks(s, za, zb, 5);
    ASSERT_FALSE(w.s_levels.empty());
    LiYorkeReport m = li_yorke_check(s, fp(1, za), fp(1, zb), BigInt(s.horizon() - 1));
    EXPECT_LT(m.min_distance, q(1, static_cast<long>(w.s_levels.back())));
    EXPECT_THROW(li_yorke_check(s, a, a, BigInt(10)), DomainError);
}

TEST(Classify, Examples) {
    const Schedule& s = true6();
    PairVerdict ends = classify_pair_DC(s, fp(1, q(1)), fp(1, q(0)));
    EXPECT_EQ(ends.classification, DCClass::NONE);
    for (const auto& d : ends.summaries) EXPECT_EQ(d.phi_high, 0);
    PairVerdict iso = classify_pair_DC(s, cp(2, q(0), q(1, 3)), cp(2, q(1, 2), q(1, 3)));
    EXPECT_EQ(iso.classification, DCClass::NONE);
    bool has_iso = false;
    for (const auto& c : iso.certificates)
        if (c["kind"] == "isometry") has_iso = c["holds"].get<bool>();
    EXPECT_TRUE(has_iso);
    PairVerdict b = classify_pair_DC(s, cp(1, q(0), q(1, 7)), cp(1, q(1, 3), q(3, 11)));
    EXPECT_EQ(b.classification, DCClass::DC3);
    EXPECT_NE(b.mode, ProfileMode::Empirical);
    EXPECT_THROW(classify_pair_DC(s, fp(1, q(1)), fp(1, q(1))), DomainError);
}

TEST(Classify, VerdictOrderingAndModes) {
    const Schedule& t = true6();
    const Schedule& c = capped();
    oracle::Gen g(19);
    for (int rep = 0; rep < 10; ++rep) {
        FiberPoint u = fp(1, g.closed_unit(200)), v = fp(1, g.closed_unit(200));
        if (u == v) continue;
        PairVerdict pv = classify_pair_DC(t, u, v);
        if (pv.classification == DCClass::DC1) {
            EXPECT_TRUE(pv.upper_near_one && pv.oscillates);
        }
        if (pv.classification == DCClass::DC2) {
            EXPECT_TRUE(pv.oscillates);
        }
        for (const auto& d : pv.summaries) EXPECT_LE(d.phi_low, d.phi_high);
        for (std::size_t i = 1; i < pv.summaries.size(); ++i)
            for (std::size_t h = 0; h < pv.horizons.size(); ++h)
                EXPECT_LE(pv.summaries[i - 1].fractions[h], pv.summaries[i].fractions[h]);
        EXPECT_EQ(classify_pair_DC(c, u, v).mode, ProfileMode::Empirical);
    }
}
