#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "chaoslab/commands.hpp"
#include "support/oracles.hpp"

using namespace chaoslab;
using namespace chaoslab::cli;

namespace {

std::filesystem::path temp_dir() {
    static std::filesystem::path dir = [] {
        auto d = std::filesystem::temp_directory_path() / ("chaoslab_cli_test_" + std::to_string(::getpid()));
        std::filesystem::create_directories(d);
        return d;
    }();
    return dir;
}

struct CmdRun {
    int rc;
    std::string out, log;
};

CmdRun run(RunConfig c, const std::string& file) {
    c.out = (temp_dir() / file).string();
    std::filesystem::remove(*c.out);
    std::ostringstream log;
    int rc = run_command(c, log);
    std::string out = std::filesystem::exists(*c.out) ? read_file(*c.out) : std::string();
    return {rc, out, log.str()};
}

RunConfig cfg(const std::string& command) {
    RunConfig c;
    c.command = command;
    return c;
}

nlohmann::json json_of(const CmdRun& r) { return nlohmann::json::parse(r.out); }

std::vector<std::string> data_lines(const std::string& csv) {
    std::vector<std::string> rows;
    std::istringstream in(csv);
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        rows.push_back(line);
    }
    return rows;
}

}  // namespace

TEST(CliScheduleBuild, SingleLevelFile) {
    RunConfig c = cfg("schedule-build");
    c.levels = 1;
    CmdRun r = run(c, "s1.json");
    ASSERT_EQ(r.rc, kOk) << r.log;
    auto j = json_of(r);
    ASSERT_EQ(j["levels"].size(), 1u);
    EXPECT_EQ(j["levels"][0]["m"], nlohmann::json({"1", "2", "5", "6"}));
    EXPECT_EQ(j["levels"][0]["r"], "1/2");
    EXPECT_EQ(j["truncated"], false);
    EXPECT_EQ(j["config"]["levels"], 1);
    EXPECT_EQ(j["fingerprint"], schedule_fingerprint(build_schedule(1)));
    EXPECT_NE(r.log.find("n=1"), std::string::npos);
}

TEST(CliScheduleBuild, UsageErrorAndDeterminism) {
    RunConfig c = cfg("schedule-build");
    c.levels = 0;
    EXPECT_EQ(run(c, "s0.json").rc, kUsage);
    c.levels = 6;
    CmdRun a = run(c, "s6a.json"), b = run(c, "s6b.json");
    EXPECT_EQ(a.rc, kOk);
    EXPECT_EQ(a.out, b.out);
}

TEST(CliScheduleBuild, FileFeedsOtherCommands) {
    RunConfig c = cfg("schedule-build");
    c.levels = 4;
    c.cap = BigInt(60);
    CmdRun built = run(c, "capped.json");
    ASSERT_EQ(built.rc, kOk);
    RunConfig sim = cfg("simulate");
    sim.schedule_path = (temp_dir() / "capped.json").string();
    sim.u = R"({"k":"1","phi":"0","z":"1/3"})";
    sim.steps = BigInt(20);
    CmdRun r = run(sim, "sim_from_file.json");
    ASSERT_EQ(r.rc, kOk) << r.log;
    EXPECT_EQ(json_of(r)["schedule_fingerprint"], json_of(built)["fingerprint"]);

    auto tampered = json_of(built);
    tampered["levels"][1]["m"][1] = "9";
    std::ofstream(temp_dir() / "tampered.json") << tampered.dump();
    sim.schedule_path = (temp_dir() / "tampered.json").string();
    EXPECT_EQ(run(sim, "sim_tampered.json").rc, kConstraint);
}

TEST(CliLemma1, ReportStructureAndSeeds) {
    RunConfig c = cfg("lemma1");
    c.samples = 200;
    c.seed = 42;
    CmdRun a = run(c, "l1a.json"), b = run(c, "l1b.json");
    EXPECT_EQ(a.out, b.out);
    auto j = json_of(a);
    EXPECT_EQ(j["schema"], "chaoslab.lemma1/1");
    EXPECT_EQ(j["result"]["samples"], 200);
    std::size_t v = j["result"]["violations"].get<std::size_t>();
    EXPECT_EQ(a.rc, v == 0 && j["result"]["turn_count_violations"] == 0 ? kOk : kConstraint);
    EXPECT_EQ(j["result"]["turn_count_violations"], 0);
    c.seed = 43;
    EXPECT_NE(run(c, "l1c.json").out, a.out);
}

TEST(CliLemma1, SingleSampleMatchesDirectCheck) {
    Lemma1Summary s = run_lemma1(1, 7);
    const Lemma1Sample& x = s.drawn[0];
    Lemma1Report direct = lemma1_bound_check(x.theta_u, x.theta_v, x.r_u, x.r_v, x.delta, x.p);
    EXPECT_EQ(s.reports[0].count, direct.count);
    EXPECT_EQ(s.reports[0].fraction, direct.fraction);
    EXPECT_GT(Rational(x.p), 2 / abs(x.r_u - x.r_v));
    EXPECT_GT(x.delta, 0);
    EXPECT_LE(x.delta, Rational(1, 2));
}

TEST(CliLemma1, ThreadCountDoesNotChangeOutput) {
    RunConfig c = cfg("lemma1");
    c.samples = 300;
    CmdRun one = run(c, "t1.json");
    ::setenv("CHAOS_LAB_THREADS", "4", 1);
    CmdRun four = run(c, "t4.json");
    ::unsetenv("CHAOS_LAB_THREADS");
    EXPECT_EQ(one.out, four.out);
}

TEST(CliSimulate, LimitPointRows) {
    RunConfig c = cfg("simulate");
    c.levels = 3;
    c.u = R"({"k":"limit","phi":"1/3","z":"2/5"})";
    c.steps = BigInt(100);
    c.format = "csv";
    CmdRun r = run(c, "limit.csv");
    ASSERT_EQ(r.rc, kOk);
    auto rows = data_lines(r.out);
    ASSERT_EQ(rows.size(), 100u);
    for (const auto& row : rows) EXPECT_EQ(row.substr(row.find(',')), rows[0].substr(rows[0].find(',')));
    EXPECT_NE(r.out.find("# approximate"), std::string::npos);
    EXPECT_NE(r.out.find("# schedule_fingerprint: sha256:"), std::string::npos);
}

TEST(CliSimulate, EndpointPairDistanceIsOne) {
    RunConfig c = cfg("simulate");
    c.levels = 5;
    c.u = R"({"k":"1","z":"1"})";
    c.v = R"({"k":"1","z":"0"})";
    c.steps = BigInt(400);
    c.format = "csv";
    CmdRun r = run(c, "ends.csv");
    ASSERT_EQ(r.rc, kOk) << r.log;
    for (const auto& row : data_lines(r.out)) EXPECT_EQ(row.substr(row.rfind(',') + 1), "1.000000000000");
}

TEST(CliSimulate, TraceMatchesIndependentStepper) {
    RunConfig c = cfg("simulate");
    c.levels = 6;
    c.cap = BigInt(300);
    c.u = R"({"k":"2","phi":"1/9","z":"3/7"})";
    c.v = R"({"k":"3","phi":"5/6","z":"1/4"})";
    c.steps = BigInt(700);
    c.stride = 7;
    CmdRun r = run(c, "pair.json");
    ASSERT_EQ(r.rc, kOk) << r.log;
    Schedule s = build_schedule(6, BigInt(300));
    oracle::State u{2, Rational(1, 9), Rational(3, 7)}, v{3, Rational(5, 6), Rational(1, 4)};
    auto rows = json_of(r)["result"]["rows"];
    std::size_t next = 0;
    for (long i = 1; i <= 700; ++i) {
        u = oracle::step(s, u);
        v = oracle::step(s, v);
        if (i % 7 != 0 && i != 700) continue;
        const auto& row = rows.at(next++);
        ASSERT_EQ(row["i"], std::to_string(i));
        ASSERT_EQ(row["u"]["k"], to_string(u.k));
        ASSERT_EQ(parse_rational(row["u"]["phi"].get<std::string>()), u.phi);
        ASSERT_EQ(parse_rational(row["v"]["z"].get<std::string>()), v.z);
        ASSERT_EQ(parse_rational(row["distance"].get<std::string>()), oracle::dist(u, v));
    }
    EXPECT_EQ(next, rows.size());
}

TEST(CliSimulate, ExitCodes) {
    RunConfig c = cfg("simulate");
    c.levels = 2;
    c.u = R"({"k":"1","z":"1"})";
    c.steps = BigInt(500);
    EXPECT_EQ(run(c, "far.json").rc, kHorizon);
    c.u = R"({"k":"1","z":"7"})";
    c.steps = BigInt(5);
    EXPECT_EQ(run(c, "bad.json").rc, kUsage);
    c.u = "not json";
    EXPECT_EQ(run(c, "bad2.json").rc, kUsage);
    c.u = R"({"k":"1","z":"1"})";
    c.v = R"({"k":"1","phi":"0","z":"1"})";
    EXPECT_EQ(run(c, "mixed.json").rc, kUsage);
}

TEST(CliClassify, Examples) {
    RunConfig c = cfg("classify");
    c.levels = 6;
    c.u = R"({"k":"1","z":"1"})";
    c.v = R"({"k":"1","z":"0"})";
    CmdRun ends = run(c, "c_ends.json");
    ASSERT_EQ(ends.rc, kOk) << ends.log;
    auto j = json_of(ends)["result"];
    EXPECT_EQ(j["classification"], "NONE");
    for (const auto& p : j["profiles"]) EXPECT_EQ(p["phi_high"], "0");

    c.u = R"({"k":"2","phi":"0","z":"1/3"})";
    c.v = R"({"k":"2","phi":"1/2","z":"1/3"})";
    auto iso = json_of(run(c, "c_iso.json"))["result"];
    EXPECT_EQ(iso["classification"], "NONE");
    EXPECT_EQ(iso["certificates"][1]["kind"], "isometry");

    c.u = R"({"k":"1","phi":"0","z":"1/7"})";
    c.v = R"({"k":"1","phi":"1/3","z":"3/11"})";
    EXPECT_EQ(json_of(run(c, "c_b.json"))["result"]["classification"], "DC3");

    c.v = c.u;
    EXPECT_EQ(run(c, "c_same.json").rc, kUsage);
}

TEST(CliCertify, FactorMode) {
    RunConfig c = cfg("certify");
    c.levels = 6;
    c.mode = "factor-dc1";
    c.u = R"({"k":"1","z":"1"})";
    c.v = R"({"k":"1","z":"0"})";
    CmdRun r = run(c, "f_ends.json");
    ASSERT_EQ(r.rc, kOk) << r.log;
    auto cert = json_of(r)["result"]["certificates"][0];
    EXPECT_EQ(cert["phi_zero_deltas"].size(), 5u);
    EXPECT_EQ(cert["q_levels"].size(), 5u);
}

TEST(CliCertify, ExtensionMode) {
    RunConfig c = cfg("certify");
    c.levels = 6;
    c.mode = "extension-nodc";
    c.u = R"({"k":"4","phi":"1/5","z":"2/3"})";
    c.v = R"({"k":"4","phi":"3/5","z":"2/3"})";
    auto a = json_of(run(c, "e_a.json"))["result"]["certificates"][0];
    EXPECT_EQ(a["certificate"]["kind"], "isometry");
    EXPECT_EQ(a["certificate"]["steps"], "1000");
    EXPECT_TRUE(a["holds"].get<bool>());

    c.u = R"({"k":"1","phi":"0","z":"9/10"})";
    c.v = R"({"k":"1","phi":"1/4","z":"1/10"})";
    CmdRun b = run(c, "e_b.json");
    auto bounds = json_of(b)["result"]["certificates"][0]["certificate"]["bounds"];
    bool level3 = false;
    for (const auto& x : bounds)
        if (x["level"] == 3) {
            level3 = true;
            EXPECT_LT(parse_rational(x["fraction"].get<std::string>()), Rational(3, 10));
        }
    EXPECT_TRUE(level3);

    c.cap = BigInt(100);
    EXPECT_EQ(run(c, "e_capped.json").rc, kConstraint);
}

TEST(CliCertify, SampledRunsAreDeterministic) {
    for (std::string mode : {"factor-dc1", "extension-nodc"}) {
        RunConfig c = cfg("certify");
        c.levels = 6;
        c.mode = mode;
        c.samples = 12;
        CmdRun a = run(c, mode + "_a.json"), b = run(c, mode + "_b.json");
        EXPECT_EQ(a.rc, kOk) << a.log;
        EXPECT_EQ(a.out, b.out);
        EXPECT_FALSE(json_of(a)["schedule_fingerprint"].is_null());
    }
}
