// chaoslab: schedule construction, simulation, classification and certificates.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "chaoslab/commands.hpp"

namespace {

using chaoslab::cli::RunConfig;

struct RawOptions {
    std::optional<unsigned long> levels;
    std::string cap = "none";
    std::optional<std::string> steps, horizon, stride;
    std::uint64_t seed = 42;
    std::optional<unsigned long> samples;
    std::vector<std::string> deltas;
    std::optional<std::string> schedule, out, u, v, mode;
    std::string format = "json";
};

void add_common(CLI::App* cmd, RawOptions& o) {
    cmd->add_option("--levels", o.levels, "number of schedule levels L");
    cmd->add_option("--cap", o.cap, "clamp identity-block lengths to this value, or 'none'");
    cmd->add_option("--schedule", o.schedule, "schedule JSON file (overrides --levels/--cap)");
    cmd->add_option("--seed", o.seed, "RNG seed");
    cmd->add_option("--samples", o.samples, "number of sampled cases");
    cmd->add_option("--delta", o.deltas, "proximity threshold p/q (repeatable)");
    cmd->add_option("--steps", o.steps, "orbit length");
    cmd->add_option("--stride", o.stride, "emit every n-th orbit step");
    cmd->add_option("--horizon", o.horizon, "largest examined horizon");
    cmd->add_option("--u", o.u, R"(point literal, e.g. {"k":"1","phi":"1/3","z":"2/5"})");
    cmd->add_option("--v", o.v, "second point literal");
    cmd->add_option("--mode", o.mode, "certify mode: factor-dc1 | extension-nodc");
    cmd->add_option("--out", o.out, "output file (default stdout)");
    cmd->add_option("--format", o.format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
}

RunConfig to_config(const std::string& command, const RawOptions& o) {
    RunConfig c;
    c.command = command;
    c.levels = o.levels;
    if (o.cap != "none") c.cap = chaoslab::parse_bigint(o.cap);
    if (c.cap && *c.cap < 1) throw chaoslab::DomainError("--cap must be positive");
    if (o.steps) c.steps = chaoslab::parse_bigint(*o.steps);
    if (o.horizon) c.horizon = chaoslab::parse_bigint(*o.horizon);
    if (o.stride) c.stride = chaoslab::parse_bigint(*o.stride);
    c.seed = o.seed;
    c.samples = o.samples;
    for (const std::string& d : o.deltas) c.deltas.push_back(chaoslab::parse_rational(d));
    c.schedule_path = o.schedule;
    c.out = o.out;
    c.format = o.format;
    c.u = o.u;
    c.v = o.v;
    c.mode = o.mode;
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact simulator and certificate generator for the cylinder skew-product system"};
    app.require_subcommand(1);
    RawOptions opts;
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"schedule-build", "build and verify a level schedule"},
        {"lemma1", "check the rotation proximity estimate on random parameter sets"},
        {"simulate", "trace an orbit (or a pair of orbits)"},
        {"classify", "finite-horizon distributional-chaos verdict for a pair"},
        {"certify", "certificate bundle for sampled or given pairs"},
    };
    for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : chaoslab::cli::kUsage;
    }
    std::string command = app.get_subcommands().front()->get_name();
    RunConfig config;
    try {
        config = to_config(command, opts);
    } catch (const std::exception& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return chaoslab::cli::kUsage;
    }
    return chaoslab::cli::run_command(config);
}
