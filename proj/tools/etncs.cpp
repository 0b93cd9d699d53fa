// etncs: design, simulate, verify and report event-triggered networked loops.

#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "etncs/commands.hpp"

namespace {

// "3" -> {3}; "1:5" -> {1,2,3,4,5}; "1,4,9" -> {1,4,9}.
std::vector<std::uint64_t> parse_seeds(const std::vector<std::string>& specs) {
    std::vector<std::uint64_t> out;
    for (const auto& spec : specs) {
        for (const auto& item : etncs::config_detail::split_list(spec)) {
            const auto colon = item.find(':');
            if (colon == std::string::npos) {
                out.push_back(std::stoull(item));
                continue;
            }
            const auto lo = std::stoull(item.substr(0, colon));
            const auto hi = std::stoull(item.substr(colon + 1));
            if (hi < lo) throw etncs::ConfigError("seed range '" + item + "' is empty");
            for (auto s = lo; s <= hi; ++s) out.push_back(s);
        }
    }
    return out;
}

struct Options {
    std::string config;
    std::string out = "out";
    std::string trace;
    std::vector<std::string> sets;
    std::vector<std::string> seeds;
    unsigned jobs = 1;
};

etncs::Config load_config(const Options& o, std::optional<std::uint64_t> seed) {
    etncs::Config c = etncs::Config::from_file(o.config);
    if (seed) c.set("sim.seed", std::to_string(*seed));
    for (const auto& s : o.sets) c.apply_override(s);
    return c;
}

std::pair<etncs::Problem, std::string> load_problem(const Options& o, std::optional<std::uint64_t> seed) {
    const etncs::Config c = load_config(o, seed);
    etncs::Problem pr = etncs::problem_from_config(c);
    for (const auto& k : c.unused_keys()) std::cerr << "warning: unused config key '" << k << "'\n";
    return {std::move(pr), c.echo()};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Event-triggered networked control: design, simulation and verification"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* opt = sub->add_option("-c,--config", o.config, "Scenario config file (key = value)");
        if (needs_config) opt->required()->check(CLI::ExistingFile);
        sub->add_option("-o,--out", o.out, "Output directory")->capture_default_str();
        sub->add_option("--set", o.sets, "Override a config entry, key=value (repeatable)");
    };

    auto* design = app.add_subcommand("design", "Synthesize M and evaluate the stability conditions");
    add_common(design, true);
    auto* simulate = app.add_subcommand("simulate", "Run the closed loop and write trace.csv, events.csv, metrics.kv");
    add_common(simulate, true);
    simulate->add_option("--seed", o.seeds, "Seed, list (1,2,3) or range (1:8); several seeds make a sweep");
    simulate->add_option("-j,--jobs", o.jobs, "Concurrent runs in a seed sweep")->capture_default_str();
    auto* verify = app.add_subcommand("verify", "Check a recorded trace against the loop invariants");
    add_common(verify, true);
    verify->add_option("--seed", o.seeds, "Seed the trace was produced with");
    verify->add_option("-t,--trace", o.trace, "Directory holding trace.csv and events.csv (default: --out)");
    auto* report = app.add_subcommand("report", "Write gnuplot data files from a recorded trace");
    add_common(report, false);
    report->add_option("-t,--trace", o.trace, "Directory holding trace.csv and events.csv (default: --out)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : etncs::kExitUsage;
    }

    try {
        const std::filesystem::path out = o.out;
        const std::filesystem::path trace_dir = o.trace.empty() ? out : std::filesystem::path(o.trace);
        const auto seeds = parse_seeds(o.seeds);

        if (*design) {
            auto [pr, eff] = load_problem(o, std::nullopt);
            std::cout << "effective config:\n" << eff << '\n';
            return etncs::cmd_design(pr, out, std::cout);
        }
        if (*simulate) {
            std::cout << "effective config:\n" << load_config(o, seeds.empty() ? std::nullopt : std::optional(seeds.front())).echo() << '\n';
            return etncs::cmd_simulate([&](std::optional<std::uint64_t> s) { return load_problem(o, s); }, seeds, out,
                                       o.jobs, std::cout);
        }
        if (*verify) {
            if (seeds.size() > 1) throw etncs::ConfigError("verify takes a single seed");
            auto [pr, eff] = load_problem(o, seeds.empty() ? std::nullopt : std::optional(seeds.front()));
            return etncs::cmd_verify(pr, trace_dir, out, std::cout);
        }
        if (*report) return etncs::cmd_report(trace_dir, out, std::cout);
    } catch (const etncs::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return etncs::kExitUsage;
    } catch (const etncs::DesignError& e) {
        std::cerr << "design error: " << e.what() << '\n';
        return etncs::kExitDesign;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return etncs::kExitUsage;
    }
    return etncs::kExitUsage;
}
