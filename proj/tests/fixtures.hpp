#pragma once

// Scenario builders shared by the simulation-level suites.

#include <string>
#include <utility>
#include <vector>

#include "etncs/config.hpp"

namespace fixtures {

inline std::string worked_example_path() { return std::string(ETNCS_CONFIG_DIR) + "/worked_example.cfg"; }

/// Worked-example problem with optional key=value overrides.
inline etncs::Problem worked_problem(const std::vector<std::string>& overrides = {}) {
    etncs::Config c = etncs::Config::from_file(worked_example_path());
    for (const auto& o : overrides) c.apply_override(o);
    return etncs::problem_from_config(c);
}

struct Run {
    etncs::Problem problem;
    etncs::DesignResult design;
    etncs::ScenarioConfig scenario;
    etncs::TraceLog log;
};

inline Run run_worked(const std::vector<std::string>& overrides = {}) {
    Run r;
    r.problem = worked_problem(overrides);
    r.design = etncs::synthesize_m(r.problem.params, r.problem.m22, r.problem.m11);
    r.scenario = r.problem.scenario;
    r.scenario.M = r.design.M;
    r.log = etncs::run_scenario(r.scenario);
    return r;
}

/// Ideal links (no delay, no quantization, no dropouts) around the worked
/// plant and controller.
inline etncs::ScenarioConfig ideal_scenario() {
    etncs::ScenarioConfig s = worked_problem().scenario;
    s.quant_p.kind = etncs::QuantizerKind::passthrough;
    s.quant_c.kind = etncs::QuantizerKind::passthrough;
    s.quant_p.a = s.quant_p.b = s.quant_c.a = s.quant_c.b = 1.0;
    s.chan_pc.delay = etncs::DelayProfile::constant(0.0);
    s.chan_cp.delay = etncs::DelayProfile::constant(0.0);
    s.chan_pc.dropout = {};
    s.chan_cp.dropout = {};
    return s;
}

}  // namespace fixtures
