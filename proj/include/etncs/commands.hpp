#pragma once

// Workflows behind the command-line subcommands: design, simulate, verify
// and report. Each returns a process exit code:
//   0 success / all checks pass, 1 usage or input error, 2 design infeasible
//   or not strictly stable, 3 divergence abort, 4 verification failure.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "etncs/config.hpp"
#include "etncs/design.hpp"
#include "etncs/lti.hpp"
#include "etncs/sim.hpp"
#include "etncs/trace_io.hpp"
#include "etncs/trigger.hpp"

namespace etncs {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitDesign = 2,
    kExitDivergence = 3,
    kExitVerify = 4,
};

/// Ordered key = value block.
class KvWriter {
public:
    void put(const std::string& key, double v) { lines_.emplace_back(key, trace_io::fmt(v)); }
    void put(const std::string& key, bool v) { lines_.emplace_back(key, v ? "true" : "false"); }
    void put(const std::string& key, std::size_t v) { lines_.emplace_back(key, std::to_string(v)); }
    void put(const std::string& key, int v) { lines_.emplace_back(key, std::to_string(v)); }
    void put(const std::string& key, const std::string& v) { lines_.emplace_back(key, v); }
    void put(const std::string& key, const char* v) { lines_.emplace_back(key, v); }

    [[nodiscard]] std::string str() const {
        std::ostringstream os;
        for (const auto& [k, v] : lines_) os << k << " = " << v << '\n';
        return os.str();
    }

    void write(const std::filesystem::path& path) const {
        std::ofstream f(path);
        if (!f) throw Error("cannot write '" + path.string() + "'");
        f << str();
    }

private:
    std::vector<std::pair<std::string, std::string>> lines_;
};

/// Parses a key = value block back into a map.
[[nodiscard]] inline std::map<std::string, std::string> read_kv(std::istream& is) {
    std::map<std::string, std::string> out;
    const Config c = Config::parse(is, "<kv>");
    for (const auto& [k, v] : c.values()) out[k] = v;
    return out;
}

namespace cmd_detail {

inline void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw Error("cannot write '" + path.string() + "'");
    f << text;
}

inline DesignResult design_of(const Problem& pr) { return synthesize_m(pr.params, pr.m22, pr.m11); }

inline void put_budget(KvWriter& kv, const std::string& name, const DropoutBudget& b) {
    kv.put(name + "_max", b.budget);
    kv.put(name + "_log_value", b.log_value);
    kv.put(name + "_base", b.base);
    kv.put(name + "_argument", b.argument);
    kv.put(name + "_rounded", b.rounded_budget);
}

}  // namespace cmd_detail

// ---------------------------------------------------------------------------
// design
// ---------------------------------------------------------------------------

struct DesignOutcome {
    int exit_code = kExitOk;
    std::optional<DesignResult> result;
    std::string report;
    KvWriter kv;
};

[[nodiscard]] inline DesignOutcome run_design(const Problem& pr) {
    DesignOutcome out;
    const auto& p = pr.params;
    std::ostringstream rep;
    rep.precision(10);
    rep << "Design report\n=============\n\n";
    rep << "Inputs\n";
    rep << "  plant indices        nu_p = " << p.nu_p << ", rho_p = " << p.rho_p << '\n';
    rep << "  controller indices   nu_c = " << p.nu_c << ", rho_c = " << p.rho_c << '\n';
    rep << "  trigger thresholds   delta_p = " << p.delta_p << ", delta_c = " << p.delta_c << '\n';
    rep << "  free parameters      alpha = " << p.alpha << ", gamma = " << p.gamma << '\n';
    rep << "  quantizer sectors    b_p = " << p.b_p << ", b_c = " << p.b_c << '\n';
    rep << "  delay rate bounds    d1 = " << p.d1 << ", d2 = " << p.d2 << '\n';
    rep << "  M choice             m11 = " << pr.m11 << ", m22 = " << pr.m22 << " (m22^2 = " << pr.m22 * pr.m22
        << ")\n";
    if (pr.auto_margin) rep << "  auto_margin          " << *pr.auto_margin << " x lower bound\n";
    rep << '\n';

    auto& kv = out.kv;
    kv.put("m11", pr.m11);
    kv.put("m22", pr.m22);
    kv.put("m22_squared", pr.m22 * pr.m22);

    try {
        p.validate();
        const double lb = m22_squared_lower_bound(p);
        kv.put("m22_squared_lower_bound", lb);
        rep << "Synthesis\n  m22^2 lower bound    " << lb << " (strict)\n";
        out.result = cmd_detail::design_of(pr);
    } catch (const Error& e) {
        rep << "\nINFEASIBLE: " << e.what() << '\n';
        kv.put("feasible", false);
        kv.put("stability_ok", false);
        kv.put("error", std::string(e.what()));
        out.report = rep.str();
        out.exit_code = kExitDesign;
        return out;
    }

    const DesignResult& r = *out.result;
    rep << "  M                    [m11 = " << r.M.m11 << ", 0; m21 = " << r.M.m21 << ", m22 = " << r.M.m22 << "]\n";
    rep << "  transformed indices  rho~_c = " << r.rho_c_tilde << ", nu~_c = " << r.nu_c_tilde << "\n\n";
    rep << "Stability\n";
    rep << "  beta                 " << r.stability.beta << '\n';
    rep << "  margin1              " << r.stability.margin1 << "  (beta - 1/(4 gamma))\n";
    rep << "  margin2              " << r.stability.margin2 << "  (rho~_c + nu_p - |nu_p| - 1/(2 alpha))\n";
    rep << "  stability_ok         " << (r.stability.ok ? "true" : "false") << '\n';
    if (r.gamma_bound) {
        rep << "  L2 gain bound        " << r.gamma_bound->ratio_form << "  (ratio form, certified)\n";
        rep << "                       " << r.gamma_bound->sqrt_form << "  (square root of the ratio)\n";
    }
    rep << "\nDropout budgets\n";
    rep << "  d_p_max              " << r.d_p.budget << "  (log value " << r.d_p.log_value << ")\n";
    rep << "  d_c_max              " << r.d_c.budget << "  (log value " << r.d_c.log_value << ")\n";

    if (pr.controller_lti) {
        const auto grid = log_frequency_grid();
        const auto chk = lti_verify_indices(*pr.controller_lti, {p.nu_c, p.rho_c}, grid);
        rep << "\nController index check (frequency sweep 1e-3..1e4 rad/s)\n";
        rep << "  min Re G - nu - rho |G|^2 = " << chk.min_residual << " at w = " << chk.argmin_frequency
            << " rad/s: " << (chk.verified() ? "verified" : "NOT verified") << '\n';
        kv.put("controller_indices_verified", chk.verified());
        kv.put("controller_index_min_residual", chk.min_residual);
        if (!chk.verified())
            out.result->notes.push_back("declared controller indices fail the frequency-domain IF-OFP test");
    }

    if (!r.notes.empty()) {
        rep << "\nNotes\n";
        for (const auto& n : out.result->notes) rep << "  - " << n << '\n';
    }

    kv.put("feasible", true);
    kv.put("stability_ok", r.stability.ok);
    kv.put("m21", r.M.m21);
    kv.put("rho_c_tilde", r.rho_c_tilde);
    kv.put("nu_c_tilde", r.nu_c_tilde);
    kv.put("beta", r.stability.beta);
    kv.put("margin1", r.stability.margin1);
    kv.put("margin2", r.stability.margin2);
    if (r.gamma_bound) {
        kv.put("gamma_bound_ratio", r.gamma_bound->ratio_form);
        kv.put("gamma_bound_sqrt", r.gamma_bound->sqrt_form);
    }
    cmd_detail::put_budget(kv, "d_p", r.d_p);
    cmd_detail::put_budget(kv, "d_c", r.d_c);
    for (std::size_t i = 0; i < out.result->notes.size(); ++i)
        kv.put("note." + std::to_string(i), out.result->notes[i]);

    out.report = rep.str();
    out.exit_code = r.stability.ok ? kExitOk : kExitDesign;
    return out;
}

inline int cmd_design(const Problem& pr, const std::filesystem::path& out_dir, std::ostream& log) {
    cmd_detail::ensure_dir(out_dir);
    const DesignOutcome d = run_design(pr);
    cmd_detail::write_text(out_dir / "design_report.txt", d.report);
    d.kv.write(out_dir / "design.kv");
    log << d.report;
    return d.exit_code;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

inline void write_metrics_kv(const Metrics& m, const DesignResult& d, KvWriter& kv) {
    kv.put("rows", m.rows);
    kv.put("plant_attempts", m.plant_attempts);
    kv.put("plant_events", m.plant_events);
    kv.put("controller_attempts", m.controller_attempts);
    kv.put("controller_events", m.controller_events);
    kv.put("min_gap_plant", m.min_gap_plant);
    kv.put("min_gap_controller", m.min_gap_controller);
    kv.put("max_drops_pc", m.max_drops_pc);
    kv.put("max_drops_cp", m.max_drops_cp);
    kv.put("d_p_max", d.d_p.budget);
    kv.put("d_c_max", d.d_c.budget);
    kv.put("budget_ok_pc", m.budget_ok_pc);
    kv.put("budget_ok_cp", m.budget_ok_cp);
    kv.put("l2_gain", m.l2_gain);
    if (d.gamma_bound) kv.put("gamma_bound_ratio", d.gamma_bound->ratio_form);
    kv.put("l2_within_ratio_bound", m.l2_within_ratio_bound);
    kv.put("sup_state_plant", m.sup_state_plant);
    kv.put("C0", m.c0);
    kv.put("C1", m.c1);
    kv.put("C2", m.c2);
    kv.put("C0p", m.c0p);
    kv.put("C1p", m.c1p);
    kv.put("C2p", m.c2p);
    if (m.max_dissipativity_residual) kv.put("max_dissipativity_residual", *m.max_dissipativity_residual);
    if (m.max_dissipativity_excess) kv.put("max_dissipativity_excess", *m.max_dissipativity_excess);
    kv.put("inter_event_plant_ok", m.inter_event_plant.ok);
    kv.put("inter_event_plant_violations", m.inter_event_plant.violations);
    kv.put("inter_event_plant_worst_slack", m.inter_event_plant.worst_slack);
    kv.put("inter_event_controller_ok", m.inter_event_controller.ok);
    kv.put("inter_event_controller_violations", m.inter_event_controller.violations);
    kv.put("inter_event_controller_worst_slack", m.inter_event_controller.worst_slack);
}

struct SimulationOutcome {
    int exit_code = kExitOk;
    std::optional<TraceLog> trace;
    std::optional<Metrics> metrics;
    std::string message;
};

/// Runs one scenario and writes trace.csv, events.csv, metrics.kv and the
/// effective config into out_dir.
[[nodiscard]] inline SimulationOutcome simulate_to(const Problem& pr, const std::string& effective_config,
                                                   const std::filesystem::path& out_dir) {
    SimulationOutcome out;
    cmd_detail::ensure_dir(out_dir);
    cmd_detail::write_text(out_dir / "effective_config.txt", effective_config);

    DesignResult design;
    try {
        design = cmd_detail::design_of(pr);
    } catch (const Error& e) {
        out.exit_code = kExitDesign;
        out.message = std::string("design infeasible: ") + e.what();
        return out;
    }
    ScenarioConfig sc = pr.scenario;
    sc.M = design.M;

    try {
        out.trace = run_scenario(sc);
    } catch (const DivergenceError& e) {
        out.exit_code = kExitDivergence;
        out.message = e.what();
        KvWriter kv;
        kv.put("diverged", true);
        kv.put("divergence_row", e.row());
        kv.put("divergence_time", e.time());
        kv.put("message", std::string(e.what()));
        kv.write(out_dir / "metrics.kv");
        return out;
    }

    {
        std::ofstream f(out_dir / "trace.csv");
        write_trace_csv(*out.trace, f);
    }
    {
        std::ofstream f(out_dir / "events.csv");
        write_events_csv(*out.trace, f);
    }
    out.metrics = compute_metrics(*out.trace, pr.params, design, &sc.plant);
    KvWriter kv;
    kv.put("diverged", false);
    write_metrics_kv(*out.metrics, design, kv);
    kv.write(out_dir / "metrics.kv");
    return out;
}

/// Builds the problem for one seed, applying overrides after the file.
using ProblemFactory = std::function<std::pair<Problem, std::string>(std::optional<std::uint64_t> seed)>;

/// Runs one scenario per seed. With several seeds each run writes into
/// out_dir/seed_<s>; at most `jobs` runs execute concurrently.
inline int cmd_simulate(const ProblemFactory& make, const std::vector<std::uint64_t>& seeds,
                        const std::filesystem::path& out_dir, unsigned jobs, std::ostream& log) {
    if (seeds.size() <= 1) {
        const std::optional<std::uint64_t> seed = seeds.empty() ? std::nullopt : std::optional(seeds.front());
        auto [pr, eff] = make(seed);
        const auto o = simulate_to(pr, eff, out_dir);
        if (o.exit_code != kExitOk) {
            log << o.message << '\n';
            return o.exit_code;
        }
        log << "simulated " << o.metrics->rows << " rows, " << o.metrics->plant_events << " plant events, "
            << o.metrics->controller_events << " controller events\n";
        return kExitOk;
    }

    // Problems are built up front so config errors surface before any run.
    std::vector<std::pair<Problem, std::string>> problems;
    problems.reserve(seeds.size());
    for (auto s : seeds) problems.push_back(make(s));

    std::vector<int> codes(seeds.size(), kExitOk);
    std::vector<std::string> messages(seeds.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < seeds.size(); i = next++) {
            try {
                const auto o = simulate_to(problems[i].first, problems[i].second,
                                           out_dir / ("seed_" + std::to_string(seeds[i])));
                codes[i] = o.exit_code;
                messages[i] = o.message;
            } catch (const std::exception& e) {
                codes[i] = kExitUsage;
                messages[i] = e.what();
            }
        }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(seeds.size())));
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < n; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    int worst = kExitOk;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        log << "seed " << seeds[i] << ": exit " << codes[i];
        if (!messages[i].empty()) log << " (" << messages[i] << ')';
        log << '\n';
        worst = std::max(worst, codes[i]);
    }
    return worst;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct CheckResult {
    std::string name;
    bool pass = true;
    std::string detail;
};

struct VerifyReport {
    std::vector<CheckResult> checks;
    KvWriter info;

    [[nodiscard]] bool all_pass() const {
        return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
    }
    [[nodiscard]] const CheckResult* find(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }
};

namespace cmd_detail {

// Rows at which a packet delivered on the channel fed by `side` becomes
// visible: the first sample t_k >= arrival.
inline std::vector<bool> arrival_rows(const TraceLog& log, Side side) {
    std::vector<bool> mark(log.rows.size(), false);
    for (const auto& e : log.events) {
        if (e.side != side || !e.delivered) continue;
        auto it = std::lower_bound(log.rows.begin(), log.rows.end(), e.arrival_time,
                                   [](const TraceRow& r, double a) { return r.t < a; });
        if (it != log.rows.end()) mark[static_cast<std::size_t>(it - log.rows.begin())] = true;
    }
    return mark;
}

inline std::vector<bool> commit_rows(const TraceLog& log, Side side) {
    std::vector<bool> mark(log.rows.size(), false);
    for (const auto& e : log.events)
        if (e.side == side && e.delivered && e.row < mark.size()) mark[e.row] = true;
    return mark;
}

inline std::string times_preview(const std::vector<double>& t) {
    std::ostringstream os;
    os << t.size() << " violation(s)";
    if (!t.empty()) os << ", first at t=" << t.front();
    return os.str();
}

}  // namespace cmd_detail

/// Checks every trace-checkable invariant of a closed-loop run.
[[nodiscard]] inline VerifyReport verify_trace(const Problem& pr, const TraceLog& log) {
    VerifyReport rep;
    auto add = [&](std::string name, bool pass, std::string detail = {}) {
        rep.checks.push_back({std::move(name), pass, std::move(detail)});
    };
    const auto& sc = pr.scenario;
    const auto t = log.times();

    // Row count and event placement.
    const std::size_t expected_rows = sc.sample_count();
    add("row_count", log.rows.size() == expected_rows,
        std::to_string(log.rows.size()) + " rows, expected " + std::to_string(expected_rows));
    {
        bool ok = true;
        std::string detail;
        for (const auto& e : log.events) {
            if (e.row >= log.rows.size() || log.rows[e.row].t != e.time) {
                ok = false;
                detail = "event at t=" + trace_io::fmt(e.time) + " is not on its sample row";
                break;
            }
        }
        add("events_on_sample_times", ok, detail);
    }

    // Exact commits: the committed value is the detector output at that row.
    {
        bool ok = true;
        std::string detail;
        for (const auto& e : log.events) {
            if (!e.delivered || e.row >= log.rows.size()) continue;
            const auto& r = log.rows[e.row];
            const Vec& y = e.side == Side::plant ? r.y_p : r.y_c;
            const bool same = e.value == y && (e.side != Side::plant || r.uc_tilde == y);
            if (!same) {
                ok = false;
                detail = std::string(to_string(e.side)) + " commit at t=" + trace_io::fmt(e.time) +
                         " differs from the output at that sample";
                break;
            }
        }
        add("commit_exact", ok, detail);
    }

    // Triggering inequality between successful events.
    {
        const auto ap = log.attempts(Side::plant);
        const auto ac = log.attempts(Side::controller);
        const auto y_p = log.column([](const TraceRow& r) { return r.y_p; });
        const auto e_p = log.column([](const TraceRow& r) { return r.e_p; });
        const auto y_c = log.column([](const TraceRow& r) { return r.y_c; });
        const auto e_c = log.column([](const TraceRow& r) { return r.e_c; });
        const auto tp = trigger_inequality_check(t, y_p, e_p, ap, sc.trigger_p.delta);
        const auto tc = trigger_inequality_check(t, y_c, e_c, ac, sc.trigger_c.delta);
        add("trigger_inequality_plant", tp.holds, cmd_detail::times_preview(tp.violation_times));
        add("trigger_inequality_controller", tc.holds, cmd_detail::times_preview(tc.violation_times));
        const auto bp = sampled_output_bound_check(t, y_p, ap, sc.trigger_p.delta);
        const auto bc = sampled_output_bound_check(t, y_c, ac, sc.trigger_c.delta);
        add("output_bound_plant", bp.holds,
            cmd_detail::times_preview(bp.violation_times) + ", " + std::to_string(bp.excluded_intervals.size()) +
                " dropout interval(s) excluded");
        add("output_bound_controller", bc.holds,
            cmd_detail::times_preview(bc.violation_times) + ", " + std::to_string(bc.excluded_intervals.size()) +
                " dropout interval(s) excluded");
    }

    // Held signals change only when a packet arrives (or, for y~_c, when the
    // plant commits).
    {
        const auto arr_pc = cmd_detail::arrival_rows(log, Side::plant);
        const auto arr_cp = cmd_detail::arrival_rows(log, Side::controller);
        const auto com_p = cmd_detail::commit_rows(log, Side::plant);
        bool ok_ur = true, ok_uc = true, ok_yct = true;
        double first_bad = 0.0;
        for (std::size_t k = 1; k < log.rows.size(); ++k) {
            const auto& a = log.rows[k - 1];
            const auto& b = log.rows[k];
            if (b.u_r != a.u_r && !arr_cp[k]) {
                if (ok_ur) first_bad = b.t;
                ok_ur = false;
            }
            if (minus(b.u_c, b.w2) != minus(a.u_c, a.w2) && !arr_pc[k]) ok_uc = false;
            if (b.yc_tilde != a.yc_tilde && !arr_cp[k] && !com_p[k]) ok_yct = false;
        }
        add("zoh_u_r_changes_only_at_arrivals", ok_ur, ok_ur ? "" : "first at t=" + trace_io::fmt(first_bad));
        add("zoh_plant_samples_change_only_at_arrivals", ok_uc);
        add("yc_tilde_changes_only_at_arrivals_or_commits", ok_yct);
    }

    // Plant energy audit.
    if (sc.plant.has_storage() && log.rows.size() > 1) {
        const Trajectory tr = plant_trajectory(log);
        const auto res = dissipativity_residuals(sc.plant, tr);
        double excess = -std::numeric_limits<double>::infinity();
        double worst = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < res.size(); ++k) {
            worst = std::max(worst, res[k]);
            excess = std::max(excess, res[k] - dissipativity_tolerance(sc.plant.storage(tr.states[k])));
        }
        add("plant_dissipativity", excess <= 0.0, "max residual " + trace_io::fmt(worst));
    }

    // Design bounds.
    try {
        const DesignResult d = cmd_detail::design_of(pr);
        TraceLog copy = log;
        copy.w1_slope_bound = sc.w1.slope_bound();
        copy.w2_slope_bound = sc.w2.slope_bound();
        copy.h = sc.h;
        copy.t_end = sc.t_end;
        const Metrics m = compute_metrics(copy, pr.params, d, &sc.plant);
        add("l2_gain_within_bound", m.l2_within_ratio_bound,
            "empirical " + trace_io::fmt(m.l2_gain) +
                (d.gamma_bound ? ", bound " + trace_io::fmt(d.gamma_bound->ratio_form) : ", no bound"));
        add("dropout_budget_pc", m.budget_ok_pc,
            std::to_string(m.max_drops_pc) + " consecutive, budget " + std::to_string(d.d_p.budget));
        add("dropout_budget_cp", m.budget_ok_cp,
            std::to_string(m.max_drops_cp) + " consecutive, budget " + std::to_string(d.d_c.budget));
        // Reported, not gating: the inter-event bounds are compared to gaps
        // between detections at sample resolution.
        rep.info.put("info.inter_event_plant_ok", m.inter_event_plant.ok);
        rep.info.put("info.inter_event_plant_violations", m.inter_event_plant.violations);
        rep.info.put("info.inter_event_controller_ok", m.inter_event_controller.ok);
        rep.info.put("info.inter_event_controller_violations", m.inter_event_controller.violations);
    } catch (const Error& e) {
        add("design_feasible", false, e.what());
    }
    return rep;
}

[[nodiscard]] inline TraceLog load_trace_dir(const std::filesystem::path& dir) {
    std::ifstream ft(dir / "trace.csv");
    if (!ft) throw TraceFormatError("missing trace file '" + (dir / "trace.csv").string() + "'");
    TraceLog log = read_trace_csv(ft);
    std::ifstream fe(dir / "events.csv");
    if (!fe) throw TraceFormatError("missing events file '" + (dir / "events.csv").string() + "'");
    log.events = read_events_csv(fe);
    return log;
}

inline int cmd_verify(const Problem& pr, const std::filesystem::path& trace_dir, const std::filesystem::path& out_dir,
                      std::ostream& log) {
    TraceLog trace;
    try {
        trace = load_trace_dir(trace_dir);
    } catch (const Error& e) {
        log << "verify: " << e.what() << '\n';
        return kExitUsage;
    }
    const VerifyReport rep = verify_trace(pr, trace);
    KvWriter kv;
    for (const auto& c : rep.checks) {
        kv.put(c.name, c.pass ? "pass" : "fail");
        if (!c.detail.empty()) kv.put(c.name + ".detail", c.detail);
        log << (c.pass ? "pass  " : "FAIL  ") << c.name;
        if (!c.detail.empty()) log << "  (" << c.detail << ')';
        log << '\n';
    }
    kv.put("all_pass", rep.all_pass());
    cmd_detail::ensure_dir(out_dir);
    std::ofstream f(out_dir / "verify.kv");
    f << kv.str() << rep.info.str();
    return rep.all_pass() ? kExitOk : kExitVerify;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

namespace cmd_detail {

inline void write_series(const std::filesystem::path& path, const std::string& header,
                         const std::vector<std::pair<double, double>>& pts) {
    std::ofstream f(path);
    if (!f) throw Error("cannot write '" + path.string() + "'");
    f << "# " << header << '\n';
    for (const auto& [x, y] : pts) f << trace_io::fmt(x) << ' ' << trace_io::fmt(y) << '\n';
}

}  // namespace cmd_detail

/// Gnuplot-ready two-column files: one per state and output component,
/// inter-event stems per side, and dropout rasters per channel.
inline int cmd_report(const std::filesystem::path& trace_dir, const std::filesystem::path& out_dir, std::ostream& log) {
    TraceLog trace;
    try {
        trace = load_trace_dir(trace_dir);
    } catch (const Error& e) {
        log << "report: " << e.what() << '\n';
        return kExitUsage;
    }
    cmd_detail::ensure_dir(out_dir);
    std::size_t files = 0;

    auto series = [&](const char* name, Vec TraceRow::*member) {
        const std::size_t dim = (trace.rows.front().*member).size();
        for (std::size_t i = 0; i < dim; ++i) {
            std::vector<std::pair<double, double>> pts;
            pts.reserve(trace.rows.size());
            for (const auto& r : trace.rows) pts.emplace_back(r.t, (r.*member)[i]);
            const std::string col = std::string(name) + "_" + std::to_string(i);
            cmd_detail::write_series(out_dir / (col + ".dat"), "t " + col, pts);
            ++files;
        }
    };
    series("x_p", &TraceRow::x_p);
    series("x_c", &TraceRow::x_c);
    series("y_p", &TraceRow::y_p);
    series("y_c", &TraceRow::y_c);
    series("u_p", &TraceRow::u_p);
    series("u_c", &TraceRow::u_c);

    for (Side side : {Side::plant, Side::controller}) {
        std::vector<std::pair<double, double>> gaps;
        std::vector<std::pair<double, double>> drops;
        double prev = std::numeric_limits<double>::quiet_NaN();
        for (const auto& e : trace.events) {
            if (e.side != side) continue;
            drops.emplace_back(e.time, e.delivered ? 0.0 : 1.0);
            if (!e.delivered) continue;
            if (!std::isnan(prev)) gaps.emplace_back(e.time, e.time - prev);
            prev = e.time;
        }
        const std::string s = to_string(side);
        cmd_detail::write_series(out_dir / ("inter_event_" + s + ".dat"), "t gap", gaps);
        cmd_detail::write_series(out_dir / ("dropouts_" + std::string(side == Side::plant ? "pc" : "cp") + ".dat"),
                                 "t dropped", drops);
        files += 2;
    }
    log << "wrote " << files << " data files to " << out_dir.string() << '\n';
    return kExitOk;
}

}  // namespace etncs
