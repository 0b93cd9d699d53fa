#pragma once

// Closed-loop executor for the event-triggered networked interconnection:
//
//   plant --detector--> Q_p --chan_pc--> hold --> controller
//     ^                                               |
//     +-- M block <-- hold <--chan_cp-- Q_c <--detector+
//
// Each sample t_k is processed in a fixed order:
//   1. plant output y_p(t_k); plant detector; on firing, Q_p(m11 y_p) is sent
//      on chan_pc and, if delivered, y_p becomes the committed sample u~_c.
//   2. chan_pc is polled at t_k; u_c = w2 + held y_qp; y_c is evaluated.
//   3. controller detector; on firing, Q_c(y_c) is sent on chan_cp.
//   4. chan_cp is polled at t_k giving u_r; y~_c = (u_r - m21 u~_c) / m22;
//      u_p = w1 - y~_c.
//   5. the row is recorded, then both systems are integrated over
//      [t_k, t_k + h] with u_p and u_c held.
// Polls follow the sends of the same sample, so a zero-delay channel
// delivers within the sample.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "etncs/core.hpp"
#include "etncs/design.hpp"
#include "etncs/network.hpp"
#include "etncs/quantizer.hpp"
#include "etncs/rng.hpp"
#include "etncs/trigger.hpp"

namespace etncs {

class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, std::size_t row, double t) : Error(what), row_(row), time_(t) {}
    [[nodiscard]] std::size_t row() const noexcept { return row_; }
    [[nodiscard]] double time() const noexcept { return time_; }

private:
    std::size_t row_;
    double time_;
};

/// Scalar exogenous signal, broadcast to every channel of the loop.
struct SignalSpec {
    enum class Kind { zero, constant, random_piecewise, sinusoid };

    Kind kind = Kind::zero;
    double value = 0.0;  ///< constant
    double lo = 0.0;     ///< random_piecewise: uniform on [lo, hi]
    double hi = 1.0;
    double dwell = 0.1;  ///< random_piecewise: hold time of each draw [s]
    std::uint64_t seed = 0;
    std::uint64_t stream = 100;
    double amplitude = 1.0;  ///< sinusoid: offset + amplitude sin(2 pi f t + phase)
    double frequency = 1.0;  ///< [Hz]
    double phase = 0.0;
    double offset = 0.0;

    [[nodiscard]] double at(double t) const {
        switch (kind) {
            case Kind::zero: return 0.0;
            case Kind::constant: return value;
            case Kind::random_piecewise: {
                const auto idx = static_cast<std::uint64_t>(std::floor(t / dwell + 1e-9));
                return lo + (hi - lo) * CounterRng(seed, stream).uniform(idx);
            }
            case Kind::sinusoid:
                return offset + amplitude * std::sin(2.0 * std::numbers::pi * frequency * t + phase);
        }
        return 0.0;
    }

    /// Bound on |dw/dt| between switching instants.
    [[nodiscard]] double slope_bound() const {
        if (kind == Kind::sinusoid) return std::abs(amplitude) * 2.0 * std::numbers::pi * std::abs(frequency);
        return 0.0;
    }

    void validate() const {
        if (kind == Kind::random_piecewise && (!(dwell > 0.0) || !(hi >= lo)))
            throw Error("signal: random_piecewise needs dwell > 0 and hi >= lo");
    }
};

struct ScenarioConfig {
    SystemModel plant;
    SystemModel controller;
    Vec plant_x0;
    Vec controller_x0;
    TriggerConfig trigger_p{0.4};
    TriggerConfig trigger_c{0.15};
    QuantizerSpec quant_p;
    QuantizerSpec quant_c;
    ChannelConfig chan_pc;
    ChannelConfig chan_cp;
    MMatrix M;
    SignalSpec w1;
    SignalSpec w2;
    double t_end = 20.0;
    double h = 1e-3;
    /// When false the t = 0 transmissions bypass the dropout models.
    bool drop_first_allowed = false;
    double divergence_limit = 1e9;

    [[nodiscard]] std::size_t signal_dim() const noexcept { return plant.output_dim; }
    [[nodiscard]] std::size_t sample_count() const { return static_cast<std::size_t>(std::floor(t_end / h + 1e-9)) + 1; }

    void validate() const {
        plant.validate();
        controller.validate();
        if (!(t_end > 0.0) || !(h > 0.0)) throw Error("scenario: t_end and h must be positive");
        if (controller.input_dim != plant.output_dim)
            throw DimensionError("scenario: plant and controller signal dimensions differ");
        if (plant_x0.size() != plant.state_dim) throw DimensionError("scenario: plant x0 has wrong dimension");
        if (controller_x0.size() != controller.state_dim)
            throw DimensionError("scenario: controller x0 has wrong dimension");
        trigger_p.validate();
        trigger_c.validate();
        quant_p.validate();
        quant_c.validate();
        chan_pc.validate();
        chan_cp.validate();
        M.validate();
        w1.validate();
        w2.validate();
    }
};

/// One sample of the closed loop. Inputs are the values held over
/// [t, t + h); e_p and e_c are the errors the detectors evaluated at t,
/// before any commit at t.
struct TraceRow {
    double t = 0.0;
    Vec x_p, y_p, e_p, u_p;
    Vec x_c, y_c, e_c, u_c;
    Vec y_r;         ///< m11 u~_c
    Vec u_r;         ///< held, delayed Q_c output at the plant side
    Vec yc_tilde;    ///< (u_r - m21 u~_c) / m22
    Vec uc_tilde;    ///< last committed plant sample
    Vec y_qp;        ///< last delivered Q_p output (before delay)
    Vec y_qc;        ///< last delivered Q_c output (before delay)
    Vec w1;
    Vec w2;
};

enum class Side { plant, controller };

[[nodiscard]] inline const char* to_string(Side s) { return s == Side::plant ? "plant" : "controller"; }

struct EventRecord {
    Side side = Side::plant;
    double time = 0.0;
    std::size_t row = 0;
    bool delivered = false;
    double arrival_time = std::numeric_limits<double>::infinity();
    Vec value;    ///< detector output at the attempt (y_p or y_c)
    Vec payload;  ///< quantized value put on the channel
};

struct TraceLog {
    std::vector<TraceRow> rows;
    std::vector<EventRecord> events;
    double h = 0.0;
    double t_end = 0.0;
    double w1_slope_bound = 0.0;
    double w2_slope_bound = 0.0;

    [[nodiscard]] std::vector<double> times() const {
        std::vector<double> t;
        t.reserve(rows.size());
        for (const auto& r : rows) t.push_back(r.t);
        return t;
    }

    template <typename Get>
    [[nodiscard]] std::vector<Vec> column(Get get) const {
        std::vector<Vec> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(get(r));
        return out;
    }

    [[nodiscard]] std::vector<Attempt> attempts(Side side) const {
        std::vector<Attempt> out;
        for (const auto& e : events)
            if (e.side == side) out.push_back({e.time, e.value, e.delivered});
        return out;
    }
};

namespace detail {

inline void guard_finite(const Vec& x, double limit, std::size_t row, double t, const char* what) {
    if (!all_finite(x) || norm(x) > limit) {
        std::ostringstream os;
        os << "divergence: " << what << " left the admissible region at row " << row << " (t=" << t << ")";
        throw DivergenceError(os.str(), row, t);
    }
}

}  // namespace detail

[[nodiscard]] inline TraceLog run_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    const std::size_t m = cfg.signal_dim();
    const std::size_t n = cfg.sample_count();

    Channel pc(cfg.chan_pc, m);
    Channel cp(cfg.chan_cp, m);
    DetectorState det_p = DetectorState::zero(m);
    DetectorState det_c = DetectorState::zero(m);

    TraceLog log;
    log.h = cfg.h;
    log.t_end = cfg.t_end;
    log.w1_slope_bound = cfg.w1.slope_bound();
    log.w2_slope_bound = cfg.w2.slope_bound();
    log.rows.reserve(n);

    Vec x_p = cfg.plant_x0;
    Vec x_c = cfg.controller_x0;
    Vec u_p_prev(m, 0.0);
    Vec y_qp_last(m, 0.0);
    Vec y_qc_last(m, 0.0);
    const auto& M = cfg.M;

    auto attempt = [&](Channel& ch, Side side, std::size_t k, double t, const Vec& value, Vec payload) {
        const bool reliable = k == 0 && !cfg.drop_first_allowed;
        PacketRecord rec = reliable ? ch.send_reliable(t, std::move(payload)) : ch.send(t, std::move(payload));
        log.events.push_back({side, t, k, !rec.dropped, rec.arrival_time, value, rec.payload});
        return rec;
    };

    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * cfg.h;
        TraceRow row;
        row.t = t;
        row.w1 = Vec(m, cfg.w1.at(t));
        row.w2 = Vec(m, cfg.w2.at(t));

        // Plant side detector.
        row.x_p = x_p;
        row.y_p = cfg.plant.output(x_p, u_p_prev, t);
        row.e_p = minus(row.y_p, det_p.last_sent_value);
        if (k == 0 || check_violation(det_p, row.y_p, cfg.trigger_p)) {
            Vec payload = quantize(cfg.quant_p, scaled(row.y_p, M.m11));
            const PacketRecord rec = attempt(pc, Side::plant, k, t, row.y_p, payload);
            if (!rec.dropped) {
                det_p = commit_transmission(std::move(det_p), row.y_p, t);
                y_qp_last = rec.payload;
            }
        }
        row.uc_tilde = det_p.last_sent_value;
        row.y_r = scaled(row.uc_tilde, M.m11);
        row.y_qp = y_qp_last;

        // Controller side.
        row.x_c = x_c;
        row.u_c = axpy(row.w2, 1.0, pc.poll(t));
        row.y_c = cfg.controller.output(x_c, row.u_c, t);
        row.e_c = minus(row.y_c, det_c.last_sent_value);
        if (k == 0 || check_violation(det_c, row.y_c, cfg.trigger_c)) {
            Vec payload = quantize(cfg.quant_c, row.y_c);
            const PacketRecord rec = attempt(cp, Side::controller, k, t, row.y_c, payload);
            if (!rec.dropped) {
                det_c = commit_transmission(std::move(det_c), row.y_c, t);
                y_qc_last = rec.payload;
            }
        }
        row.y_qc = y_qc_last;

        // M block at the plant.
        row.u_r = cp.poll(t);
        row.yc_tilde = scaled(axpy(row.u_r, -M.m21, row.uc_tilde), 1.0 / M.m22);
        row.u_p = minus(row.w1, row.yc_tilde);

        detail::guard_finite(x_p, cfg.divergence_limit, k, t, "plant state");
        detail::guard_finite(x_c, cfg.divergence_limit, k, t, "controller state");
        detail::guard_finite(row.u_p, cfg.divergence_limit, k, t, "plant input");
        detail::guard_finite(row.u_c, cfg.divergence_limit, k, t, "controller input");

        if (k + 1 < n) {
            try {
                x_p = integrate_step(cfg.plant, x_p, row.u_p, t, cfg.h);
                x_c = integrate_step(cfg.controller, x_c, row.u_c, t, cfg.h);
            } catch (const IntegrationError& e) {
                throw DivergenceError(std::string("divergence: ") + e.what(), k, t);
            }
        }
        u_p_prev = row.u_p;
        log.rows.push_back(std::move(row));
    }
    return log;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct InterEventCheck {
    std::size_t intervals = 0;
    double min_gap = 0.0;
    double worst_slack = std::numeric_limits<double>::infinity();  ///< min(gap - bound)
    std::size_t violations = 0;  ///< intervals with gap < bound - h
    bool ok = true;
};

struct Metrics {
    std::size_t rows = 0;
    std::size_t plant_attempts = 0;
    std::size_t plant_events = 0;
    std::size_t controller_attempts = 0;
    std::size_t controller_events = 0;
    double min_gap_plant = 0.0;
    double min_gap_controller = 0.0;
    std::size_t max_drops_pc = 0;
    std::size_t max_drops_cp = 0;
    double l2_gain = 0.0;
    double sup_state_plant = 0.0;
    double c0 = 0.0, c1 = 0.0, c2 = 0.0;
    double c0p = 0.0, c1p = 0.0, c2p = 0.0;
    std::optional<double> max_dissipativity_residual;
    std::optional<double> max_dissipativity_excess;  ///< max(residual - tolerance)
    bool l2_within_ratio_bound = false;
    bool budget_ok_pc = false;
    bool budget_ok_cp = false;
    InterEventCheck inter_event_plant;
    InterEventCheck inter_event_controller;
};

namespace detail {

inline std::size_t max_consecutive_drops(const TraceLog& log, Side side) {
    std::size_t run = 0;
    std::size_t best = 0;
    for (const auto& e : log.events) {
        if (e.side != side) continue;
        run = e.delivered ? 0 : run + 1;
        best = std::max(best, run);
    }
    return best;
}

template <typename Bound>
InterEventCheck inter_event_check(const TraceLog& log, Side side, Bound bound) {
    InterEventCheck c;
    c.min_gap = log.t_end;
    const EventRecord* prev = nullptr;
    for (const auto& e : log.events) {
        if (e.side != side || !e.delivered) continue;
        if (prev) {
            const double gap = e.time - prev->time;
            const double b = bound(norm(e.value));
            ++c.intervals;
            c.min_gap = std::min(c.min_gap, gap);
            c.worst_slack = std::min(c.worst_slack, gap - b);
            if (gap < b - log.h * (1.0 + 1e-9)) ++c.violations;
        }
        prev = &e;
    }
    c.ok = c.violations == 0;
    return c;
}

}  // namespace detail

/// Plant trajectory seen by the plant's own dissipativity inequality.
[[nodiscard]] inline Trajectory plant_trajectory(const TraceLog& log) {
    Trajectory tr;
    for (const auto& r : log.rows) {
        tr.times.push_back(r.t);
        tr.states.push_back(r.x_p);
        tr.inputs.push_back(r.u_p);
        tr.outputs.push_back(r.y_p);
    }
    return tr;
}

[[nodiscard]] inline Metrics compute_metrics(const TraceLog& log, const DesignParams& p, const DesignResult& design,
                                             const SystemModel* plant = nullptr) {
    Metrics mt;
    mt.rows = log.rows.size();
    for (const auto& e : log.events) {
        if (e.side == Side::plant) {
            ++mt.plant_attempts;
            mt.plant_events += e.delivered;
        } else {
            ++mt.controller_attempts;
            mt.controller_events += e.delivered;
        }
    }
    mt.max_drops_pc = detail::max_consecutive_drops(log, Side::plant);
    mt.max_drops_cp = detail::max_consecutive_drops(log, Side::controller);

    const auto t = log.times();
    const auto w1 = log.column([](const TraceRow& r) { return r.w1; });
    const auto y_p = log.column([](const TraceRow& r) { return r.y_p; });
    double w_energy = 0.0;
    for (std::size_t k = 0; k + 1 < t.size(); ++k) w_energy += norm_sq(w1[k]) + norm_sq(w1[k + 1]);
    mt.l2_gain = w_energy > 0.0 ? l2_gain_estimate(w1, y_p, t) : 0.0;

    mt.c0 = log.w1_slope_bound;
    mt.c0p = log.w2_slope_bound;
    for (const auto& r : log.rows) {
        mt.sup_state_plant = std::max(mt.sup_state_plant, norm(r.x_p));
        mt.c1 = std::max(mt.c1, norm(r.w1));
        mt.c2 = std::max(mt.c2, norm(r.yc_tilde));
        mt.c1p = std::max(mt.c1p, norm(r.w2));
        mt.c2p = std::max(mt.c2p, norm(minus(r.u_c, r.w2)));
    }

    if (plant && plant->has_storage() && log.rows.size() > 1) {
        const Trajectory tr = plant_trajectory(log);
        const auto res = dissipativity_residuals(*plant, tr);
        double worst = -std::numeric_limits<double>::infinity();
        double excess = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < res.size(); ++k) {
            worst = std::max(worst, res[k]);
            excess = std::max(excess, res[k] - dissipativity_tolerance(plant->storage(tr.states[k])));
        }
        mt.max_dissipativity_residual = worst;
        mt.max_dissipativity_excess = excess;
    }

    mt.l2_within_ratio_bound = design.gamma_bound && mt.l2_gain <= design.gamma_bound->ratio_form;
    mt.budget_ok_pc = mt.max_drops_pc <= static_cast<std::size_t>(design.d_p.budget);
    mt.budget_ok_cp = mt.max_drops_cp <= static_cast<std::size_t>(design.d_c.budget);

    // A zero denominator means no excitation; the bound degenerates to 0.
    mt.inter_event_plant = detail::inter_event_check(log, Side::plant, [&](double y) {
        try {
            return inter_event_bound_plant(p, mt.c0, mt.c1, mt.c2, y);
        } catch (const DesignError&) {
            return 0.0;
        }
    });
    mt.inter_event_controller = detail::inter_event_check(log, Side::controller, [&](double y) {
        try {
            return inter_event_bound_controller(p, mt.c0p, mt.c1p, mt.c2p, y);
        } catch (const DesignError&) {
            return 0.0;
        }
    });
    mt.min_gap_plant = mt.inter_event_plant.min_gap;
    mt.min_gap_controller = mt.inter_event_controller.min_gap;
    return mt;
}

}  // namespace etncs
