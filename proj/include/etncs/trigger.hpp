#pragma once

// Relative-error event detectors: a transmission is attempted whenever
// |y - y_last|^2 > delta |y|^2.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "etncs/core.hpp"

namespace etncs {

struct TriggerConfig {
    double delta = 0.4;

    void validate() const {
        if (!(delta > 0.0 && delta <= 1.0)) throw Error("trigger: delta must lie in (0, 1]");
    }
};

struct DetectorState {
    Vec last_sent_value;
    double last_sent_time = -std::numeric_limits<double>::infinity();
    std::size_t event_count = 0;

    [[nodiscard]] static DetectorState zero(std::size_t dim) { return {Vec(dim, 0.0), -std::numeric_limits<double>::infinity(), 0}; }
};

[[nodiscard]] inline bool check_violation(const DetectorState& s, std::span<const double> y, const TriggerConfig& cfg) {
    const Vec e = minus(y, s.last_sent_value);
    return norm_sq(e) > cfg.delta * norm_sq(y);
}

/// State after a successful transmission of y at time t.
[[nodiscard]] inline DetectorState commit_transmission(DetectorState s, std::span<const double> y, double t) {
    if (t < s.last_sent_time) throw Error("commit_transmission: time goes backwards");
    s.last_sent_value.assign(y.begin(), y.end());
    s.last_sent_time = t;
    ++s.event_count;
    return s;
}

/// One transmission attempt seen by a detector: the output value at the
/// attempt and whether it reached the far side.
struct Attempt {
    double time = 0.0;
    Vec value;
    bool delivered = false;
};

struct IntervalCheckReport {
    bool holds = true;
    std::size_t samples_checked = 0;
    std::vector<double> violation_times;
    /// [start, end) intervals between successful transmissions that contain a
    /// dropped attempt; skipped by the output bound check.
    std::vector<std::pair<double, double>> excluded_intervals;
};

namespace detail {

// Index of every attempt keyed by sample position; attempts must lie on sample times.
struct AttemptCursor {
    std::span<const Attempt> attempts;
    std::size_t next = 0;

    // Attempts at exactly time t (there is at most one per sample).
    const Attempt* at(double t) {
        while (next < attempts.size() && attempts[next].time < t) ++next;
        if (next < attempts.size() && attempts[next].time == t) return &attempts[next];
        return nullptr;
    }
};

}  // namespace detail

/// Between consecutive successful transmissions, |e|^2 <= delta |y|^2 at every
/// sample that is not itself an attempt (attempts are where the rule fired).
/// errors[k] is the error the detector evaluated at sample k.
[[nodiscard]] inline IntervalCheckReport trigger_inequality_check(std::span<const double> times,
                                                                  std::span<const Vec> outputs,
                                                                  std::span<const Vec> errors,
                                                                  std::span<const Attempt> attempts, double delta,
                                                                  double rel_tol = 1e-12) {
    if (outputs.size() != times.size() || errors.size() != times.size())
        throw DimensionError("trigger_inequality_check: sequences are not aligned");
    IntervalCheckReport rep;
    detail::AttemptCursor cur{attempts};
    bool started = false;
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (const Attempt* a = cur.at(times[k])) {
            if (a->delivered) started = true;
            continue;
        }
        if (!started) continue;
        ++rep.samples_checked;
        const double lhs = norm_sq(errors[k]);
        const double rhs = delta * norm_sq(outputs[k]);
        if (lhs > rhs * (1.0 + rel_tol) + 1e-300) {
            rep.holds = false;
            rep.violation_times.push_back(times[k]);
        }
    }
    return rep;
}

/// |y(t_k)| <= (1 + sqrt(delta)) |y(t)| for every sample t in [t_k, t_{k+1})
/// where t_k, t_{k+1} are consecutive successful transmissions and no attempt
/// in between was dropped. Dropout intervals are reported, not checked.
[[nodiscard]] inline IntervalCheckReport sampled_output_bound_check(std::span<const double> times,
                                                                    std::span<const Vec> outputs,
                                                                    std::span<const Attempt> attempts, double delta,
                                                                    double rel_tol = 1e-12) {
    if (outputs.size() != times.size()) throw DimensionError("sampled_output_bound_check: sequences are not aligned");
    IntervalCheckReport rep;
    const double factor = 1.0 + std::sqrt(delta);

    // Successful transmissions and whether the interval they open is clean.
    struct Opening {
        double time;
        const Vec* value;
        bool clean;
    };
    std::vector<Opening> openings;
    for (const Attempt& a : attempts) {
        if (a.delivered) openings.push_back({a.time, &a.value, true});
        else if (!openings.empty()) openings.back().clean = false;
    }
    for (std::size_t i = 0; i < openings.size(); ++i) {
        if (!openings[i].clean) {
            const double end = i + 1 < openings.size() ? openings[i + 1].time : std::numeric_limits<double>::infinity();
            rep.excluded_intervals.emplace_back(openings[i].time, end);
        }
    }

    std::size_t j = 0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        while (j + 1 < openings.size() && openings[j + 1].time <= times[k]) ++j;
        if (openings.empty() || openings[j].time > times[k] || !openings[j].clean) continue;
        ++rep.samples_checked;
        const double lhs = norm(*openings[j].value);
        const double rhs = factor * norm(outputs[k]);
        if (lhs > rhs * (1.0 + rel_tol) + 1e-300) {
            rep.holds = false;
            rep.violation_times.push_back(times[k]);
        }
    }
    return rep;
}

}  // namespace etncs
