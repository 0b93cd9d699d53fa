#pragma once

// One-directional channel with a rate-bounded time-varying delay, packet
// dropouts and a zero-order hold at the receiving end.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "etncs/core.hpp"
#include "etncs/rng.hpp"

namespace etncs {

struct DelayProfile {
    enum class Form { constant, affine, table };

    Form form = Form::affine;
    double T0 = 0.0;          ///< initial delay [s]
    double rate_bound = 0.0;  ///< declared d, |dT/dt| <= d < 1
    /// (time, delay) knots for Form::table; linear in between, constant outside.
    std::vector<std::pair<double, double>> table;

    [[nodiscard]] static DelayProfile constant(double T) { return {Form::constant, T, 0.0, {}}; }
    [[nodiscard]] static DelayProfile affine(double T0, double d) { return {Form::affine, T0, d, {}}; }

    [[nodiscard]] double delay_at(double t) const {
        switch (form) {
            case Form::constant: return T0;
            case Form::affine: return T0 + rate_bound * t;
            case Form::table: {
                if (table.empty()) return T0;
                if (t <= table.front().first) return table.front().second;
                if (t >= table.back().first) return table.back().second;
                auto it = std::upper_bound(table.begin(), table.end(), t,
                                           [](double v, const auto& knot) { return v < knot.first; });
                const auto& [t1, T1] = *it;
                const auto& [t0, Tv0] = *(it - 1);
                return Tv0 + (T1 - Tv0) * (t - t0) / (t1 - t0);
            }
        }
        return T0;
    }

    void validate() const {
        if (!(rate_bound >= 0.0 && rate_bound < 1.0)) throw Error("delay: rate bound d must lie in [0, 1)");
        if (!(T0 >= 0.0)) throw Error("delay: T0 must be nonnegative");
        if (form == Form::table) {
            for (std::size_t i = 0; i < table.size(); ++i) {
                if (!(table[i].second >= 0.0)) throw Error("delay: table delays must be nonnegative");
                if (i > 0 && !(table[i].first > table[i - 1].first))
                    throw Error("delay: table times must be strictly increasing");
            }
        }
    }
};

/// True iff every finite-difference slope of T over the grid is within d.
[[nodiscard]] inline bool rate_bound_check(const DelayProfile& profile, std::span<const double> grid,
                                           double tol = 1e-9) {
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const double dt = grid[i + 1] - grid[i];
        if (!(dt > 0.0)) continue;
        const double slope = (profile.delay_at(grid[i + 1]) - profile.delay_at(grid[i])) / dt;
        if (std::abs(slope) > profile.rate_bound + tol) return false;
    }
    return true;
}

struct DropoutModel {
    enum class Kind { none, bernoulli, pattern };

    Kind kind = Kind::none;
    double p = 0.0;
    std::uint64_t seed = 0;
    std::vector<bool> pattern;  ///< true = drop; cycles over attempts
    /// Longest run of consecutive drops the model may produce; a further
    /// attempt is delivered. Unlimited by default.
    std::optional<std::size_t> max_consecutive;

    void validate() const {
        if (kind == Kind::bernoulli && !(p >= 0.0 && p <= 1.0)) throw Error("dropout: p must lie in [0, 1]");
        if (kind == Kind::pattern && pattern.empty()) throw Error("dropout: empty pattern");
    }

    /// "1" / "D" drop, "0" / "K" keep. Other characters are ignored.
    [[nodiscard]] static std::vector<bool> parse_pattern(std::string_view s) {
        std::vector<bool> out;
        for (char c : s) {
            if (c == '1' || c == 'D' || c == 'd') out.push_back(true);
            else if (c == '0' || c == 'K' || c == 'k') out.push_back(false);
        }
        return out;
    }
};

struct PacketRecord {
    std::uint64_t index = 0;  ///< attempt number on this channel
    double send_time = 0.0;
    Vec payload;
    double arrival_time = std::numeric_limits<double>::infinity();  ///< inf when dropped
    bool dropped = false;
};

struct HoldState {
    Vec current_value;
    double last_update = -std::numeric_limits<double>::infinity();
};

struct ChannelConfig {
    DelayProfile delay;
    DropoutModel dropout;
    std::uint64_t channel_id = 0;
    Vec initial_hold;  ///< empty: zero vector of the payload dimension

    void validate() const {
        delay.validate();
        dropout.validate();
    }
};

class Channel {
public:
    Channel(ChannelConfig cfg, std::size_t dim) : cfg_(std::move(cfg)), dim_(dim) {
        cfg_.validate();
        hold_.current_value = cfg_.initial_hold.empty() ? Vec(dim_, 0.0) : cfg_.initial_hold;
        if (hold_.current_value.size() != dim_) throw DimensionError("channel: initial hold has wrong dimension");
    }

    /// Sends through the dropout model.
    PacketRecord send(double t, Vec payload) { return send_impl(t, std::move(payload), false); }

    /// Sends bypassing the dropout model; does not advance the dropout stream.
    PacketRecord send_reliable(double t, Vec payload) { return send_impl(t, std::move(payload), true); }

    /// Delivers every packet with arrival_time <= t, in arrival order, and
    /// returns the held value.
    const Vec& poll(double t) {
        while (!pending_.empty() && pending_.front().arrival_time <= t) {
            hold_.current_value = std::move(pending_.front().payload);
            hold_.last_update = pending_.front().arrival_time;
            pending_.erase(pending_.begin());
        }
        return hold_.current_value;
    }

    [[nodiscard]] const HoldState& hold() const noexcept { return hold_; }
    [[nodiscard]] const std::vector<PacketRecord>& records() const noexcept { return records_; }
    [[nodiscard]] const ChannelConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] std::size_t max_consecutive_drops() const noexcept { return max_run_; }

private:
    bool decide_drop() {
        const auto& m = cfg_.dropout;
        const std::uint64_t i = dropout_index_++;
        bool drop = false;
        switch (m.kind) {
            case DropoutModel::Kind::none: drop = false; break;
            case DropoutModel::Kind::bernoulli:
                drop = CounterRng(m.seed, cfg_.channel_id).uniform(i) < m.p;
                break;
            case DropoutModel::Kind::pattern: drop = m.pattern[i % m.pattern.size()]; break;
        }
        if (drop && m.max_consecutive && run_ >= *m.max_consecutive) drop = false;
        return drop;
    }

    PacketRecord send_impl(double t, Vec payload, bool reliable) {
        if (!records_.empty() && t < records_.back().send_time)
            throw Error("channel " + std::to_string(cfg_.channel_id) + ": send times must be nondecreasing");
        if (payload.size() != dim_) throw DimensionError("channel: payload has wrong dimension");

        PacketRecord rec;
        rec.index = records_.size();
        rec.send_time = t;
        rec.payload = std::move(payload);
        rec.dropped = reliable ? false : decide_drop();
        if (rec.dropped) {
            ++run_;
            max_run_ = std::max(max_run_, run_);
        } else {
            run_ = 0;
            rec.arrival_time = t + cfg_.delay.delay_at(t);
            auto pos = std::upper_bound(pending_.begin(), pending_.end(), rec.arrival_time,
                                        [](double a, const PacketRecord& r) { return a < r.arrival_time; });
            pending_.insert(pos, rec);
        }
        records_.push_back(rec);
        return rec;
    }

    ChannelConfig cfg_;
    std::size_t dim_;
    HoldState hold_;
    std::vector<PacketRecord> pending_;  // sorted by arrival, stable in send order
    std::vector<PacketRecord> records_;
    std::uint64_t dropout_index_ = 0;
    std::size_t run_ = 0;
    std::size_t max_run_ = 0;
};

}  // namespace etncs
