#pragma once

// Flat key = value scenario configuration.
//
//   # comment
//   plant.rho = 1.8
//   [chan_pc]          # prefixes following keys with "chan_pc."
//   T0 = 0.5
//
// Keys are dotted; a [section] line prefixes every following key until the
// next section ([] resets it). Overrides of the form key=value are applied
// after the file. The schema is documented in configs/schema.md.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "etncs/design.hpp"
#include "etncs/lti.hpp"
#include "etncs/models.hpp"
#include "etncs/sim.hpp"

namespace etncs {

class ConfigError : public Error {
public:
    using Error::Error;
};

namespace config_detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',' || c == ' ' || c == '\t' || c == ';') {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

}  // namespace config_detail

class Config {
public:
    [[nodiscard]] static Config parse(std::istream& is, const std::string& origin = "<config>") {
        Config c;
        std::string line;
        std::string section;
        std::size_t lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            const std::string t = config_detail::trim(line);
            if (t.empty()) continue;
            if (t.front() == '[') {
                if (t.back() != ']')
                    throw ConfigError(origin + ":" + std::to_string(lineno) + ": unterminated section header");
                section = config_detail::trim(std::string_view(t).substr(1, t.size() - 2));
                continue;
            }
            const auto eq = t.find('=');
            if (eq == std::string::npos)
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
            std::string key = config_detail::trim(std::string_view(t).substr(0, eq));
            if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
            if (!section.empty()) key = section + "." + key;
            c.set(key, config_detail::trim(std::string_view(t).substr(eq + 1)));
        }
        return c;
    }

    [[nodiscard]] static Config from_file(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw ConfigError("cannot open config file '" + path + "'");
        return parse(f, path);
    }

    [[nodiscard]] static Config from_string(const std::string& text) {
        std::istringstream is(text);
        return parse(is);
    }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    /// Applies "key=value".
    void apply_override(std::string_view kv) {
        const auto eq = kv.find('=');
        if (eq == std::string_view::npos) throw ConfigError("override '" + std::string(kv) + "' is not key=value");
        const std::string key = config_detail::trim(kv.substr(0, eq));
        if (key.empty()) throw ConfigError("override '" + std::string(kv) + "' has an empty key");
        set(key, config_detail::trim(kv.substr(eq + 1)));
    }

    [[nodiscard]] bool has(const std::string& key) const { return values_.count(key) != 0; }

    [[nodiscard]] std::optional<std::string> raw(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return std::nullopt;
        used_.insert(key);
        return it->second;
    }

    [[nodiscard]] std::string get_string(const std::string& key, const std::string& def) const {
        return raw(key).value_or(def);
    }

    [[nodiscard]] double get_double(const std::string& key, double def) const {
        const auto v = raw(key);
        return v ? to_double(key, *v) : def;
    }

    [[nodiscard]] std::optional<double> get_optional_double(const std::string& key) const {
        const auto v = raw(key);
        if (!v) return std::nullopt;
        return to_double(key, *v);
    }

    [[nodiscard]] std::uint64_t get_u64(const std::string& key, std::uint64_t def) const {
        const auto v = raw(key);
        if (!v) return def;
        char* end = nullptr;
        const unsigned long long r = std::strtoull(v->c_str(), &end, 10);
        if (v->empty() || end != v->c_str() + v->size() || v->front() == '-')
            throw ConfigError(key + ": expected a nonnegative integer, got '" + *v + "'");
        return r;
    }

    [[nodiscard]] bool get_bool(const std::string& key, bool def) const {
        const auto v = raw(key);
        if (!v) return def;
        if (*v == "1" || *v == "true" || *v == "yes" || *v == "on") return true;
        if (*v == "0" || *v == "false" || *v == "no" || *v == "off") return false;
        throw ConfigError(key + ": expected a boolean, got '" + *v + "'");
    }

    [[nodiscard]] Vec get_vec(const std::string& key, Vec def) const {
        const auto v = raw(key);
        if (!v) return def;
        Vec out;
        for (const auto& item : config_detail::split_list(*v)) out.push_back(to_double(key, item));
        return out;
    }

    /// Every key with its value, sorted, one "key = value" per line.
    [[nodiscard]] std::string echo() const {
        std::ostringstream os;
        for (const auto& [k, v] : values_) os << k << " = " << v << '\n';
        return os.str();
    }

    /// Keys that were never read; usually typos.
    [[nodiscard]] std::vector<std::string> unused_keys() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : values_)
            if (!used_.count(k)) out.push_back(k);
        return out;
    }

    [[nodiscard]] const std::map<std::string, std::string>& values() const noexcept { return values_; }

private:
    static double to_double(const std::string& key, const std::string& s) {
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (s.empty() || end != s.c_str() + s.size())
            throw ConfigError(key + ": expected a number, got '" + s + "'");
        return v;
    }

    std::map<std::string, std::string> values_;
    mutable std::set<std::string> used_;
};

// ---------------------------------------------------------------------------
// Mapping onto domain types
// ---------------------------------------------------------------------------

[[nodiscard]] inline SystemModel model_from_config(const Config& c, const std::string& prefix,
                                                   const std::string& default_model) {
    const std::string kind = c.get_string(prefix + ".model", default_model);
    SystemModel m;
    if (kind == "cubic_plant") {
        m = models::cubic_plant();
    } else if (kind == "lead_controller") {
        m = models::lead_controller();
    } else if (kind == "first_order") {
        models::FirstOrderLti p;
        p.a = c.get_double(prefix + ".a", p.a);
        p.b = c.get_double(prefix + ".b", p.b);
        p.c = c.get_double(prefix + ".c", p.c);
        p.d = c.get_double(prefix + ".d", p.d);
        p.storage_weight = c.get_double(prefix + ".storage_weight", p.storage_weight);
        m = models::first_order(p, {}, prefix);
    } else {
        throw ConfigError(prefix + ".model: unknown model '" + kind + "'");
    }
    m.indices.rho = c.get_double(prefix + ".rho", m.indices.rho);
    m.indices.nu = c.get_double(prefix + ".nu", m.indices.nu);
    return m;
}

[[nodiscard]] inline QuantizerSpec quantizer_from_config(const Config& c, const std::string& prefix) {
    QuantizerSpec q;
    q.kind = quantizer_kind_from_string(c.get_string(prefix + ".kind", std::string(to_string(q.kind))));
    q.step = c.get_double(prefix + ".step", q.step);
    q.density = c.get_double(prefix + ".density", q.density);
    q.u0 = c.get_double(prefix + ".u0", q.u0);
    if (q.kind == QuantizerKind::logarithmic) q.b = 1.0 + q.log_sigma();
    if (q.kind == QuantizerKind::passthrough) q.a = q.b = 1.0;
    q.a = c.get_double(prefix + ".a", q.a);
    q.b = c.get_double(prefix + ".b", q.b);
    return q;
}

[[nodiscard]] inline ChannelConfig channel_from_config(const Config& c, const std::string& prefix,
                                                       std::uint64_t channel_id, std::uint64_t default_seed) {
    ChannelConfig ch;
    ch.channel_id = channel_id;
    const std::string form = c.get_string(prefix + ".form", "affine");
    ch.delay.T0 = c.get_double(prefix + ".T0", 0.0);
    ch.delay.rate_bound = c.get_double(prefix + ".d", 0.0);
    if (form == "affine") {
        ch.delay.form = DelayProfile::Form::affine;
    } else if (form == "constant") {
        ch.delay.form = DelayProfile::Form::constant;
    } else if (form == "table") {
        ch.delay.form = DelayProfile::Form::table;
        // "t0:T0, t1:T1, ..."
        for (const auto& item : config_detail::split_list(c.get_string(prefix + ".table", ""))) {
            const auto colon = item.find(':');
            if (colon == std::string::npos) throw ConfigError(prefix + ".table: expected time:delay pairs");
            ch.delay.table.emplace_back(std::strtod(item.substr(0, colon).c_str(), nullptr),
                                        std::strtod(item.substr(colon + 1).c_str(), nullptr));
        }
    } else {
        throw ConfigError(prefix + ".form: unknown delay form '" + form + "'");
    }
    ch.initial_hold = c.get_vec(prefix + ".initial_hold", {});

    const std::string dk = c.get_string(prefix + ".dropout.kind", "none");
    if (dk == "none") ch.dropout.kind = DropoutModel::Kind::none;
    else if (dk == "bernoulli") ch.dropout.kind = DropoutModel::Kind::bernoulli;
    else if (dk == "pattern") ch.dropout.kind = DropoutModel::Kind::pattern;
    else throw ConfigError(prefix + ".dropout.kind: unknown dropout model '" + dk + "'");
    ch.dropout.p = c.get_double(prefix + ".dropout.p", 0.0);
    ch.dropout.seed = c.get_u64(prefix + ".dropout.seed", default_seed);
    ch.dropout.pattern = DropoutModel::parse_pattern(c.get_string(prefix + ".dropout.pattern", ""));
    if (c.has(prefix + ".dropout.max_consecutive"))
        ch.dropout.max_consecutive = c.get_u64(prefix + ".dropout.max_consecutive", 0);
    return ch;
}

[[nodiscard]] inline SignalSpec signal_from_config(const Config& c, const std::string& prefix,
                                                   std::uint64_t default_seed, std::uint64_t stream) {
    SignalSpec s;
    const std::string kind = c.get_string(prefix + ".kind", "zero");
    if (kind == "zero") s.kind = SignalSpec::Kind::zero;
    else if (kind == "constant") s.kind = SignalSpec::Kind::constant;
    else if (kind == "random_piecewise" || kind == "uniform") s.kind = SignalSpec::Kind::random_piecewise;
    else if (kind == "sinusoid") s.kind = SignalSpec::Kind::sinusoid;
    else throw ConfigError(prefix + ".kind: unknown signal kind '" + kind + "'");
    s.value = c.get_double(prefix + ".value", s.value);
    s.lo = c.get_double(prefix + ".lo", s.lo);
    s.hi = c.get_double(prefix + ".hi", s.hi);
    s.dwell = c.get_double(prefix + ".dwell", s.dwell);
    s.seed = c.get_u64(prefix + ".seed", default_seed);
    s.stream = stream;
    s.amplitude = c.get_double(prefix + ".amplitude", s.amplitude);
    s.frequency = c.get_double(prefix + ".frequency", s.frequency);
    s.phase = c.get_double(prefix + ".phase", s.phase);
    s.offset = c.get_double(prefix + ".offset", s.offset);
    return s;
}

/// Realization of a first-order model named in the config, if it is one.
[[nodiscard]] inline std::optional<LtiSystem> lti_from_config(const Config& c, const std::string& prefix,
                                                             const std::string& default_model) {
    const std::string kind = c.get_string(prefix + ".model", default_model);
    models::FirstOrderLti p;
    if (kind == "first_order") {
        p.a = c.get_double(prefix + ".a", p.a);
        p.b = c.get_double(prefix + ".b", p.b);
        p.c = c.get_double(prefix + ".c", p.c);
        p.d = c.get_double(prefix + ".d", p.d);
    } else if (kind != "lead_controller") {
        return std::nullopt;
    }
    LtiSystem s;
    s.A = Eigen::MatrixXd::Constant(1, 1, p.a);
    s.B = Eigen::MatrixXd::Constant(1, 1, p.b);
    s.C = Eigen::MatrixXd::Constant(1, 1, p.c);
    s.D = Eigen::MatrixXd::Constant(1, 1, p.d);
    return s;
}

/// Everything a config file describes.
struct Problem {
    ScenarioConfig scenario;  ///< M is filled from the design
    DesignParams params;
    double m11 = 1.0;
    double m22 = 0.0;         ///< resolved choice, sign included
    std::optional<double> auto_margin;
    std::optional<LtiSystem> plant_lti;
    std::optional<LtiSystem> controller_lti;
};

[[nodiscard]] inline Problem problem_from_config(const Config& c) {
    Problem pr;
    auto& s = pr.scenario;
    const std::uint64_t seed = c.get_u64("sim.seed", 0);

    s.plant = model_from_config(c, "plant", "cubic_plant");
    s.controller = model_from_config(c, "controller", "lead_controller");
    pr.plant_lti = lti_from_config(c, "plant", "cubic_plant");
    pr.controller_lti = lti_from_config(c, "controller", "lead_controller");
    s.plant_x0 = c.get_vec("plant.x0", Vec(s.plant.state_dim, 0.0));
    s.controller_x0 = c.get_vec("controller.x0", Vec(s.controller.state_dim, 0.0));
    s.trigger_p.delta = c.get_double("trigger_p.delta", s.trigger_p.delta);
    s.trigger_c.delta = c.get_double("trigger_c.delta", s.trigger_c.delta);
    s.quant_p = quantizer_from_config(c, "quant_p");
    s.quant_c = quantizer_from_config(c, "quant_c");
    s.chan_pc = channel_from_config(c, "chan_pc", 1, seed);
    s.chan_cp = channel_from_config(c, "chan_cp", 2, seed);
    s.w1 = signal_from_config(c, "w1", seed, 100);
    s.w2 = signal_from_config(c, "w2", seed, 200);
    s.t_end = c.get_double("sim.t_end", s.t_end);
    s.h = c.get_double("sim.h", s.h);
    s.drop_first_allowed = c.get_bool("sim.drop_first_allowed", s.drop_first_allowed);
    s.divergence_limit = c.get_double("sim.divergence_limit", s.divergence_limit);

    auto& p = pr.params;
    p.rho_p = s.plant.indices.rho;
    p.nu_p = s.plant.indices.nu;
    p.rho_c = s.controller.indices.rho;
    p.nu_c = s.controller.indices.nu;
    p.delta_p = s.trigger_p.delta;
    p.delta_c = s.trigger_c.delta;
    p.alpha = c.get_double("design.alpha", p.alpha);
    p.gamma = c.get_double("design.gamma", p.gamma);
    p.b_p = s.quant_p.b;
    p.b_c = s.quant_c.b;
    p.d1 = s.chan_pc.delay.rate_bound;
    p.d2 = s.chan_cp.delay.rate_bound;

    pr.m11 = c.get_double("M.m11", 1.0);
    pr.auto_margin = c.get_optional_double("design.auto_margin");
    const auto m22 = c.get_optional_double("M.m22");
    const auto m22_sq = c.get_optional_double("M.m22_squared");
    if (pr.auto_margin) {
        if (!(*pr.auto_margin > 0.0)) throw ConfigError("design.auto_margin must be positive");
        pr.m22 = std::sqrt(*pr.auto_margin * m22_squared_lower_bound(p));
    } else if (m22) {
        pr.m22 = *m22;
    } else if (m22_sq) {
        if (!(*m22_sq > 0.0)) throw ConfigError("M.m22_squared must be positive");
        pr.m22 = std::sqrt(*m22_sq);
    } else {
        throw ConfigError("one of M.m22, M.m22_squared or design.auto_margin is required");
    }
    return pr;
}

}  // namespace etncs
