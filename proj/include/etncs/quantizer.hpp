#pragma once

// Static, symmetric, componentwise quantizers with passive sector bounds
//   a v'v <= v'q(v) <= b v'v.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "etncs/core.hpp"

namespace etncs {

enum class QuantizerKind {
    passthrough,        ///< q(v) = v
    uniform_mid_tread,  ///< step * round(v / step), zero is a level
    uniform_mid_riser,  ///< step * (floor(|v|/step) + 1/2) * sign(v), q(0) = 0
    logarithmic,        ///< levels +-u0 / density^j, j >= 0, dead zone below the smallest level
};

[[nodiscard]] inline std::string_view to_string(QuantizerKind k) {
    switch (k) {
        case QuantizerKind::passthrough: return "none";
        case QuantizerKind::uniform_mid_tread: return "uniform-mid-tread";
        case QuantizerKind::uniform_mid_riser: return "uniform-mid-riser";
        case QuantizerKind::logarithmic: return "logarithmic";
    }
    return "?";
}

[[nodiscard]] inline QuantizerKind quantizer_kind_from_string(std::string_view s) {
    if (s == "none" || s == "passthrough") return QuantizerKind::passthrough;
    if (s == "uniform-mid-tread" || s == "mid-tread") return QuantizerKind::uniform_mid_tread;
    if (s == "uniform-mid-riser" || s == "mid-riser") return QuantizerKind::uniform_mid_riser;
    if (s == "logarithmic" || s == "log") return QuantizerKind::logarithmic;
    throw Error("unknown quantizer kind '" + std::string(s) + "'");
}

struct QuantizerSpec {
    QuantizerKind kind = QuantizerKind::uniform_mid_tread;
    double step = 0.5;     ///< uniform kinds
    double density = 0.5;  ///< logarithmic, in (0, 1)
    double u0 = 1e-3;      ///< logarithmic: smallest positive level
    double a = 0.0;        ///< declared sector lower bound
    double b = 2.0;        ///< declared sector upper bound

    void validate() const {
        if (!(a >= 0.0) || !(b >= a) || !std::isfinite(b)) throw Error("quantizer: need 0 <= a <= b < inf");
        switch (kind) {
            case QuantizerKind::uniform_mid_tread:
            case QuantizerKind::uniform_mid_riser:
                if (!(step > 0.0)) throw Error("quantizer: step must be positive");
                break;
            case QuantizerKind::logarithmic:
                if (!(density > 0.0 && density < 1.0)) throw Error("quantizer: density must lie in (0, 1)");
                if (!(u0 > 0.0)) throw Error("quantizer: u0 must be positive");
                break;
            case QuantizerKind::passthrough: break;
        }
    }

    /// Half-width of the logarithmic quantization cells, (1 - density) / (1 + density).
    [[nodiscard]] double log_sigma() const noexcept { return (1.0 - density) / (1.0 + density); }
};

namespace detail {

inline double quantize_log_positive(const QuantizerSpec& s, double v) {
    const double sigma = s.log_sigma();
    if (v <= s.u0 / (1.0 + sigma)) return 0.0;
    // Level u_i = u0 / density^i covers (u_i/(1+sigma), u_i/(1-sigma)].
    const double ratio = 1.0 / s.density;
    double i = std::ceil(std::log(v * (1.0 - sigma) / s.u0) / std::log(ratio));
    if (i < 0.0) i = 0.0;
    double level = s.u0 * std::pow(ratio, i);
    // Guard the cell edges against rounding in the logarithm.
    while (i > 0.0 && v <= level / (1.0 + sigma)) {
        i -= 1.0;
        level = s.u0 * std::pow(ratio, i);
    }
    while (v > level / (1.0 - sigma)) {
        i += 1.0;
        level = s.u0 * std::pow(ratio, i);
    }
    return level;
}

}  // namespace detail

[[nodiscard]] inline double quantize_scalar(const QuantizerSpec& s, double v) {
    switch (s.kind) {
        case QuantizerKind::passthrough: return v;
        case QuantizerKind::uniform_mid_tread:
            // std::round rounds half away from zero, which keeps q odd.
            return s.step * std::round(v / s.step);
        case QuantizerKind::uniform_mid_riser: {
            if (v == 0.0) return 0.0;
            const double mag = s.step * (std::floor(std::abs(v) / s.step) + 0.5);
            return std::copysign(mag, v);
        }
        case QuantizerKind::logarithmic: {
            if (v == 0.0) return 0.0;
            return std::copysign(detail::quantize_log_positive(s, std::abs(v)), v);
        }
    }
    return v;
}

[[nodiscard]] inline Vec quantize(const QuantizerSpec& s, std::span<const double> v) {
    Vec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = quantize_scalar(s, v[i]);
    return out;
}

struct SectorCertificate {
    double a_emp = std::numeric_limits<double>::infinity();
    double b_emp = -std::numeric_limits<double>::infinity();
    std::size_t nonzero_samples = 0;
    std::size_t violations = 0;  ///< samples breaking the declared sector inequalities

    [[nodiscard]] bool within_declared() const noexcept { return violations == 0; }
};

/// Tightest empirical sector over the nonzero samples, and a count of samples
/// that break the declared bounds a v'v <= v'q(v) <= b v'v.
[[nodiscard]] inline SectorCertificate sector_certificate(const QuantizerSpec& s, const std::vector<Vec>& samples) {
    if (samples.empty()) throw Error("sector_certificate: no samples");
    SectorCertificate c;
    for (const Vec& v : samples) {
        const double vv = norm_sq(v);
        if (vv == 0.0) continue;
        const Vec q = quantize(s, v);
        const double vq = dot(v, q);
        const double r = vq / vv;
        c.a_emp = std::min(c.a_emp, r);
        c.b_emp = std::max(c.b_emp, r);
        ++c.nonzero_samples;
        if (vq < s.a * vv || vq > s.b * vv) ++c.violations;
    }
    return c;
}

}  // namespace etncs
