#pragma once

// Closed-form design and analysis formulas for the event-triggered networked
// interconnection of two IF-OFP systems through the M-transformation:
// stability test, M synthesis, L2-gain bound, conic-sector inter-event bounds
// and consecutive-dropout budgets.

#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "etncs/core.hpp"

namespace etncs {

class DesignError : public Error {
public:
    using Error::Error;
};

/// Margins at or below this value count as "not strictly positive".
inline constexpr double kStrictMarginTol = 1e-12;

/// Block gains of M = [m11 I, 0; m21 I, m22 I].
struct MMatrix {
    double m11 = 1.0;
    double m21 = -1.0;
    double m22 = 1.0;

    void validate() const {
        if (m11 == 0.0 || m22 == 0.0) throw DesignError("M: m11 and m22 must be nonzero");
        if (!(m21 * m22 < 0.0)) throw DesignError("M: m21*m22 < 0 is required");
    }
};

struct DesignParams {
    double rho_p = 0.0;
    double nu_p = 0.0;
    double rho_c = 0.0;
    double nu_c = 0.0;
    double delta_p = 0.4;
    double delta_c = 0.15;
    double alpha = 1.0;
    double gamma = 1.0;
    double b_p = 1.0;
    double b_c = 1.0;
    double d1 = 0.0;
    double d2 = 0.0;

    void validate() const {
        auto in01 = [](double d) { return d > 0.0 && d <= 1.0; };
        if (!in01(delta_p) || !in01(delta_c)) throw DesignError("delta_p and delta_c must lie in (0, 1]");
        if (!(alpha > 0.0) || !(gamma > 0.0)) throw DesignError("alpha and gamma must be positive");
        if (!(b_p > 0.0) || !(b_c > 0.0)) throw DesignError("quantizer upper sectors b_p, b_c must be positive");
        if (!(d1 >= 0.0 && d1 < 1.0) || !(d2 >= 0.0 && d2 < 1.0)) throw DesignError("delay rates must lie in [0, 1)");
    }

    /// b_c^2 (1 + sqrt(delta_c))^2 (1 + d2): the controller-to-plant gain factor.
    [[nodiscard]] double cp_factor() const {
        const double s = 1.0 + std::sqrt(delta_c);
        return b_c * b_c * s * s * (1.0 + d2);
    }

    /// 1/(2 alpha) + |nu_p| - nu_p: required lower bound on the transformed rho.
    [[nodiscard]] double rho_tilde_required() const { return 0.5 / alpha + std::abs(nu_p) - nu_p; }
};

struct StabilityMargins {
    double beta = 0.0;
    double margin1 = 0.0;  ///< beta - 1/(4 gamma)
    double margin2 = 0.0;  ///< rho~_c + nu_p - |nu_p| - 1/(2 alpha)
    bool ok = false;
};

struct GainBound {
    double ratio_form = 0.0;  ///< (gamma + |nu_p| - nu_p) / (beta - 1/(4 gamma))
    double sqrt_form = 0.0;   ///< square root of the same ratio
};

struct DropoutBudget {
    int budget = 0;
    double log_value = 0.0;  ///< unclamped log_{base}(arg) - 1
    double base = 0.0;
    double argument = 0.0;   ///< sqrt(ratio) + 1
    /// Budget when base and ratio are first truncated to two decimals, as in
    /// hand-rounded evaluations.
    int rounded_budget = 0;
    std::optional<std::string> diagnostic;
};

struct DesignResult {
    MMatrix M;
    double rho_c_tilde = 0.0;
    double nu_c_tilde = 0.0;
    double m22_sq_lower_bound = 0.0;
    StabilityMargins stability;
    std::optional<GainBound> gamma_bound;
    DropoutBudget d_p;
    DropoutBudget d_c;
    std::vector<std::string> notes;

    [[nodiscard]] bool stability_ok() const noexcept { return stability.ok; }
};

// ---------------------------------------------------------------------------

[[nodiscard]] inline double beta_of(double nu_c_tilde, const DesignParams& p) {
    if (nu_c_tilde >= 0.0) return p.rho_p - p.delta_p * p.alpha / 2.0;
    return p.rho_p + 2.0 * nu_c_tilde - p.delta_p * (p.alpha / 2.0 - 2.0 * nu_c_tilde);
}

[[nodiscard]] inline StabilityMargins check_stability(const DesignParams& p, double nu_c_tilde, double rho_c_tilde) {
    StabilityMargins m;
    m.beta = beta_of(nu_c_tilde, p);
    m.margin1 = m.beta - 1.0 / (4.0 * p.gamma);
    m.margin2 = rho_c_tilde + p.nu_p - std::abs(p.nu_p) - 1.0 / (2.0 * p.alpha);
    m.ok = m.margin1 > kStrictMarginTol && m.margin2 > kStrictMarginTol;
    return m;
}

/// Smallest admissible m22^2 (exclusive): (1/(2a) + |nu_p| - nu_p) 2 K / rho_c.
[[nodiscard]] inline double m22_squared_lower_bound(const DesignParams& p) {
    if (!(p.rho_c > 0.0)) throw DesignError("M synthesis requires rho_c > 0");
    return p.rho_tilde_required() * 2.0 * p.cp_factor() / p.rho_c;
}

struct TransformedIndices {
    double rho_c_tilde;
    double nu_c_tilde;
};

/// Transformed controller indices from the full M (uses m21 directly):
///   rho~ = rho_c m22^2 / (2K),  nu~ = rho_c m21^2 / (2K) - (1/(2 rho_c) + |nu_c|) b_p^2 (1+d1) m11^2.
[[nodiscard]] inline TransformedIndices transformed_indices(const DesignParams& p, const MMatrix& M) {
    const double K = p.cp_factor();
    const double input_term = (1.0 / (2.0 * p.rho_c) + std::abs(p.nu_c)) * p.b_p * p.b_p * (1.0 + p.d1);
    return {p.rho_c * M.m22 * M.m22 / (2.0 * K), p.rho_c * M.m21 * M.m21 / (2.0 * K) - input_term * M.m11 * M.m11};
}

[[nodiscard]] inline GainBound l2_gain_bound(const DesignParams& p, double beta) {
    const double den = beta - 1.0 / (4.0 * p.gamma);
    if (!(den > 0.0)) throw DesignError("l2_gain_bound: beta - 1/(4 gamma) must be positive");
    const double ratio = (p.gamma + std::abs(p.nu_p) - p.nu_p) / den;
    return {ratio, std::sqrt(ratio)};
}

/// Apex angle of the conic sector occupied by an IF-OFP(nu, rho) system:
///   arccos((nu + rho) / sqrt((1 - 4 rho nu) + (nu + rho)^2)).
[[nodiscard]] inline double cone_apex(double nu, double rho) {
    require_in_domain({nu, rho}, "cone_apex");
    const double s = nu + rho;
    const double rad = (1.0 - 4.0 * rho * nu) + s * s;
    if (!(rad > 0.0)) throw DomainError("cone_apex: degenerate cone (nu + rho = 0 on the domain boundary)");
    double c = s / std::sqrt(rad);
    if (c > 1.0) c = 1.0;
    if (c < -1.0) c = -1.0;
    return std::acos(c);
}

namespace detail {

inline double inter_event_bound(double delta, double rho, double nu, double c0, double c1, double c2, double y_norm) {
    if (!(rho > 0.0)) throw DesignError("inter-event bound requires a positive output index");
    if (c0 < 0.0 || c1 < 0.0 || c2 < 0.0) throw DesignError("inter-event bound: constants must be nonnegative");
    const double den = c0 / rho + cone_apex(nu, rho) * (1.0 / (rho * rho) + 1.0) * (c1 + c2);
    if (!(den > 0.0)) throw DesignError("inter-event bound: zero denominator (no excitation)");
    return std::sqrt(delta) * y_norm / den;
}

}  // namespace detail

/// Lower bound on the plant-side inter-event time; C0 bounds |dw1/dt|, C1
/// bounds |w1|, C2 bounds the transformed controller output.
[[nodiscard]] inline double inter_event_bound_plant(const DesignParams& p, double c0, double c1, double c2,
                                                    double y_norm_at_next_event) {
    return detail::inter_event_bound(p.delta_p, p.rho_p, p.nu_p, c0, c1, c2, y_norm_at_next_event);
}

/// Controller-side counterpart; C0', C1' describe w2 and C2' bounds the
/// quantized plant output at the controller input. With w2 = 0 pass c0 = c1 = 0.
[[nodiscard]] inline double inter_event_bound_controller(const DesignParams& p, double c0, double c1, double c2,
                                                         double y_norm_at_next_event) {
    return detail::inter_event_bound(p.delta_c, p.rho_c, p.nu_c, c0, c1, c2, y_norm_at_next_event);
}

namespace detail {

inline double truncate2(double v) { return std::floor(v * 100.0) / 100.0; }

inline int floor_budget(double base, double ratio) {
    if (!(ratio > 0.0) || !(base > 1.0)) return 0;
    const double v = std::log(std::sqrt(ratio) + 1.0) / std::log(base) - 1.0;
    return v < 0.0 ? 0 : static_cast<int>(std::floor(v));
}

inline DropoutBudget make_budget(double base, double ratio, const char* what) {
    DropoutBudget b;
    b.base = base;
    if (!(ratio > 0.0)) {
        std::ostringstream os;
        os << what << ": radicand " << ratio << " <= 0, no consecutive dropout tolerated";
        b.diagnostic = os.str();
        b.argument = 1.0;
        b.log_value = -1.0;
        b.budget = 0;
        b.rounded_budget = 0;
        return b;
    }
    b.argument = std::sqrt(ratio) + 1.0;
    b.log_value = std::log(b.argument) / std::log(base) - 1.0;
    b.budget = b.log_value < 0.0 ? 0 : static_cast<int>(std::floor(b.log_value));
    b.rounded_budget = floor_budget(truncate2(base), truncate2(ratio));
    if (b.rounded_budget != b.budget) {
        std::ostringstream os;
        os << what << ": exact evaluation gives " << b.budget << " (log base " << base << " of " << b.argument
           << ", minus 1 = " << b.log_value << "); truncating base and radicand to two decimals (base "
           << truncate2(base) << ", radicand " << truncate2(ratio) << ") gives " << b.rounded_budget
           << ". The exact value is used.";
        b.diagnostic = os.str();
    }
    return b;
}

}  // namespace detail

/// Largest number of consecutive plant-to-controller dropouts that keeps the
/// stability conditions, clamped at 0.
[[nodiscard]] inline DropoutBudget max_dropouts_plant(const DesignParams& p, double nu_c_tilde) {
    const double base = 1.0 + std::sqrt(p.delta_p);
    const double inv4g = 1.0 / (4.0 * p.gamma);
    double ratio = 0.0;
    if (nu_c_tilde >= 0.0) {
        ratio = 2.0 * (p.rho_p - inv4g) / p.alpha;
    } else {
        const double den = p.alpha - 4.0 * nu_c_tilde;
        ratio = 2.0 * (p.rho_p + 2.0 * nu_c_tilde - inv4g) / den;
    }
    return detail::make_budget(base, ratio, "d_p");
}

/// Controller-to-plant counterpart; depends on the chosen m22.
[[nodiscard]] inline DropoutBudget max_dropouts_controller(const DesignParams& p, const MMatrix& M) {
    const double den = p.rho_tilde_required() * 2.0 * p.b_c * p.b_c * (1.0 + p.d2);
    if (!(den > 0.0)) throw DesignError("max_dropouts_controller: denominator must be positive");
    const double ratio = M.m22 * M.m22 * p.rho_c / den;
    return detail::make_budget(1.0 + std::sqrt(p.delta_c), ratio, "d_c");
}

/// Builds M from the chosen m22 (sign included) and m11, derives the
/// transformed controller indices and evaluates every design check.
[[nodiscard]] inline DesignResult synthesize_m(const DesignParams& p, double m22_choice, double m11_choice) {
    p.validate();
    if (!(p.rho_c > 0.0)) throw DesignError("M synthesis requires rho_c > 0");
    if (m22_choice == 0.0 || m11_choice == 0.0) throw DesignError("m22 and m11 must be nonzero");

    DesignResult r;
    const double K = p.cp_factor();
    r.m22_sq_lower_bound = m22_squared_lower_bound(p);
    const double m22_sq = m22_choice * m22_choice;
    if (m22_sq < r.m22_sq_lower_bound * (1.0 - kStrictMarginTol)) {
        std::ostringstream os;
        os << "m22^2 = " << m22_sq << " violates m22^2 > (1/(2 alpha) + |nu_p| - nu_p) * 2 b_c^2 (1 + sqrt(delta_c))^2"
           << " (1 + d2) / rho_c = " << r.m22_sq_lower_bound;
        throw DesignError(os.str());
    }

    const double m21_abs = K / (p.rho_c * std::abs(m22_choice));
    r.M = {m11_choice, m22_choice > 0.0 ? -m21_abs : m21_abs, m22_choice};
    r.rho_c_tilde = p.rho_c * m22_sq / (2.0 * K);
    r.nu_c_tilde = K / (2.0 * p.rho_c * m22_sq) -
                   (1.0 / (2.0 * p.rho_c) + std::abs(p.nu_c)) * p.b_p * p.b_p * (1.0 + p.d1) * m11_choice * m11_choice;

    if (!(r.rho_c_tilde * r.nu_c_tilde < 0.25)) {
        std::ostringstream os;
        os << "transformed indices (nu~=" << r.nu_c_tilde << ", rho~=" << r.rho_c_tilde
           << ") violate rho~ * nu~ < 1/4";
        throw DesignError(os.str());
    }

    r.stability = check_stability(p, r.nu_c_tilde, r.rho_c_tilde);
    if (r.stability.margin1 > 0.0) r.gamma_bound = l2_gain_bound(p, r.stability.beta);
    r.d_p = max_dropouts_plant(p, r.nu_c_tilde);
    r.d_c = max_dropouts_controller(p, r.M);
    if (r.d_p.diagnostic) r.notes.push_back(*r.d_p.diagnostic);
    if (r.d_c.diagnostic) r.notes.push_back(*r.d_c.diagnostic);
    if (r.nu_c_tilde < 0.0) r.notes.push_back("nu~_c < 0: beta uses the negative-branch formula");
    if (!r.stability.ok) r.notes.push_back("stability conditions not strictly satisfied");
    return r;
}

}  // namespace etncs
