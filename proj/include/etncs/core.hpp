#pragma once

// Continuous-time system models, fixed-step integration and trajectory-level
// dissipativity / L2 checks for IF-OFP systems.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace etncs {

using Vec = std::vector<double>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class IntegrationError : public Error {
public:
    IntegrationError(const std::string& what, double t) : Error(what), time_(t) {}
    [[nodiscard]] double time() const noexcept { return time_; }

private:
    double time_;
};

// ---------------------------------------------------------------------------
// Small vector helpers
// ---------------------------------------------------------------------------

[[nodiscard]] inline double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw DimensionError("dot: size mismatch " + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()));
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

[[nodiscard]] inline double norm_sq(std::span<const double> a) { return dot(a, a); }
[[nodiscard]] inline double norm(std::span<const double> a) { return std::sqrt(norm_sq(a)); }

[[nodiscard]] inline bool all_finite(std::span<const double> a) {
    for (double v : a)
        if (!std::isfinite(v)) return false;
    return true;
}

[[nodiscard]] inline Vec scaled(std::span<const double> a, double k) {
    Vec out(a.begin(), a.end());
    for (double& v : out) v *= k;
    return out;
}

/// a + k*b
[[nodiscard]] inline Vec axpy(std::span<const double> a, double k, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("axpy: size mismatch");
    Vec out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + k * b[i];
    return out;
}

[[nodiscard]] inline Vec minus(std::span<const double> a, std::span<const double> b) {
    return axpy(a, -1.0, b);
}

// ---------------------------------------------------------------------------
// Passivity indices
// ---------------------------------------------------------------------------

/// IF-OFP indices: the system is dissipative w.r.t. u'y - rho*y'y - nu*u'u.
struct PassivityIndices {
    double nu = 0.0;
    double rho = 0.0;

    /// Admissible index domain: rho*nu < 1/4, or rho*nu == 1/4 with rho >= 0.
    [[nodiscard]] bool in_domain() const noexcept {
        const double p = rho * nu;
        if (p < 0.25) return true;
        return p == 0.25 && rho >= 0.0;
    }
};

inline void require_in_domain(const PassivityIndices& idx, const char* who) {
    if (!idx.in_domain()) {
        std::ostringstream os;
        os << who << ": indices (nu=" << idx.nu << ", rho=" << idx.rho
           << ") outside the IF-OFP domain (need rho*nu < 1/4, or rho*nu = 1/4 with rho >= 0)";
        throw DomainError(os.str());
    }
}

// ---------------------------------------------------------------------------
// System model
// ---------------------------------------------------------------------------

struct SystemModel {
    using Dynamics = std::function<Vec(const Vec& x, const Vec& u, double t)>;
    using Output = std::function<Vec(const Vec& x, const Vec& u, double t)>;
    using Storage = std::function<double(const Vec& x)>;

    std::string name;
    std::size_t state_dim = 1;
    std::size_t input_dim = 1;
    std::size_t output_dim = 1;
    Dynamics dynamics;
    Output output;
    PassivityIndices indices;
    Storage storage;  // optional

    void validate() const {
        if (state_dim == 0 || input_dim == 0 || output_dim == 0)
            throw DimensionError(name + ": dimensions must be positive");
        if (input_dim != output_dim)
            throw DimensionError(name + ": only square systems are supported (input_dim == output_dim)");
        if (!dynamics || !output) throw Error(name + ": dynamics and output maps are required");
    }

    [[nodiscard]] bool has_storage() const noexcept { return static_cast<bool>(storage); }
};

/// Classical RK4 step with the input held constant over [t, t+h].
[[nodiscard]] inline Vec integrate_step(const SystemModel& model, const Vec& state, const Vec& input,
                                        double t, double h) {
    if (!(h > 0.0)) throw Error("integrate_step: step must be positive");
    if (input.size() != model.input_dim)
        throw DimensionError(model.name + ": input has dimension " + std::to_string(input.size()) +
                             ", expected " + std::to_string(model.input_dim));
    if (state.size() != model.state_dim)
        throw DimensionError(model.name + ": state has dimension " + std::to_string(state.size()) +
                             ", expected " + std::to_string(model.state_dim));

    auto eval = [&](const Vec& x, double tau) {
        Vec dx = model.dynamics(x, input, tau);
        if (dx.size() != model.state_dim) throw DimensionError(model.name + ": dynamics returned wrong size");
        if (!all_finite(dx)) {
            std::ostringstream os;
            os << model.name << ": non-finite derivative at t=" << tau;
            throw IntegrationError(os.str(), tau);
        }
        return dx;
    };

    const Vec k1 = eval(state, t);
    const Vec k2 = eval(axpy(state, 0.5 * h, k1), t + 0.5 * h);
    const Vec k3 = eval(axpy(state, 0.5 * h, k2), t + 0.5 * h);
    const Vec k4 = eval(axpy(state, h, k3), t + h);

    Vec next(state.size());
    for (std::size_t i = 0; i < state.size(); ++i)
        next[i] = state[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    if (!all_finite(next)) {
        std::ostringstream os;
        os << model.name << ": non-finite state after step at t=" << t;
        throw IntegrationError(os.str(), t);
    }
    return next;
}

/// u'y - rho*y'y - nu*u'u
[[nodiscard]] inline double ifofp_supply_rate(std::span<const double> u, std::span<const double> y,
                                              const PassivityIndices& idx) {
    if (u.size() != y.size()) throw DimensionError("ifofp_supply_rate: u and y differ in dimension");
    return dot(u, y) - idx.rho * dot(y, y) - idx.nu * dot(u, u);
}

// ---------------------------------------------------------------------------
// Trajectories
// ---------------------------------------------------------------------------

/// Sampled trajectory. inputs[k] is the input applied over [times[k], times[k+1]).
struct Trajectory {
    std::vector<double> times;
    std::vector<Vec> states;
    std::vector<Vec> inputs;
    std::vector<Vec> outputs;

    [[nodiscard]] std::size_t size() const noexcept { return times.size(); }
    [[nodiscard]] bool empty() const noexcept { return times.empty(); }

    void validate() const {
        const std::size_t n = times.size();
        if (states.size() != n || inputs.size() != n || outputs.size() != n)
            throw DimensionError("Trajectory: sequences differ in length");
        for (std::size_t k = 1; k < n; ++k)
            if (!(times[k] > times[k - 1])) throw Error("Trajectory: times must be strictly increasing");
    }
};

/// Per-step tolerance used when judging dissipativity residuals.
[[nodiscard]] inline double dissipativity_tolerance(double storage_value) {
    return 1e-6 * (1.0 + std::abs(storage_value));
}

/// Integral-form dissipativity residuals, one per consecutive sample pair:
///   [V(x_{k+1}) - V(x_k)] - trapz(omega)
/// The supply rate is evaluated at both ends of the step under the held input
/// inputs[k], with outputs re-derived from the model's output map so that
/// feedthrough terms see the same input the integrator used.
[[nodiscard]] inline std::vector<double> dissipativity_residuals(const SystemModel& model,
                                                                 const Trajectory& traj) {
    if (!model.has_storage()) throw Error(model.name + ": dissipativity check needs a storage function");
    if (traj.empty()) throw Error("dissipativity_residuals: empty trajectory");
    traj.validate();

    std::vector<double> residuals;
    residuals.reserve(traj.size() > 0 ? traj.size() - 1 : 0);
    for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
        const Vec& u = traj.inputs[k];
        const double t0 = traj.times[k];
        const double t1 = traj.times[k + 1];
        const Vec y0 = model.output(traj.states[k], u, t0);
        const Vec y1 = model.output(traj.states[k + 1], u, t1);
        const double supply =
            0.5 * (t1 - t0) * (ifofp_supply_rate(u, y0, model.indices) + ifofp_supply_rate(u, y1, model.indices));
        const double dv = model.storage(traj.states[k + 1]) - model.storage(traj.states[k]);
        residuals.push_back(dv - supply);
    }
    return residuals;
}

namespace detail {
inline double trapz_energy(const std::vector<Vec>& sig, std::span<const double> times) {
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < times.size(); ++k)
        acc += 0.5 * (times[k + 1] - times[k]) * (norm_sq(sig[k]) + norm_sq(sig[k + 1]));
    return acc;
}
}  // namespace detail

/// Empirical L2 gain sqrt(int |y|^2 / int |w|^2); a lower bound on the true gain.
[[nodiscard]] inline double l2_gain_estimate(const std::vector<Vec>& input, const std::vector<Vec>& output,
                                             std::span<const double> times) {
    if (input.size() != times.size() || output.size() != times.size())
        throw DimensionError("l2_gain_estimate: sequences are not aligned");
    const double ein = detail::trapz_energy(input, times);
    if (!(ein > 0.0)) throw Error("l2_gain_estimate: input energy is zero");
    return std::sqrt(detail::trapz_energy(output, times) / ein);
}

}  // namespace etncs
