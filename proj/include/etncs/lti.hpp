#pragma once

// Frequency-domain verification of IF-OFP indices for SISO LTI systems.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <sstream>
#include <vector>

#include "etncs/core.hpp"

namespace etncs {

struct LtiSystem {
    Eigen::MatrixXd A;
    Eigen::MatrixXd B;
    Eigen::MatrixXd C;
    Eigen::MatrixXd D;

    void validate() const {
        const auto n = A.rows();
        if (A.cols() != n || B.rows() != n || C.cols() != n) throw DimensionError("LtiSystem: inconsistent A/B/C");
        if (B.cols() != 1 || C.rows() != 1 || D.rows() != 1 || D.cols() != 1)
            throw DimensionError("LtiSystem: only single-input single-output systems are supported");
    }

    /// G(s) = C (sI - A)^{-1} B + D
    [[nodiscard]] std::complex<double> response(std::complex<double> s) const {
        using Cx = std::complex<double>;
        const auto n = A.rows();
        if (n == 0) return D(0, 0);
        Eigen::MatrixXcd M = -A.cast<Cx>();
        M.diagonal().array() += s;
        const Eigen::VectorXcd x = M.partialPivLu().solve(B.cast<Cx>());
        return (C.cast<Cx>() * x)(0, 0) + Cx(D(0, 0), 0.0);
    }

    /// Wraps the realization as a time-domain SystemModel.
    [[nodiscard]] SystemModel to_model(std::string name, PassivityIndices idx) const {
        validate();
        SystemModel m;
        m.name = std::move(name);
        m.state_dim = static_cast<std::size_t>(std::max<Eigen::Index>(A.rows(), 1));
        m.input_dim = 1;
        m.output_dim = 1;
        m.indices = idx;
        auto sys = *this;
        m.dynamics = [sys](const Vec& x, const Vec& u, double) {
            const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
            const Eigen::VectorXd dx = sys.A * xv + sys.B * u[0];
            return Vec(dx.data(), dx.data() + dx.size());
        };
        m.output = [sys](const Vec& x, const Vec& u, double) {
            const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
            return Vec{(sys.C * xv)(0, 0) + sys.D(0, 0) * u[0]};
        };
        return m;
    }
};

struct IndexMarginReport {
    std::vector<double> frequencies;
    std::vector<double> residuals;  ///< Re G - nu - rho |G|^2 per frequency
    double min_residual = std::numeric_limits<double>::infinity();
    double argmin_frequency = 0.0;

    [[nodiscard]] bool verified() const noexcept { return min_residual >= 0.0; }
};

/// Logarithmically spaced grid in rad/s, endpoints included.
[[nodiscard]] inline std::vector<double> log_frequency_grid(double lo = 1e-3, double hi = 1e4,
                                                            std::size_t points = 2000) {
    if (!(lo > 0.0) || !(hi > lo) || points < 2) throw Error("log_frequency_grid: bad range");
    std::vector<double> w(points);
    const double a = std::log10(lo);
    const double b = std::log10(hi);
    for (std::size_t i = 0; i < points; ++i)
        w[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
    return w;
}

/// Evaluates the IF-OFP frequency condition Re G(jw) - nu - rho |G(jw)|^2 on the grid.
[[nodiscard]] inline IndexMarginReport lti_verify_indices(const LtiSystem& sys, const PassivityIndices& candidate,
                                                          std::span<const double> freq_grid) {
    sys.validate();
    if (freq_grid.empty()) throw Error("lti_verify_indices: empty frequency grid");

    if (sys.A.rows() > 0) {
        const auto [lo, hi] = std::minmax_element(freq_grid.begin(), freq_grid.end(),
                                                  [](double a, double b) { return std::abs(a) < std::abs(b); });
        const double wlo = std::abs(*lo);
        const double whi = std::abs(*hi);
        const Eigen::VectorXcd poles = sys.A.eigenvalues();
        for (Eigen::Index i = 0; i < poles.size(); ++i) {
            const double scale = 1.0 + std::abs(poles[i]);
            if (std::abs(poles[i].real()) <= 1e-9 * scale) {
                const double wi = std::abs(poles[i].imag());
                if (wi >= wlo * (1.0 - 1e-12) && wi <= whi * (1.0 + 1e-12)) {
                    std::ostringstream os;
                    os << "lti_verify_indices: pole on the imaginary axis at w=" << wi << " rad/s within the grid";
                    throw DomainError(os.str());
                }
            }
        }
    }

    IndexMarginReport rep;
    rep.frequencies.assign(freq_grid.begin(), freq_grid.end());
    rep.residuals.reserve(freq_grid.size());
    for (double w : freq_grid) {
        const auto g = sys.response({0.0, w});
        const double r = g.real() - candidate.nu - candidate.rho * std::norm(g);
        rep.residuals.push_back(r);
        if (r < rep.min_residual) {
            rep.min_residual = r;
            rep.argmin_frequency = w;
        }
    }
    return rep;
}

}  // namespace etncs
