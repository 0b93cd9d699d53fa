#pragma once

// Built-in system models.

#include <string>

#include "etncs/core.hpp"

namespace etncs::models {

/// Nonlinear cubic plant
///   x1' = -3 x1^3 + x1 x2,  x2' = -3.6 x2 + 2 u,  y = x2
/// with storage V = x2^2 / 4, for which V' = u y - 1.8 y^2 holds exactly.
[[nodiscard]] inline SystemModel cubic_plant() {
    SystemModel m;
    m.name = "cubic_plant";
    m.state_dim = 2;
    m.input_dim = 1;
    m.output_dim = 1;
    m.indices = {0.0, 1.8};
    m.dynamics = [](const Vec& x, const Vec& u, double) {
        return Vec{-3.0 * x[0] * x[0] * x[0] + x[0] * x[1], -3.6 * x[1] + 2.0 * u[0]};
    };
    m.output = [](const Vec& x, const Vec&, double) { return Vec{x[1]}; };
    m.storage = [](const Vec& x) { return 0.25 * x[1] * x[1]; };
    return m;
}

/// Scalar LTI system x' = a x + b u, y = c x + d u.  A storage weight P > 0
/// attaches V = P x^2.
struct FirstOrderLti {
    double a = -3.0;
    double b = 1.0;
    double c = 7.0;
    double d = 1.0;
    double storage_weight = 0.0;
};

[[nodiscard]] inline SystemModel first_order(const FirstOrderLti& p, PassivityIndices idx,
                                             std::string name = "first_order") {
    SystemModel m;
    m.name = std::move(name);
    m.state_dim = 1;
    m.input_dim = 1;
    m.output_dim = 1;
    m.indices = idx;
    m.dynamics = [p](const Vec& x, const Vec& u, double) { return Vec{p.a * x[0] + p.b * u[0]}; };
    m.output = [p](const Vec& x, const Vec& u, double) { return Vec{p.c * x[0] + p.d * u[0]}; };
    if (p.storage_weight > 0.0) {
        const double w = p.storage_weight;
        m.storage = [w](const Vec& x) { return w * x[0] * x[0]; };
    }
    return m;
}

/// Lead controller (s + 10)/(s + 3) realized as x' = -3x + u, y = 7x + u,
/// carrying the declared indices nu = 0.49, rho = 0.27.
[[nodiscard]] inline SystemModel lead_controller() {
    return first_order({-3.0, 1.0, 7.0, 1.0, 0.0}, {0.49, 0.27}, "lead_controller");
}

}  // namespace etncs::models
