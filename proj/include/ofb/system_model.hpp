#pragma once

#include <functional>
#include <string>

#include "ofb/types.hpp"

namespace ofb {

// Plant of the form
//   eta' = A1(xi,u) eta + phi0(xi,u)
//   xi'  = A xi + B [C1(xi,u) eta + a(xi,u)]
//   y    = C xi
// with eta in R^{n-rho} and (A,B,C) a chain of rho integrators.
//
// phi1 is the closed-loop derivative of C1(xi,u) eta under u = gamma(eta, xi). It depends on the
// feedback law and is registered analytically per system; validate_phi1 checks it numerically.
//
// Instances are immutable function bundles and safe to share between threads.
struct NormalFormSystem {
    std::string name;
    int n = 0;
    int rho = 0;
    std::function<Matrix(const Vector& xi, double u)> A1;
    std::function<Vector(const Vector& xi, double u)> phi0;
    std::function<RowVector(const Vector& xi, double u)> C1;
    std::function<double(const Vector& xi, double u)> a;
    std::function<double(const Vector& eta, const Vector& xi)> phi1;

    [[nodiscard]] int internal_dim() const noexcept { return n - rho; }
};

struct PlantState {
    Vector eta;
    Vector xi;
};

struct ChainMatrices {
    Matrix A;
    Vector B;
    RowVector C;
};

struct PlantDerivative {
    Vector eta_dot;
    Vector xi_dot;
};

[[nodiscard]] ChainMatrices chain_matrices(int rho);

// Throws ConfigError when the dimensions are inconsistent (n < rho, rho < 1, missing functions).
void check_dimensions(const NormalFormSystem& sys);

// Checked evaluations of the user functions. Each throws EvaluationError naming the function
// when the result is non-finite or has the wrong shape.
[[nodiscard]] Matrix eval_A1(const NormalFormSystem& sys, const Vector& xi, double u);
[[nodiscard]] Vector eval_phi0(const NormalFormSystem& sys, const Vector& xi, double u);
[[nodiscard]] RowVector eval_C1(const NormalFormSystem& sys, const Vector& xi, double u);
[[nodiscard]] double eval_a(const NormalFormSystem& sys, const Vector& xi, double u);
[[nodiscard]] double eval_phi1(const NormalFormSystem& sys, const Vector& eta, const Vector& xi);

[[nodiscard]] PlantDerivative plant_rhs(const NormalFormSystem& sys, const PlantState& state, double u);

// y = xi_1
[[nodiscard]] double plant_output(const NormalFormSystem& sys, const PlantState& state);

// sigma = C1(xi,u) eta
[[nodiscard]] double virtual_output(const NormalFormSystem& sys, const PlantState& state, double u);

// Largest of |phi0(0,0)| and |a(0,0)|; zero when the origin is an open-loop equilibrium.
[[nodiscard]] double equilibrium_defect(const NormalFormSystem& sys);

// eta' = xi + eta cos(xi), xi' = xi^2 + eta + u, y = xi. Non-minimum phase: the zero dynamics
// are eta' = eta.
[[nodiscard]] NormalFormSystem example_system();

}  // namespace ofb
