#pragma once

#include <functional>
#include <span>
#include <vector>

#include "ofb/types.hpp"

namespace ofb {

// Right-hand side x' = rhs(t, x) of an autonomous or time-varying ODE.
struct VectorField {
    Eigen::Index dimension = 0;
    std::function<Vector(double, const Vector&)> rhs;
};

// States of a fixed-step integration at the recorded grid points.
struct StateHistory {
    std::vector<double> times;
    std::vector<Vector> states;
};

// Called after every accepted step; may project the state (e.g. re-symmetrize a matrix block).
using StepHook = std::function<void(double t, Vector& x)>;

// Classical 4th-order Runge-Kutta step. Throws IntegrationError naming t when any stage
// derivative or the resulting state is non-finite.
[[nodiscard]] Vector rk4_step(const VectorField& field, double t, const Vector& x, double h);

// Integrates from t0 to t_end with step h, recording every record_stride steps. The grid is
// t0 + k*h (no accumulated round-off); the final step is always recorded and lands within
// h of t_end.
[[nodiscard]] StateHistory integrate_fixed(const VectorField& field, double t0, const Vector& x0, double h,
                                           double t_end, int record_stride, const StepHook& after_step = {});

// Number of steps integrate_fixed takes for the given span.
[[nodiscard]] long step_count(double t0, double h, double t_end);

// Solves P*lambda + lambda^T*P = -I for symmetric positive definite P.
// Throws NoSolutionError if lambda is not Hurwitz.
[[nodiscard]] Matrix solve_lyapunov(const Matrix& lambda);

// Observable-canonical companion of s^{k} + a_1 s^{k-1} + ... + a_k: -a in the first column,
// identity on the super-diagonal.
[[nodiscard]] Matrix companion_lambda(std::span<const double> alphas);

// True iff every eigenvalue of the matrix has real part < -1e-9.
[[nodiscard]] bool is_hurwitz(const Matrix& m);

// True iff s^{k} + a_1 s^{k-1} + ... + a_k is Hurwitz (companion-eigenvalue test).
[[nodiscard]] bool hurwitz_check(std::span<const double> alphas);

inline constexpr double kHurwitzTolerance = 1e-9;

}  // namespace ofb
