#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "ofb/system_model.hpp"

namespace ofb {

// State feedback u = gamma(eta, xi). The law must satisfy gamma(0,0) = 0 and keep the loop
// ISS with respect to an additive error on eta; the library does not verify the ISS property.
struct FeedbackLaw {
    std::function<double(const Vector& eta, const Vector& xi)> gamma;
};

// A plant together with the state feedback designed for it.
struct ControlDesign {
    NormalFormSystem system;
    FeedbackLaw law;
};

struct SaturationConfig {
    double M_xi = 1.0;
    double M_sigma = 10.0;
    double kappa = 0.1;
};

void check_saturation(const SaturationConfig& sat);

// v clamped to [-M, M].
[[nodiscard]] double standard_sat(double v, double M);

// Radial profile of smooth_sat: r(s) = s for s <= M, M + kappa*tanh((s-M)/kappa) beyond.
[[nodiscard]] double smooth_sat_radius(double s, double M, double kappa);

// psi(xi): exact identity for |xi| <= M, radially compressed to norm r(|xi|) < M + kappa outside.
// C^1 across the sphere |xi| = M.
[[nodiscard]] Vector smooth_sat(const Vector& xi, double M, double kappa);

// Replaces the xi argument of an (eta, xi) function by psi(xi).
template <class Fn>
[[nodiscard]] auto lift_saturated(Fn fn, SaturationConfig sat) {
    return [fn = std::move(fn), sat](const Vector& eta, const Vector& xi) {
        return fn(eta, smooth_sat(xi, sat.M_xi, sat.kappa));
    };
}

// The plant functions an observer needs, evaluated at one (eta, xi, u) point.
struct ObserverTerms {
    double u = 0.0;
    Matrix A1;
    Vector phi0;
    RowVector C1;
    double a = 0.0;
    double phi1 = 0.0;
};

// A1, phi0, C1, a at (xi, u) and phi1 at (eta, xi), with u supplied by the caller.
[[nodiscard]] ObserverTerms evaluate_terms(const NormalFormSystem& sys, const Vector& eta, const Vector& xi,
                                           double u);

// The saturated lifts gamma_hat, A1_hat, phi0_hat, C1_hat, a_hat, phi1_hat at (eta_hat, xi_hat):
// every function sees psi(xi_hat) in place of xi and u = gamma(eta_hat, psi(xi_hat)). With no
// saturation config psi is the identity.
[[nodiscard]] ObserverTerms evaluate_lifted(const ControlDesign& design, const Vector& eta_hat,
                                            const Vector& xi_hat, const std::optional<SaturationConfig>& sat);

// Checked gamma evaluation (throws EvaluationError on non-finite output).
[[nodiscard]] double eval_gamma(const FeedbackLaw& law, const Vector& eta, const Vector& xi);

// u = -4 eta - 3 xi - xi^2 - 2 eta cos(xi), the backstepping law for example_system().
[[nodiscard]] double example_control(double eta, double xi);

[[nodiscard]] FeedbackLaw example_law();

// Plant under exact-state feedback u = gamma(eta, xi), recorded at every step.
struct PlantTrack {
    std::vector<double> times;
    std::vector<PlantState> states;
    std::vector<double> controls;
};

[[nodiscard]] PlantTrack simulate_state_feedback(const ControlDesign& design, const PlantState& initial,
                                                 double t_final, double h);

[[nodiscard]] ControlDesign example_design();

}  // namespace ofb
