#include "ofb/controller.hpp"

#include <algorithm>
#include <cmath>

#include "ofb/numerics.hpp"

namespace ofb {

void check_saturation(const SaturationConfig& sat) {
    if (!(sat.M_xi > 0.0) || !(sat.M_sigma > 0.0) || !(sat.kappa > 0.0)) {
        throw ConfigError("saturation levels M_xi, M_sigma and kappa must be positive");
    }
}

double standard_sat(double v, double M) {
    return std::clamp(v, -M, M);
}

double smooth_sat_radius(double s, double M, double kappa) {
    if (s <= M) {
        return s;
    }
    return M + kappa * std::tanh((s - M) / kappa);
}

Vector smooth_sat(const Vector& xi, double M, double kappa) {
    const double s = xi.norm();
    if (s <= M) {
        return xi;
    }
    return xi * (smooth_sat_radius(s, M, kappa) / s);
}

double eval_gamma(const FeedbackLaw& law, const Vector& eta, const Vector& xi) {
    const double u = law.gamma(eta, xi);
    if (!std::isfinite(u)) {
        throw EvaluationError("feedback law returned a non-finite control");
    }
    return u;
}

ObserverTerms evaluate_terms(const NormalFormSystem& sys, const Vector& eta, const Vector& xi, double u) {
    ObserverTerms t;
    t.u = u;
    t.A1 = eval_A1(sys, xi, u);
    t.phi0 = eval_phi0(sys, xi, u);
    t.C1 = eval_C1(sys, xi, u);
    t.a = eval_a(sys, xi, u);
    t.phi1 = eval_phi1(sys, eta, xi);
    return t;
}

ObserverTerms evaluate_lifted(const ControlDesign& design, const Vector& eta_hat, const Vector& xi_hat,
                              const std::optional<SaturationConfig>& sat) {
    const Vector xi_eval = sat ? smooth_sat(xi_hat, sat->M_xi, sat->kappa) : xi_hat;
    const double u = eval_gamma(design.law, eta_hat, xi_eval);
    return evaluate_terms(design.system, eta_hat, xi_eval, u);
}

double example_control(double eta, double xi) {
    return -4.0 * eta - 3.0 * xi - xi * xi - 2.0 * eta * std::cos(xi);
}

FeedbackLaw example_law() {
    return FeedbackLaw{[](const Vector& eta, const Vector& xi) { return example_control(eta(0), xi(0)); }};
}

PlantTrack simulate_state_feedback(const ControlDesign& design, const PlantState& initial, double t_final,
                                   double h) {
    const NormalFormSystem& sys = design.system;
    const int m = sys.internal_dim();
    VectorField field;
    field.dimension = sys.n;
    field.rhs = [&](double, const Vector& x) {
        PlantState s{x.head(m), x.tail(sys.rho)};
        const double u = eval_gamma(design.law, s.eta, s.xi);
        const PlantDerivative d = plant_rhs(sys, s, u);
        Vector dx(sys.n);
        dx << d.eta_dot, d.xi_dot;
        return dx;
    };
    Vector x0(sys.n);
    x0 << initial.eta, initial.xi;
    const StateHistory hist = integrate_fixed(field, 0.0, x0, h, t_final, 1);

    PlantTrack track;
    track.times = hist.times;
    track.states.reserve(hist.states.size());
    track.controls.reserve(hist.states.size());
    for (const Vector& x : hist.states) {
        PlantState s{x.head(m), x.tail(sys.rho)};
        track.controls.push_back(eval_gamma(design.law, s.eta, s.xi));
        track.states.push_back(std::move(s));
    }
    return track;
}

ControlDesign example_design() {
    return ControlDesign{example_system(), example_law()};
}

}  // namespace ofb
