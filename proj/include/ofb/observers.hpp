#pragma once

#include <optional>

#include "ofb/controller.hpp"

namespace ofb {

// EKF weights. R is scalar since the virtual output sigma is scalar.
struct EkfWeights {
    Matrix Q;
    double R = 1.0;
    Matrix P0;
};

// Throws ConfigError unless Q and P0 are symmetric positive definite of order m and R > 0.
void check_weights(const EkfWeights& w, int m);

// Hurwitz coefficients alpha_1..alpha_{rho+1} of the extended high-gain observer and its epsilon.
struct EhgoGains {
    Vector alphas;
    double epsilon = 1.0;
};

// Throws ConfigError unless alphas are Hurwitz with the expected length and epsilon > 0.
void check_gains(const EhgoGains& g, int rho);

struct ObserverState {
    Vector eta_hat;
    Vector xi_hat;
    double sigma_hat = 0.0;
    Matrix P;
};

// Observer injection gains: H_i = alpha_i / eps^i for i <= rho, and alpha_{rho+1}/eps^{rho+1}
// for the sigma_hat equation.
struct EhgoGainVector {
    Vector H;
    double sigma_gain = 0.0;
};

struct XiSigmaDerivative {
    Vector xi_hat_dot;
    double sigma_hat_dot = 0.0;
};

struct PdSummary {
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    double symmetric_defect = 0.0;
};

// P' = A1 P + P A1^T + Q - P C1^T R^{-1} C1 P
[[nodiscard]] Matrix riccati_rhs(const Matrix& P, const Matrix& A1, const RowVector& C1, const EkfWeights& w);

// L = P C1^T / R
[[nodiscard]] Vector ekf_gain(const Matrix& P, const RowVector& C1, double R);

// eta_hat' = A1 eta_hat + phi0 + L [M_sigma sat(sigma/M_sigma) - C1 eta_hat], terms evaluated by
// the caller. Without M_sigma the raw sigma enters the correction.
[[nodiscard]] Vector ekf_rhs(const ObserverTerms& at, const Vector& eta_hat, const Vector& L, double sigma_raw,
                             std::optional<double> M_sigma);

// The bracket of ekf_rhs: the innovation the EKF actually sees.
[[nodiscard]] double ekf_correction_input(const ObserverTerms& at, const Vector& eta_hat, double sigma_raw,
                                          std::optional<double> M_sigma);

[[nodiscard]] EhgoGainVector ehgo_gain(const EhgoGains& g);

// xi_hat' = A xi_hat + B [sigma_hat + a] + H (y - xi_hat_1)
// sigma_hat' = phi1 + alpha_{rho+1}/eps^{rho+1} (y - xi_hat_1)
[[nodiscard]] XiSigmaDerivative ehgo_rhs(const ObserverTerms& at, const ObserverState& obs, double y,
                                         const EhgoGainVector& gains);

// Max over interior probe points of |phi1(eta, xi) - d/dt[C1(xi,u) eta]|, the derivative taken by
// centered differences along the probe.
[[nodiscard]] double validate_phi1(const ControlDesign& design, const PlantTrack& probe);

[[nodiscard]] PdSummary pd_monitor(const Matrix& P);

// Cholesky succeeds.
[[nodiscard]] bool is_positive_definite(const Matrix& P);

}  // namespace ofb
