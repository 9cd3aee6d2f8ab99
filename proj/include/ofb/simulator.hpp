#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ofb/observers.hpp"

namespace ofb {

enum class Mode { reduced, output_feedback };

struct InitialConditions {
    PlantState plant;
    Vector eta_hat;
    Vector xi_hat;
    double sigma_hat = 0.0;
};

struct SimConfig {
    std::string system = "example";
    Mode mode = Mode::output_feedback;
    EhgoGains gains;
    EkfWeights weights;
    SaturationConfig sat;
    // Evaluate A1, phi0, a, C1, phi1 and gamma at the measured y instead of xi_hat (rho = 1 only).
    bool y_substitution = true;
    bool saturation_enabled = true;
    double t_final = 20.0;
    double step = 5e-5;
    int record_stride = 20;
    InitialConditions initial;
    // Level beta of the tube W(chi) <= beta*eps^2; calibrated from the run when absent.
    std::optional<double> tube_level;
};

// One recorded instant. In reduced runs xi_hat = xi, sigma_hat = sigma and chi = 0.
struct Sample {
    double t = 0.0;
    Vector eta;
    Vector xi;
    double y = 0.0;
    double u = 0.0;
    Vector eta_hat;
    Vector xi_hat;
    double sigma_hat = 0.0;
    Matrix P;
    Vector eta_tilde;
    double V2 = 0.0;
    double W = 0.0;
    Vector chi;
    // sigma after the M_sigma clamp, as it enters the EKF
    double sigma_fed = 0.0;
    // the EKF innovation sigma_fed - C1 eta_hat
    double correction = 0.0;
};

struct Trajectory {
    Mode mode = Mode::output_feedback;
    double epsilon = 0.0;
    std::vector<Sample> samples;

    [[nodiscard]] bool empty() const noexcept { return samples.empty(); }
    [[nodiscard]] std::size_t size() const noexcept { return samples.size(); }
};

struct LyapunovMonitors {
    double V2 = 0.0;
    double W = 0.0;
};

struct RecoveryDeviation {
    double sup_dev_theta = 0.0;
    double sup_dev_eta_tilde = 0.0;
};

struct PeakingReport {
    double max_abs_chi = 0.0;
    std::optional<double> entry_time;
};

struct RecoveryReport {
    std::vector<double> epsilons;
    std::vector<double> sup_dev_theta;
    std::vector<double> sup_dev_eta_tilde;
    // empirical end of the observer transient: entry time into W(chi) <= beta*eps^2
    std::vector<std::optional<double>> transient_cutoff;
    std::vector<double> max_abs_chi;
};

// Reduced and output-feedback runs behind a RecoveryReport, in input epsilon order.
struct SweepRuns {
    RecoveryReport report;
    std::vector<Trajectory> output_feedback;
    std::vector<Trajectory> reduced;
};

// Throws ConfigError when the config is inconsistent with the design or violates an invariant.
void validate_config(const ControlDesign& design, const SimConfig& cfg);

// Plant under u = gamma(eta_hat, xi) with an EKF fed the exact xi and sigma = C1(xi,u) eta.
[[nodiscard]] Trajectory simulate_reduced(const ControlDesign& design, const SimConfig& cfg);

// Plant, extended high-gain observer, EKF and Riccati equation as one coupled ODE under
// u = gamma_hat(eta_hat, xi_hat) (gamma(eta_hat, y) under y-substitution).
[[nodiscard]] Trajectory simulate_output_feedback(const ControlDesign& design, const SimConfig& cfg);

// Dispatches on cfg.mode.
[[nodiscard]] Trajectory simulate(const ControlDesign& design, const SimConfig& cfg);

// chi_i = (xi_i - xi_hat_i)/eps^{rho+1-i}, chi_{rho+1} = C1(xi, gamma(eta_hat, xi)) eta - sigma_hat.
[[nodiscard]] Vector scaled_error_coords(const ControlDesign& design, const PlantState& plant,
                                         const ObserverState& obs, const EhgoGains& g);

// V2 = eta_tilde^T P^{-1} eta_tilde and W = chi^T P0 chi. Throws RiccatiError if P is singular.
[[nodiscard]] LyapunovMonitors lyapunov_monitors(const Vector& chi, const Vector& eta_tilde, const Matrix& P,
                                                 const Matrix& P0);

// P0 solving P0 Lambda + Lambda^T P0 = -I for the companion matrix of the observer gains.
[[nodiscard]] Matrix observer_lyapunov_matrix(const EhgoGains& g);

// Sup over the common grid of |theta - theta_r| and |eta_tilde - eta_tilde_r|.
[[nodiscard]] RecoveryDeviation recovery_metric(const Trajectory& traj_of, const Trajectory& traj_red);

// Max |chi| over the run, and the first recorded time after which W(chi) <= tube_level*eps^2
// holds for the rest of the run.
[[nodiscard]] PeakingReport peaking_report(const Trajectory& traj, const EhgoGains& g, const Matrix& P0,
                                           double tube_level);

// 4 x the largest W(chi)/eps^2 seen after the tube calibration time.
[[nodiscard]] double default_tube_level(const Trajectory& traj);

// Time after which default_tube_level samples W: 100 observer time constants.
[[nodiscard]] double tube_calibration_time(double epsilon);

// One reduced and one output-feedback run per epsilon from identical initial data, on a shared
// grid (step eps/20, records every record_interval). Runs execute concurrently.
[[nodiscard]] SweepRuns run_sweep(const ControlDesign& design, const SimConfig& cfg,
                                  const std::vector<double>& epsilons, double record_interval = 1e-3);

[[nodiscard]] RecoveryReport epsilon_sweep(const ControlDesign& design, const SimConfig& cfg,
                                           const std::vector<double>& epsilons);

// 1.5 x the largest |xi| of the reduced run (state feedback through the EKF estimate) from the
// configured initial data; cfg.sat is ignored.
[[nodiscard]] double calibrate_xi_level(const ControlDesign& design, const SimConfig& cfg);

// Default integration step: eps/20 for output feedback, 1e-3 for the reduced system.
[[nodiscard]] double default_step(Mode mode, double epsilon);

// Stride giving a record interval closest to 1e-3 s (at least 1).
[[nodiscard]] int default_record_stride(double step);

}  // namespace ofb
