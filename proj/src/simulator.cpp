#include "ofb/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>

#include "ofb/numerics.hpp"

namespace ofb {

namespace {

// Offsets of the blocks of the packed ODE state.
struct Layout {
    Eigen::Index m = 0;
    Eigen::Index rho = 0;
    bool observer = false;

    [[nodiscard]] Eigen::Index eta() const { return 0; }
    [[nodiscard]] Eigen::Index xi() const { return m; }
    [[nodiscard]] Eigen::Index eta_hat() const { return m + rho; }
    [[nodiscard]] Eigen::Index xi_hat() const { return 2 * m + rho; }
    [[nodiscard]] Eigen::Index sigma_hat() const { return 2 * m + 2 * rho; }
    [[nodiscard]] Eigen::Index P() const { return observer ? 2 * m + 2 * rho + 1 : 2 * m + rho; }
    [[nodiscard]] Eigen::Index size() const { return P() + m * m; }

    [[nodiscard]] PlantState plant(const Vector& x) const { return {x.segment(eta(), m), x.segment(xi(), rho)}; }

    [[nodiscard]] Matrix riccati(const Vector& x) const {
        return Eigen::Map<const Matrix>(x.data() + P(), m, m);
    }

    void set_riccati(Vector& x, const Matrix& p) const { Eigen::Map<Matrix>(x.data() + P(), m, m) = p; }

    [[nodiscard]] ObserverState observer_state(const Vector& x) const {
        ObserverState s;
        s.eta_hat = x.segment(eta_hat(), m);
        if (observer) {
            s.xi_hat = x.segment(xi_hat(), rho);
            s.sigma_hat = x(sigma_hat());
        }
        s.P = riccati(x);
        return s;
    }
};

Layout layout_for(const NormalFormSystem& sys, Mode mode) {
    return Layout{sys.internal_dim(), sys.rho, mode == Mode::output_feedback};
}

void symmetrize_riccati(const Layout& lay, Vector& x) {
    Eigen::Map<Matrix> p(x.data() + lay.P(), lay.m, lay.m);
    const Matrix sym = 0.5 * (p + p.transpose());
    p = sym;
}

// Observer-side evaluation point shared by the ODE right-hand side and the recorder.
ObserverTerms output_feedback_terms(const ControlDesign& design, const SimConfig& cfg, const ObserverState& obs,
                                    double y) {
    if (cfg.y_substitution) {
        const Vector measured = Vector::Constant(1, y);
        const double u = eval_gamma(design.law, obs.eta_hat, measured);
        return evaluate_terms(design.system, obs.eta_hat, measured, u);
    }
    std::optional<SaturationConfig> sat;
    if (cfg.saturation_enabled) {
        sat = cfg.sat;
    }
    return evaluate_lifted(design, obs.eta_hat, obs.xi_hat, sat);
}

std::optional<double> sigma_level(const SimConfig& cfg) {
    if (cfg.saturation_enabled) {
        return cfg.sat.M_sigma;
    }
    return std::nullopt;
}

Vector pack_initial(const Layout& lay, const SimConfig& cfg) {
    Vector x = Vector::Zero(lay.size());
    x.segment(lay.eta(), lay.m) = cfg.initial.plant.eta;
    x.segment(lay.xi(), lay.rho) = cfg.initial.plant.xi;
    x.segment(lay.eta_hat(), lay.m) = cfg.initial.eta_hat;
    if (lay.observer) {
        x.segment(lay.xi_hat(), lay.rho) = cfg.initial.xi_hat;
        x(lay.sigma_hat()) = cfg.initial.sigma_hat;
    }
    lay.set_riccati(x, cfg.weights.P0);
    return x;
}

void check_riccati(const Matrix& P, double t) {
    if (!is_positive_definite(P)) {
        throw RiccatiError("Riccati solution lost positive definiteness at t=" + std::to_string(t));
    }
}

StateHistory integrate(const VectorField& field, const Layout& lay, const SimConfig& cfg) {
    const Vector x0 = pack_initial(lay, cfg);
    return integrate_fixed(field, 0.0, x0, cfg.step, cfg.t_final, cfg.record_stride,
                           [&lay](double, Vector& x) { symmetrize_riccati(lay, x); });
}

bool same_time(double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a));
}

}  // namespace

double default_step(Mode mode, double epsilon) {
    return mode == Mode::output_feedback ? epsilon / 20.0 : 1e-3;
}

int default_record_stride(double step) {
    return std::max(1, static_cast<int>(std::lround(1e-3 / step)));
}

void validate_config(const ControlDesign& design, const SimConfig& cfg) {
    const NormalFormSystem& sys = design.system;
    check_dimensions(sys);
    if (!design.law.gamma) {
        throw ConfigError("design for '" + sys.name + "' has no feedback law");
    }
    const int m = sys.internal_dim();
    check_gains(cfg.gains, sys.rho);
    check_weights(cfg.weights, m);
    check_saturation(cfg.sat);
    if (!(cfg.step > 0.0) || !(cfg.t_final > 0.0)) {
        throw ConfigError("step and t_final must be positive");
    }
    if (cfg.record_stride < 1) {
        throw ConfigError("record_stride must be at least 1");
    }
    if (cfg.mode == Mode::output_feedback && cfg.step > cfg.gains.epsilon / 10.0 * (1.0 + 1e-12)) {
        throw ConfigError("output-feedback runs need step <= epsilon/10 (step=" + std::to_string(cfg.step) +
                          ", epsilon=" + std::to_string(cfg.gains.epsilon) + ")");
    }
    if (cfg.y_substitution && sys.rho != 1) {
        throw ConfigError("y_substitution is only defined for relative degree 1");
    }
    if (cfg.tube_level && !(*cfg.tube_level > 0.0)) {
        throw ConfigError("tube_level must be positive");
    }
    const InitialConditions& ic = cfg.initial;
    if (ic.plant.eta.size() != m || ic.eta_hat.size() != m) {
        throw ConfigError("eta0 and eta_hat0 need " + std::to_string(m) + " entries");
    }
    if (ic.plant.xi.size() != sys.rho || ic.xi_hat.size() != sys.rho) {
        throw ConfigError("xi0 and xi_hat0 need " + std::to_string(sys.rho) + " entries");
    }
}

Vector scaled_error_coords(const ControlDesign& design, const PlantState& plant, const ObserverState& obs,
                           const EhgoGains& g) {
    const Eigen::Index rho = plant.xi.size();
    Vector chi(rho + 1);
    for (Eigen::Index i = 0; i < rho; ++i) {
        // chi_{i+1} = (xi_{i+1} - xi_hat_{i+1}) / eps^{rho - i}
        chi(i) = (plant.xi(i) - obs.xi_hat(i)) / std::pow(g.epsilon, static_cast<double>(rho - i));
    }
    const double u = eval_gamma(design.law, obs.eta_hat, plant.xi);
    chi(rho) = eval_C1(design.system, plant.xi, u).dot(plant.eta) - obs.sigma_hat;
    return chi;
}

LyapunovMonitors lyapunov_monitors(const Vector& chi, const Vector& eta_tilde, const Matrix& P,
                                   const Matrix& P0) {
    Eigen::LLT<Matrix> llt(P);
    if (llt.info() != Eigen::Success) {
        throw RiccatiError("lyapunov_monitors: P is not positive definite");
    }
    LyapunovMonitors out;
    out.V2 = eta_tilde.dot(llt.solve(eta_tilde));
    out.W = chi.dot(P0 * chi);
    return out;
}

Matrix observer_lyapunov_matrix(const EhgoGains& g) {
    return solve_lyapunov(companion_lambda({g.alphas.data(), static_cast<std::size_t>(g.alphas.size())}));
}

Trajectory simulate_reduced(const ControlDesign& design, const SimConfig& cfg) {
    validate_config(design, cfg);
    const NormalFormSystem& sys = design.system;
    const Layout lay = layout_for(sys, Mode::reduced);

    VectorField field;
    field.dimension = lay.size();
    field.rhs = [&](double, const Vector& x) {
        const PlantState plant = lay.plant(x);
        const Vector eta_hat = x.segment(lay.eta_hat(), lay.m);
        const Matrix P = lay.riccati(x);
        const double u = eval_gamma(design.law, eta_hat, plant.xi);
        const ObserverTerms at = evaluate_terms(sys, eta_hat, plant.xi, u);
        const PlantDerivative d = plant_rhs(sys, plant, u);
        const double sigma = at.C1.dot(plant.eta);
        const Vector L = ekf_gain(P, at.C1, cfg.weights.R);

        Vector dx(lay.size());
        dx.segment(lay.eta(), lay.m) = d.eta_dot;
        dx.segment(lay.xi(), lay.rho) = d.xi_dot;
        dx.segment(lay.eta_hat(), lay.m) = ekf_rhs(at, eta_hat, L, sigma, std::nullopt);
        const Matrix dP = riccati_rhs(P, at.A1, at.C1, cfg.weights);
        Eigen::Map<Matrix>(dx.data() + lay.P(), lay.m, lay.m) = dP;
        return dx;
    };

    const StateHistory hist = integrate(field, lay, cfg);

    Trajectory traj;
    traj.mode = Mode::reduced;
    traj.epsilon = cfg.gains.epsilon;
    traj.samples.reserve(hist.states.size());
    const Vector zero_chi = Vector::Zero(lay.rho + 1);
    for (std::size_t k = 0; k < hist.states.size(); ++k) {
        const Vector& x = hist.states[k];
        Sample s;
        s.t = hist.times[k];
        const PlantState plant = lay.plant(x);
        s.eta = plant.eta;
        s.xi = plant.xi;
        s.y = plant_output(sys, plant);
        s.eta_hat = x.segment(lay.eta_hat(), lay.m);
        s.P = lay.riccati(x);
        check_riccati(s.P, s.t);
        s.u = eval_gamma(design.law, s.eta_hat, plant.xi);
        s.xi_hat = plant.xi;
        s.sigma_hat = virtual_output(sys, plant, s.u);
        s.sigma_fed = s.sigma_hat;
        s.correction = s.sigma_hat - eval_C1(sys, plant.xi, s.u).dot(s.eta_hat);
        s.eta_tilde = s.eta - s.eta_hat;
        s.chi = zero_chi;
        const LyapunovMonitors mon = lyapunov_monitors(s.chi, s.eta_tilde, s.P, Matrix::Zero(lay.rho + 1, lay.rho + 1));
        s.V2 = mon.V2;
        s.W = 0.0;
        traj.samples.push_back(std::move(s));
    }
    return traj;
}

Trajectory simulate_output_feedback(const ControlDesign& design, const SimConfig& cfg) {
    validate_config(design, cfg);
    const NormalFormSystem& sys = design.system;
    const Layout lay = layout_for(sys, Mode::output_feedback);
    const EhgoGainVector gains = ehgo_gain(cfg.gains);
    const std::optional<double> m_sigma = sigma_level(cfg);

    VectorField field;
    field.dimension = lay.size();
    field.rhs = [&](double, const Vector& x) {
        const PlantState plant = lay.plant(x);
        const ObserverState obs = lay.observer_state(x);
        const double y = plant_output(sys, plant);
        const ObserverTerms at = output_feedback_terms(design, cfg, obs, y);
        const PlantDerivative d = plant_rhs(sys, plant, at.u);
        const Vector L = ekf_gain(obs.P, at.C1, cfg.weights.R);
        const XiSigmaDerivative hg = ehgo_rhs(at, obs, y, gains);

        Vector dx(lay.size());
        dx.segment(lay.eta(), lay.m) = d.eta_dot;
        dx.segment(lay.xi(), lay.rho) = d.xi_dot;
        dx.segment(lay.eta_hat(), lay.m) = ekf_rhs(at, obs.eta_hat, L, obs.sigma_hat, m_sigma);
        dx.segment(lay.xi_hat(), lay.rho) = hg.xi_hat_dot;
        dx(lay.sigma_hat()) = hg.sigma_hat_dot;
        const Matrix dP = riccati_rhs(obs.P, at.A1, at.C1, cfg.weights);
        Eigen::Map<Matrix>(dx.data() + lay.P(), lay.m, lay.m) = dP;
        return dx;
    };

    StateHistory hist;
    try {
        hist = integrate(field, lay, cfg);
    } catch (const IntegrationError& e) {
        if (cfg.saturation_enabled) {
            throw;
        }
        throw IntegrationError(e.time(), std::string("observer peaking with saturation disabled (") + e.what() + ")");
    }

    const Matrix P0 = observer_lyapunov_matrix(cfg.gains);
    Trajectory traj;
    traj.mode = Mode::output_feedback;
    traj.epsilon = cfg.gains.epsilon;
    traj.samples.reserve(hist.states.size());
    for (std::size_t k = 0; k < hist.states.size(); ++k) {
        const Vector& x = hist.states[k];
        Sample s;
        s.t = hist.times[k];
        const PlantState plant = lay.plant(x);
        const ObserverState obs = lay.observer_state(x);
        check_riccati(obs.P, s.t);
        s.eta = plant.eta;
        s.xi = plant.xi;
        s.y = plant_output(sys, plant);
        const ObserverTerms at = output_feedback_terms(design, cfg, obs, s.y);
        s.u = at.u;
        s.eta_hat = obs.eta_hat;
        s.xi_hat = obs.xi_hat;
        s.sigma_hat = obs.sigma_hat;
        s.sigma_fed = m_sigma ? standard_sat(obs.sigma_hat, *m_sigma) : obs.sigma_hat;
        s.correction = ekf_correction_input(at, obs.eta_hat, obs.sigma_hat, m_sigma);
        s.P = obs.P;
        s.eta_tilde = s.eta - s.eta_hat;
        s.chi = scaled_error_coords(design, plant, obs, cfg.gains);
        const LyapunovMonitors mon = lyapunov_monitors(s.chi, s.eta_tilde, s.P, P0);
        s.V2 = mon.V2;
        s.W = mon.W;
        traj.samples.push_back(std::move(s));
    }
    return traj;
}

Trajectory simulate(const ControlDesign& design, const SimConfig& cfg) {
    return cfg.mode == Mode::reduced ? simulate_reduced(design, cfg) : simulate_output_feedback(design, cfg);
}

RecoveryDeviation recovery_metric(const Trajectory& traj_of, const Trajectory& traj_red) {
    if (traj_of.size() != traj_red.size()) {
        throw ConfigError("recovery_metric: trajectories have different grids (" + std::to_string(traj_of.size()) +
                          " vs " + std::to_string(traj_red.size()) + " records)");
    }
    RecoveryDeviation out;
    for (std::size_t k = 0; k < traj_of.size(); ++k) {
        const Sample& a = traj_of.samples[k];
        const Sample& b = traj_red.samples[k];
        if (!same_time(a.t, b.t)) {
            throw ConfigError("recovery_metric: grids differ at record " + std::to_string(k));
        }
        const double dev_theta = std::sqrt((a.eta - b.eta).squaredNorm() + (a.xi - b.xi).squaredNorm());
        out.sup_dev_theta = std::max(out.sup_dev_theta, dev_theta);
        out.sup_dev_eta_tilde = std::max(out.sup_dev_eta_tilde, (a.eta_tilde - b.eta_tilde).norm());
    }
    return out;
}

PeakingReport peaking_report(const Trajectory& traj, const EhgoGains& g, const Matrix& P0, double tube_level) {
    PeakingReport out;
    const double bound = tube_level * g.epsilon * g.epsilon;
    std::optional<std::size_t> last_outside;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const Vector& chi = traj.samples[k].chi;
        out.max_abs_chi = std::max(out.max_abs_chi, chi.norm());
        if (chi.dot(P0 * chi) > bound) {
            last_outside = k;
        }
    }
    if (traj.empty()) {
        return out;
    }
    if (!last_outside) {
        out.entry_time = traj.samples.front().t;
    } else if (*last_outside + 1 < traj.size()) {
        out.entry_time = traj.samples[*last_outside + 1].t;
    }
    return out;
}

double tube_calibration_time(double epsilon) {
    return 100.0 * epsilon;
}

double default_tube_level(const Trajectory& traj) {
    const double eps = traj.epsilon;
    const double t_cal = tube_calibration_time(eps);
    double level = 0.0;
    for (const Sample& s : traj.samples) {
        if (s.t >= t_cal) {
            level = std::max(level, s.W / (eps * eps));
        }
    }
    // a run that converges exactly leaves nothing to calibrate against
    return level > 0.0 ? 4.0 * level : std::numeric_limits<double>::min();
}

SweepRuns run_sweep(const ControlDesign& design, const SimConfig& cfg, const std::vector<double>& epsilons,
                    double record_interval) {
    if (epsilons.empty()) {
        throw ConfigError("epsilon_sweep: no epsilon values given");
    }
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
        if (!(epsilons[i] > 0.0)) {
            throw ConfigError("epsilon_sweep: epsilon values must be positive");
        }
        if (i > 0 && !(epsilons[i] < epsilons[i - 1])) {
            throw ConfigError("epsilon_sweep: epsilon values must be sorted in strictly descending order");
        }
    }

    struct Pair {
        Trajectory of;
        Trajectory red;
    };
    std::vector<std::future<Pair>> jobs;
    jobs.reserve(epsilons.size());
    for (double eps : epsilons) {
        SimConfig run = cfg;
        run.gains.epsilon = eps;
        run.step = default_step(Mode::output_feedback, eps);
        run.record_stride = std::max(1, static_cast<int>(std::lround(record_interval / run.step)));
        jobs.push_back(std::async(std::launch::async, [&design, run]() mutable {
            Pair p;
            run.mode = Mode::output_feedback;
            p.of = simulate_output_feedback(design, run);
            run.mode = Mode::reduced;
            p.red = simulate_reduced(design, run);
            return p;
        }));
    }

    SweepRuns out;
    const Matrix P0 = observer_lyapunov_matrix(cfg.gains);
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        Pair p;
        try {
            p = jobs[i].get();
        } catch (const Error& e) {
            throw Error("epsilon_sweep: run with epsilon=" + std::to_string(epsilons[i]) + " failed: " + e.what());
        }
        const RecoveryDeviation dev = recovery_metric(p.of, p.red);
        EhgoGains g = cfg.gains;
        g.epsilon = epsilons[i];
        const double level = cfg.tube_level ? *cfg.tube_level : default_tube_level(p.of);
        const PeakingReport peak = peaking_report(p.of, g, P0, level);
        out.report.epsilons.push_back(epsilons[i]);
        out.report.sup_dev_theta.push_back(dev.sup_dev_theta);
        out.report.sup_dev_eta_tilde.push_back(dev.sup_dev_eta_tilde);
        out.report.transient_cutoff.push_back(peak.entry_time);
        out.report.max_abs_chi.push_back(peak.max_abs_chi);
        out.output_feedback.push_back(std::move(p.of));
        out.reduced.push_back(std::move(p.red));
    }
    return out;
}

RecoveryReport epsilon_sweep(const ControlDesign& design, const SimConfig& cfg, const std::vector<double>& epsilons) {
    return run_sweep(design, cfg, epsilons).report;
}

double calibrate_xi_level(const ControlDesign& design, const SimConfig& cfg) {
    SimConfig reduced = cfg;
    reduced.mode = Mode::reduced;
    reduced.step = default_step(Mode::reduced, cfg.gains.epsilon);
    reduced.record_stride = 1;
    reduced.sat = SaturationConfig{};
    reduced.tube_level.reset();
    double peak = 0.0;
    for (const Sample& s : simulate_reduced(design, reduced).samples) {
        peak = std::max(peak, s.xi.norm());
    }
    // a plant starting at rest still needs a positive level
    return 1.5 * std::max(peak, 1e-3);
}

}  // namespace ofb
