#include "ofb/observers.hpp"

#include <cmath>

#include "ofb/numerics.hpp"

namespace ofb {

namespace {

bool symmetric_pd(const Matrix& m, int order) {
    if (m.rows() != order || m.cols() != order || !m.allFinite()) {
        return false;
    }
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff())) {
        return false;
    }
    return is_positive_definite(m);
}

}  // namespace

void check_weights(const EkfWeights& w, int m) {
    if (!symmetric_pd(w.Q, m)) {
        throw ConfigError("Q must be a symmetric positive definite " + std::to_string(m) + "x" +
                          std::to_string(m) + " matrix");
    }
    if (!symmetric_pd(w.P0, m)) {
        throw ConfigError("P0 must be a symmetric positive definite " + std::to_string(m) + "x" +
                          std::to_string(m) + " matrix");
    }
    if (!(w.R > 0.0) || !std::isfinite(w.R)) {
        throw ConfigError("R must be positive");
    }
}

void check_gains(const EhgoGains& g, int rho) {
    if (g.alphas.size() != rho + 1) {
        throw ConfigError("alpha must have rho+1 = " + std::to_string(rho + 1) + " entries");
    }
    if (!hurwitz_check({g.alphas.data(), static_cast<std::size_t>(g.alphas.size())})) {
        throw ConfigError("alpha does not define a Hurwitz polynomial");
    }
    if (!(g.epsilon > 0.0) || !std::isfinite(g.epsilon)) {
        throw ConfigError("epsilon must be positive");
    }
}

Matrix riccati_rhs(const Matrix& P, const Matrix& A1, const RowVector& C1, const EkfWeights& w) {
    if (!(w.R > 0.0)) {
        throw ConfigError("riccati_rhs: R must be positive");
    }
    const Vector PCt = P * C1.transpose();
    return A1 * P + P * A1.transpose() + w.Q - (PCt * PCt.transpose()) / w.R;
}

Vector ekf_gain(const Matrix& P, const RowVector& C1, double R) {
    return P * C1.transpose() / R;
}

double ekf_correction_input(const ObserverTerms& at, const Vector& eta_hat, double sigma_raw,
                            std::optional<double> M_sigma) {
    const double sigma = M_sigma ? standard_sat(sigma_raw, *M_sigma) : sigma_raw;
    return sigma - at.C1.dot(eta_hat);
}

Vector ekf_rhs(const ObserverTerms& at, const Vector& eta_hat, const Vector& L, double sigma_raw,
               std::optional<double> M_sigma) {
    return at.A1 * eta_hat + at.phi0 + L * ekf_correction_input(at, eta_hat, sigma_raw, M_sigma);
}

EhgoGainVector ehgo_gain(const EhgoGains& g) {
    if (!(g.epsilon > 0.0)) {
        throw ConfigError("ehgo_gain: epsilon must be positive");
    }
    const auto rho = g.alphas.size() - 1;
    EhgoGainVector out;
    out.H.resize(rho);
    double scale = 1.0;
    for (Eigen::Index i = 0; i < rho; ++i) {
        scale *= g.epsilon;
        out.H(i) = g.alphas(i) / scale;
    }
    out.sigma_gain = g.alphas(rho) / (scale * g.epsilon);
    return out;
}

XiSigmaDerivative ehgo_rhs(const ObserverTerms& at, const ObserverState& obs, double y,
                           const EhgoGainVector& gains) {
    const Eigen::Index rho = obs.xi_hat.size();
    const double innovation = y - obs.xi_hat(0);
    XiSigmaDerivative d;
    d.xi_hat_dot.resize(rho);
    for (Eigen::Index i = 0; i + 1 < rho; ++i) {
        d.xi_hat_dot(i) = obs.xi_hat(i + 1);
    }
    d.xi_hat_dot(rho - 1) = obs.sigma_hat + at.a;
    d.xi_hat_dot += gains.H * innovation;
    d.sigma_hat_dot = at.phi1 + gains.sigma_gain * innovation;
    return d;
}

double validate_phi1(const ControlDesign& design, const PlantTrack& probe) {
    const NormalFormSystem& sys = design.system;
    const std::size_t count = probe.states.size();
    std::vector<double> sigma(count);
    for (std::size_t k = 0; k < count; ++k) {
        sigma[k] = virtual_output(sys, probe.states[k], probe.controls[k]);
    }
    double worst = 0.0;
    for (std::size_t k = 1; k + 1 < count; ++k) {
        const double rate = (sigma[k + 1] - sigma[k - 1]) / (probe.times[k + 1] - probe.times[k - 1]);
        const double phi1 = eval_phi1(sys, probe.states[k].eta, probe.states[k].xi);
        worst = std::max(worst, std::abs(phi1 - rate));
    }
    return worst;
}

PdSummary pd_monitor(const Matrix& P) {
    PdSummary out;
    out.symmetric_defect = (P - P.transpose()).cwiseAbs().maxCoeff();
    const Matrix sym = 0.5 * (P + P.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
    out.lambda_min = solver.eigenvalues().minCoeff();
    out.lambda_max = solver.eigenvalues().maxCoeff();
    return out;
}

bool is_positive_definite(const Matrix& P) {
    if (P.rows() == 0 || !P.allFinite()) {
        return false;
    }
    Eigen::LLT<Matrix> llt(P);
    return llt.info() == Eigen::Success;
}

}  // namespace ofb
