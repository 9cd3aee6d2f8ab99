#include "ofb/system_model.hpp"

#include <cmath>

namespace ofb {

namespace {

[[noreturn]] void fail(const NormalFormSystem& sys, const char* fn, const char* what) {
    throw EvaluationError(std::string(fn) + " of system '" + sys.name + "' " + what);
}

}  // namespace

ChainMatrices chain_matrices(int rho) {
    if (rho < 1) {
        throw ConfigError("chain_matrices: relative degree must be at least 1");
    }
    ChainMatrices m;
    m.A = Matrix::Zero(rho, rho);
    for (int i = 0; i + 1 < rho; ++i) {
        m.A(i, i + 1) = 1.0;
    }
    m.B = Vector::Zero(rho);
    m.B(rho - 1) = 1.0;
    m.C = RowVector::Zero(rho);
    m.C(0) = 1.0;
    return m;
}

void check_dimensions(const NormalFormSystem& sys) {
    if (sys.rho < 1 || sys.n < sys.rho + 1) {
        throw ConfigError("system '" + sys.name + "': need 1 <= rho < n (got n=" + std::to_string(sys.n) +
                          ", rho=" + std::to_string(sys.rho) + ")");
    }
    if (!sys.A1 || !sys.phi0 || !sys.C1 || !sys.a || !sys.phi1) {
        throw ConfigError("system '" + sys.name + "': all of A1, phi0, C1, a, phi1 must be set");
    }
}

Matrix eval_A1(const NormalFormSystem& sys, const Vector& xi, double u) {
    Matrix m = sys.A1(xi, u);
    const int k = sys.internal_dim();
    if (m.rows() != k || m.cols() != k) {
        fail(sys, "A1", "has the wrong shape");
    }
    if (!m.allFinite()) {
        fail(sys, "A1", "returned a non-finite value");
    }
    return m;
}

Vector eval_phi0(const NormalFormSystem& sys, const Vector& xi, double u) {
    Vector v = sys.phi0(xi, u);
    if (v.size() != sys.internal_dim()) {
        fail(sys, "phi0", "has the wrong shape");
    }
    if (!v.allFinite()) {
        fail(sys, "phi0", "returned a non-finite value");
    }
    return v;
}

RowVector eval_C1(const NormalFormSystem& sys, const Vector& xi, double u) {
    RowVector c = sys.C1(xi, u);
    if (c.size() != sys.internal_dim()) {
        fail(sys, "C1", "has the wrong shape");
    }
    if (!c.allFinite()) {
        fail(sys, "C1", "returned a non-finite value");
    }
    return c;
}

double eval_a(const NormalFormSystem& sys, const Vector& xi, double u) {
    const double v = sys.a(xi, u);
    if (!std::isfinite(v)) {
        fail(sys, "a", "returned a non-finite value");
    }
    return v;
}

double eval_phi1(const NormalFormSystem& sys, const Vector& eta, const Vector& xi) {
    const double v = sys.phi1(eta, xi);
    if (!std::isfinite(v)) {
        fail(sys, "phi1", "returned a non-finite value");
    }
    return v;
}

PlantDerivative plant_rhs(const NormalFormSystem& sys, const PlantState& state, double u) {
    if (state.eta.size() != sys.internal_dim() || state.xi.size() != sys.rho) {
        throw ConfigError("plant_rhs: state dimensions do not match system '" + sys.name + "'");
    }
    PlantDerivative d;
    d.eta_dot = eval_A1(sys, state.xi, u) * state.eta + eval_phi0(sys, state.xi, u);
    const double drive = eval_C1(sys, state.xi, u).dot(state.eta) + eval_a(sys, state.xi, u);
    // chain of integrators: xi_i' = xi_{i+1}, xi_rho' = drive
    d.xi_dot.resize(sys.rho);
    for (int i = 0; i + 1 < sys.rho; ++i) {
        d.xi_dot(i) = state.xi(i + 1);
    }
    d.xi_dot(sys.rho - 1) = drive;
    return d;
}

double plant_output(const NormalFormSystem&, const PlantState& state) {
    return state.xi(0);
}

double virtual_output(const NormalFormSystem& sys, const PlantState& state, double u) {
    return eval_C1(sys, state.xi, u).dot(state.eta);
}

double equilibrium_defect(const NormalFormSystem& sys) {
    const Vector xi0 = Vector::Zero(sys.rho);
    const double phi0 = sys.phi0(xi0, 0.0).cwiseAbs().maxCoeff();
    return std::max(phi0, std::abs(sys.a(xi0, 0.0)));
}

NormalFormSystem example_system() {
    NormalFormSystem sys;
    sys.name = "example";
    sys.n = 2;
    sys.rho = 1;
    sys.A1 = [](const Vector& xi, double) { return Matrix::Constant(1, 1, std::cos(xi(0))); };
    sys.phi0 = [](const Vector& xi, double) { return Vector::Constant(1, xi(0)); };
    sys.C1 = [](const Vector&, double) { return RowVector::Ones(1); };
    sys.a = [](const Vector& xi, double u) { return xi(0) * xi(0) + u; };
    sys.phi1 = [](const Vector& eta, const Vector& xi) { return xi(0) + eta(0) * std::cos(xi(0)); };
    return sys;
}

}  // namespace ofb
