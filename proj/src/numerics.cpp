#include "ofb/numerics.hpp"

#include <cmath>
#include <string>

namespace ofb {

namespace {

Vector evaluate(const VectorField& field, double t, const Vector& x) {
    Vector dx;
    try {
        dx = field.rhs(t, x);
    } catch (const EvaluationError& e) {
        throw IntegrationError(t, e.what());
    }
    if (dx.size() != field.dimension) {
        throw IntegrationError(t, "derivative has dimension " + std::to_string(dx.size()) + ", expected " +
                                      std::to_string(field.dimension));
    }
    if (!dx.allFinite()) {
        throw IntegrationError(t, "non-finite derivative");
    }
    return dx;
}

}  // namespace

Vector rk4_step(const VectorField& field, double t, const Vector& x, double h) {
    if (!(h > 0.0)) {
        throw ConfigError("rk4_step: step must be positive");
    }
    if (x.size() != field.dimension) {
        throw ConfigError("rk4_step: state dimension does not match the vector field");
    }
    if (!x.allFinite()) {
        throw IntegrationError(t, "non-finite state");
    }
    const double half = 0.5 * h;
    const Vector k1 = evaluate(field, t, x);
    const Vector k2 = evaluate(field, t + half, x + half * k1);
    const Vector k3 = evaluate(field, t + half, x + half * k2);
    const Vector k4 = evaluate(field, t + h, x + h * k3);
    Vector next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!next.allFinite()) {
        throw IntegrationError(t + h, "non-finite state");
    }
    return next;
}

long step_count(double t0, double h, double t_end) {
    const double span = (t_end - t0) / h;
    // tolerate round-off when h divides the span
    return static_cast<long>(std::ceil(span - 1e-9 * std::max(1.0, span)));
}

StateHistory integrate_fixed(const VectorField& field, double t0, const Vector& x0, double h, double t_end,
                             int record_stride, const StepHook& after_step) {
    if (!(t_end > t0)) {
        throw ConfigError("integrate_fixed: t_end must exceed t0");
    }
    if (!(h > 0.0)) {
        throw ConfigError("integrate_fixed: step must be positive");
    }
    if (record_stride < 1) {
        throw ConfigError("integrate_fixed: record stride must be at least 1");
    }
    const long steps = step_count(t0, h, t_end);

    StateHistory out;
    const auto expected = static_cast<std::size_t>(steps / record_stride + 2);
    out.times.reserve(expected);
    out.states.reserve(expected);
    out.times.push_back(t0);
    out.states.push_back(x0);

    Vector x = x0;
    for (long k = 0; k < steps; ++k) {
        const double t = t0 + static_cast<double>(k) * h;
        x = rk4_step(field, t, x, h);
        const double t_next = t0 + static_cast<double>(k + 1) * h;
        if (after_step) {
            after_step(t_next, x);
        }
        if ((k + 1) % record_stride == 0 || k + 1 == steps) {
            out.times.push_back(t_next);
            out.states.push_back(x);
        }
    }
    return out;
}

Matrix companion_lambda(std::span<const double> alphas) {
    const auto k = static_cast<Eigen::Index>(alphas.size());
    Matrix m = Matrix::Zero(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        m(i, 0) = -alphas[static_cast<std::size_t>(i)];
        if (i + 1 < k) {
            m(i, i + 1) = 1.0;
        }
    }
    return m;
}

bool is_hurwitz(const Matrix& m) {
    if (m.rows() == 0 || m.rows() != m.cols() || !m.allFinite()) {
        return false;
    }
    Eigen::EigenSolver<Matrix> solver(m, false);
    if (solver.info() != Eigen::Success) {
        return false;
    }
    return (solver.eigenvalues().real().array() < -kHurwitzTolerance).all();
}

bool hurwitz_check(std::span<const double> alphas) {
    return is_hurwitz(companion_lambda(alphas));
}

Matrix solve_lyapunov(const Matrix& lambda) {
    if (!is_hurwitz(lambda)) {
        throw NoSolutionError("solve_lyapunov: matrix is not Hurwitz");
    }
    // Entry (i,j) of P*L + L^T*P is sum_k P(i,k) L(k,j) + L(k,i) P(k,j); unknowns are the
    // column-major entries of P.
    const Eigen::Index n = lambda.rows();
    const Eigen::Index nn = n * n;
    Matrix system = Matrix::Zero(nn, nn);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::Index row = i + j * n;
            for (Eigen::Index k = 0; k < n; ++k) {
                system(row, i + k * n) += lambda(k, j);
                system(row, k + j * n) += lambda(k, i);
            }
        }
    }
    const Matrix identity = Matrix::Identity(n, n);
    const Vector rhs = -Eigen::Map<const Vector>(identity.data(), nn);
    Eigen::FullPivLU<Matrix> lu(system);
    if (!lu.isInvertible()) {
        throw NoSolutionError("solve_lyapunov: singular Kronecker system");
    }
    const Vector p = lu.solve(rhs);
    Matrix P = Eigen::Map<const Matrix>(p.data(), n, n);
    return 0.5 * (P + P.transpose());
}

}  // namespace ofb
