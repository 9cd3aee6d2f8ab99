#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ofb {

using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Matrix = Eigen::MatrixXd;

// Base for every error the library raises.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A step of an ODE produced a non-finite state or derivative.
class IntegrationError : public Error {
public:
    IntegrationError(double time, const std::string& what)
        : Error("integration failure at t=" + std::to_string(time) + ": " + what), time_(time) {}

    [[nodiscard]] double time() const noexcept { return time_; }

private:
    double time_;
};

// A user-supplied plant or feedback function returned a non-finite value.
class EvaluationError : public Error {
public:
    using Error::Error;
};

// Invalid parameters (non-Hurwitz gains, epsilon <= 0, R <= 0, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

// solve_lyapunov was handed a matrix that is not Hurwitz.
class NoSolutionError : public Error {
public:
    using Error::Error;
};

// The Riccati solution lost symmetry or positive definiteness.
class RiccatiError : public Error {
public:
    using Error::Error;
};

}  // namespace ofb
