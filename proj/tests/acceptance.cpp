// Prints one PASS/FAIL line per acceptance criterion; exits nonzero if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "ofb/commands.hpp"
#include "ofb/config.hpp"
#include "ofb/numerics.hpp"
#include "ofb/report_io.hpp"
#include "oracles.hpp"

using namespace ofb;

namespace {

int failures = 0;

void verdict(int id, bool pass, const std::string& detail) {
    std::printf("criterion %d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) {
        ++failures;
    }
}

// Runs a criterion, turning an unexpected exception into a failure line.
void check(int id, const std::function<void()>& body) {
    try {
        body();
    } catch (const std::exception& e) {
        verdict(id, false, std::string("exception: ") + e.what());
    }
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

const Sample& at_time(const Trajectory& traj, double t) {
    const Sample* best = &traj.samples.front();
    for (const Sample& s : traj.samples) {
        if (std::abs(s.t - t) < std::abs(best->t - t)) {
            best = &s;
        }
    }
    return *best;
}

SimConfig reference_config(const std::map<std::string, std::string>& overrides = {}) {
    const std::string text =
        "system = example\nmode = output_feedback\nepsilon = 0.001\nalpha = [5, 1]\nQ = 1\nR = 10\nP0 = 0.1\n"
        "eta0 = 0.5\nxi0 = 0.9\neta_hat0 = 0\nxi_hat0 = 0.1\nsigma_hat0 = 0\nM_sigma = 10\nt_final = 20\n";
    return parse_config(text, overrides);
}

double max_correction(const Trajectory& traj, double t_end) {
    double m = 0.0;
    for (const Sample& s : traj.samples) {
        if (s.t <= t_end + 1e-12) {
            m = std::max(m, std::abs(s.correction));
        }
    }
    return m;
}

}  // namespace

int main() {
    const ControlDesign design = example_design();
    Trajectory reference_run;

    check(1, [&] {
        const auto start = std::chrono::steady_clock::now();
        reference_run = simulate(design, reference_config());
        const double elapsed = seconds_since(start);
        double worst_y = 0.0;
        double worst_eta = 0.0;
        for (const Sample& s : reference_run.samples) {
            if (s.t >= 15.0 - 1e-9) {
                worst_y = std::max(worst_y, std::abs(s.y));
                worst_eta = std::max(worst_eta, s.eta.cwiseAbs().maxCoeff());
            }
        }
        verdict(1, worst_y < 0.01 && worst_eta < 0.01 && elapsed < 30.0,
                fmt("max|y|=%.3g max|eta|=%.3g on [15,20], runtime %.2f s (limits 0.01, 0.01, 30 s)", worst_y,
                    worst_eta, elapsed));
    });

    check(2, [&] {
        const double p20 = at_time(reference_run, 20.0).P(0, 0);
        const double p19 = at_time(reference_run, 19.0).P(0, 0);
        const double root = oracle::scalar_are_root(1.0, 1.0, 10.0);
        const double rel = std::abs(p20 - root) / root;
        verdict(2, std::abs(p20 - p19) < 1e-4 && rel < 0.01,
                fmt("P(20)=%.8f |P(20)-P(19)|=%.3g ARE root %.8f rel.err %.3g", p20, std::abs(p20 - p19), root, rel));
    });

    SweepRuns sweep;
    check(3, [&] {
        const auto start = std::chrono::steady_clock::now();
        sweep = run_sweep(design, reference_config(), {0.01, 0.005, 0.001});
        const double elapsed = seconds_since(start);
        const auto& d = sweep.report.sup_dev_theta;
        const bool decreasing = d[0] > d[1] && d[1] > d[2];
        const double ratio = d[2] / d[0];
        verdict(3, decreasing && ratio < 0.5 && elapsed < 120.0,
                fmt("sup_dev_theta = %.4g, %.4g, %.4g; ratio %.3g (limit 0.5); runtime %.2f s", d[0], d[1], d[2], ratio,
                    elapsed));
    });

    check(4, [&] {
        const double eps = 0.001;
        const std::map<std::string, std::string> window{{"t_final", "0.05"}, {"record_stride", "1"}};
        auto unsat_overrides = window;
        unsat_overrides["saturation_enabled"] = "false";
        const double sat_max = max_correction(simulate(design, reference_config(window)), 5 * eps);
        std::string peaking;
        bool peaking_ok = false;
        try {
            const double unsat_max = max_correction(simulate(design, reference_config(unsat_overrides)), 5 * eps);
            peaking_ok = unsat_max > 10.0 * sat_max;
            peaking = fmt("max|correction| on [0,5eps]: unsaturated %.4g vs saturated %.4g", unsat_max, sat_max);
        } catch (const IntegrationError& e) {
            peaking_ok = true;
            peaking = std::string("unsaturated run failed: ") + e.what();
        }
        double fed_max = 0.0;
        for (const Sample& s : reference_run.samples) {
            fed_max = std::max(fed_max, std::abs(s.sigma_fed));
        }
        verdict(4, peaking_ok && fed_max <= 10.0,
                peaking + fmt("; max|sigma fed to EKF| = %.6g (limit 10)", fed_max));
    });

    check(5, [&] {
        const Trajectory red = simulate(design, reference_config({{"mode", "reduced"}}));
        const double tol = 1e-9 * std::max(1.0, red.samples.front().V2);
        double worst = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 1; k < red.size(); ++k) {
            worst = std::max(worst, red.samples[k].V2 - red.samples[k - 1].V2);
        }
        verdict(5, worst <= tol, fmt("largest V2 increase between records %.3g (tolerance %.3g)", worst, tol));
    });

    check(6, [&] {
        const auto post_transient = [&](std::size_t i) {
            const double cutoff = sweep.report.transient_cutoff[i].value_or(0.0);
            double m = 0.0;
            for (const Sample& s : sweep.output_feedback[i].samples) {
                if (s.t >= cutoff) {
                    m = std::max(m, (s.xi - s.xi_hat).cwiseAbs().maxCoeff());
                }
            }
            return m;
        };
        const double coarse = post_transient(0);
        const double fine = post_transient(2);
        const double ratio = fine / coarse;
        verdict(6, ratio >= 1.0 / 20.0 && ratio <= 1.0 / 5.0,
                fmt("post-transient max|xi-xi_hat|: eps=0.01 %.4g, eps=0.001 %.4g, ratio %.4g (window [0.05, 0.2])",
                    coarse, fine, ratio));
    });

    check(7, [&] {
        const VectorField decay{1, [](double, const Vector& x) -> Vector { return -x; }};
        const auto final_error = [&](double h) {
            const StateHistory hist = integrate_fixed(decay, 0.0, Vector::Ones(1), h, 1.0, 1);
            return std::abs(hist.states.back()(0) - std::exp(-1.0));
        };
        const double order_ratio = final_error(0.1) / final_error(0.05);

        oracle::Lcg rng(20240601);
        int lyap_bad = 0;
        double worst_residual = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<double> roots(rng.integer(1, 6));
            for (double& r : roots) {
                r = rng.uniform(-3.0, -0.2);
            }
            const std::vector<double> alphas = oracle::poly_from_roots(roots);
            const Matrix lambda = companion_lambda(alphas);
            const Matrix p0 = solve_lyapunov(lambda);
            const Matrix residual =
                p0 * lambda + lambda.transpose() * p0 + Matrix::Identity(lambda.rows(), lambda.cols());
            const double res = residual.cwiseAbs().maxCoeff();
            worst_residual = std::max(worst_residual, res);
            Eigen::SelfAdjointEigenSolver<Matrix> eig(p0);
            if (res > 1e-10 || eig.eigenvalues().minCoeff() <= 0.0) {
                ++lyap_bad;
            }
        }

        int disagreements = 0;
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<double> alphas(rng.integer(1, 5));
            for (double& a : alphas) {
                a = rng.uniform(-1.0, 6.0);
            }
            const bool expected = oracle::max_real_eigenvalue(oracle::bottom_companion(alphas)) < -1e-9;
            if (hurwitz_check(alphas) != expected) {
                ++disagreements;
            }
        }
        verdict(7, order_ratio >= 12.0 && order_ratio <= 20.0 && lyap_bad == 0 && disagreements == 0,
                fmt("RK4 ratio %.3f; Lyapunov failures %d/100 (worst residual %.2g); hurwitz disagreements %d/100",
                    order_ratio, lyap_bad, worst_residual, disagreements));
    });

    check(8, [&] {
        const PlantState start{Vector::Constant(1, 0.5), Vector::Constant(1, 0.9)};
        const double good = validate_phi1(design, simulate_state_feedback(design, start, 1.0, 1e-4));
        const ControlDesign bad_design = find_design("example-bad-phi1").design;
        const double bad = validate_phi1(bad_design, simulate_state_feedback(bad_design, start, 1.0, 1e-4));

        const std::filesystem::path cfg = std::filesystem::temp_directory_path() / "ofb_acceptance_bad_phi1.cfg";
        std::ofstream(cfg) << "system = example-bad-phi1\n";
        std::ostringstream out;
        std::ostringstream err;
        const int code = run_command({"validate", "--config", cfg.string()}, out, err);
        std::filesystem::remove(cfg);
        verdict(8, good < 1e-5 && bad > 0.1 && code != 0,
                fmt("example %.3g (limit 1e-5); corrupted %.3g (limit 0.1); validate exit code %d", good, bad, code));
    });

    check(9, [&] {
        const std::map<std::string, std::string> zero{{"eta0", "0"}, {"xi0", "0"}, {"eta_hat0", "0"},
                                                      {"xi_hat0", "0"}, {"sigma_hat0", "0"}};
        bool all_zero = true;
        for (const char* mode : {"reduced", "output_feedback"}) {
            auto overrides = zero;
            overrides["mode"] = mode;
            for (const Sample& s : simulate(design, reference_config(overrides)).samples) {
                all_zero = all_zero && s.eta.isZero(0.0) && s.xi.isZero(0.0) && s.y == 0.0 && s.u == 0.0 &&
                           s.eta_hat.isZero(0.0) && s.xi_hat.isZero(0.0) && s.sigma_hat == 0.0 &&
                           s.eta_tilde.isZero(0.0) && s.V2 == 0.0 && s.W == 0.0;
            }
        }
        const SimConfig cfg = reference_config();
        const bool identical_of = trajectory_csv(simulate(design, cfg), 1, 1) == trajectory_csv(reference_run, 1, 1);
        SimConfig reduced_cfg = reference_config({{"mode", "reduced"}});
        const bool identical_red =
            trajectory_csv(simulate(design, reduced_cfg), 1, 1) == trajectory_csv(simulate(design, reduced_cfg), 1, 1);
        const bool identical_sweep = report_csv(epsilon_sweep(design, cfg, {0.01, 0.005, 0.001})) ==
                                     report_csv(sweep.report);
        verdict(9, all_zero && identical_of && identical_red && identical_sweep,
                fmt("zero data stays zero: %s; repeated runs byte-identical: output %s, reduced %s, sweep %s",
                    all_zero ? "yes" : "no", identical_of ? "yes" : "no", identical_red ? "yes" : "no",
                    identical_sweep ? "yes" : "no"));
    });

    std::printf("%s: %d of 9 criteria failed\n", failures == 0 ? "ALL PASS" : "SOME FAIL", failures);
    return failures == 0 ? 0 : 1;
}
