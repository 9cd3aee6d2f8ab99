#include "ofb/commands.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "ofb/config.hpp"
#include "ofb/report_io.hpp"

#ifndef OFB_VERSION
#define OFB_VERSION "dev"
#endif

namespace fs = std::filesystem;

namespace ofb {

namespace {

// Raised for problems the user fixes by changing the invocation (exit code 2).
class UsageError : public Error {
public:
    using Error::Error;
};

struct Options {
    std::string config_path;
    std::string out_dir;
    std::string epsilons = "0.01,0.005,0.001";
    std::string mode;
    bool no_saturation = false;
    bool seedless = false;
};

std::string read_text(const std::string& path) {
    if (path.empty()) {
        return {};
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw UsageError("cannot read config file '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

SimConfig load_config(const Options& opt) {
    std::map<std::string, std::string> overrides;
    if (!opt.mode.empty()) {
        if (opt.mode != "reduced" && opt.mode != "output") {
            throw UsageError("--mode must be 'reduced' or 'output'");
        }
        overrides["mode"] = opt.mode == "reduced" ? "reduced" : "output_feedback";
    }
    if (opt.no_saturation) {
        overrides["saturation_enabled"] = "false";
    }
    return parse_config(read_text(opt.config_path), overrides);
}

std::vector<double> parse_epsilons(const std::string& text) {
    std::vector<double> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            std::size_t used = 0;
            const double v = std::stod(item, &used);
            if (used != item.size() || !(v > 0.0)) {
                throw std::invalid_argument(item);
            }
            out.push_back(v);
        } catch (const std::logic_error&) {
            throw UsageError("--epsilons: '" + item + "' is not a positive number");
        }
    }
    if (out.empty()) {
        throw UsageError("--epsilons: empty list");
    }
    return out;
}

fs::path require_out_dir(const Options& opt) {
    if (opt.out_dir.empty()) {
        throw UsageError("--out DIR is required");
    }
    return fs::path(opt.out_dir);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int cmd_simulate(const Options& opt, std::ostream& out) {
    const auto start = std::chrono::steady_clock::now();
    const fs::path dir = require_out_dir(opt);
    const SimConfig cfg = load_config(opt);
    const RegisteredDesign reg = find_design(cfg.system);
    const Trajectory traj = simulate(reg.design, cfg);

    fs::create_directories(dir);
    write_csv(traj, reg.design.system.internal_dim(), reg.design.system.rho, dir / "trajectory.csv");
    RunManifest manifest{"simulate", OFB_VERSION, echo_config(cfg), {"trajectory.csv", "manifest.txt"},
                         seconds_since(start)};
    write_file(dir / "manifest.txt", manifest_text(manifest));
    const Sample& last = traj.samples.back();
    out << "simulate: " << traj.size() << " records, t_final=" << last.t << ", y=" << last.y
        << ", eta=" << last.eta.norm() << "\n";
    return kExitOk;
}

int cmd_sweep(const Options& opt, std::ostream& out) {
    const auto start = std::chrono::steady_clock::now();
    const SimConfig cfg = load_config(opt);
    const std::vector<double> eps = parse_epsilons(opt.epsilons);
    const RegisteredDesign reg = find_design(cfg.system);
    const RecoveryReport report = epsilon_sweep(reg.design, cfg, eps);

    if (!opt.out_dir.empty()) {
        const fs::path dir(opt.out_dir);
        fs::create_directories(dir);
        write_csv(report, dir / "recovery.csv");
        RunManifest manifest{"sweep --epsilons " + opt.epsilons, OFB_VERSION, echo_config(cfg),
                             {"recovery.csv", "manifest.txt"}, seconds_since(start)};
        write_file(dir / "manifest.txt", manifest_text(manifest));
    }
    out << report_csv(report);
    return kExitOk;
}

constexpr double kPhi1Tolerance = 1e-5;

int cmd_validate(const Options& opt, std::ostream& out) {
    const SimConfig cfg = load_config(opt);
    const RegisteredDesign reg = find_design(cfg.system);
    const ControlDesign& design = reg.design;
    bool ok = true;
    const auto report = [&](bool pass, const std::string& name, const std::string& detail) {
        ok = ok && pass;
        out << (pass ? "PASS " : "FAIL ") << name << ": " << detail << "\n";
    };

    const double defect = equilibrium_defect(design.system);
    report(defect <= 1e-12, "equilibrium", "max(|phi0(0,0)|, |a(0,0)|) = " + format_csv_number(defect));

    const Vector eta0 = Vector::Zero(design.system.internal_dim());
    const Vector xi0 = Vector::Zero(design.system.rho);
    const double u0 = design.law.gamma(eta0, xi0);
    report(std::abs(u0) <= 1e-12, "feedback-origin", "gamma(0,0) = " + format_csv_number(u0));

    const PlantTrack probe = simulate_state_feedback(design, cfg.initial.plant, 1.0, 1e-4);
    const double phi1_error = validate_phi1(design, probe);
    std::ostringstream phi1_detail;
    phi1_detail << "max |phi1 - d/dt(C1 eta)| = " << phi1_error << " (tolerance " << kPhi1Tolerance << ")";
    report(phi1_error <= kPhi1Tolerance, "phi1", phi1_detail.str());

    try {
        const Trajectory traj = simulate(design, cfg);
        double lo = std::numeric_limits<double>::infinity();
        double hi = 0.0;
        double asym = 0.0;
        for (const Sample& s : traj.samples) {
            const PdSummary pd = pd_monitor(s.P);
            lo = std::min(lo, pd.lambda_min);
            hi = std::max(hi, pd.lambda_max);
            asym = std::max(asym, pd.symmetric_defect);
        }
        std::ostringstream detail;
        detail << "eig(P) in [" << lo << ", " << hi << "], max|P-P^T| = " << asym;
        report(lo > 0.0 && asym <= 1e-9, "riccati", detail.str());
    } catch (const Error& e) {
        report(false, "riccati", e.what());
    }
    return ok ? kExitOk : kExitFailure;
}

const char* kPlotScript = R"(#!/usr/bin/env python3
"""Plots the four panels written by `ofbsim reproduce-fig1` (run from this directory)."""
import csv

import matplotlib.pyplot as plt


def load(name):
    with open(name, newline="") as f:
        rows = list(csv.reader(f))
    header, data = rows[0], rows[1:]
    return {h: [float(r[i]) for r in data] for i, h in enumerate(header)}


a = load("panel_a_output.csv")
b = load("panel_b_eta.csv")
c = load("panel_c_riccati.csv")
d = load("panel_d_control.csv")

fig, ax = plt.subplots(2, 2, figsize=(10, 7))
ax[0, 0].plot(a["t"], a["y_reduced"], "k--", label="reduced")
for key in a:
    if key.startswith("y_eps_"):
        ax[0, 0].plot(a["t"], a[key], label="eps=" + key[len("y_eps_"):])
ax[0, 0].set_ylabel("y")
ax[0, 0].legend()
ax[0, 1].plot(b["t"], b["eta"])
ax[0, 1].set_ylabel("eta")
ax[1, 0].plot(c["t"], c["P"])
ax[1, 0].set_ylabel("P")
ax[1, 1].plot(d["t"], d["u"])
ax[1, 1].set_ylabel("u")
for axis in ax.flat:
    axis.set_xlabel("t [s]")
fig.tight_layout()
fig.savefig("fig1.png", dpi=150)
)";

std::string eps_label(double eps) {
    std::ostringstream s;
    s << eps;
    return s.str();
}

int cmd_reproduce_fig1(const Options& opt, std::ostream& out) {
    const fs::path dir = require_out_dir(opt);
    if (fs::exists(dir) && !(fs::is_directory(dir) && fs::is_empty(dir))) {
        throw UsageError("output directory '" + dir.string() + "' exists and is not empty");
    }
    const SimConfig cfg = load_config(opt);
    const std::vector<double> eps = parse_epsilons(opt.epsilons);
    const RegisteredDesign reg = find_design(cfg.system);
    if (reg.design.system.internal_dim() != 1 || reg.design.system.rho != 1) {
        throw UsageError("reproduce-fig1 needs a plant with scalar eta and xi");
    }
    const SweepRuns runs = run_sweep(reg.design, cfg, eps);
    const std::size_t finest = eps.size() - 1;
    const Trajectory& of = runs.output_feedback[finest];
    const Trajectory& red = runs.reduced[finest];
    for (const Trajectory& t : runs.output_feedback) {
        if (t.size() != red.size()) {
            throw Error("reproduce-fig1: runs do not share a recording grid");
        }
    }

    std::string panel_a = "t,y_reduced";
    for (double e : eps) {
        panel_a += ",y_eps_" + eps_label(e);
    }
    panel_a += "\n";
    std::string panel_b = "t,eta\n";
    std::string panel_c = "t,P\n";
    std::string panel_d = "t,u\n";
    for (std::size_t k = 0; k < red.size(); ++k) {
        const std::string t = format_csv_number(red.samples[k].t);
        panel_a += t + "," + format_csv_number(red.samples[k].y);
        for (const Trajectory& run : runs.output_feedback) {
            panel_a += "," + format_csv_number(run.samples[k].y);
        }
        panel_a += "\n";
        panel_b += t + "," + format_csv_number(of.samples[k].eta(0)) + "\n";
        panel_c += t + "," + format_csv_number(of.samples[k].P(0, 0)) + "\n";
        panel_d += t + "," + format_csv_number(of.samples[k].u) + "\n";
    }

    fs::path stage = dir;
    stage += ".partial";
    fs::remove_all(stage);
    try {
        fs::create_directories(stage);
        write_file(stage / "panel_a_output.csv", panel_a);
        write_file(stage / "panel_b_eta.csv", panel_b);
        write_file(stage / "panel_c_riccati.csv", panel_c);
        write_file(stage / "panel_d_control.csv", panel_d);
        write_file(stage / "plot_fig1.py", kPlotScript);
        if (fs::exists(dir)) {
            fs::remove(dir);
        }
        fs::rename(stage, dir);
    } catch (...) {
        std::error_code ec;
        fs::remove_all(stage, ec);
        throw;
    }
    out << "reproduce-fig1: wrote 4 panels and plot_fig1.py to " << dir.string() << "\n";
    out << report_csv(runs.report);
    return kExitOk;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Output-feedback simulation with an EKF and an extended high-gain observer", "ofbsim"};
    app.require_subcommand(1);
    Options opt;

    const auto add_common = [&opt](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "flat key = value config file (defaults if omitted)");
        sub->add_flag("--seedless", opt.seedless, "reserved; rejected");
    };
    CLI::App* simulate_cmd = app.add_subcommand("simulate", "run one simulation and write trajectory.csv");
    add_common(simulate_cmd);
    simulate_cmd->add_option("--out", opt.out_dir, "output directory");
    simulate_cmd->add_option("--mode", opt.mode, "reduced | output");
    simulate_cmd->add_flag("--no-saturation", opt.no_saturation, "disable every observer saturation");

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "epsilon sweep against the reduced system");
    add_common(sweep_cmd);
    sweep_cmd->add_option("--out", opt.out_dir, "also write recovery.csv and manifest.txt here");
    sweep_cmd->add_option("--epsilons", opt.epsilons, "comma-separated, descending");
    sweep_cmd->add_flag("--no-saturation", opt.no_saturation, "disable every observer saturation");

    CLI::App* validate_cmd = app.add_subcommand("validate", "check the configured design");
    add_common(validate_cmd);
    validate_cmd->add_option("--mode", opt.mode, "reduced | output");
    validate_cmd->add_flag("--no-saturation", opt.no_saturation, "disable every observer saturation");

    CLI::App* fig_cmd = app.add_subcommand("reproduce-fig1", "write the four example-figure panels and a plot script");
    add_common(fig_cmd);
    fig_cmd->add_option("--out", opt.out_dir, "output directory (must not exist or be empty)");
    fig_cmd->add_option("--epsilons", opt.epsilons, "comma-separated, descending");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (opt.seedless) {
            throw UsageError("--seedless is reserved: the simulations use no random numbers");
        }
        if (simulate_cmd->parsed()) {
            return cmd_simulate(opt, out);
        }
        if (sweep_cmd->parsed()) {
            return cmd_sweep(opt, out);
        }
        if (validate_cmd->parsed()) {
            return cmd_validate(opt, out);
        }
        return cmd_reproduce_fig1(opt, out);
    } catch (const UsageError& e) {
        err << "ofbsim: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        err << "ofbsim: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "ofbsim: " << e.what() << "\n";
        return kExitFailure;
    }
}

}  // namespace ofb
