#include <cmath>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "ofb/config.hpp"
#include "ofb/report_io.hpp"

using namespace ofb;
namespace fs = std::filesystem;

namespace {

const char* kReferenceConfig = R"(# example plant with its reference parameters
system = example
epsilon = 0.001
alpha = [5, 1]
Q = 1
R = 10
P0 = 0.1
eta0 = 0.5
xi0 = 0.9
eta_hat0 = 0
xi_hat0 = 0.1
sigma_hat0 = 0
M_sigma = 10
)";

int parse_error_line(const std::string& text) {
    try {
        (void)parse_config(text);
    } catch (const ParseError& e) {
        return e.line();
    }
    return -1;
}

std::string parse_error_key(const std::string& text) {
    try {
        (void)parse_config(text);
    } catch (const ParseError& e) {
        return e.key();
    }
    return "<none>";
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("ofb_config_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("reference config parses to its reference parameters") {
    const SimConfig cfg = parse_config(kReferenceConfig);
    CHECK(cfg.system == "example");
    CHECK(cfg.mode == Mode::output_feedback);
    CHECK(cfg.gains.epsilon == 0.001);
    CHECK(cfg.gains.alphas(0) == 5.0);
    CHECK(cfg.gains.alphas(1) == 1.0);
    CHECK(cfg.weights.Q(0, 0) == 1.0);
    CHECK(cfg.weights.R == 10.0);
    CHECK(cfg.weights.P0(0, 0) == 0.1);
    CHECK(cfg.initial.plant.eta(0) == 0.5);
    CHECK(cfg.initial.plant.xi(0) == 0.9);
    CHECK(cfg.initial.eta_hat(0) == 0.0);
    CHECK(cfg.initial.xi_hat(0) == 0.1);
    CHECK(cfg.initial.sigma_hat == 0.0);
    CHECK(cfg.sat.M_sigma == 10.0);
    CHECK(cfg.y_substitution);
    CHECK(cfg.saturation_enabled);
    CHECK(cfg.step == doctest::Approx(5e-5));
    CHECK(cfg.record_stride == 20);
    CHECK(cfg.sat.kappa == doctest::Approx(0.1 * cfg.sat.M_xi));
    CHECK(cfg.sat.M_xi > 1.5 * 0.9 - 1e-12);
}

TEST_CASE("empty document gives the example defaults") {
    CHECK(parse_config("") == parse_config(kReferenceConfig));
    CHECK(parse_config("# only a comment\n\n") == parse_config(""));
}

TEST_CASE("non-Hurwitz alpha is rejected with its line and key") {
    const std::string text = "epsilon = 0.001\nalpha = [-1, 1]\n";
    CHECK(parse_error_line(text) == 2);
    CHECK(parse_error_key(text) == "alpha");
}

TEST_CASE("malformed documents name the line and key") {
    CHECK(parse_error_line("epsilon = 0.001\nfoo = 1\n") == 2);
    CHECK(parse_error_key("epsilon = 0.001\nfoo = 1\n") == "foo");
    CHECK(parse_error_key("R = ten\n") == "R");
    CHECK(parse_error_key("R = 10x\n") == "R");
    CHECK(parse_error_line("R = 10\n\nR = 11\n") == 3);
    CHECK(parse_error_key("no equals sign\n") != "<none>");
    CHECK(parse_error_key("R = 0\n") == "R");
    CHECK(parse_error_key("epsilon = -1\n") == "epsilon");
    CHECK(parse_error_key("alpha = [5]\n") == "alpha");
    CHECK(parse_error_key("Q = [1, 2, 3, 4]\n") == "Q");
    CHECK(parse_error_key("system = tora\n") == "system");
    CHECK(parse_error_key("mode = sideways\n") == "mode");
    CHECK(parse_error_key("step = 0.001\n") == "step");
    CHECK(parse_error_key("record_stride = 2.5\n") == "record_stride");
    CHECK(parse_error_key("saturation_enabled = maybe\n") == "saturation_enabled");
    CHECK(parse_error_key("system = linear-rho2\ny_substitution = true\n") == "y_substitution");
    CHECK_THROWS_AS(parse_config("", {{"bogus", "1"}}), ParseError);
}

TEST_CASE("overrides replace document values") {
    const SimConfig cfg = parse_config("mode = output_feedback\n", {{"mode", "reduced"}, {"saturation_enabled", "false"}});
    CHECK(cfg.mode == Mode::reduced);
    CHECK_FALSE(cfg.saturation_enabled);
    CHECK(cfg.step == 1e-3);
}

TEST_CASE("config echo round-trips") {
    for (const std::string& text :
         {std::string(kReferenceConfig), std::string("system = linear-rho2\nQ = 2\nP0 = [0.25]\ntube_level = 3\n"),
          std::string("mode = reduced\nM_xi = 2\nkappa = 0.3\nt_final = 1.25\n"),
          std::string("epsilon = 0.003\ny_substitution = false\nsaturation_enabled = false\n")}) {
        const SimConfig first = parse_config(text);
        const std::string echo = echo_config(first);
        const SimConfig second = parse_config(echo);
        CHECK(first == second);
        CHECK(echo_config(second) == echo);
    }
}

TEST_CASE("every config key appears in the echo") {
    const std::string echo = echo_config(parse_config(""));
    for (const std::string& key : config_keys()) {
        CHECK(echo.find(key + " = ") != std::string::npos);
    }
}

TEST_CASE("trajectory columns") {
    const std::vector<std::string> scalar{"t",       "eta",    "xi",        "y", "u",         "eta_hat",
                                          "xi_hat", "sigma_hat", "P", "eta_tilde", "V2", "W"};
    CHECK(trajectory_columns(1, 1) == scalar);
    const std::vector<std::string> cols = trajectory_columns(2, 2);
    CHECK(cols[1] == "eta_1");
    CHECK(cols[4] == "xi_2");
    CHECK(std::count(cols.begin(), cols.end(), "P_12") == 1);
    CHECK(cols.size() == 1 + 2 + 2 + 2 + 2 + 2 + 1 + 4 + 2 + 2);
}

TEST_CASE("empty trajectory writes a header-only file") {
    const fs::path dir = scratch("empty");
    write_csv(Trajectory{}, 1, 1, dir / "t.csv");
    const CsvTable table = read_csv(dir / "t.csv");
    CHECK(table.header == trajectory_columns(1, 1));
    CHECK(table.rows.empty());
    fs::remove_all(dir);
}

TEST_CASE("trajectory CSV round-trips at 15 significant digits") {
    const SimConfig cfg = parse_config("t_final = 0.5\n");
    const Trajectory traj = simulate(example_design(), cfg);
    const fs::path dir = scratch("roundtrip");
    write_csv(traj, 1, 1, dir / "t.csv");
    const CsvTable table = read_csv(dir / "t.csv");
    REQUIRE(table.rows.size() == traj.size());
    CHECK(table.rows[0][table.column("t")] == 0.0);
    CHECK(table.rows[0][table.column("eta")] == 0.5);
    CHECK(table.rows[0][table.column("xi")] == 0.9);
    for (std::size_t k = 0; k < table.rows.size(); ++k) {
        const Sample& s = traj.samples[k];
        CHECK(table.rows[k][table.column("y")] == std::stod(format_csv_number(s.y)));
        CHECK(table.rows[k][table.column("P")] == std::stod(format_csv_number(s.P(0, 0))));
        for (double v : table.rows[k]) {
            CHECK(format_csv_number(std::stod(format_csv_number(v))) == format_csv_number(v));
        }
    }
    fs::remove_all(dir);
}

TEST_CASE("report CSV leaves an absent cutoff empty") {
    RecoveryReport r;
    r.epsilons = {0.01, 0.001};
    r.sup_dev_theta = {0.05, 0.007};
    r.sup_dev_eta_tilde = {0.02, 0.003};
    r.transient_cutoff = {std::nullopt, 0.046};
    r.max_abs_chi = {80, 800};
    const std::string text = report_csv(r);
    CHECK(text == "epsilon,sup_dev_theta,sup_dev_eta_tilde,transient_cutoff,max_abs_chi\n"
                  "0.01,0.05,0.02,,80\n0.001,0.007,0.003,0.046,800\n");
    const fs::path dir = scratch("report");
    write_csv(r, dir / "r.csv");
    const CsvTable table = read_csv(dir / "r.csv");
    CHECK(std::isnan(table.rows[0][table.column("transient_cutoff")]));
    CHECK(table.rows[1][table.column("transient_cutoff")] == 0.046);
    fs::remove_all(dir);
}

TEST_CASE("manifest carries a parseable config echo") {
    const SimConfig cfg = parse_config("system = linear-rho2\nepsilon = 0.002\n");
    const RunManifest m{"simulate", "0.1.0", echo_config(cfg), {"trajectory.csv", "manifest.txt"}, 1.5};
    const std::string text = manifest_text(m);
    CHECK(text.find("run.outputs = trajectory.csv, manifest.txt\n") != std::string::npos);
    CHECK(text.find("run.wall_clock_seconds = 1.500\n") != std::string::npos);
    CHECK(parse_config(manifest_config(text)) == cfg);
}

TEST_CASE("write_file leaves no temporary behind") {
    const fs::path dir = scratch("write");
    write_file(dir / "a.txt", "hello\n");
    CHECK(fs::exists(dir / "a.txt"));
    CHECK_FALSE(fs::exists(dir / "a.txt.tmp"));
    CHECK_THROWS_AS(write_file(dir / "missing" / "a.txt", "x"), Error);
    fs::remove_all(dir);
}
