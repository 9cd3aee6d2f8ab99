#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "ofb/commands.hpp"
#include "ofb/config.hpp"
#include "ofb/report_io.hpp"

using namespace ofb;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_command(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("ofb_cli_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
    const fs::path path = dir / "run.cfg";
    std::ofstream(path) << text;
    return path;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::string> listing(const fs::path& dir) {
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir)) {
        names.push_back(entry.path().filename().string());
    }
    std::sort(names.begin(), names.end());
    return names;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
    CHECK(run({}).code == kExitUsage);
    CHECK(run({"frobnicate"}).code == kExitUsage);
    CHECK(run({"simulate", "--bogus"}).code == kExitUsage);
    CHECK(run({"validate", "--seedless"}).code == kExitUsage);
    CHECK(run({"simulate", "--mode", "sideways", "--out", "x"}).code == kExitUsage);
    CHECK(run({"validate", "--config", "/nonexistent/file.cfg"}).code == kExitUsage);
    CHECK(run({"simulate", "--config", "/dev/null"}).code == kExitUsage);
    CHECK(run({"sweep", "--epsilons", "0.01,abc"}).code == kExitUsage);
}

TEST_CASE("help exits with 0") {
    const Result r = run({"--help"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("reproduce-fig1") != std::string::npos);
}

TEST_CASE("malformed config exits with 2 and names the key") {
    const fs::path dir = scratch("badcfg");
    const Result r = run({"validate", "--config", write_config(dir, "alpha = [-1, 1]\n").string()});
    CHECK(r.code == kExitUsage);
    CHECK(r.err.find("alpha") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("simulate writes a trajectory and a manifest that reproduces it") {
    const fs::path dir = scratch("simulate");
    const fs::path cfg = write_config(dir, "t_final = 1\n");
    const Result r = run({"simulate", "--config", cfg.string(), "--out", (dir / "a").string()});
    REQUIRE(r.code == kExitOk);
    CHECK(listing(dir / "a") == std::vector<std::string>{"manifest.txt", "trajectory.csv"});
    const CsvTable table = read_csv(dir / "a" / "trajectory.csv");
    CHECK(table.rows.size() == 1001);
    CHECK(table.rows[0][table.column("eta")] == 0.5);

    const std::string manifest = slurp(dir / "a" / "manifest.txt");
    CHECK(manifest.find("run.command = simulate") != std::string::npos);
    CHECK(parse_config(manifest_config(manifest)) == parse_config("t_final = 1\n"));

    const fs::path replay = write_config(dir, manifest_config(manifest));
    REQUIRE(run({"simulate", "--config", replay.string(), "--out", (dir / "b").string()}).code == kExitOk);
    CHECK(slurp(dir / "a" / "trajectory.csv") == slurp(dir / "b" / "trajectory.csv"));
    fs::remove_all(dir);
}

TEST_CASE("simulate honours --mode and --no-saturation") {
    const fs::path dir = scratch("flags");
    const fs::path cfg = write_config(dir, "t_final = 0.2\n");
    REQUIRE(run({"simulate", "--config", cfg.string(), "--out", (dir / "r").string(), "--mode", "reduced"}).code ==
            kExitOk);
    CHECK(slurp(dir / "r" / "manifest.txt").find("mode = reduced") != std::string::npos);
    REQUIRE(run({"simulate", "--config", cfg.string(), "--out", (dir / "n").string(), "--no-saturation"}).code ==
            kExitOk);
    CHECK(slurp(dir / "n" / "manifest.txt").find("saturation_enabled = false") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("sweep reports one decreasing row per epsilon") {
    const fs::path dir = scratch("sweep");
    const fs::path cfg = write_config(dir, "t_final = 5\n");
    const Result r = run({"sweep", "--config", cfg.string(), "--epsilons", "0.01,0.005,0.001", "--out",
                          (dir / "s").string()});
    REQUIRE(r.code == kExitOk);
    const CsvTable table = read_csv(dir / "s" / "recovery.csv");
    REQUIRE(table.rows.size() == 3);
    const std::size_t d = table.column("sup_dev_theta");
    CHECK(table.rows[0][d] > table.rows[1][d]);
    CHECK(table.rows[1][d] > table.rows[2][d]);
    CHECK(r.out == slurp(dir / "s" / "recovery.csv"));
    CHECK(run({"sweep", "--config", cfg.string(), "--epsilons", "0.001,0.01"}).code == kExitUsage);
    fs::remove_all(dir);
}

TEST_CASE("validate passes the example and fails a corrupted phi1") {
    const fs::path dir = scratch("validate");
    const Result good = run({"validate", "--config", write_config(dir, "t_final = 2\n").string()});
    CHECK(good.code == kExitOk);
    CHECK(good.out.find("FAIL") == std::string::npos);
    const Result bad = run({"validate", "--config", write_config(dir, "system = example-bad-phi1\nt_final = 2\n").string()});
    CHECK(bad.code == kExitFailure);
    CHECK(bad.out.find("FAIL phi1") != std::string::npos);
    CHECK(run({"validate", "--config", write_config(dir, "system = linear-rho2\nt_final = 2\n").string()}).code ==
          kExitOk);
    fs::remove_all(dir);
}

TEST_CASE("reproduce-fig1 emits four panels and a plot script") {
    const fs::path dir = scratch("fig1");
    const fs::path cfg = write_config(dir, "t_final = 2\n");
    const Result r = run({"reproduce-fig1", "--config", cfg.string(), "--out", (dir / "fig").string()});
    REQUIRE(r.code == kExitOk);
    CHECK(listing(dir / "fig") == std::vector<std::string>{"panel_a_output.csv", "panel_b_eta.csv",
                                                           "panel_c_riccati.csv", "panel_d_control.csv",
                                                           "plot_fig1.py"});
    const CsvTable a = read_csv(dir / "fig" / "panel_a_output.csv");
    CHECK(a.header == std::vector<std::string>{"t", "y_reduced", "y_eps_0.01", "y_eps_0.005", "y_eps_0.001"});
    CHECK(a.rows.size() == 2001);
    CHECK(a.rows[0][1] == 0.9);
    const CsvTable c = read_csv(dir / "fig" / "panel_c_riccati.csv");
    CHECK(c.rows[0][1] == 0.1);
    CHECK_FALSE(fs::exists(dir / "fig.partial"));
    fs::remove_all(dir);
}

TEST_CASE("reproduce-fig1 fails without leaving partial output") {
    const fs::path dir = scratch("fig1fail");
    const fs::path cfg = write_config(dir, "t_final = 1\n");
    CHECK(run({"reproduce-fig1", "--config", cfg.string(), "--out", (dir / "fig").string(), "--epsilons",
               "0.001,0.01"})
              .code == kExitUsage);
    CHECK_FALSE(fs::exists(dir / "fig"));
    CHECK_FALSE(fs::exists(dir / "fig.partial"));

    fs::create_directories(dir / "busy");
    std::ofstream(dir / "busy" / "keep.txt") << "x";
    CHECK(run({"reproduce-fig1", "--config", cfg.string(), "--out", (dir / "busy").string()}).code == kExitUsage);
    CHECK(listing(dir / "busy") == std::vector<std::string>{"keep.txt"});
    fs::remove_all(dir);
}
