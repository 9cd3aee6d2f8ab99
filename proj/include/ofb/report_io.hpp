#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ofb/simulator.hpp"

namespace ofb {

// Column names of a trajectory CSV for a plant with the given internal dimension and relative degree.
[[nodiscard]] std::vector<std::string> trajectory_columns(int m, int rho);

// Header row then one row per sample, 15 significant digits, '\n' line endings.
void write_csv(const Trajectory& traj, int m, int rho, const std::filesystem::path& path);
void write_csv(const RecoveryReport& report, const std::filesystem::path& path);

[[nodiscard]] std::string trajectory_csv(const Trajectory& traj, int m, int rho);
[[nodiscard]] std::string report_csv(const RecoveryReport& report);

// Parsed CSV: header plus numeric rows. Empty fields (absent values) read back as NaN.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    [[nodiscard]] std::size_t column(const std::string& name) const;
};

[[nodiscard]] CsvTable read_csv(const std::filesystem::path& path);

// Renders v the way the CSV writers do.
[[nodiscard]] std::string format_csv_number(double v);

struct RunManifest {
    std::string command;
    std::string version;
    std::string config_echo;
    std::vector<std::string> outputs;
    double wall_clock_seconds = 0.0;
};

[[nodiscard]] std::string manifest_text(const RunManifest& manifest);

// The config part of a manifest, ready for parse_config.
[[nodiscard]] std::string manifest_config(const std::string& manifest);

// Writes `contents` next to `path` and renames it into place.
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace ofb
