#include "ofb/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace ofb {

namespace {

std::vector<std::string> indexed(const std::string& base, int count) {
    if (count == 1) {
        return {base};
    }
    std::vector<std::string> out;
    for (int i = 1; i <= count; ++i) {
        out.push_back(base + "_" + std::to_string(i));
    }
    return out;
}

void append_row(std::string& out, const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) {
            out += ',';
        }
        out += format_csv_number(values[i]);
    }
    out += '\n';
}

void append_header(std::string& out, const std::vector<std::string>& names) {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i > 0) {
            out += ',';
        }
        out += names[i];
    }
    out += '\n';
}

void append(std::vector<double>& row, const Vector& v) {
    row.insert(row.end(), v.data(), v.data() + v.size());
}

}  // namespace

std::string format_csv_number(double v) {
    if (std::isnan(v)) {
        return "";
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

std::vector<std::string> trajectory_columns(int m, int rho) {
    std::vector<std::string> cols{"t"};
    const auto add = [&cols](const std::vector<std::string>& more) { cols.insert(cols.end(), more.begin(), more.end()); };
    add(indexed("eta", m));
    add(indexed("xi", rho));
    add({"y", "u"});
    add(indexed("eta_hat", m));
    add(indexed("xi_hat", rho));
    add({"sigma_hat"});
    if (m == 1) {
        add({"P"});
    } else {
        for (int i = 1; i <= m; ++i) {
            for (int j = 1; j <= m; ++j) {
                cols.push_back("P_" + std::to_string(i) + std::to_string(j));
            }
        }
    }
    add(indexed("eta_tilde", m));
    add({"V2", "W"});
    return cols;
}

std::string trajectory_csv(const Trajectory& traj, int m, int rho) {
    std::string out;
    append_header(out, trajectory_columns(m, rho));
    std::vector<double> row;
    for (const Sample& s : traj.samples) {
        row.clear();
        row.push_back(s.t);
        append(row, s.eta);
        append(row, s.xi);
        row.push_back(s.y);
        row.push_back(s.u);
        append(row, s.eta_hat);
        append(row, s.xi_hat);
        row.push_back(s.sigma_hat);
        for (Eigen::Index i = 0; i < s.P.rows(); ++i) {
            for (Eigen::Index j = 0; j < s.P.cols(); ++j) {
                row.push_back(s.P(i, j));
            }
        }
        append(row, s.eta_tilde);
        row.push_back(s.V2);
        row.push_back(s.W);
        append_row(out, row);
    }
    return out;
}

std::string report_csv(const RecoveryReport& report) {
    std::string out;
    append_header(out, {"epsilon", "sup_dev_theta", "sup_dev_eta_tilde", "transient_cutoff", "max_abs_chi"});
    for (std::size_t i = 0; i < report.epsilons.size(); ++i) {
        const double cutoff = report.transient_cutoff[i] ? *report.transient_cutoff[i]
                                                         : std::numeric_limits<double>::quiet_NaN();
        append_row(out, {report.epsilons[i], report.sup_dev_theta[i], report.sup_dev_eta_tilde[i], cutoff,
                         report.max_abs_chi[i]});
    }
    return out;
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot open " + tmp.string() + " for writing");
        }
        out << contents;
        out.flush();
        if (!out) {
            throw Error("write to " + tmp.string() + " failed");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error("cannot move output into " + path.string());
    }
}

void write_csv(const Trajectory& traj, int m, int rho, const std::filesystem::path& path) {
    write_file(path, trajectory_csv(traj, m, rho));
}

void write_csv(const RecoveryReport& report, const std::filesystem::path& path) {
    write_file(path, report_csv(report));
}

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) {
            return i;
        }
    }
    throw Error("CSV has no column '" + name + "'");
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    CsvTable table;
    std::string line;
    const auto split = [](const std::string& text) {
        std::vector<std::string> fields;
        std::string field;
        std::istringstream s(text);
        while (std::getline(s, field, ',')) {
            fields.push_back(field);
        }
        if (!text.empty() && text.back() == ',') {
            fields.emplace_back();
        }
        return fields;
    };
    if (!std::getline(in, line)) {
        return table;
    }
    table.header = split(line);
    while (std::getline(in, line)) {
        std::vector<double> row;
        for (const std::string& f : split(line)) {
            row.push_back(f.empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(f));
        }
        if (row.size() != table.header.size()) {
            throw Error(path.string() + ": row width does not match header");
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::string manifest_text(const RunManifest& manifest) {
    std::string out = "# ofbsim run manifest\n";
    out += "run.command = " + manifest.command + "\n";
    out += "run.version = " + manifest.version + "\n";
    out += "run.outputs = ";
    for (std::size_t i = 0; i < manifest.outputs.size(); ++i) {
        out += (i > 0 ? ", " : "") + manifest.outputs[i];
    }
    out += "\n";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3f", manifest.wall_clock_seconds);
    out += std::string("run.wall_clock_seconds = ") + buf + "\n";
    out += manifest.config_echo;
    return out;
}

std::string manifest_config(const std::string& manifest) {
    std::istringstream in(manifest);
    std::string line;
    std::string out;
    while (std::getline(in, line)) {
        if (line.rfind("run.", 0) == 0) {
            continue;
        }
        out += line + "\n";
    }
    return out;
}

}  // namespace ofb
