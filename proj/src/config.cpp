#include "ofb/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>

#include "ofb/numerics.hpp"

namespace ofb {

namespace {

struct Entry {
    std::string value;
    int line = 0;
};

using Entries = std::map<std::string, Entry>;

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::optional<double> to_double(std::string_view s) {
    s = trim(s);
    if (s.empty()) {
        return std::nullopt;
    }
    if (s.front() == '+') {
        s.remove_prefix(1);
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_list(const double* data, Eigen::Index count) {
    std::string out = "[";
    for (Eigen::Index i = 0; i < count; ++i) {
        if (i > 0) {
            out += ", ";
        }
        out += format_double(data[i]);
    }
    return out + "]";
}

// Reads keys from a parsed document with the line bookkeeping needed for error messages.
class Reader {
public:
    explicit Reader(Entries entries) : entries_(std::move(entries)) {}

    [[nodiscard]] bool has(const std::string& key) const { return entries_.count(key) > 0; }

    [[nodiscard]] int line(const std::string& key) const {
        const auto it = entries_.find(key);
        return it == entries_.end() ? 0 : it->second.line;
    }

    [[nodiscard]] const std::string& raw(const std::string& key) const { return entries_.at(key).value; }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        throw ParseError(line(key), key, what);
    }

    [[nodiscard]] double number(const std::string& key, double fallback) const {
        if (!has(key)) {
            return fallback;
        }
        const auto v = to_double(raw(key));
        if (!v) {
            fail(key, "malformed number '" + raw(key) + "'");
        }
        return *v;
    }

    [[nodiscard]] std::optional<double> optional_number(const std::string& key) const {
        if (!has(key) || trim(raw(key)) == "auto") {
            return std::nullopt;
        }
        return number(key, 0.0);
    }

    [[nodiscard]] std::vector<double> list(const std::string& key) const {
        std::string_view s = trim(raw(key));
        if (!s.empty() && s.front() == '[') {
            if (s.back() != ']') {
                fail(key, "unterminated list");
            }
            s = s.substr(1, s.size() - 2);
        }
        std::string flat{s};
        std::replace(flat.begin(), flat.end(), ',', ' ');
        std::istringstream in{flat};
        std::vector<double> out;
        std::string part;
        while (in >> part) {
            const auto v = to_double(part);
            if (!v) {
                fail(key, "malformed number '" + part + "'");
            }
            out.push_back(*v);
        }
        if (out.empty()) {
            fail(key, "empty list");
        }
        return out;
    }

    [[nodiscard]] Vector vector(const std::string& key, Eigen::Index expected, const Vector& fallback) const {
        if (!has(key)) {
            return fallback;
        }
        const std::vector<double> v = list(key);
        if (static_cast<Eigen::Index>(v.size()) != expected) {
            fail(key, "expected " + std::to_string(expected) + " entries, got " + std::to_string(v.size()));
        }
        return Eigen::Map<const Vector>(v.data(), expected);
    }

    // A scalar s means s*I; otherwise order*order entries in row-major order.
    [[nodiscard]] Matrix matrix(const std::string& key, Eigen::Index order, double fallback_scale) const {
        if (!has(key)) {
            return fallback_scale * Matrix::Identity(order, order);
        }
        const std::vector<double> v = list(key);
        if (v.size() == 1) {
            return v[0] * Matrix::Identity(order, order);
        }
        if (static_cast<Eigen::Index>(v.size()) != order * order) {
            fail(key, "expected a scalar or " + std::to_string(order * order) + " entries");
        }
        Matrix m(order, order);
        for (Eigen::Index r = 0; r < order; ++r) {
            for (Eigen::Index c = 0; c < order; ++c) {
                m(r, c) = v[static_cast<std::size_t>(r * order + c)];
            }
        }
        return m;
    }

    [[nodiscard]] bool boolean(const std::string& key, bool fallback) const {
        if (!has(key)) {
            return fallback;
        }
        const std::string_view v = trim(raw(key));
        if (v == "true" || v == "1" || v == "yes") {
            return true;
        }
        if (v == "false" || v == "0" || v == "no") {
            return false;
        }
        fail(key, "expected true or false, got '" + raw(key) + "'");
    }

private:
    Entries entries_;
};

Vector default_alphas(int rho) {
    if (rho == 1) {
        return (Vector(2) << 5.0, 1.0).finished();
    }
    // coefficients of (s+1)^{rho+1} after the leading one
    Vector c = Vector::Zero(rho + 2);
    c(0) = 1.0;
    for (int k = 1; k <= rho + 1; ++k) {
        for (int j = k; j > 0; --j) {
            c(j) += c(j - 1);
        }
    }
    return c.tail(rho + 1);
}

NormalFormSystem flipped_phi1(NormalFormSystem sys) {
    auto phi1 = sys.phi1;
    sys.name = "example-bad-phi1";
    sys.phi1 = [phi1](const Vector& eta, const Vector& xi) { return -phi1(eta, xi); };
    return sys;
}

// eta' = eta + xi_1, xi_1' = xi_2, xi_2' = eta + u: unstable zero dynamics, relative degree 2.
RegisteredDesign linear_rho2() {
    NormalFormSystem sys;
    sys.name = "linear-rho2";
    sys.n = 3;
    sys.rho = 2;
    sys.A1 = [](const Vector&, double) { return Matrix::Ones(1, 1); };
    sys.phi0 = [](const Vector& xi, double) { return Vector::Constant(1, xi(0)); };
    sys.C1 = [](const Vector&, double) { return RowVector::Ones(1); };
    sys.a = [](const Vector&, double u) { return u; };
    sys.phi1 = [](const Vector& eta, const Vector& xi) { return eta(0) + xi(0); };
    // closed-loop poles at -1, -2, -3
    FeedbackLaw law{[](const Vector& eta, const Vector& xi) { return -25.0 * eta(0) - 18.0 * xi(0) - 7.0 * xi(1); }};

    InitialConditions ic;
    ic.plant.eta = Vector::Constant(1, 0.5);
    ic.plant.xi = (Vector(2) << 0.5, 0.0).finished();
    ic.eta_hat = Vector::Zero(1);
    ic.xi_hat = Vector::Zero(2);
    ic.sigma_hat = 0.0;
    return RegisteredDesign{ControlDesign{std::move(sys), std::move(law)}, ic};
}

InitialConditions example_initial() {
    InitialConditions ic;
    ic.plant.eta = Vector::Constant(1, 0.5);
    ic.plant.xi = Vector::Constant(1, 0.9);
    ic.eta_hat = Vector::Zero(1);
    ic.xi_hat = Vector::Constant(1, 0.1);
    ic.sigma_hat = 0.0;
    return ic;
}

bool same(const Matrix& a, const Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

}  // namespace

std::vector<std::string> registered_designs() {
    return {"example", "example-bad-phi1", "linear-rho2"};
}

RegisteredDesign find_design(const std::string& name) {
    if (name == "example") {
        return RegisteredDesign{example_design(), example_initial()};
    }
    if (name == "example-bad-phi1") {
        return RegisteredDesign{ControlDesign{flipped_phi1(example_system()), example_law()}, example_initial()};
    }
    if (name == "linear-rho2") {
        return linear_rho2();
    }
    throw ConfigError("unknown system '" + name + "'");
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "system",     "mode",       "epsilon",           "alpha",     "Q",          "R",
        "P0",         "eta0",       "xi0",               "eta_hat0",  "xi_hat0",    "sigma_hat0",
        "M_xi",       "M_sigma",    "kappa",             "y_substitution", "saturation_enabled",
        "t_final",    "step",       "record_stride",     "tube_level",
    };
    return keys;
}

std::string_view mode_name(Mode mode) {
    return mode == Mode::reduced ? "reduced" : "output_feedback";
}

SimConfig parse_config(std::string_view text, const std::map<std::string, std::string>& overrides) {
    const auto& keys = config_keys();
    const auto known = [&keys](const std::string& k) { return std::find(keys.begin(), keys.end(), k) != keys.end(); };

    Entries entries;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ParseError(line_no, "", "expected 'key = value'");
        }
        const std::string key{trim(line.substr(0, eq))};
        const std::string value{trim(line.substr(eq + 1))};
        if (key.empty()) {
            throw ParseError(line_no, "", "missing key");
        }
        if (!known(key)) {
            throw ParseError(line_no, key, "unknown key");
        }
        if (value.empty()) {
            throw ParseError(line_no, key, "missing value");
        }
        if (entries.count(key) > 0) {
            throw ParseError(line_no, key, "duplicate key (first set on line " + std::to_string(entries[key].line) + ")");
        }
        entries[key] = Entry{value, line_no};
    }
    for (const auto& [key, value] : overrides) {
        if (!known(key)) {
            throw ParseError(0, key, "unknown key");
        }
        entries[key] = Entry{value, 0};
    }

    const Reader r(std::move(entries));
    SimConfig cfg;
    cfg.system = r.has("system") ? std::string(trim(r.raw("system"))) : "example";
    RegisteredDesign reg;
    try {
        reg = find_design(cfg.system);
    } catch (const ConfigError& e) {
        r.fail("system", e.what());
    }
    const NormalFormSystem& sys = reg.design.system;
    const int m = sys.internal_dim();

    if (r.has("mode")) {
        const std::string_view v = trim(r.raw("mode"));
        if (v == "reduced") {
            cfg.mode = Mode::reduced;
        } else if (v == "output_feedback" || v == "output") {
            cfg.mode = Mode::output_feedback;
        } else {
            r.fail("mode", "expected reduced or output_feedback");
        }
    }

    cfg.gains.epsilon = r.number("epsilon", 0.001);
    if (!(cfg.gains.epsilon > 0.0)) {
        r.fail("epsilon", "must be positive");
    }
    cfg.gains.alphas = r.has("alpha") ? r.vector("alpha", sys.rho + 1, Vector{}) : default_alphas(sys.rho);
    if (!hurwitz_check({cfg.gains.alphas.data(), static_cast<std::size_t>(cfg.gains.alphas.size())})) {
        r.fail("alpha", "coefficients do not define a Hurwitz polynomial");
    }

    cfg.weights.Q = r.matrix("Q", m, 1.0);
    cfg.weights.R = r.number("R", 10.0);
    cfg.weights.P0 = r.matrix("P0", m, 0.1);
    try {
        check_weights(cfg.weights, m);
    } catch (const ConfigError& e) {
        const std::string what = e.what();
        r.fail(what.rfind("Q", 0) == 0 ? "Q" : what.rfind("R", 0) == 0 ? "R" : "P0", what);
    }

    cfg.initial.plant.eta = r.vector("eta0", m, reg.defaults.plant.eta);
    cfg.initial.plant.xi = r.vector("xi0", sys.rho, reg.defaults.plant.xi);
    cfg.initial.eta_hat = r.vector("eta_hat0", m, reg.defaults.eta_hat);
    cfg.initial.xi_hat = r.vector("xi_hat0", sys.rho, reg.defaults.xi_hat);
    cfg.initial.sigma_hat = r.number("sigma_hat0", reg.defaults.sigma_hat);

    if (r.has("y_substitution") && trim(r.raw("y_substitution")) != "auto") {
        cfg.y_substitution = r.boolean("y_substitution", true);
        if (cfg.y_substitution && sys.rho != 1) {
            r.fail("y_substitution", "only defined for relative degree 1");
        }
    } else {
        cfg.y_substitution = sys.rho == 1;
    }
    cfg.saturation_enabled = r.boolean("saturation_enabled", true);

    cfg.t_final = r.number("t_final", 20.0);
    if (!(cfg.t_final > 0.0)) {
        r.fail("t_final", "must be positive");
    }
    cfg.step = r.has("step") && trim(r.raw("step")) != "auto" ? r.number("step", 0.0)
                                                               : default_step(cfg.mode, cfg.gains.epsilon);
    if (!(cfg.step > 0.0)) {
        r.fail("step", "must be positive");
    }
    if (cfg.mode == Mode::output_feedback && cfg.step > cfg.gains.epsilon / 10.0 * (1.0 + 1e-12)) {
        r.fail("step", "output-feedback runs need step <= epsilon/10");
    }
    if (r.has("record_stride") && trim(r.raw("record_stride")) != "auto") {
        const double stride = r.number("record_stride", 1.0);
        if (stride < 1.0 || stride != std::floor(stride) || stride > 1e9) {
            r.fail("record_stride", "must be a positive integer");
        }
        cfg.record_stride = static_cast<int>(stride);
    } else {
        cfg.record_stride = default_record_stride(cfg.step);
    }

    cfg.sat.M_sigma = r.number("M_sigma", 10.0);
    const std::optional<double> m_xi = r.optional_number("M_xi");
    if (m_xi) {
        cfg.sat.M_xi = *m_xi;
    } else {
        try {
            cfg.sat.M_xi = calibrate_xi_level(reg.design, cfg);
        } catch (const Error& e) {
            r.fail("M_xi", std::string("calibration run failed: ") + e.what());
        }
    }
    const std::optional<double> kappa = r.optional_number("kappa");
    cfg.sat.kappa = kappa ? *kappa : 0.1 * cfg.sat.M_xi;
    if (!(cfg.sat.M_sigma > 0.0)) {
        r.fail("M_sigma", "must be positive");
    }
    if (!(cfg.sat.M_xi > 0.0)) {
        r.fail("M_xi", "must be positive");
    }
    if (!(cfg.sat.kappa > 0.0)) {
        r.fail("kappa", "must be positive");
    }

    cfg.tube_level = r.optional_number("tube_level");
    if (cfg.tube_level && !(*cfg.tube_level > 0.0)) {
        r.fail("tube_level", "must be positive");
    }

    try {
        validate_config(reg.design, cfg);
    } catch (const ConfigError& e) {
        throw ParseError(0, "", e.what());
    }
    return cfg;
}

std::string echo_config(const SimConfig& cfg) {
    const auto matrix_value = [](const Matrix& m) {
        if (m.rows() == 1) {
            return format_double(m(0, 0));
        }
        const Matrix row_major = m.transpose();
        return format_list(row_major.data(), row_major.size());
    };
    std::string out;
    const auto put = [&out](const char* key, const std::string& value) {
        out += key;
        out += " = ";
        out += value;
        out += '\n';
    };
    put("system", cfg.system);
    put("mode", std::string(mode_name(cfg.mode)));
    put("epsilon", format_double(cfg.gains.epsilon));
    put("alpha", format_list(cfg.gains.alphas.data(), cfg.gains.alphas.size()));
    put("Q", matrix_value(cfg.weights.Q));
    put("R", format_double(cfg.weights.R));
    put("P0", matrix_value(cfg.weights.P0));
    put("eta0", format_list(cfg.initial.plant.eta.data(), cfg.initial.plant.eta.size()));
    put("xi0", format_list(cfg.initial.plant.xi.data(), cfg.initial.plant.xi.size()));
    put("eta_hat0", format_list(cfg.initial.eta_hat.data(), cfg.initial.eta_hat.size()));
    put("xi_hat0", format_list(cfg.initial.xi_hat.data(), cfg.initial.xi_hat.size()));
    put("sigma_hat0", format_double(cfg.initial.sigma_hat));
    put("M_xi", format_double(cfg.sat.M_xi));
    put("M_sigma", format_double(cfg.sat.M_sigma));
    put("kappa", format_double(cfg.sat.kappa));
    put("y_substitution", cfg.y_substitution ? "true" : "false");
    put("saturation_enabled", cfg.saturation_enabled ? "true" : "false");
    put("t_final", format_double(cfg.t_final));
    put("step", format_double(cfg.step));
    put("record_stride", std::to_string(cfg.record_stride));
    put("tube_level", cfg.tube_level ? format_double(*cfg.tube_level) : "auto");
    return out;
}

bool operator==(const SimConfig& a, const SimConfig& b) {
    return a.system == b.system && a.mode == b.mode && same(a.gains.alphas, b.gains.alphas) &&
           a.gains.epsilon == b.gains.epsilon && same(a.weights.Q, b.weights.Q) && a.weights.R == b.weights.R &&
           same(a.weights.P0, b.weights.P0) && a.sat.M_xi == b.sat.M_xi && a.sat.M_sigma == b.sat.M_sigma &&
           a.sat.kappa == b.sat.kappa && a.y_substitution == b.y_substitution &&
           a.saturation_enabled == b.saturation_enabled && a.t_final == b.t_final && a.step == b.step &&
           a.record_stride == b.record_stride && same(a.initial.plant.eta, b.initial.plant.eta) &&
           same(a.initial.plant.xi, b.initial.plant.xi) && same(a.initial.eta_hat, b.initial.eta_hat) &&
           same(a.initial.xi_hat, b.initial.xi_hat) && a.initial.sigma_hat == b.initial.sigma_hat &&
           a.tube_level == b.tube_level;
}

}  // namespace ofb
