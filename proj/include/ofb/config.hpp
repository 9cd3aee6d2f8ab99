#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ofb/simulator.hpp"

namespace ofb {

// Malformed configuration document. line() is 0 for overrides and whole-document errors.
class ParseError : public ConfigError {
public:
    ParseError(int line, std::string key, const std::string& what)
        : ConfigError(format(line, key, what)), line_(line), key_(std::move(key)) {}

    [[nodiscard]] int line() const noexcept { return line_; }
    [[nodiscard]] const std::string& key() const noexcept { return key_; }

private:
    static std::string format(int line, const std::string& key, const std::string& what) {
        std::string out = "config";
        if (line > 0) {
            out += " line " + std::to_string(line);
        }
        if (!key.empty()) {
            out += " key '" + key + "'";
        }
        return out + ": " + what;
    }

    int line_;
    std::string key_;
};

// A registered plant + feedback law with the initial data used when a config leaves it unset.
struct RegisteredDesign {
    ControlDesign design;
    InitialConditions defaults;
};

// Names accepted by the `system` key.
[[nodiscard]] std::vector<std::string> registered_designs();

// Throws ConfigError for unknown names.
[[nodiscard]] RegisteredDesign find_design(const std::string& name);

// Keys the parser accepts, in echo order.
[[nodiscard]] const std::vector<std::string>& config_keys();

// Parses a flat `key = value` document (`#` starts a comment). Overrides are applied after the
// document as if appended to it. Unset keys take their defaults: the reference parameters of the
// registered system, step eps/20 (1e-3 for reduced runs), M_xi from calibrate_xi_level,
// kappa = 0.1 M_xi, M_sigma = 10.
[[nodiscard]] SimConfig parse_config(std::string_view text, const std::map<std::string, std::string>& overrides = {});

// Writes every key with its resolved value; parse_config(echo_config(c)) == c.
[[nodiscard]] std::string echo_config(const SimConfig& cfg);

[[nodiscard]] bool operator==(const SimConfig& a, const SimConfig& b);

[[nodiscard]] std::string_view mode_name(Mode mode);

}  // namespace ofb
