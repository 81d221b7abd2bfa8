#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qstrip/errors.hpp"

namespace qstrip {

/// Sectioned key = value configuration file. '#' and ';' start comments;
/// keys live under the most recent [section] header.
class ConfigFile {
public:
    ConfigFile() = default;

    static ConfigFile parse_file(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw ConfigError("config: cannot open " + path);
        std::stringstream ss;
        ss << is.rdbuf();
        return parse(ss.str(), path);
    }

    static ConfigFile parse(const std::string& text, const std::string& origin = "<string>") {
        ConfigFile cf;
        std::istringstream is(text);
        std::string line, section;
        int lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            auto hash = line.find_first_of("#;");
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw ConfigError(origin + ":" + std::to_string(lineno) +
                                      ": malformed section header");
                section = trim(line.substr(1, line.size() - 2));
                continue;
            }
            auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": expected key = value");
            std::string key = trim(line.substr(0, eq));
            std::string value = trim(line.substr(eq + 1));
            if (key.empty())
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
            cf.values_[section + "." + key] = value;
        }
        return cf;
    }

    bool has(const std::string& section, const std::string& key) const {
        return values_.count(section + "." + key) > 0;
    }

    std::string get_string(const std::string& section, const std::string& key,
                           std::optional<std::string> fallback = {}) const {
        auto it = values_.find(section + "." + key);
        if (it != values_.end()) return it->second;
        if (fallback) return *fallback;
        throw ConfigError("config: missing [" + section + "] " + key);
    }

    double get_double(const std::string& section, const std::string& key,
                      std::optional<double> fallback = {}) const {
        auto it = values_.find(section + "." + key);
        if (it == values_.end()) {
            if (fallback) return *fallback;
            throw ConfigError("config: missing [" + section + "] " + key);
        }
        return to_double(it->second, section, key);
    }

    std::int64_t get_int(const std::string& section, const std::string& key,
                         std::optional<std::int64_t> fallback = {}) const {
        auto it = values_.find(section + "." + key);
        if (it == values_.end()) {
            if (fallback) return *fallback;
            throw ConfigError("config: missing [" + section + "] " + key);
        }
        try {
            std::size_t pos = 0;
            std::int64_t v = std::stoll(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("config: [" + section + "] " + key + " = '" + it->second +
                              "' is not an integer");
        }
    }

    std::vector<double> get_double_list(const std::string& section, const std::string& key,
                                        std::vector<double> fallback = {}) const {
        auto it = values_.find(section + "." + key);
        if (it == values_.end()) return fallback;
        std::vector<double> out;
        std::istringstream ss(it->second);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            tok = trim(tok);
            if (tok.empty()) continue;
            out.push_back(to_double(tok, section, key));
        }
        return out;
    }

    std::vector<int> get_int_list(const std::string& section, const std::string& key,
                                  std::vector<int> fallback = {}) const {
        auto doubles = get_double_list(section, key, {});
        if (doubles.empty()) return fallback;
        std::vector<int> out;
        for (double d : doubles) out.push_back(static_cast<int>(d));
        return out;
    }

    const std::map<std::string, std::string>& raw() const { return values_; }

private:
    static std::string trim(const std::string& s) {
        auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return "";
        auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    static double to_double(const std::string& s, const std::string& section,
                            const std::string& key) {
        try {
            std::size_t pos = 0;
            double v = std::stod(s, &pos);
            if (pos != s.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("config: [" + section + "] " + key + " = '" + s +
                              "' is not a number");
        }
    }

    std::map<std::string, std::string> values_;
};

/// Verification tolerances; defaults mirror the acceptance thresholds and
/// any override is recorded in reports.
struct Tolerances {
    double divergence_free = 1e-10;
    double pointwise_balance = 1e-7;     // pointwise balance residual, relative max-norm
    double global_balance = 1e-8;        // relative to the dissipation
    double strip_relative_residual = 0.05;
    double sign_fraction = 0.02;
    double flux_fraction = 1e-3;         // net flux vs. speed integral
    double coarea_fraction = 0.02;
};

/// One experiment: state construction, stepping, levels, outputs.
struct ExperimentConfig {
    int dim = 2;
    int resolution = 64;
    std::vector<int> resolutions; // converge only
    double nu = 0.0;
    double dt = 1e-3;
    int n_steps = 0;
    std::vector<double> snapshot_times;

    std::string initial_condition = "taylor-green";
    std::uint64_t seed = 1;
    int peak_wavenumber = 4;
    double amplitude = 1.0;
    double abc_a = 1.0, abc_b = 1.0, abc_c = 1.0;

    bool levels_are_quantiles = true;
    std::vector<double> levels{0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};

    std::string output_dir = ".";
    bool write_mesh = false;

    Tolerances tol;

    static ExperimentConfig from_file(const ConfigFile& cf) {
        ExperimentConfig c;
        c.dim = static_cast<int>(cf.get_int("experiment", "dim", 2));
        c.resolution = static_cast<int>(cf.get_int("experiment", "resolution", 64));
        c.resolutions = cf.get_int_list("experiment", "resolutions", {});
        c.nu = cf.get_double("experiment", "nu", 0.0);
        c.dt = cf.get_double("experiment", "dt", 1e-3);
        c.n_steps = static_cast<int>(cf.get_int("experiment", "n_steps", 0));
        c.snapshot_times = cf.get_double_list("experiment", "snapshot_times", {});
        c.initial_condition =
            cf.get_string("experiment", "initial_condition", std::string("taylor-green"));
        c.seed = static_cast<std::uint64_t>(cf.get_int("experiment", "seed", 1));
        c.peak_wavenumber =
            static_cast<int>(cf.get_int("experiment", "peak_wavenumber", 4));
        c.amplitude = cf.get_double("experiment", "amplitude", 1.0);
        c.abc_a = cf.get_double("experiment", "abc_a", 1.0);
        c.abc_b = cf.get_double("experiment", "abc_b", 1.0);
        c.abc_c = cf.get_double("experiment", "abc_c", 1.0);

        if (cf.has("levels", "absolute")) {
            c.levels = cf.get_double_list("levels", "absolute", {});
            c.levels_are_quantiles = false;
        } else {
            c.levels = cf.get_double_list("levels", "quantiles", c.levels);
            c.levels_are_quantiles = true;
        }

        c.output_dir = cf.get_string("output", "directory", std::string("."));
        c.write_mesh = cf.get_int("output", "write_mesh", 0) != 0;

        c.tol.divergence_free = cf.get_double("tolerances", "divergence_free", c.tol.divergence_free);
        c.tol.pointwise_balance =
            cf.get_double("tolerances", "pointwise_balance", c.tol.pointwise_balance);
        c.tol.global_balance = cf.get_double("tolerances", "global_balance", c.tol.global_balance);
        c.tol.strip_relative_residual = cf.get_double("tolerances", "strip_relative_residual",
                                                      c.tol.strip_relative_residual);
        c.tol.sign_fraction = cf.get_double("tolerances", "sign_fraction", c.tol.sign_fraction);
        c.tol.flux_fraction = cf.get_double("tolerances", "flux_fraction", c.tol.flux_fraction);
        c.tol.coarea_fraction = cf.get_double("tolerances", "coarea_fraction", c.tol.coarea_fraction);

        c.validate();
        return c;
    }

    void validate() const {
        if (dim != 2 && dim != 3) throw ConfigError("config: dim must be 2 or 3");
        if (resolution < 8) throw ConfigError("config: resolution must be >= 8");
        if (nu < 0.0) throw ConfigError("config: nu must be >= 0");
        if (dt <= 0.0) throw ConfigError("config: dt must be > 0");
        if (n_steps < 0) throw ConfigError("config: n_steps must be >= 0");
        if (amplitude <= 0.0) throw ConfigError("config: amplitude must be > 0");
        if (initial_condition != "taylor-green" && initial_condition != "abc" &&
            initial_condition != "random")
            throw ConfigError("config: unknown initial_condition '" + initial_condition +
                              "' (expected taylor-green, abc, or random)");
        if (levels_are_quantiles)
            for (double q : levels)
                if (q <= 0.0 || q >= 1.0)
                    throw ConfigError("config: quantiles must lie in (0, 1)");
        for (std::size_t i = 1; i < levels.size(); ++i)
            if (!(levels[i] > levels[i - 1]))
                throw ConfigError("config: levels must be strictly increasing");
    }
};

} // namespace qstrip
