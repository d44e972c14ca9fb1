#pragma once

// Flat key=value run configuration for the batch front end. Parsing and
// serialization round-trip exactly: serialize(parse(serialize(c))) equals
// serialize(c) because doubles render in shortest round-trip form.

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pointfield/csv.hpp"
#include "pointfield/point_measures.hpp"

namespace pointfield {

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string experiment;  // laplace-check | exceedance-check | scaling |
                             // gibbs-scaling | collision
    int d = 2;
    std::vector<int> n_list = {2, 4, 8, 16};
    int a = 1;
    std::uint64_t replicas = 0;  // 0 means the experiment default
    std::uint64_t seed = 0;
    bool seed_set = false;  // a seed must be given; there is no clock default
    std::string rho = "const";  // const | bump
    std::vector<MixingDistribution::Atom> lambda_atoms = {{1.0, 1.0}};
    std::string out_dir;
    int workers = 1;
    double step = 2e-5;  // collision probe time step
};

namespace config_detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) parts.push_back(item);
    return parts;
}

inline double parse_real(const std::string& s, const std::string& field) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(field + ": not a number: '" + s + "'");
    }
}

inline long long parse_int(const std::string& s, const std::string& field) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(field + ": not an integer: '" + s + "'");
    }
}

}  // namespace config_detail

/// "z:p,z:p,..." -> mixing atoms (validated later by MixingDistribution).
inline std::vector<MixingDistribution::Atom> parse_lambda_atoms(
    const std::string& text) {
    std::vector<MixingDistribution::Atom> atoms;
    for (const auto& part : config_detail::split(text, ',')) {
        const auto zp = config_detail::split(part, ':');
        if (zp.size() != 2)
            throw ConfigError("lambda: expected z:p, got '" + part + "'");
        atoms.push_back({config_detail::parse_real(zp[0], "lambda z"),
                         config_detail::parse_real(zp[1], "lambda p")});
    }
    if (atoms.empty()) throw ConfigError("lambda: empty atom list");
    return atoms;
}

inline std::string format_lambda_atoms(
    const std::vector<MixingDistribution::Atom>& atoms) {
    std::string s;
    for (std::size_t k = 0; k < atoms.size(); ++k) {
        if (k) s += ',';
        s += format_double(atoms[k].z) + ":" + format_double(atoms[k].p);
    }
    return s;
}

inline std::vector<int> parse_n_list(const std::string& text) {
    std::vector<int> ns;
    for (const auto& part : config_detail::split(text, ','))
        ns.push_back(
            static_cast<int>(config_detail::parse_int(part, "n")));
    if (ns.empty()) throw ConfigError("n: empty list");
    return ns;
}

inline std::string format_n_list(const std::vector<int>& ns) {
    std::string s;
    for (std::size_t k = 0; k < ns.size(); ++k) {
        if (k) s += ',';
        s += std::to_string(ns[k]);
    }
    return s;
}

inline std::string serialize_config(const RunConfig& cfg) {
    std::string out;
    out += "experiment=" + cfg.experiment + "\n";
    out += "d=" + std::to_string(cfg.d) + "\n";
    out += "n=" + format_n_list(cfg.n_list) + "\n";
    out += "a=" + std::to_string(cfg.a) + "\n";
    out += "replicas=" + std::to_string(cfg.replicas) + "\n";
    if (cfg.seed_set) out += "seed=" + std::to_string(cfg.seed) + "\n";
    out += "rho=" + cfg.rho + "\n";
    out += "lambda=" + format_lambda_atoms(cfg.lambda_atoms) + "\n";
    out += "out=" + cfg.out_dir + "\n";
    out += "workers=" + std::to_string(cfg.workers) + "\n";
    out += "step=" + format_double(cfg.step) + "\n";
    return out;
}

/// Parses key=value lines; '#' starts a comment, blank lines are skipped.
/// Unknown keys are config errors so typos cannot silently change a run.
inline RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        while (!line.empty() && (line.back() == ' ' || line.back() == '\r' ||
                                 line.back() == '\t'))
            line.pop_back();
        std::size_t start = 0;
        while (start < line.size() &&
               (line[start] == ' ' || line[start] == '\t'))
            ++start;
        line = line.substr(start);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) +
                              ": expected key=value, got '" + line + "'");
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        if (key == "experiment") {
            cfg.experiment = value;
        } else if (key == "d") {
            cfg.d = static_cast<int>(config_detail::parse_int(value, "d"));
        } else if (key == "n") {
            cfg.n_list = parse_n_list(value);
        } else if (key == "a") {
            cfg.a = static_cast<int>(config_detail::parse_int(value, "a"));
        } else if (key == "replicas") {
            cfg.replicas = static_cast<std::uint64_t>(
                config_detail::parse_int(value, "replicas"));
        } else if (key == "seed") {
            cfg.seed = static_cast<std::uint64_t>(
                config_detail::parse_int(value, "seed"));
            cfg.seed_set = true;
        } else if (key == "rho") {
            cfg.rho = value;
        } else if (key == "lambda") {
            cfg.lambda_atoms = parse_lambda_atoms(value);
        } else if (key == "out") {
            cfg.out_dir = value;
        } else if (key == "workers") {
            cfg.workers =
                static_cast<int>(config_detail::parse_int(value, "workers"));
        } else if (key == "step") {
            cfg.step = config_detail::parse_real(value, "step");
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
    return cfg;
}

/// Field-level validation; throws ConfigError naming the offending field.
inline void validate_config(const RunConfig& cfg) {
    static const std::vector<std::string> known = {
        "laplace-check", "exceedance-check", "scaling", "gibbs-scaling",
        "collision"};
    bool found = false;
    for (const auto& e : known) found = found || e == cfg.experiment;
    if (!found)
        throw ConfigError("experiment: unknown experiment '" + cfg.experiment +
                          "'");
    if (!cfg.seed_set)
        throw ConfigError("seed: required, and never defaulted from the clock");
    if (cfg.d < 1 || cfg.d > 3) throw ConfigError("d: must be 1, 2, or 3");
    if (cfg.a < 1) throw ConfigError("a: must be >= 1");
    if (cfg.n_list.empty()) throw ConfigError("n: must be nonempty");
    for (std::size_t k = 0; k < cfg.n_list.size(); ++k) {
        if (cfg.n_list[k] < 1) throw ConfigError("n: entries must be >= 1");
        if (k > 0 && cfg.n_list[k] <= cfg.n_list[k - 1])
            throw ConfigError("n: entries must be strictly increasing");
    }
    if (cfg.rho != "const" && cfg.rho != "bump")
        throw ConfigError("rho: must be 'const' or 'bump'");
    if (cfg.workers < 1) throw ConfigError("workers: must be >= 1");
    if (!(cfg.step > 0.0)) throw ConfigError("step: must be > 0");
    MixingDistribution lambda(cfg.lambda_atoms);  // validates atoms
    (void)lambda;
}

/// Experiment default replica counts (cost grows with the cell count
/// (2na+1)^d, so d = 3 runs leaner).
inline std::uint64_t default_replicas(const std::string& experiment, int d) {
    if (experiment == "laplace-check" || experiment == "exceedance-check")
        return 100000;
    // d = 3 energies are rare-event dominated; the slope gate needs the
    // extra replicas to resolve the decay against its standard error.
    if (experiment == "scaling") return d >= 3 ? 20000 : 10000;
    if (experiment == "gibbs-scaling") return 2000;
    if (experiment == "collision") return 10000;
    return 10000;
}

}  // namespace pointfield
