#pragma once

// Experiment configuration: a flat "key = value" text format, validation and a
// stable hash of the canonical form.
//
//   # comments run to the end of the line
//   experiment = stability
//   n_grid = 500, 1000, 2000, 4000
//   eta = 0+1i

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mesofluct/error.hpp"
#include "mesofluct/jacobi.hpp"
#include "mesofluct/test_function.hpp"

namespace mesofluct::experiments {

inline constexpr std::string_view version = "mesofluct 0.1.0";

inline const std::vector<std::string>& experiment_ids() {
    static const std::vector<std::string> ids{"resolvent", "decoupling", "hankel", "stability", "clt", "mc"};
    return ids;
}

struct ExperimentConfig {
    std::string experiment = "stability";
    std::vector<SiteIndex> n_grid;  // empty: the experiment's default grid
    double gamma = 0.3;
    double beta = 0.6;
    double beta_prime = 0.45;
    double x0 = 0.0;
    std::complex<double> eta{0.0, 1.0};
    std::string test_function = "imag_rational(1,0,1)";
    std::string lambda_rule = "inv_log";  // or "kls_singular" for that preset
    std::vector<int> m_list{2, 3};
    std::uint64_t seed = 20240601;
    std::int64_t samples = 10'000;
    std::string output;
    double eps = 0.05;  // exponent offset of the site sequence
    int window_m = 2;   // window half-width multiplier m in n +- 2 m n^b
};

namespace detail {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i)
        if (i == s.size() || s[i] == ',') {
            auto item = mesofluct::detail::trim(s.substr(start, i - start));
            if (!item.empty()) out.emplace_back(item);
            start = i + 1;
        }
    return out;
}

inline long long parse_integer(std::string_view s, const std::string& what) {
    const std::string str(mesofluct::detail::trim(s));
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(str, &used);
    } catch (const std::exception&) {
        throw ConfigError("bad integer for " + what + ": '" + str + "'");
    }
    if (used != str.size()) throw ConfigError("bad integer for " + what + ": '" + str + "'");
    return v;
}

inline std::uint64_t parse_unsigned(std::string_view s, const std::string& what) {
    const std::string str(mesofluct::detail::trim(s));
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        if (!str.empty() && str[0] == '-') throw std::invalid_argument("negative");
        v = std::stoull(str, &used);
    } catch (const std::exception&) {
        throw ConfigError("bad unsigned integer for " + what + ": '" + str + "'");
    }
    if (used != str.size()) throw ConfigError("bad unsigned integer for " + what + ": '" + str + "'");
    return v;
}

}  // namespace detail

/// Parses "a", "bi", "a+bi", "a-bi" (i or j; "i" alone is 1i).
inline std::complex<double> parse_complex(std::string_view text) {
    std::string s;
    for (char c : text)
        if (c != ' ' && c != '\t') s += c;
    if (s.empty()) throw ConfigError("empty complex number");
    auto imag_part = [&](std::string t) {
        t.pop_back();
        if (t.empty() || t == "+") return 1.0;
        if (t == "-") return -1.0;
        if (t.front() == '+') t.erase(0, 1);
        return mesofluct::detail::parse_double(t, "imaginary part");
    };
    if (s.back() != 'i' && s.back() != 'j') return {mesofluct::detail::parse_double(s, "complex number"), 0.0};
    // Split at the last sign that is not the leading one or part of an exponent.
    std::size_t split = std::string::npos;
    for (std::size_t k = s.size() - 1; k > 0; --k)
        if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E') {
            split = k;
            break;
        }
    if (split == std::string::npos) return {0.0, imag_part(s)};
    return {mesofluct::detail::parse_double(s.substr(0, split), "real part"), imag_part(s.substr(split))};
}

inline std::string format_complex(std::complex<double> z) {
    return detail::fmt17(z.real()) + (z.imag() < 0 || std::signbit(z.imag()) ? "-" : "+") +
           detail::fmt17(std::abs(z.imag())) + "i";
}

inline void set_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    using mesofluct::detail::parse_double;
    if (key == "experiment") {
        cfg.experiment = value;
    } else if (key == "n_grid") {
        cfg.n_grid.clear();
        for (const auto& v : detail::split_list(value)) cfg.n_grid.push_back(detail::parse_integer(v, "n_grid"));
    } else if (key == "gamma") {
        cfg.gamma = parse_double(value, "gamma");
    } else if (key == "beta") {
        cfg.beta = parse_double(value, "beta");
    } else if (key == "beta_prime") {
        cfg.beta_prime = parse_double(value, "beta_prime");
    } else if (key == "x0") {
        cfg.x0 = parse_double(value, "x0");
    } else if (key == "eta") {
        cfg.eta = parse_complex(value);
    } else if (key == "test_function") {
        cfg.test_function = value;
    } else if (key == "lambda_rule") {
        cfg.lambda_rule = value;
    } else if (key == "m_list") {
        cfg.m_list.clear();
        for (const auto& v : detail::split_list(value))
            cfg.m_list.push_back(static_cast<int>(detail::parse_integer(v, "m_list")));
    } else if (key == "seed") {
        cfg.seed = detail::parse_unsigned(value, "seed");
    } else if (key == "samples") {
        cfg.samples = detail::parse_integer(value, "samples");
    } else if (key == "output") {
        cfg.output = value;
    } else if (key == "eps") {
        cfg.eps = parse_double(value, "eps");
    } else if (key == "window_m") {
        cfg.window_m = static_cast<int>(detail::parse_integer(value, "window_m"));
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

/// Reads key = value lines; unknown or repeated keys are errors.
inline ExperimentConfig parse_config(std::string_view text, ExperimentConfig cfg = {}) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::map<std::string, int> seen;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto body = mesofluct::detail::trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key(mesofluct::detail::trim(body.substr(0, eq)));
        const std::string value(mesofluct::detail::trim(body.substr(eq + 1)));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        if (seen[key]++) throw ConfigError("line " + std::to_string(lineno) + ": repeated key '" + key + "'");
        set_key(cfg, key, value);
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path, ExperimentConfig defaults = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), std::move(defaults));
}

inline std::vector<SiteIndex> default_n_grid(const std::string& experiment) {
    if (experiment == "resolvent" || experiment == "decoupling") return {500, 1000, 2000};
    if (experiment == "hankel") return {128, 256, 512, 1024, 2048, 4096, 8192};
    if (experiment == "mc") return {1, 50};
    return {500, 1000, 2000, 4000};
}

/// The config with the default grid filled in.
inline ExperimentConfig resolved(ExperimentConfig cfg) {
    if (cfg.n_grid.empty()) cfg.n_grid = default_n_grid(cfg.experiment);
    return cfg;
}

inline void validate(const ExperimentConfig& cfg) {
    const auto& ids = experiment_ids();
    if (std::find(ids.begin(), ids.end(), cfg.experiment) == ids.end())
        throw ConfigError("unknown experiment '" + cfg.experiment + "'");
    if (!(cfg.gamma > 0.0 && cfg.gamma < cfg.beta_prime && cfg.beta_prime < cfg.beta && cfg.beta < 1.0))
        throw ConfigError("need 0 < gamma < beta_prime < beta < 1 (got gamma = " + detail::fmt17(cfg.gamma) +
                          ", beta_prime = " + detail::fmt17(cfg.beta_prime) +
                          ", beta = " + detail::fmt17(cfg.beta) + ")");
    if (!(cfg.x0 > -2.0 && cfg.x0 < 2.0)) throw ConfigError("x0 must lie in (-2, 2)");
    if (!(cfg.eta.imag() != 0.0) || !std::isfinite(cfg.eta.real()) || !std::isfinite(cfg.eta.imag()))
        throw ConfigError("eta needs a finite, nonzero imaginary part");
    if (!(cfg.eps > 0.0)) throw ConfigError("eps must be positive");
    if (cfg.window_m < 1) throw ConfigError("window_m must be >= 1");
    const auto grid = resolved(cfg).n_grid;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] < 1) throw ConfigError("n_grid entries must be >= 1");
        if (i && grid[i] <= grid[i - 1]) throw ConfigError("n_grid must be strictly increasing");
    }
    if (cfg.experiment != "mc" && grid.front() < 2) throw ConfigError("n_grid entries must be >= 2");
    if (cfg.experiment == "hankel" && grid.size() < 4) throw ConfigError("hankel needs at least 4 grid points");
    if (cfg.m_list.empty()) throw ConfigError("m_list must not be empty");
    for (int m : cfg.m_list)
        if (m < 2 || m > 6) throw ConfigError("m_list entries must lie in 2..6");
    if (cfg.experiment == "mc" && cfg.samples < 100) throw ConfigError("mc needs samples >= 100");
    const auto f = TestFunction::parse(cfg.test_function);
    if ((cfg.experiment == "stability" || cfg.experiment == "clt" || cfg.experiment == "mc") && !f.real_valued())
        throw ConfigError("test_function must be real-valued for " + cfg.experiment);
    if (cfg.lambda_rule != "kls_singular") LambdaRule::parse(cfg.lambda_rule);
}

/// validate() plus construction of the perturbed operator, whose site rule can
/// still be rejected (non-spaced positions, increasing |lambda|).
inline void validate_with_operator(const ExperimentConfig& cfg);

/// One "key = value" line per field, in a fixed order, floats with 17 digits.
inline std::string canonical_text(const ExperimentConfig& cfg) {
    std::ostringstream os;
    os << "experiment = " << cfg.experiment << "\n";
    os << "n_grid = ";
    for (std::size_t i = 0; i < cfg.n_grid.size(); ++i) os << (i ? ", " : "") << cfg.n_grid[i];
    os << "\n";
    os << "gamma = " << detail::fmt17(cfg.gamma) << "\n";
    os << "beta = " << detail::fmt17(cfg.beta) << "\n";
    os << "beta_prime = " << detail::fmt17(cfg.beta_prime) << "\n";
    os << "x0 = " << detail::fmt17(cfg.x0) << "\n";
    os << "eta = " << format_complex(cfg.eta) << "\n";
    os << "test_function = " << cfg.test_function << "\n";
    os << "lambda_rule = " << cfg.lambda_rule << "\n";
    os << "m_list = ";
    for (std::size_t i = 0; i < cfg.m_list.size(); ++i) os << (i ? ", " : "") << cfg.m_list[i];
    os << "\n";
    os << "seed = " << cfg.seed << "\n";
    os << "samples = " << cfg.samples << "\n";
    os << "eps = " << detail::fmt17(cfg.eps) << "\n";
    os << "window_m = " << cfg.window_m << "\n";
    return os.str();
}

/// FNV-1a (64 bit) of the canonical text as 16 hex digits. The output path is
/// not part of the hash.
inline std::string config_hash(const ExperimentConfig& cfg) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical_text(cfg)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// J = J0 + V for the configured site rule; "kls_singular" selects that preset.
inline JacobiOperator perturbed_operator(const ExperimentConfig& cfg) {
    if (cfg.lambda_rule == "kls_singular") return make_preset("kls_singular");
    return make_preset("sparse(" + detail::fmt17(cfg.beta) + "," + detail::fmt17(cfg.eps) + "," + cfg.lambda_rule +
                       ")");
}

inline void validate_with_operator(const ExperimentConfig& cfg) {
    validate(cfg);
    try {
        perturbed_operator(cfg);
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("perturbation rejected: ") + e.what());
    }
}

}  // namespace mesofluct::experiments
