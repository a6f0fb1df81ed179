#include "ivqr/cli_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ivqr {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& tok, const std::string& what) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size())
        fail(ErrorCategory::Usage, "bad number '" + tok + "' in " + what);
    return v;
}

long to_long(const std::string& tok, const std::string& what) {
    long v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size())
        fail(ErrorCategory::Usage, "bad integer '" + tok + "' in " + what);
    return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::stringstream ss(s);
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    return out;
}

}  // namespace

std::vector<double> parse_tau_list(const std::string& text) {
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        const auto parts = split(text, ':');
        if (parts.size() != 3) fail(ErrorCategory::Usage, "tau range must be start:stop:step");
        const double a = to_double(parts[0], "tau range");
        const double b = to_double(parts[1], "tau range");
        const double s = to_double(parts[2], "tau range");
        if (!(s > 0.0) || b < a) fail(ErrorCategory::Usage, "bad tau range '" + text + "'");
        const int count = static_cast<int>(std::floor((b - a) / s + 1e-9)) + 1;
        for (int i = 0; i < count; ++i) out.push_back(a + i * s);
        return out;
    }
    for (const auto& tok : split(text, ','))
        if (!tok.empty()) out.push_back(to_double(tok, "tau list"));
    if (out.empty()) fail(ErrorCategory::Usage, "empty tau list");
    return out;
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    for (const auto& tok : split(text, ','))
        if (!tok.empty()) out.push_back(static_cast<int>(to_long(tok, "integer list")));
    if (out.empty()) fail(ErrorCategory::Usage, "empty integer list");
    return out;
}

std::vector<EstimatorKind> parse_estimator_list(const std::string& text) {
    std::vector<EstimatorKind> out;
    for (const auto& tok : split(text, ','))
        if (!tok.empty()) out.push_back(parse_estimator(tok));
    if (out.empty()) fail(ErrorCategory::Usage, "empty estimator list");
    return out;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> parse_theta_box(const std::string& text) {
    const auto parts = split(text, ':');
    if (parts.size() != 2) fail(ErrorCategory::Usage, "theta box must be lo:hi");
    const auto los = split(parts[0], ',');
    const auto his = split(parts[1], ',');
    if (los.size() != his.size()) fail(ErrorCategory::Usage, "theta box bounds disagree");
    Eigen::VectorXd lo(static_cast<Eigen::Index>(los.size()));
    Eigen::VectorXd hi(static_cast<Eigen::Index>(his.size()));
    for (std::size_t j = 0; j < los.size(); ++j) {
        lo(static_cast<Eigen::Index>(j)) = to_double(los[j], "theta box");
        hi(static_cast<Eigen::Index>(j)) = to_double(his[j], "theta box");
        if (lo(static_cast<Eigen::Index>(j)) > hi(static_cast<Eigen::Index>(j)))
            fail(ErrorCategory::Usage, "theta box has lo > hi");
    }
    return {lo, hi};
}

void apply_config_entry(StudyConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "dgp") {
        cfg.dgp = parse_dgp(value);
    } else if (key == "n") {
        cfg.ns = {static_cast<int>(to_long(value, "n"))};
    } else if (key == "ns") {
        cfg.ns = parse_int_list(value);
    } else if (key == "reps") {
        cfg.reps = static_cast<int>(to_long(value, "reps"));
    } else if (key == "tau") {
        cfg.taus = {to_double(value, "tau")};
    } else if (key == "taus") {
        cfg.taus = parse_tau_list(value);
    } else if (key == "seed") {
        cfg.master_seed = static_cast<std::uint64_t>(to_long(value, "seed"));
    } else if (key == "threads") {
        cfg.threads = static_cast<int>(to_long(value, "threads"));
    } else if (key == "estimators") {
        cfg.estimators = parse_estimator_list(value);
    } else if (key == "nuisance") {
        if (value == "analytic")
            cfg.nuisance = NuisanceSource::Analytic;
        else if (value == "plugin")
            cfg.nuisance = NuisanceSource::PlugIn;
        else
            fail(ErrorCategory::Usage, "nuisance must be analytic|plugin, got '" + value + "'");
    } else if (key == "kernel") {
        cfg.plug.kernel = parse_kernel(value);
    } else if (key == "bandwidth") {
        cfg.plug.bandwidth = to_double(value, "bandwidth");
    } else if (key == "bandwidth-deriv") {
        cfg.plug.bandwidth_deriv = to_double(value, "bandwidth-deriv");
    } else if (key == "theta-box") {
        cfg.solver.theta_box = parse_theta_box(value);
    } else if (key == "norm") {
        parse_norm(value);  // accepted for completeness; estimators carry their norm
    } else {
        fail(ErrorCategory::Usage, "unknown config key '" + key + "'");
    }
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCategory::Io, "cannot open config '" + path + "'");
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            fail(ErrorCategory::Usage, "config line " + std::to_string(lineno) +
                                           " is not key=value: '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) fail(ErrorCategory::Usage, "empty key at config line " + std::to_string(lineno));
        kv[key] = value;
    }
    return kv;
}

StudyConfig load_config(const std::string& path) {
    StudyConfig cfg;
    for (const auto& [key, value] : read_config_file(path)) apply_config_entry(cfg, key, value);
    return cfg;
}

}  // namespace ivqr
