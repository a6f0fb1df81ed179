#pragma once

#include <map>
#include <string>
#include <vector>

#include "ivqr/simulation.hpp"

namespace ivqr {

// Flat key=value study configuration with '#' comments. Unknown keys are
// rejected (no silent typos). Recognized keys:
//   dgp, n, ns, reps, tau, taus, seed, threads, estimators, nuisance,
//   kernel, bandwidth, bandwidth-deriv, theta-box, norm
std::map<std::string, std::string> read_config_file(const std::string& path);

// Applies one key to a StudyConfig; throws Usage on unknown keys or
// malformed values. CLI flags are applied after the file, so they win.
void apply_config_entry(StudyConfig& cfg, const std::string& key, const std::string& value);

StudyConfig load_config(const std::string& path);

// "0.1,0.2,0.5" or "0.05:0.95:0.05" (inclusive range with snapped endpoints)
std::vector<double> parse_tau_list(const std::string& text);
std::vector<int> parse_int_list(const std::string& text);
std::vector<EstimatorKind> parse_estimator_list(const std::string& text);

// "lo:hi" (same bounds per coordinate) or "l1,l2:h1,h2"
std::pair<Eigen::VectorXd, Eigen::VectorXd> parse_theta_box(const std::string& text);

}  // namespace ivqr
