#pragma once

#include <Eigen/Dense>
#include <string>

#include "ivqr/dataset.hpp"

namespace ivqr {

/// Structure of the exported l1 moment-minimization program:
///   min 1't  over  theta in R^k, e in {0,1}^n, r,s >= 0, t >= 0
///   s.t.  r_i - s_i = y_i - w_i'theta
///         (r_i, e_i) in SOS1,  (s_i, 1 - e_i) in SOS1
///         -t_l <= Z_l'(e - tau 1) <= t_l,  l = 1..k
/// Exported as a plain-text model (see docs/milp_format.md) for external
/// solvers; it is not solved in-repo.
struct MilpModel {
    int n = 0;
    int k = 0;
    double tau = 0.0;
    Eigen::VectorXd y;
    Eigen::MatrixXd w;
    Eigen::MatrixXd z;

    int binary_count() const { return n; }
    int sos1_count() const { return 2 * n; }
    int band_pair_count() const { return k; }
    int band_inequality_count() const { return 2 * k; }
};

std::string export_milp_sos(const Dataset& ds, double tau);

// Parses text produced by export_milp_sos back into its structure; throws
// Schema on malformed input. export/parse round-trips exactly.
MilpModel parse_milp_sos(const std::string& text);

}  // namespace ivqr
