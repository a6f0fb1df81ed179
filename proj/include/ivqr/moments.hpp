#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

#include "ivqr/dataset.hpp"

namespace ivqr {

enum class Norm { L1, L2, Linf };

Norm parse_norm(const std::string& token);  // l1|l2|linf
std::string norm_name(Norm p);
double vector_norm(const Eigen::VectorXd& v, Norm p);

// Exact-zero residual tolerance. Corner solutions come out of k x k solves,
// so their defining residuals are zero only up to roundoff; every residual
// classification below uses the same zeta so that the symmetrization
// identity g_hat + g_star_hat == zero_residual_mass holds in floating point.
double zero_tolerance(const Dataset& ds);

// g_hat(theta)      = (1/n) sum_i (1{y_i <= w_i'theta} - tau) z_i      (weak <=)
// g_star_hat(theta) = (1/n) sum_i (tau - 1{y_i <  w_i'theta}) z_i      (strict <)
// The weak/strict pair is a fixed convention, not a knob.
Eigen::VectorXd g_hat(const Dataset& ds, double tau, const Eigen::VectorXd& theta);
Eigen::VectorXd g_star_hat(const Dataset& ds, double tau, const Eigen::VectorXd& theta);

// (1/n) sum_i z_i 1{|y_i - w_i'theta| <= zeta}
Eigen::VectorXd zero_residual_mass(const Dataset& ds, const Eigen::VectorXd& theta);

double objective(const Dataset& ds, double tau, const Eigen::VectorXd& theta, Norm p);

using PopulationCdfMoment = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Empirical-process increment between two parameter points:
///   sqrt(n) * [ (g_ring_hat(a) - g_ring(a)) - (g_ring_hat(b) - g_ring(b)) ]
/// where g_ring_hat(theta) = En 1{y <= w'theta} z and g_ring is the
/// population oracle of a synthetic design. Observational data has no such
/// oracle; passing an empty function raises Unsupported.
Eigen::VectorXd process_increment(const Dataset& ds,
                                  const PopulationCdfMoment& g_ring,
                                  const Eigen::VectorXd& theta_a,
                                  const Eigen::VectorXd& theta_b);

}  // namespace ivqr
