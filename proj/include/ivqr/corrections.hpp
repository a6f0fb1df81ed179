#pragma once

#include <Eigen/Dense>

#include "ivqr/exact_solver.hpp"
#include "ivqr/nuisance.hpp"

namespace ivqr {

// Newton map T(theta) = theta - G^{-1} g_hat(theta).
Eigen::VectorXd newton_step(const Dataset& ds, double tau,
                            const Eigen::VectorXd& theta, const Eigen::MatrixXd& G);

// k-step iteration of T with one fixed G. refresh_G re-estimates G at each
// iterate from the data (plug-in), for experimentation only.
struct KStepOptions {
    int steps = 1;
    bool refresh_G = false;
    PlugInOptions plug;
};
Eigen::VectorXd newton_k_step(const Dataset& ds, double tau, Eigen::VectorXd theta,
                              Eigen::MatrixXd G, const KStepOptions& opts);

// Symmetric 1-step: theta - G^{-1} (g_hat(theta) - g_star_hat(theta)) / 2,
// the average of the Newton corrections under the two moment formulations.
// Cancels the corner-dependent bias terms (non-zero sample moments and the
// zero-residual point mass).
Eigen::VectorXd symmetric_step(const Dataset& ds, double tau,
                               const Eigen::VectorXd& theta, const Eigen::MatrixXd& G);

// theta_bc = theta_sym + (1/n) G^{-1} [kappa1 + Q' vec(Omega) / 2]
Eigen::VectorXd bias_correct(const Eigen::VectorXd& theta_sym,
                             const NuisanceComponents& comps, Eigen::Index n);

// Infeasible linear estimator theta0 - G^{-1} g_hat(theta0); the comparison
// point for remainder-rate diagnostics (synthetic data only).
Eigen::VectorXd theta_one(const Dataset& ds, double tau,
                          const Eigen::VectorXd& theta0, const Eigen::MatrixXd& G);

/// Full corrected-estimator pipeline: exact corner solution, then symmetric
/// step, then additive bias correction. The symmetric step uses G evaluated
/// at the corner solution (G refreshed at theta_sym is first-order
/// equivalent; not exposed here).
struct EstimateBreakdown {
    CornerSolution corner;
    Eigen::VectorXd theta_sym;
    Eigen::VectorXd theta_bc;
    Eigen::VectorXd kappa1_term;     // (1/n) G^{-1} kappa1
    Eigen::VectorXd curvature_term;  // (1/n) G^{-1} Q'vec(Omega) / 2
};

EstimateBreakdown estimate_bias_corrected(const Dataset& ds, double tau, Norm p,
                                          const NuisanceComponents& comps,
                                          const SolverOptions& opts = {});

}  // namespace ivqr
