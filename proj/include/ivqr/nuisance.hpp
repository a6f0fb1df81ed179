#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "ivqr/dataset.hpp"
#include "ivqr/dgp.hpp"

namespace ivqr {

enum class KernelType { Gaussian, Epanechnikov, Uniform };

KernelType parse_kernel(const std::string& token);
std::string kernel_name(KernelType k);

double kernel_value(KernelType k, double u);
// Uniform kernel is not differentiable; requesting its derivative throws.
double kernel_deriv(KernelType k, double u);

enum class NuisanceSource { Analytic, PlugIn };

struct NuisanceComponents {
    Eigen::MatrixXd G;                // k x k Jacobian of the moments
    Eigen::MatrixXd Omega;            // k x k moment variance
    Eigen::VectorXd kappa1;           // k
    std::vector<Eigen::MatrixXd> dG;  // k Jacobian derivatives
    Eigen::MatrixXd Q;                // k^2 x k, column j = vec(G^-T dG_j G^-1)
    NuisanceSource source = NuisanceSource::Analytic;
    double bandwidth = 0.0;           // plug-in only (level estimates)
    double bandwidth_deriv = 0.0;     // plug-in only (derivative estimates)
    double G_condition = 0.0;
    bool G_singular = false;
};

// Rule of thumb 1.06 * sd(resid) * n^(-rate); rate 1/5 for level estimates,
// 1/7 for derivative estimates.
double rot_bandwidth(const Eigen::VectorXd& residuals, double rate);

// G_hat = (1/(n h)) sum K(e_i/h) z_i w_i'          with e_i = y_i - w_i'theta
Eigen::MatrixXd estimate_G(const Dataset& ds, const Eigen::VectorXd& theta_hat,
                           double h, KernelType kernel);

// kappa1_hat = (tau - 1/2) (1/(n h)) sum K(e_i/h) z_i (w_i' G^{-1} z_i)
Eigen::VectorXd estimate_kappa1(const Dataset& ds, double tau,
                                const Eigen::VectorXd& theta_hat,
                                const Eigen::MatrixXd& G_hat,
                                double h, KernelType kernel);

// Sample covariance (mean subtracted) of m_i = z_i (1{y_i <= w_i'theta} - tau).
Eigen::MatrixXd estimate_Omega(const Dataset& ds, double tau,
                               const Eigen::VectorXd& theta_hat);

// dG_j_hat = -(1/(n h^2)) sum K'(e_i/h) w_i w_i' z_ij; the sign matches the
// scalar location-model case (weighted average of f').
std::vector<Eigen::MatrixXd> estimate_dG(const Dataset& ds,
                                         const Eigen::VectorXd& theta_hat,
                                         double h, KernelType kernel);

// Packages components and forms Q_j = vec(G^-T dG_j G^-1). Throws on
// singular G.
NuisanceComponents assemble(const Eigen::MatrixXd& G, const Eigen::MatrixXd& Omega,
                            const Eigen::VectorXd& kappa1,
                            const std::vector<Eigen::MatrixXd>& dG);

NuisanceComponents analytic_nuisance(const AnalyticTruth& truth);

struct PlugInOptions {
    KernelType kernel = KernelType::Gaussian;
    std::optional<double> bandwidth;        // overrides the rule of thumb
    std::optional<double> bandwidth_deriv;
};

NuisanceComponents plugin_nuisance(const Dataset& ds, double tau,
                                   const Eigen::VectorXd& theta_hat,
                                   const PlugInOptions& opts = {});

}  // namespace ivqr
