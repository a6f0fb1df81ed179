#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ivqr/dataset.hpp"

namespace ivqr {

// Location-model designs Y = X + F^{-1}(U), W = Z = (1, X)', X,U ~ U(0,1),
// plus the univariate case W = Z = 1, Y = U.
enum class DgpId {
    Dgp1Uniform,        // F^{-1}(u) = u
    Dgp2Triangular,     // F(y) = y^2 on [0,1]
    Dgp3ScaledCauchy,   // Cauchy(0, 1/4): F^{-1}(u) = tan(pi (u - 1/2)) / 4
    UnivariateUniform,  // W = Z = 1, Y = U
};

DgpId parse_dgp(const std::string& token);  // dgp1|dgp2|dgp3|uniform1d
std::string dgp_name(DgpId id);

struct DgpSpec {
    DgpId id = DgpId::Dgp1Uniform;
    int n = 50;
    std::uint64_t seed = 0;
};

// Closed-form ingredients of the design at the error quantile.
double dgp_inv_cdf(DgpId id, double u);
double dgp_cdf(DgpId id, double y);
double dgp_pdf(DgpId id, double y);
double dgp_pdf_deriv(DgpId id, double y);

// Deterministic: a pure function of spec (per-observation draw order is
// fixed, X before U).
Dataset sample(const DgpSpec& spec);

// theta0(tau) = (F^{-1}(tau), 1)'; (tau) in the univariate case.
Eigen::VectorXd theta_true(DgpId id, double tau);

/// Closed-form moment-condition ingredients of the design: Jacobian G,
/// moment variance Omega, influence-covariance vector kappa1, the Jacobian
/// derivatives dG_j and their curvature form Q (columns vec(G^-T dG_j G^-1)).
struct AnalyticTruth {
    Eigen::VectorXd theta0;
    Eigen::MatrixXd G;                // k x k
    Eigen::MatrixXd Omega;            // k x k
    Eigen::VectorXd kappa1;           // k
    std::vector<Eigen::MatrixXd> dG;  // k matrices, k x k
    Eigen::MatrixXd Q;                // k^2 x k, column j = vec(G^-T dG_j G^-1)
};

// Throws Numeric if the error density vanishes at F^{-1}(tau) (e.g. the
// triangular design as tau -> 0).
AnalyticTruth analytic_components(DgpId id, double tau);

// Population moments by Gauss-Legendre quadrature over X (split at the kinks
// of F). Independent of the closed forms above except for F itself; used as
// a cross-check oracle and as the g-ring input to process increments.
//   population_moment:      g(theta)      = E (1{Y <= W'theta} - tau) Z
//   population_cdf_moment:  g_ring(theta) = E 1{Y <= W'theta} Z
Eigen::VectorXd population_moment(DgpId id, double tau, const Eigen::VectorXd& theta);
Eigen::VectorXd population_cdf_moment(DgpId id, const Eigen::VectorXd& theta);
std::function<Eigen::VectorXd(const Eigen::VectorXd&)> cdf_moment_oracle(DgpId id);

enum class OrderStatCorner { Lower, Upper };
enum class BiasKind { Exact, Asymptotic };

// Bias of the order statistics Y_(k) (Lower) and Y_(k+1) (Upper) around the
// tau-quantile of a Uniform(0,1) sample, k = floor(tau n):
//   Exact/Lower       k/(n+1) - tau
//   Exact/Upper       (k+1)/(n+1) - tau
//   Asymptotic/Lower  -frac(tau n)/n - tau/n
//   Asymptotic/Upper  -frac(tau n)/n + (1-tau)/n
// The two kinds agree up to O(1/n^2). Requires 0 <= k <= n-1.
double uniform_orderstat_bias(int n, double tau, OrderStatCorner corner, BiasKind kind);

}  // namespace ivqr
