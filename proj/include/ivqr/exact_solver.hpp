#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ivqr/moments.hpp"

namespace ivqr {

// Which sample moment the estimator minimizes: ||g_hat(theta)||_p or the
// symmetrized ||g_star_hat(theta)||_p. The two differ only in how exact-zero
// residuals are counted, so they generally select different corners.
enum class MomentVariant { Standard, Symmetrized };

std::string variant_name(MomentVariant v);

struct SolverOptions {
    // Compact parameter box; basic solutions outside it are discarded.
    std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>> theta_box;
    // Relative singularity threshold on |det W_S| (Hadamard-scaled).
    double det_rtol = 1e-10;
};

struct CornerQuery {
    double tau = 0.5;
    Norm norm = Norm::L1;
    MomentVariant variant = MomentVariant::Standard;
};

/// Exact minimizer over basic ("corner") solutions theta_S = W_S^{-1} y_S.
///
/// Ranking of corners: primary key is the cell minimum of the objective over
/// all sign assignments of the corner's zero residuals (what a solver with
/// free indicator variables at zero residuals would credit the point with);
/// secondary key is the moment norm evaluated at the corner under the
/// variant's own inclusion convention; remaining exact ties go to the
/// lexicographically smallest defining subset. `objective_value` is the
/// secondary key of the winner and is the quantity whose expectation drives
/// the non-zero-sample-moment bias term.
struct CornerSolution {
    Eigen::VectorXd theta;
    std::vector<int> subset;      // defining observation indices, ascending
    double objective_value = 0.0; // variant moment at theta, weak inclusion
    double search_value = 0.0;    // cell minimum over sign assignments
    double tau = 0.5;
    Norm norm = Norm::L1;
    MomentVariant variant = MomentVariant::Standard;
    int ties = 0;                 // corners attaining search_value
    int singular_skipped = 0;
    int box_skipped = 0;
};

// All nonsingular k-subsets S with their basic solutions, in lexicographic
// subset order. Intended for small n; the solver streams subsets instead.
std::vector<std::pair<std::vector<int>, Eigen::VectorXd>>
enumerate_corners(const Dataset& ds, double det_rtol = 1e-10);

CornerSolution solve_exact(const Dataset& ds, double tau, Norm p,
                           MomentVariant variant = MomentVariant::Standard,
                           const SolverOptions& opts = {});

// One pass over the corner set answering several (tau, norm, variant)
// queries at once; the per-corner residual scan is shared.
std::vector<CornerSolution> solve_exact_batch(const Dataset& ds,
                                              std::span<const CornerQuery> queries,
                                              const SolverOptions& opts = {});

struct GridSpec {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;
    int points_per_dim = 101;
};

// Brute-force minimizer of the objective over a rectangular grid; a test
// oracle, not an estimator. Throws Usage on an empty/invalid grid.
Eigen::VectorXd grid_oracle(const Dataset& ds, double tau, Norm p, const GridSpec& grid);

}  // namespace ivqr
