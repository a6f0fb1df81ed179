#pragma once

#include <Eigen/Dense>

#include "ivqr/dataset.hpp"
#include "ivqr/dgp.hpp"
#include "ivqr/rng.hpp"

namespace ivqr::test {

// Generic random dataset: intercept + uniform regressors, continuous y, so
// zero residuals occur only at basic solutions.
inline Dataset random_dataset(Rng& rng, int n, int k, bool distinct_z = false) {
    Eigen::VectorXd y(n);
    Eigen::MatrixXd w(n, k), z(n, k);
    for (int i = 0; i < n; ++i) {
        y(i) = 3.0 * rng.uniform() - 1.0;
        w(i, 0) = 1.0;
        for (int j = 1; j < k; ++j) w(i, j) = 2.0 * rng.uniform() - 1.0;
        if (distinct_z) {
            z(i, 0) = 1.0;
            for (int j = 1; j < k; ++j) z(i, j) = w(i, j) + 0.3 * (rng.uniform() - 0.5);
        }
    }
    if (!distinct_z) z = w;
    return make_dataset(std::move(y), std::move(w), std::move(z));
}

inline Eigen::VectorXd random_theta(Rng& rng, int k, double scale = 2.0) {
    Eigen::VectorXd t(k);
    for (int j = 0; j < k; ++j) t(j) = scale * (2.0 * rng.uniform() - 1.0);
    return t;
}

// central-difference Jacobian of the population moments; quadrature-based
// oracle independent of the closed-form components
inline Eigen::MatrixXd population_jacobian_fd(DgpId id, double tau, const Eigen::VectorXd& theta,
                                              double h = 1e-6) {
    const int k = static_cast<int>(theta.size());
    Eigen::MatrixXd G(k, k);
    for (int j = 0; j < k; ++j) {
        Eigen::VectorXd tp = theta, tm = theta;
        tp(j) += h;
        tm(j) -= h;
        G.col(j) = (population_moment(id, tau, tp) - population_moment(id, tau, tm)) / (2.0 * h);
    }
    return G;
}

}  // namespace ivqr::test
