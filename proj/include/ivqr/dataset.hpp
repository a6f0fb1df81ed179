#pragma once

#include <Eigen/Dense>
#include <string>

#include "ivqr/common.hpp"

namespace ivqr {

/// Observations (y_i, w_i, z_i), i = 1..n, with k regressors and k
/// instruments (just-identified). For classical quantile regression z == w.
/// Immutable after construction; safe to share across threads.
struct Dataset {
    Eigen::VectorXd y;  // n
    Eigen::MatrixXd w;  // n x k regressors
    Eigen::MatrixXd z;  // n x k instruments

    Eigen::Index n() const { return y.size(); }
    Eigen::Index k() const { return w.cols(); }

    bool classical_qr() const { return w == z; }

    // scale used by the exact-zero residual tolerance
    double y_scale() const { return n() > 0 ? y.cwiseAbs().maxCoeff() : 0.0; }
};

// Validates shapes, finiteness and n >= k+1; throws ivqr::Error on violation.
Dataset make_dataset(Eigen::VectorXd y, Eigen::MatrixXd w, Eigen::MatrixXd z);
Dataset make_qr_dataset(Eigen::VectorXd y, Eigen::MatrixXd w);

// CSV schema: header `y,w1,...,wk[,z1,...,zk]`; UTF-8, decimal point, no
// thousands separators. Missing z columns mean z := w.
Dataset load_dataset(const std::string& path);
void save_dataset(const Dataset& ds, const std::string& path);

struct DatasetDiagnostics {
    Eigen::Index rank = 0;          // rank of En[z w']
    bool full_rank = false;
    double support_bound = 0.0;     // m = max_i max(|w_i|, |z_i|) (euclidean rows)
    int distinct_directions = 0;    // s = #{ w_i / |w_i| }
    double zw_condition = 0.0;      // condition number of En[z w']
    Eigen::MatrixXd zw_moment;      // En[z w']
};

// Pure; never mutates the dataset. A rank-deficient En[z w'] is fatal for the
// Newton-based corrections, which is reported through full_rank=false.
DatasetDiagnostics validate(const Dataset& ds);

}  // namespace ivqr
