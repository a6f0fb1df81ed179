#include "ivqr/moments.hpp"

#include <cmath>

namespace ivqr {

Norm parse_norm(const std::string& token) {
    if (token == "l1") return Norm::L1;
    if (token == "l2") return Norm::L2;
    if (token == "linf") return Norm::Linf;
    fail(ErrorCategory::Usage, "unknown norm '" + token + "' (expected l1|l2|linf)");
}

std::string norm_name(Norm p) {
    switch (p) {
        case Norm::L1: return "l1";
        case Norm::L2: return "l2";
        case Norm::Linf: return "linf";
    }
    return "?";
}

double vector_norm(const Eigen::VectorXd& v, Norm p) {
    switch (p) {
        case Norm::L1: return v.lpNorm<1>();
        case Norm::L2: return v.norm();
        case Norm::Linf: return v.lpNorm<Eigen::Infinity>();
    }
    return 0.0;
}

double zero_tolerance(const Dataset& ds) {
    return 0x1.0p-40 * ds.y_scale();
}

namespace {

void check_theta(const Dataset& ds, const Eigen::VectorXd& theta) {
    if (theta.size() != ds.k())
        fail(ErrorCategory::Numeric, "theta has dimension " + std::to_string(theta.size()) +
                                         ", dataset has k = " + std::to_string(ds.k()));
}

}  // namespace

Eigen::VectorXd g_hat(const Dataset& ds, double tau, const Eigen::VectorXd& theta) {
    check_theta(ds, theta);
    const double zeta = zero_tolerance(ds);
    const Eigen::Index n = ds.n();
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(ds.k());
    const Eigen::VectorXd fit = ds.w * theta;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double r = ds.y(i) - fit(i);
        const double ind = (r <= zeta) ? 1.0 : 0.0;
        acc += (ind - tau) * ds.z.row(i).transpose();
    }
    return acc / static_cast<double>(n);
}

Eigen::VectorXd g_star_hat(const Dataset& ds, double tau, const Eigen::VectorXd& theta) {
    check_theta(ds, theta);
    const double zeta = zero_tolerance(ds);
    const Eigen::Index n = ds.n();
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(ds.k());
    const Eigen::VectorXd fit = ds.w * theta;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double r = ds.y(i) - fit(i);
        const double ind = (r < -zeta) ? 1.0 : 0.0;
        acc += (tau - ind) * ds.z.row(i).transpose();
    }
    return acc / static_cast<double>(n);
}

Eigen::VectorXd zero_residual_mass(const Dataset& ds, const Eigen::VectorXd& theta) {
    check_theta(ds, theta);
    const double zeta = zero_tolerance(ds);
    const Eigen::Index n = ds.n();
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(ds.k());
    const Eigen::VectorXd fit = ds.w * theta;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double r = ds.y(i) - fit(i);
        if (std::abs(r) <= zeta) acc += ds.z.row(i).transpose();
    }
    return acc / static_cast<double>(n);
}

double objective(const Dataset& ds, double tau, const Eigen::VectorXd& theta, Norm p) {
    return vector_norm(g_hat(ds, tau, theta), p);
}

Eigen::VectorXd process_increment(const Dataset& ds, const PopulationCdfMoment& g_ring,
                                  const Eigen::VectorXd& theta_a,
                                  const Eigen::VectorXd& theta_b) {
    if (!g_ring)
        fail(ErrorCategory::Unsupported,
             "process increments need a population oracle; observational data has none");
    check_theta(ds, theta_a);
    check_theta(ds, theta_b);
    const double zeta = zero_tolerance(ds);
    const Eigen::Index n = ds.n();

    auto cdf_hat = [&](const Eigen::VectorXd& theta) {
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(ds.k());
        const Eigen::VectorXd fit = ds.w * theta;
        for (Eigen::Index i = 0; i < n; ++i)
            if (ds.y(i) - fit(i) <= zeta) acc += ds.z.row(i).transpose();
        return acc / static_cast<double>(n);
    };

    const Eigen::VectorXd da = cdf_hat(theta_a) - g_ring(theta_a);
    const Eigen::VectorXd db = cdf_hat(theta_b) - g_ring(theta_b);
    return std::sqrt(static_cast<double>(n)) * (da - db);
}

}  // namespace ivqr
