#include "ivqr/corrections.hpp"

namespace ivqr {

namespace {

Eigen::PartialPivLU<Eigen::MatrixXd> checked_lu(const Eigen::MatrixXd& G) {
    Eigen::FullPivLU<Eigen::MatrixXd> probe(G);
    if (!probe.isInvertible()) fail(ErrorCategory::Numeric, "singular G");
    return Eigen::PartialPivLU<Eigen::MatrixXd>(G);
}

}  // namespace

Eigen::VectorXd newton_step(const Dataset& ds, double tau, const Eigen::VectorXd& theta,
                            const Eigen::MatrixXd& G) {
    auto lu = checked_lu(G);
    return theta - lu.solve(g_hat(ds, tau, theta));
}

Eigen::VectorXd newton_k_step(const Dataset& ds, double tau, Eigen::VectorXd theta,
                              Eigen::MatrixXd G, const KStepOptions& opts) {
    if (opts.steps < 1) fail(ErrorCategory::Usage, "k-step iteration needs steps >= 1");
    for (int s = 0; s < opts.steps; ++s) {
        if (opts.refresh_G && s > 0) {
            const Eigen::VectorXd eps = ds.y - ds.w * theta;
            const double h = opts.plug.bandwidth ? *opts.plug.bandwidth
                                                 : rot_bandwidth(eps, 1.0 / 5.0);
            G = estimate_G(ds, theta, h, opts.plug.kernel);
        }
        theta = newton_step(ds, tau, theta, G);
    }
    return theta;
}

Eigen::VectorXd symmetric_step(const Dataset& ds, double tau, const Eigen::VectorXd& theta,
                               const Eigen::MatrixXd& G) {
    auto lu = checked_lu(G);
    const Eigen::VectorXd diff = g_hat(ds, tau, theta) - g_star_hat(ds, tau, theta);
    return theta - 0.5 * lu.solve(diff);
}

Eigen::VectorXd bias_correct(const Eigen::VectorXd& theta_sym, const NuisanceComponents& comps,
                             Eigen::Index n) {
    auto lu = checked_lu(comps.G);
    const Eigen::Index k = comps.G.rows();
    const Eigen::VectorXd vec_omega =
        Eigen::Map<const Eigen::VectorXd>(comps.Omega.data(), k * k);
    const Eigen::VectorXd correction =
        lu.solve(comps.kappa1 + 0.5 * comps.Q.transpose() * vec_omega) /
        static_cast<double>(n);
    return theta_sym + correction;
}

Eigen::VectorXd theta_one(const Dataset& ds, double tau, const Eigen::VectorXd& theta0,
                          const Eigen::MatrixXd& G) {
    return newton_step(ds, tau, theta0, G);
}

EstimateBreakdown estimate_bias_corrected(const Dataset& ds, double tau, Norm p,
                                          const NuisanceComponents& comps,
                                          const SolverOptions& opts) {
    EstimateBreakdown out;
    out.corner = solve_exact(ds, tau, p, MomentVariant::Standard, opts);
    out.theta_sym = symmetric_step(ds, tau, out.corner.theta, comps.G);

    auto lu = checked_lu(comps.G);
    const Eigen::Index k = comps.G.rows();
    const double n = static_cast<double>(ds.n());
    const Eigen::VectorXd vec_omega =
        Eigen::Map<const Eigen::VectorXd>(comps.Omega.data(), k * k);
    out.kappa1_term = lu.solve(comps.kappa1) / n;
    out.curvature_term = lu.solve(0.5 * comps.Q.transpose() * vec_omega) / n;
    out.theta_bc = out.theta_sym + out.kappa1_term + out.curvature_term;
    return out;
}

}  // namespace ivqr
