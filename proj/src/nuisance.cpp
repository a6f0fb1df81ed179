#include "ivqr/nuisance.hpp"

#include <cmath>
#include <numbers>

#include "ivqr/moments.hpp"

namespace ivqr {

KernelType parse_kernel(const std::string& token) {
    if (token == "gaussian") return KernelType::Gaussian;
    if (token == "epanechnikov") return KernelType::Epanechnikov;
    if (token == "uniform") return KernelType::Uniform;
    fail(ErrorCategory::Usage,
         "unknown kernel '" + token + "' (expected gaussian|epanechnikov|uniform)");
}

std::string kernel_name(KernelType k) {
    switch (k) {
        case KernelType::Gaussian: return "gaussian";
        case KernelType::Epanechnikov: return "epanechnikov";
        case KernelType::Uniform: return "uniform";
    }
    return "?";
}

double kernel_value(KernelType k, double u) {
    switch (k) {
        case KernelType::Gaussian:
            return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
        case KernelType::Epanechnikov:
            return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
        case KernelType::Uniform:
            return std::abs(u) <= 0.5 ? 1.0 : 0.0;
    }
    return 0.0;
}

double kernel_deriv(KernelType k, double u) {
    switch (k) {
        case KernelType::Gaussian:
            return -u * std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
        case KernelType::Epanechnikov:
            return std::abs(u) <= 1.0 ? -1.5 * u : 0.0;
        case KernelType::Uniform:
            fail(ErrorCategory::Unsupported,
                 "uniform kernel is not differentiable; derivative estimation needs "
                 "gaussian or epanechnikov");
    }
    return 0.0;
}

double rot_bandwidth(const Eigen::VectorXd& residuals, double rate) {
    const Eigen::Index n = residuals.size();
    if (n < 2) fail(ErrorCategory::Numeric, "bandwidth rule needs at least 2 residuals");
    const double mean = residuals.mean();
    const double var = (residuals.array() - mean).square().sum() / static_cast<double>(n - 1);
    const double sd = std::sqrt(var);
    return 1.06 * sd * std::pow(static_cast<double>(n), -rate);
}

namespace {

Eigen::VectorXd residuals_at(const Dataset& ds, const Eigen::VectorXd& theta_hat) {
    if (theta_hat.size() != ds.k())
        fail(ErrorCategory::Numeric, "theta dimension does not match dataset");
    return ds.y - ds.w * theta_hat;
}

void check_bandwidth(double h) {
    if (!(h > 0.0)) fail(ErrorCategory::Numeric, "bandwidth must be positive");
}

}  // namespace

Eigen::MatrixXd estimate_G(const Dataset& ds, const Eigen::VectorXd& theta_hat, double h,
                           KernelType kernel) {
    check_bandwidth(h);
    const Eigen::VectorXd eps = residuals_at(ds, theta_hat);
    const Eigen::Index n = ds.n();
    const Eigen::Index k = ds.k();
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double kv = kernel_value(kernel, eps(i) / h);
        if (kv != 0.0) G += kv * ds.z.row(i).transpose() * ds.w.row(i);
    }
    return G / (static_cast<double>(n) * h);
}

Eigen::VectorXd estimate_kappa1(const Dataset& ds, double tau,
                                const Eigen::VectorXd& theta_hat,
                                const Eigen::MatrixXd& G_hat, double h, KernelType kernel) {
    check_bandwidth(h);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(G_hat);
    if (!lu.isInvertible()) fail(ErrorCategory::Numeric, "singular G in kappa1 estimation");
    const Eigen::MatrixXd Ginv = lu.inverse();
    const Eigen::VectorXd eps = residuals_at(ds, theta_hat);
    const Eigen::Index n = ds.n();
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(ds.k());
    for (Eigen::Index i = 0; i < n; ++i) {
        const double kv = kernel_value(kernel, eps(i) / h);
        if (kv == 0.0) continue;
        const double quad = ds.w.row(i) * Ginv * ds.z.row(i).transpose();
        acc += kv * quad * ds.z.row(i).transpose();
    }
    return (tau - 0.5) / (static_cast<double>(n) * h) * acc;
}

Eigen::MatrixXd estimate_Omega(const Dataset& ds, double tau, const Eigen::VectorXd& theta_hat) {
    const Eigen::VectorXd eps = residuals_at(ds, theta_hat);
    const double zeta = zero_tolerance(ds);
    const Eigen::Index n = ds.n();
    const Eigen::Index k = ds.k();
    Eigen::MatrixXd m(n, k);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double ind = eps(i) <= zeta ? 1.0 : 0.0;
        m.row(i) = (ind - tau) * ds.z.row(i);
    }
    // mean subtracted: the population mean is zero at theta0 but not at theta_hat
    const Eigen::RowVectorXd mbar = m.colwise().mean();
    m.rowwise() -= mbar;
    return (m.transpose() * m) / static_cast<double>(n);
}

std::vector<Eigen::MatrixXd> estimate_dG(const Dataset& ds, const Eigen::VectorXd& theta_hat,
                                         double h, KernelType kernel) {
    check_bandwidth(h);
    const Eigen::VectorXd eps = residuals_at(ds, theta_hat);
    const Eigen::Index n = ds.n();
    const Eigen::Index k = ds.k();
    std::vector<Eigen::MatrixXd> dG(static_cast<std::size_t>(k),
                                    Eigen::MatrixXd::Zero(k, k));
    for (Eigen::Index i = 0; i < n; ++i) {
        const double kd = kernel_deriv(kernel, eps(i) / h);
        if (kd == 0.0) continue;
        const Eigen::MatrixXd ww = ds.w.row(i).transpose() * ds.w.row(i);
        for (Eigen::Index j = 0; j < k; ++j) dG[static_cast<std::size_t>(j)] += kd * ds.z(i, j) * ww;
    }
    const double scale = -1.0 / (static_cast<double>(n) * h * h);
    for (auto& g : dG) g *= scale;
    return dG;
}

NuisanceComponents assemble(const Eigen::MatrixXd& G, const Eigen::MatrixXd& Omega,
                            const Eigen::VectorXd& kappa1,
                            const std::vector<Eigen::MatrixXd>& dG) {
    const Eigen::Index k = G.rows();
    if (G.cols() != k || Omega.rows() != k || Omega.cols() != k || kappa1.size() != k ||
        static_cast<Eigen::Index>(dG.size()) != k)
        fail(ErrorCategory::Numeric, "component dimensions disagree");

    NuisanceComponents out;
    out.G = G;
    out.Omega = Omega;
    out.kappa1 = kappa1;
    out.dG = dG;

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(G);
    const auto& sv = svd.singularValues();
    out.G_singular = !(sv(sv.size() - 1) > sv(0) * 1e-12) || sv(0) == 0.0;
    out.G_condition = out.G_singular ? std::numeric_limits<double>::infinity()
                                     : sv(0) / sv(sv.size() - 1);
    if (out.G_singular) fail(ErrorCategory::Numeric, "singular G: cannot form Q");

    const Eigen::MatrixXd Ginv = G.inverse();
    out.Q.resize(k * k, k);
    for (Eigen::Index j = 0; j < k; ++j) {
        const Eigen::MatrixXd Qj = Ginv.transpose() * dG[static_cast<std::size_t>(j)] * Ginv;
        out.Q.col(j) = Eigen::Map<const Eigen::VectorXd>(Qj.data(), k * k);
    }
    return out;
}

NuisanceComponents analytic_nuisance(const AnalyticTruth& truth) {
    NuisanceComponents out = assemble(truth.G, truth.Omega, truth.kappa1, truth.dG);
    out.source = NuisanceSource::Analytic;
    return out;
}

NuisanceComponents plugin_nuisance(const Dataset& ds, double tau,
                                   const Eigen::VectorXd& theta_hat,
                                   const PlugInOptions& opts) {
    const Eigen::VectorXd eps = residuals_at(ds, theta_hat);
    const double h = opts.bandwidth ? *opts.bandwidth : rot_bandwidth(eps, 1.0 / 5.0);
    const double hd = opts.bandwidth_deriv ? *opts.bandwidth_deriv : rot_bandwidth(eps, 1.0 / 7.0);

    const Eigen::MatrixXd G = estimate_G(ds, theta_hat, h, opts.kernel);
    const Eigen::MatrixXd Omega = estimate_Omega(ds, tau, theta_hat);
    const Eigen::VectorXd kappa1 = estimate_kappa1(ds, tau, theta_hat, G, h, opts.kernel);
    const std::vector<Eigen::MatrixXd> dG = estimate_dG(ds, theta_hat, hd, opts.kernel);

    NuisanceComponents out = assemble(G, Omega, kappa1, dG);
    out.source = NuisanceSource::PlugIn;
    out.bandwidth = h;
    out.bandwidth_deriv = hd;
    return out;
}

}  // namespace ivqr
