#include "ivqr/dgp.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "ivqr/rng.hpp"

namespace ivqr {

namespace {

constexpr double kPi = std::numbers::pi;

bool univariate(DgpId id) { return id == DgpId::UnivariateUniform; }

void check_tau(double tau) {
    if (!(tau > 0.0 && tau < 1.0))
        fail(ErrorCategory::Numeric, "quantile level must lie in (0,1), got " + std::to_string(tau));
}

// 32-point Gauss-Legendre rule on [0,1]; nodes computed once by Newton
// iteration on the Legendre polynomial.
const std::array<std::pair<double, double>, 32>& gl32() {
    static const auto rule = [] {
        constexpr int m = 32;
        std::array<std::pair<double, double>, 32> r{};
        for (int i = 0; i < m; ++i) {
            // initial guess on [-1,1]
            double x = std::cos(kPi * (i + 0.75) / (m + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = x;
                for (int j = 2; j <= m; ++j) {
                    const double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
                    p0 = p1;
                    p1 = p2;
                }
                dp = m * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-16) break;
            }
            const double w = 2.0 / ((1.0 - x * x) * dp * dp);
            r[static_cast<std::size_t>(i)] = {0.5 * (x + 1.0), 0.5 * w};  // mapped to [0,1]
        }
        return r;
    }();
    return rule;
}

// integrate f over [a,b]
template <typename F>
double gl_integrate(F&& f, double a, double b) {
    if (!(b > a)) return 0.0;
    double acc = 0.0;
    for (const auto& [x, w] : gl32()) acc += w * f(a + (b - a) * x);
    return (b - a) * acc;
}

}  // namespace

DgpId parse_dgp(const std::string& token) {
    if (token == "dgp1") return DgpId::Dgp1Uniform;
    if (token == "dgp2") return DgpId::Dgp2Triangular;
    if (token == "dgp3") return DgpId::Dgp3ScaledCauchy;
    if (token == "uniform1d") return DgpId::UnivariateUniform;
    fail(ErrorCategory::Usage, "unknown dgp '" + token + "' (expected dgp1|dgp2|dgp3|uniform1d)");
}

std::string dgp_name(DgpId id) {
    switch (id) {
        case DgpId::Dgp1Uniform: return "dgp1";
        case DgpId::Dgp2Triangular: return "dgp2";
        case DgpId::Dgp3ScaledCauchy: return "dgp3";
        case DgpId::UnivariateUniform: return "uniform1d";
    }
    return "?";
}

double dgp_inv_cdf(DgpId id, double u) {
    switch (id) {
        case DgpId::Dgp1Uniform:
        case DgpId::UnivariateUniform:
            return u;
        case DgpId::Dgp2Triangular:
            return std::sqrt(u);
        case DgpId::Dgp3ScaledCauchy:
            return 0.25 * std::tan(kPi * (u - 0.5));
    }
    return 0.0;
}

double dgp_cdf(DgpId id, double y) {
    switch (id) {
        case DgpId::Dgp1Uniform:
        case DgpId::UnivariateUniform:
            return y <= 0.0 ? 0.0 : (y >= 1.0 ? 1.0 : y);
        case DgpId::Dgp2Triangular:
            return y <= 0.0 ? 0.0 : (y >= 1.0 ? 1.0 : y * y);
        case DgpId::Dgp3ScaledCauchy:
            return 0.5 + std::atan(4.0 * y) / kPi;
    }
    return 0.0;
}

double dgp_pdf(DgpId id, double y) {
    switch (id) {
        case DgpId::Dgp1Uniform:
        case DgpId::UnivariateUniform:
            return (y >= 0.0 && y <= 1.0) ? 1.0 : 0.0;
        case DgpId::Dgp2Triangular:
            return (y >= 0.0 && y <= 1.0) ? 2.0 * y : 0.0;
        case DgpId::Dgp3ScaledCauchy: {
            const double t = 4.0 * y;
            return 4.0 / (kPi * (1.0 + t * t));
        }
    }
    return 0.0;
}

double dgp_pdf_deriv(DgpId id, double y) {
    switch (id) {
        case DgpId::Dgp1Uniform:
        case DgpId::UnivariateUniform:
            return 0.0;
        case DgpId::Dgp2Triangular:
            return (y >= 0.0 && y <= 1.0) ? 2.0 : 0.0;
        case DgpId::Dgp3ScaledCauchy: {
            const double t = 4.0 * y;
            const double d = 1.0 + t * t;
            return -128.0 * y / (kPi * d * d);
        }
    }
    return 0.0;
}

Dataset sample(const DgpSpec& spec) {
    if (spec.n < 3) fail(ErrorCategory::Numeric, "sample size must be >= 3");
    Rng rng(spec.seed);
    const Eigen::Index n = spec.n;

    if (univariate(spec.id)) {
        Eigen::VectorXd y(n);
        for (Eigen::Index i = 0; i < n; ++i) y(i) = rng.uniform();
        Eigen::MatrixXd w = Eigen::MatrixXd::Ones(n, 1);
        return make_qr_dataset(std::move(y), std::move(w));
    }

    Eigen::VectorXd y(n);
    Eigen::MatrixXd w(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = rng.uniform();
        const double u = rng.uniform();
        w(i, 0) = 1.0;
        w(i, 1) = x;
        y(i) = x + dgp_inv_cdf(spec.id, u);
    }
    return make_qr_dataset(std::move(y), std::move(w));
}

Eigen::VectorXd theta_true(DgpId id, double tau) {
    check_tau(tau);
    if (univariate(id)) return Eigen::VectorXd::Constant(1, tau);
    Eigen::VectorXd t(2);
    t << dgp_inv_cdf(id, tau), 1.0;
    return t;
}

AnalyticTruth analytic_components(DgpId id, double tau) {
    check_tau(tau);
    AnalyticTruth out;
    out.theta0 = theta_true(id, tau);

    const double q = dgp_inv_cdf(id, tau);
    const double fq = dgp_pdf(id, q);
    const double fpq = dgp_pdf_deriv(id, q);
    if (!(fq > 1e-300))
        fail(ErrorCategory::Numeric,
             "singular density: f(F^-1(tau)) = 0 at tau = " + std::to_string(tau));

    if (univariate(id)) {
        out.G = Eigen::MatrixXd::Constant(1, 1, fq);
        out.Omega = Eigen::MatrixXd::Constant(1, 1, tau * (1.0 - tau));
        out.kappa1 = Eigen::VectorXd::Constant(1, tau - 0.5);
        out.dG = {Eigen::MatrixXd::Constant(1, 1, fpq)};
        out.Q = Eigen::MatrixXd::Constant(1, 1, fpq / (fq * fq));
        return out;
    }

    // W = Z = (1, X)', X ~ U(0,1): moments E[X^p] = 1/(p+1) give
    //   M  = E[Z W']     = [[1, 1/2], [1/2, 1/3]]
    //   C  = E[W W' X]   = [[1/2, 1/3], [1/3, 1/4]]
    Eigen::MatrixXd M(2, 2), C(2, 2);
    M << 1.0, 0.5, 0.5, 1.0 / 3.0;
    C << 0.5, 1.0 / 3.0, 1.0 / 3.0, 0.25;

    out.G = fq * M;
    out.Omega = tau * (1.0 - tau) * M;  // indicator at theta0 is independent of X

    // kappa1 = (tau - 1/2) E[f Z (W' G^{-1} Z)]; the f in front cancels
    // against the one inside G^{-1}, leaving (tau - 1/2) E[Z (W' M^{-1} Z)].
    const Eigen::MatrixXd Minv = M.inverse();
    Eigen::VectorXd kap(2);
    for (int j = 0; j < 2; ++j) {
        double acc = 0.0;
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
                // E[Z_j W_a Z_b] = E[X^(j+a+b)] with 0-based exponents
                const int p = j + a + b;
                acc += Minv(a, b) / static_cast<double>(p + 1);
            }
        kap(j) = acc;
    }
    out.kappa1 = (tau - 0.5) * kap;

    out.dG = {fpq * M, fpq * C};  // dG_j = f'(q) E[W W' Z_j]

    const Eigen::MatrixXd Ginv = out.G.inverse();
    out.Q.resize(4, 2);
    for (int j = 0; j < 2; ++j) {
        const Eigen::MatrixXd Qj = Ginv.transpose() * out.dG[static_cast<std::size_t>(j)] * Ginv;
        out.Q.col(j) = Eigen::Map<const Eigen::VectorXd>(Qj.data(), 4);
    }
    return out;
}

Eigen::VectorXd population_moment(DgpId id, double tau, const Eigen::VectorXd& theta) {
    if (univariate(id)) {
        if (theta.size() != 1) fail(ErrorCategory::Numeric, "theta dimension must be 1");
        return Eigen::VectorXd::Constant(1, dgp_cdf(id, theta(0)) - tau);
    }
    if (theta.size() != 2) fail(ErrorCategory::Numeric, "theta dimension must be 2");
    // 1{Y <= W'theta} = 1{U <= F(a + b X)} with a = theta_1, b = theta_2 - 1
    const double a = theta(0);
    const double b = theta(1) - 1.0;

    // split [0,1] where a + b x crosses the support edges of F
    std::vector<double> cuts = {0.0, 1.0};
    if (id != DgpId::Dgp3ScaledCauchy && b != 0.0) {
        for (const double edge : {0.0, 1.0}) {
            const double x = (edge - a) / b;
            if (x > 0.0 && x < 1.0) cuts.push_back(x);
        }
    }
    std::sort(cuts.begin(), cuts.end());

    Eigen::VectorXd g = Eigen::VectorXd::Zero(2);
    for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
        g(0) += gl_integrate([&](double x) { return dgp_cdf(id, a + b * x) - tau; },
                             cuts[s], cuts[s + 1]);
        g(1) += gl_integrate([&](double x) { return (dgp_cdf(id, a + b * x) - tau) * x; },
                             cuts[s], cuts[s + 1]);
    }
    return g;
}

Eigen::VectorXd population_cdf_moment(DgpId id, const Eigen::VectorXd& theta) {
    // E 1{Y <= W'theta} Z = g(theta) + tau E[Z] for any tau; use tau = 0
    return population_moment(id, 0.0, theta);
}

std::function<Eigen::VectorXd(const Eigen::VectorXd&)> cdf_moment_oracle(DgpId id) {
    return [id](const Eigen::VectorXd& theta) { return population_cdf_moment(id, theta); };
}

double uniform_orderstat_bias(int n, double tau, OrderStatCorner corner, BiasKind kind) {
    check_tau(tau);
    if (n < 2) fail(ErrorCategory::Numeric, "n must be >= 2");
    const double tn = tau * n;
    // snap floor(tau n) against decimal-text roundoff (0.3 * 10 = 2.999...96)
    const long k = static_cast<long>(std::floor(tn + 1e-9));
    double frac = tn - static_cast<double>(k);
    if (frac < 0.0) frac = 0.0;
    if (k < 0 || k > n - 1)
        fail(ErrorCategory::Numeric, "order statistic index out of range: floor(tau n) = " +
                                         std::to_string(k) + " with n = " + std::to_string(n));
    const double kd = static_cast<double>(k);
    const double nd = static_cast<double>(n);
    if (kind == BiasKind::Exact)
        return corner == OrderStatCorner::Lower ? kd / (nd + 1.0) - tau
                                                : (kd + 1.0) / (nd + 1.0) - tau;
    return corner == OrderStatCorner::Lower ? -frac / nd - tau / nd
                                            : -frac / nd + (1.0 - tau) / nd;
}

}  // namespace ivqr
