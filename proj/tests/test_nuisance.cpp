#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ivqr/corrections.hpp"
#include "ivqr/nuisance.hpp"
#include "support.hpp"

using namespace ivqr;

namespace {

Eigen::MatrixXd bivariate_M() {
    Eigen::MatrixXd M(2, 2);
    M << 1.0, 0.5, 0.5, 1.0 / 3.0;
    return M;
}

// consistent, cheap plug-in point for synthetic designs
Eigen::VectorXd pilot(const Dataset& ds, DgpId id, double tau) {
    const auto t = analytic_components(id, tau);
    return theta_one(ds, tau, t.theta0, t.G);
}

}  // namespace

TEST_CASE("kernels integrate to one and derivatives match finite differences") {
    for (const KernelType k : {KernelType::Gaussian, KernelType::Epanechnikov, KernelType::Uniform}) {
        double acc = 0.0;
        const int m = 40000;
        for (int i = 0; i < m; ++i) {
            const double u = -5.0 + 10.0 * (i + 0.5) / m;
            acc += kernel_value(k, u) * 10.0 / m;
        }
        CHECK(acc == doctest::Approx(1.0).epsilon(1e-4));
    }
    for (const KernelType k : {KernelType::Gaussian, KernelType::Epanechnikov}) {
        for (const double u : {-0.8, -0.2, 0.1, 0.6}) {
            const double fd = (kernel_value(k, u + 1e-6) - kernel_value(k, u - 1e-6)) / 2e-6;
            CHECK(kernel_deriv(k, u) == doctest::Approx(fd).epsilon(1e-5));
        }
    }
    CHECK_THROWS_AS(kernel_deriv(KernelType::Uniform, 0.1), Error);
}

TEST_CASE("rule-of-thumb bandwidth") {
    Eigen::VectorXd r(4);
    r << -1.0, 0.0, 0.5, 1.5;
    const double mean = 0.25;
    const double sd = std::sqrt(((r.array() - mean).square().sum()) / 3.0);
    CHECK(rot_bandwidth(r, 0.2) == doctest::Approx(1.06 * sd * std::pow(4.0, -0.2)));
}

TEST_CASE("G estimate is consistent for the flat design") {
    const double tau = 0.5;
    const auto truth = analytic_components(DgpId::Dgp1Uniform, tau);
    const Dataset ds = sample({DgpId::Dgp1Uniform, 2000, 202});
    const Eigen::VectorXd th = pilot(ds, DgpId::Dgp1Uniform, tau);
    const Eigen::VectorXd eps = ds.y - ds.w * th;
    const double h = rot_bandwidth(eps, 0.2);
    const Eigen::MatrixXd Ghat = estimate_G(ds, th, h, KernelType::Gaussian);
    CHECK((Ghat - truth.G).norm() / truth.G.norm() < 0.1);
}

TEST_CASE("uniform kernel with empty windows gives a zero, singular G") {
    Eigen::VectorXd y(4);
    y << 10.0, 11.0, 12.0, 13.0;
    Rng rng(3);
    Eigen::MatrixXd w(4, 2);
    for (int i = 0; i < 4; ++i) {
        w(i, 0) = 1.0;
        w(i, 1) = rng.uniform();
    }
    const Dataset ds = make_qr_dataset(y, w);
    const Eigen::VectorXd th = Eigen::VectorXd::Zero(2);  // all residuals ~ 10
    const double h = 0.5;                                 // uniform support is |u| <= 1/2
    const Eigen::MatrixXd Ghat = estimate_G(ds, th, h, KernelType::Uniform);
    CHECK(Ghat.norm() == 0.0);
    CHECK_THROWS_AS(assemble(Ghat, Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2),
                             {Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 2)}),
                    Error);
}

TEST_CASE("G estimate is invariant to rescaling (cY, c theta, c h)") {
    Rng rng(83);
    const Dataset ds = test::random_dataset(rng, 60, 2);
    const Eigen::VectorXd th = test::random_theta(rng, 2, 0.5);
    const double h = 0.2;
    const Eigen::MatrixXd base = estimate_G(ds, th, h, KernelType::Gaussian);
    for (const double c : {2.0, 0.5, 3.7}) {
        const Dataset scaled = make_dataset(c * ds.y, ds.w, ds.z);
        const Eigen::MatrixXd Gs = estimate_G(scaled, c * th, c * h, KernelType::Gaussian);
        CHECK((Gs / c - base / c).norm() < 1e-12);  // same kernel weights, same sum
        CHECK((Gs - base).norm() < 1e-12 * std::max(1.0, base.norm()));
    }
}

TEST_CASE("kappa1 vanishes exactly at the median") {
    Rng rng(89);
    const Dataset ds = test::random_dataset(rng, 40, 2);
    const Eigen::VectorXd th = test::random_theta(rng, 2, 0.5);
    const Eigen::VectorXd k1 =
        estimate_kappa1(ds, 0.5, th, Eigen::MatrixXd::Identity(2, 2), 0.3, KernelType::Gaussian);
    CHECK(k1.norm() == 0.0);
}

TEST_CASE("kappa1 in the intercept-only design reduces to tau - 1/2") {
    Rng rng(97);
    Eigen::VectorXd y(30);
    for (int i = 0; i < 30; ++i) y(i) = rng.uniform();
    const Dataset ds = make_qr_dataset(y, Eigen::MatrixXd::Ones(30, 1));
    const Eigen::VectorXd th = Eigen::VectorXd::Constant(1, 0.4);
    const double h = 0.25;
    const Eigen::MatrixXd Ghat = estimate_G(ds, th, h, KernelType::Gaussian);
    REQUIRE(Ghat(0, 0) > 0.0);
    const Eigen::VectorXd k1 = estimate_kappa1(ds, 0.3, th, Ghat, h, KernelType::Gaussian);
    CHECK(k1(0) == doctest::Approx(0.3 - 0.5).epsilon(1e-12));
}

TEST_CASE("kappa1 estimate approaches the analytic value") {
    const double tau = 0.25;
    const auto truth = analytic_components(DgpId::Dgp1Uniform, tau);
    const Dataset ds = sample({DgpId::Dgp1Uniform, 2000, 404});
    const Eigen::VectorXd th = pilot(ds, DgpId::Dgp1Uniform, tau);
    const Eigen::VectorXd eps = ds.y - ds.w * th;
    const double h = rot_bandwidth(eps, 0.2);
    const Eigen::MatrixXd Ghat = estimate_G(ds, th, h, KernelType::Gaussian);
    const Eigen::VectorXd k1 = estimate_kappa1(ds, tau, th, Ghat, h, KernelType::Gaussian);
    CHECK((k1 - truth.kappa1).norm() / truth.kappa1.norm() < 0.15);
}

TEST_CASE("kappa1 is exactly linear in tau for fixed residuals") {
    Rng rng(101);
    const Dataset ds = test::random_dataset(rng, 50, 2);
    const Eigen::VectorXd th = test::random_theta(rng, 2, 0.5);
    const Eigen::VectorXd eps = ds.y - ds.w * th;
    const double h = rot_bandwidth(eps, 0.2);
    const Eigen::MatrixXd Ghat = estimate_G(ds, th, h, KernelType::Gaussian);
    const Eigen::VectorXd a = estimate_kappa1(ds, 0.3, th, Ghat, h, KernelType::Gaussian);
    const Eigen::VectorXd b = estimate_kappa1(ds, 0.8, th, Ghat, h, KernelType::Gaussian);
    CHECK((a / (0.3 - 0.5) - b / (0.8 - 0.5)).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("Omega at the sample quantile is close to tau(1-tau)") {
    Rng rng(103);
    const int n = 500;
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y(i) = rng.uniform();
    const Dataset ds = make_qr_dataset(y, Eigen::MatrixXd::Ones(n, 1));
    const double tau = 0.3;
    std::vector<double> sorted(y.data(), y.data() + n);
    std::sort(sorted.begin(), sorted.end());
    const Eigen::VectorXd th = Eigen::VectorXd::Constant(1, sorted[static_cast<std::size_t>(tau * n) - 1]);
    const Eigen::MatrixXd Om = estimate_Omega(ds, tau, th);
    CHECK(std::abs(Om(0, 0) - 0.21) < 5.0 / n);
}

TEST_CASE("a zero instrument column zeroes the matching Omega rows") {
    Rng rng(107);
    Dataset ds = test::random_dataset(rng, 20, 2);
    Eigen::MatrixXd z = ds.z;
    z.col(1).setZero();
    const Dataset dz = make_dataset(ds.y, ds.w, z);
    const Eigen::MatrixXd Om = estimate_Omega(dz, 0.4, Eigen::VectorXd::Zero(2));
    CHECK(Om.row(1).norm() == 0.0);
    CHECK(Om.col(1).norm() == 0.0);
}

TEST_CASE("Omega estimate is consistent for the flat design") {
    const double tau = 0.5;
    const auto truth = analytic_components(DgpId::Dgp1Uniform, tau);
    const Dataset ds = sample({DgpId::Dgp1Uniform, 2000, 505});
    const Eigen::VectorXd th = pilot(ds, DgpId::Dgp1Uniform, tau);
    const Eigen::MatrixXd Om = estimate_Omega(ds, tau, th);
    CHECK((Om - truth.Omega).norm() / truth.Omega.norm() < 0.1);
}

TEST_CASE("dG estimate vanishes for the flat design") {
    const Dataset ds = sample({DgpId::Dgp1Uniform, 2000, 606});
    const Eigen::VectorXd th = pilot(ds, DgpId::Dgp1Uniform, 0.5);
    const Eigen::VectorXd eps = ds.y - ds.w * th;
    const double h = rot_bandwidth(eps, 1.0 / 7.0);
    const auto dG = estimate_dG(ds, th, h, KernelType::Gaussian);
    CHECK(dG[0].norm() < 0.1);
    CHECK(dG[1].norm() < 0.1);
}

TEST_CASE("dG estimate recovers the triangular design's curvature") {
    // f' = 2 inside the support, so dG_j ~ 2 E[W W' Z_j]
    const double tau = 0.25;
    const Dataset ds = sample({DgpId::Dgp2Triangular, 4000, 707});
    const Eigen::VectorXd th = pilot(ds, DgpId::Dgp2Triangular, tau);
    const Eigen::VectorXd eps = ds.y - ds.w * th;
    const double h = rot_bandwidth(eps, 1.0 / 7.0);
    const auto dG = estimate_dG(ds, th, h, KernelType::Gaussian);
    Eigen::MatrixXd C(2, 2);
    C << 0.5, 1.0 / 3.0, 1.0 / 3.0, 0.25;
    const Eigen::MatrixXd expect1 = 2.0 * bivariate_M();
    const Eigen::MatrixXd expect2 = 2.0 * C;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            CHECK(std::abs(dG[0](a, b) - expect1(a, b)) < 0.25 * std::abs(expect1(a, b)));
            CHECK(std::abs(dG[1](a, b) - expect2(a, b)) < 0.25 * std::abs(expect2(a, b)));
        }
}

TEST_CASE("paired +/- residuals cancel the derivative kernel exactly") {
    Eigen::VectorXd y(4);
    const double c = 0.3;
    y << 1.0 + c, 1.0 - c, 1.0 + c, 1.0 - c;
    const Dataset ds = make_qr_dataset(y, Eigen::MatrixXd::Ones(4, 1));
    const Eigen::VectorXd th = Eigen::VectorXd::Constant(1, 1.0);
    const auto dG = estimate_dG(ds, th, 0.4, KernelType::Gaussian);
    CHECK(dG[0](0, 0) == 0.0);
}

TEST_CASE("assemble forms Q and validates inputs") {
    // dG = 0 -> Q = 0
    const auto z2 = Eigen::MatrixXd::Zero(2, 2);
    const auto c0 = assemble(bivariate_M(), bivariate_M(), Eigen::VectorXd::Zero(2), {z2, z2});
    CHECK(c0.Q.norm() == 0.0);

    // scalar case: Q = d / g^2
    const auto c1 = assemble(Eigen::MatrixXd::Constant(1, 1, 2.0),
                             Eigen::MatrixXd::Constant(1, 1, 1.0),
                             Eigen::VectorXd::Zero(1), {Eigen::MatrixXd::Constant(1, 1, 3.0)});
    CHECK(c1.Q(0, 0) == doctest::Approx(3.0 / 4.0));

    // analytic inputs reproduce the analytic Q through the other code path
    const auto truth = analytic_components(DgpId::Dgp2Triangular, 0.7);
    const auto c2 = assemble(truth.G, truth.Omega, truth.kappa1, truth.dG);
    CHECK((c2.Q - truth.Q).norm() < 1e-10);
}

TEST_CASE("Q satisfies the vec identity for random components") {
    Rng rng(109);
    for (const int k : {2, 3}) {
        for (int rep = 0; rep < 20; ++rep) {
            Eigen::MatrixXd G(k, k);
            std::vector<Eigen::MatrixXd> dG;
            for (int a = 0; a < k; ++a)
                for (int b = 0; b < k; ++b) G(a, b) = 2.0 * rng.uniform() - 1.0 + (a == b ? 2.0 : 0.0);
            for (int j = 0; j < k; ++j) {
                Eigen::MatrixXd d(k, k);
                for (int a = 0; a < k; ++a)
                    for (int b = 0; b < k; ++b) d(a, b) = 2.0 * rng.uniform() - 1.0;
                dG.push_back(d);
            }
            const auto comps = assemble(G, Eigen::MatrixXd::Identity(k, k),
                                        Eigen::VectorXd::Zero(k), dG);
            const Eigen::MatrixXd Ginv = G.inverse();
            for (int j = 0; j < k; ++j) {
                const Eigen::MatrixXd Qj = Ginv.transpose() * dG[static_cast<std::size_t>(j)] * Ginv;
                for (int b = 0; b < k; ++b)
                    for (int a = 0; a < k; ++a)
                        CHECK(comps.Q(a + k * b, j) == doctest::Approx(Qj(a, b)).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("plugin_nuisance packages bandwidths and provenance") {
    const Dataset ds = sample({DgpId::Dgp1Uniform, 300, 808});
    const Eigen::VectorXd th = pilot(ds, DgpId::Dgp1Uniform, 0.5);
    const auto comps = plugin_nuisance(ds, 0.5, th);
    CHECK(comps.source == NuisanceSource::PlugIn);
    CHECK(comps.bandwidth > 0.0);
    CHECK(comps.bandwidth_deriv > comps.bandwidth);  // n^{-1/7} shrinks slower
    CHECK(comps.G_condition > 1.0);
    CHECK_THROWS_AS(estimate_G(ds, th, -1.0, KernelType::Gaussian), Error);
}
