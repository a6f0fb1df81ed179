#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "support.hpp"

using namespace ivqr;

TEST_CASE("sampling is a pure function of the spec") {
    const Dataset a = sample({DgpId::Dgp1Uniform, 50, 123});
    const Dataset b = sample({DgpId::Dgp1Uniform, 50, 123});
    CHECK(a.y == b.y);
    CHECK(a.w == b.w);
    const Dataset c = sample({DgpId::Dgp1Uniform, 50, 124});
    CHECK(a.y != c.y);
}

TEST_CASE("dgp1 support: y - x in [0,1]") {
    const Dataset ds = sample({DgpId::Dgp1Uniform, 200, 7});
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
        const double e = ds.y(i) - ds.w(i, 1);
        CHECK(e >= 0.0);
        CHECK(e <= 1.0);
    }
}

TEST_CASE("dgp3 errors have median zero") {
    const Dataset ds = sample({DgpId::Dgp3ScaledCauchy, 100000, 99});
    std::vector<double> e(static_cast<std::size_t>(ds.n()));
    for (Eigen::Index i = 0; i < ds.n(); ++i) e[static_cast<std::size_t>(i)] = ds.y(i) - ds.w(i, 1);
    std::nth_element(e.begin(), e.begin() + 50000, e.end());
    CHECK(std::abs(e[50000]) < 0.01);
}

TEST_CASE("theta_true closed forms") {
    CHECK(theta_true(DgpId::Dgp1Uniform, 0.5)(0) == doctest::Approx(0.5));
    CHECK(theta_true(DgpId::Dgp1Uniform, 0.5)(1) == 1.0);
    CHECK(theta_true(DgpId::Dgp2Triangular, 0.25)(0) == doctest::Approx(0.5));
    CHECK(theta_true(DgpId::Dgp3ScaledCauchy, 0.5)(0) == doctest::Approx(0.0));
    CHECK(theta_true(DgpId::UnivariateUniform, 0.3)(0) == doctest::Approx(0.3));
}

TEST_CASE("analytic components: dgp1 has flat density, zero curvature") {
    const auto t = analytic_components(DgpId::Dgp1Uniform, 0.3);
    Eigen::MatrixXd M(2, 2);
    M << 1.0, 0.5, 0.5, 1.0 / 3.0;
    CHECK((t.G - M).norm() == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(t.Q.norm() == 0.0);
    CHECK(t.dG[0].norm() == 0.0);
    CHECK(t.dG[1].norm() == 0.0);
    CHECK((t.Omega - 0.21 * M).norm() < 1e-14);

    // kappa1 vanishes at the median
    const auto tm = analytic_components(DgpId::Dgp1Uniform, 0.5);
    CHECK(tm.kappa1.norm() == 0.0);

    // away from the median it is (tau - 1/2) (2, 1)'
    CHECK(t.kappa1(0) == doctest::Approx((0.3 - 0.5) * 2.0));
    CHECK(t.kappa1(1) == doctest::Approx((0.3 - 0.5) * 1.0));
}

TEST_CASE("analytic components: dgp2 at tau=0.25 gives G = M") {
    // f(t) = 2t, F^{-1}(0.25) = 0.5, so f = 1 and G = E[Z W']
    const auto t = analytic_components(DgpId::Dgp2Triangular, 0.25);
    Eigen::MatrixXd M(2, 2);
    M << 1.0, 0.5, 0.5, 1.0 / 3.0;
    CHECK((t.G - M).norm() < 1e-14);
}

TEST_CASE("analytic G matches finite differences of the quadrature moments") {
    for (const DgpId id : {DgpId::Dgp1Uniform, DgpId::Dgp2Triangular, DgpId::Dgp3ScaledCauchy}) {
        for (const double tau : {0.25, 0.5, 0.8}) {
            const auto t = analytic_components(id, tau);
            const Eigen::MatrixXd Gfd = test::population_jacobian_fd(id, tau, t.theta0);
            CHECK((t.G - Gfd).norm() < 1e-6 * std::max(1.0, t.G.norm()));
            // the population moment vanishes at theta0
            CHECK(population_moment(id, tau, t.theta0).norm() < 1e-12);
        }
    }
}

TEST_CASE("analytic dG matches second differences of the quadrature moments") {
    // dgp3 is smooth everywhere; central second differences of g
    const double tau = 0.6;
    const auto t = analytic_components(DgpId::Dgp3ScaledCauchy, tau);
    const double h = 1e-4;
    for (int j = 0; j < 2; ++j) {
        Eigen::MatrixXd dfd(2, 2);
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
                Eigen::VectorXd tpp = t.theta0, tpm = t.theta0, tmp = t.theta0, tmm = t.theta0;
                tpp(a) += h; tpp(b) += h;
                tpm(a) += h; tpm(b) -= h;
                tmp(a) -= h; tmp(b) += h;
                tmm(a) -= h; tmm(b) -= h;
                dfd(a, b) = (population_moment(DgpId::Dgp3ScaledCauchy, tau, tpp)(j) -
                             population_moment(DgpId::Dgp3ScaledCauchy, tau, tpm)(j) -
                             population_moment(DgpId::Dgp3ScaledCauchy, tau, tmp)(j) +
                             population_moment(DgpId::Dgp3ScaledCauchy, tau, tmm)(j)) /
                            (4.0 * h * h);
            }
        CHECK((t.dG[static_cast<std::size_t>(j)] - dfd).norm() < 1e-4);
    }
}

TEST_CASE("dgp2 density vanishing at tau -> 0 is an error") {
    CHECK_THROWS_AS(analytic_components(DgpId::Dgp2Triangular, 1e-320), Error);
}

TEST_CASE("densities integrate to one") {
    // dgp2 on [0,1]
    double acc = 0.0;
    const int m = 20000;
    for (int i = 0; i < m; ++i) {
        const double t = (i + 0.5) / m;
        acc += dgp_pdf(DgpId::Dgp2Triangular, t) / m;
    }
    CHECK(acc == doctest::Approx(1.0).epsilon(1e-8));

    // dgp3 over R via x = tan(pi s / 2) / 4, which maps (-1,1) onto R
    double acc3 = 0.0;
    for (int i = 0; i < m; ++i) {
        const double s = -1.0 + (2.0 * i + 1.0) / m;
        const double x = 0.25 * std::tan(0.5 * std::numbers::pi * s);
        const double c = std::cos(0.5 * std::numbers::pi * s);
        const double dx = 0.125 * std::numbers::pi / (c * c);
        acc3 += dgp_pdf(DgpId::Dgp3ScaledCauchy, x) * dx * (2.0 / m);
    }
    CHECK(acc3 == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("uniform order-statistic bias formulas") {
    // n=10, tau=0.5: exact lower 5/11 - 1/2 = -1/22
    CHECK(uniform_orderstat_bias(10, 0.5, OrderStatCorner::Lower, BiasKind::Exact) ==
          doctest::Approx(-1.0 / 22.0));
    CHECK(uniform_orderstat_bias(10, 0.5, OrderStatCorner::Lower, BiasKind::Asymptotic) ==
          doctest::Approx(-0.05));
    // adjacent order statistics sit 1/(n+1) apart
    const double gap = uniform_orderstat_bias(10, 0.5, OrderStatCorner::Upper, BiasKind::Exact) -
                       uniform_orderstat_bias(10, 0.5, OrderStatCorner::Lower, BiasKind::Exact);
    CHECK(gap == doctest::Approx(1.0 / 11.0));

    CHECK_THROWS_AS(uniform_orderstat_bias(10, 0.999, OrderStatCorner::Lower, BiasKind::Exact),
                    Error);
}

TEST_CASE("exact and asymptotic order-statistic bias coincide to O(1/n^2)") {
    for (const int n : {4, 7, 10, 25, 100, 999, 10000}) {
        for (int i = 1; i < 100; ++i) {
            const double tau = i / 100.0;
            const long k = static_cast<long>(std::floor(tau * n + 1e-9));
            if (k < 0 || k > n - 1) continue;
            for (const auto corner : {OrderStatCorner::Lower, OrderStatCorner::Upper}) {
                const double ex = uniform_orderstat_bias(n, tau, corner, BiasKind::Exact);
                const double as = uniform_orderstat_bias(n, tau, corner, BiasKind::Asymptotic);
                CHECK(n * std::abs(ex - as) <= 2.0 / (n + 1.0) + 1e-12);
            }
        }
    }
}

TEST_CASE("quadrature moment agrees with closed forms in the univariate case") {
    Eigen::VectorXd th(1);
    th << 0.3;
    CHECK(population_moment(DgpId::UnivariateUniform, 0.5, th)(0) == doctest::Approx(-0.2));
    CHECK(population_cdf_moment(DgpId::UnivariateUniform, th)(0) == doctest::Approx(0.3));
}
