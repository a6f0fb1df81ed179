#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ivqr/exact_solver.hpp"
#include "ivqr/moments.hpp"
#include "support.hpp"

using namespace ivqr;

namespace {

Dataset two_point() {
    Eigen::VectorXd y(2);
    y << 1.0, 2.0;
    return make_qr_dataset(y, Eigen::MatrixXd::Ones(2, 1));
}

Eigen::VectorXd scalar_theta(double v) { return Eigen::VectorXd::Constant(1, v); }

}  // namespace

TEST_CASE("g_hat on the two-point set") {
    const Dataset ds = two_point();
    CHECK(g_hat(ds, 0.5, scalar_theta(0.0))(0) == doctest::Approx(-0.5));
    // weak inequality: the observation at y = 1 counts
    CHECK(g_hat(ds, 0.5, scalar_theta(1.0))(0) == doctest::Approx(0.0));
    CHECK(g_hat(ds, 0.5, scalar_theta(1.5))(0) == doctest::Approx(0.0));
}

TEST_CASE("g_star_hat on the two-point set") {
    const Dataset ds = two_point();
    // mean 1{y >= 1} - (1 - tau) = 1 - 0.5
    CHECK(g_star_hat(ds, 0.5, scalar_theta(1.0))(0) == doctest::Approx(0.5));
    // off the data hyperplanes the two moments are negatives of each other
    CHECK(g_star_hat(ds, 0.5, scalar_theta(1.5))(0) ==
          doctest::Approx(-g_hat(ds, 0.5, scalar_theta(1.5))(0)));
    // at a data point their sum is the zero-residual mass
    CHECK(g_hat(ds, 0.5, scalar_theta(1.0))(0) + g_star_hat(ds, 0.5, scalar_theta(1.0))(0) ==
          doctest::Approx(0.5));
}

TEST_CASE("zero_residual_mass at corners and interior points") {
    Rng rng(11);
    const Dataset ds = test::random_dataset(rng, 12, 2);
    const auto corners = enumerate_corners(ds);
    REQUIRE(!corners.empty());
    const auto& [sub, theta] = corners.front();
    const Eigen::VectorXd mass = zero_residual_mass(ds, theta);
    const Eigen::VectorXd expected =
        (ds.z.row(sub[0]) + ds.z.row(sub[1])).transpose() / static_cast<double>(ds.n());
    CHECK((mass - expected).lpNorm<Eigen::Infinity>() < 1e-12);

    // interior to a cell: no zero residuals
    Eigen::VectorXd interior = theta;
    interior(0) += 0.01;
    CHECK(zero_residual_mass(ds, interior).norm() == 0.0);
}

TEST_CASE("symmetrization identity holds exactly everywhere") {
    Rng rng(17);
    for (int rep = 0; rep < 200; ++rep) {
        const int n = 5 + static_cast<int>(rng.uniform() * 25);
        const int k = 1 + static_cast<int>(rng.uniform() * 3);
        const Dataset ds = test::random_dataset(rng, n, k, rep % 2 == 1);
        for (int t = 0; t < 20; ++t) {
            const Eigen::VectorXd theta = test::random_theta(rng, k);
            const double tau = 0.05 + 0.9 * rng.uniform();
            const Eigen::VectorXd lhs = g_hat(ds, tau, theta) + g_star_hat(ds, tau, theta);
            const Eigen::VectorXd rhs = zero_residual_mass(ds, theta);
            CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() < 1e-12);
        }
        // also at corners, where the identity is non-trivial
        const auto corners = enumerate_corners(ds);
        for (std::size_t c = 0; c < corners.size() && c < 5; ++c) {
            const auto& theta = corners[c].second;
            const Eigen::VectorXd lhs = g_hat(ds, 0.3, theta) + g_star_hat(ds, 0.3, theta);
            CHECK((lhs - zero_residual_mass(ds, theta)).lpNorm<Eigen::Infinity>() < 1e-12);
        }
    }
}

TEST_CASE("g_hat is constant on cells of the residual-sign arrangement") {
    Rng rng(23);
    const Dataset ds = test::random_dataset(rng, 15, 2);
    for (int t = 0; t < 50; ++t) {
        const Eigen::VectorXd theta = test::random_theta(rng, 2);
        const Eigen::VectorXd fit = ds.w * theta;
        // perturbation small enough to keep all residual signs
        double slack = 1e9;
        for (Eigen::Index i = 0; i < ds.n(); ++i)
            slack = std::min(slack, std::abs(ds.y(i) - fit(i)));
        if (slack < 1e-8) continue;
        Eigen::VectorXd theta2 = theta;
        theta2(0) += slack * 0.3;
        const Eigen::VectorXd fit2 = ds.w * theta2;
        bool same_cell = true;
        for (Eigen::Index i = 0; i < ds.n() && same_cell; ++i)
            same_cell = (ds.y(i) - fit(i) > 0) == (ds.y(i) - fit2(i) > 0);
        if (!same_cell) continue;
        CHECK(g_hat(ds, 0.4, theta) == g_hat(ds, 0.4, theta2));
    }
}

TEST_CASE("g_hat is scale equivariant: (cY, c theta) leaves it unchanged") {
    Rng rng(29);
    const Dataset ds = test::random_dataset(rng, 20, 2);
    const Eigen::VectorXd theta = test::random_theta(rng, 2);
    for (const double c : {2.0, 17.5, 0.25}) {
        const Dataset scaled = make_dataset(c * ds.y, ds.w, ds.z);
        CHECK((g_hat(scaled, 0.3, c * theta) - g_hat(ds, 0.3, theta)).lpNorm<Eigen::Infinity>() <
              1e-12);
    }
}

TEST_CASE("univariate g_hat is a nondecreasing step function when z >= 0") {
    Rng rng(31);
    Eigen::VectorXd y(9);
    for (int i = 0; i < 9; ++i) y(i) = rng.uniform();
    const Dataset ds = make_qr_dataset(y, Eigen::MatrixXd::Ones(9, 1));
    double prev = -1e9;
    for (double t = -0.2; t <= 1.2; t += 0.01) {
        const double g = g_hat(ds, 0.35, scalar_theta(t))(0);
        CHECK(g >= prev - 1e-15);
        prev = g;
    }
}

TEST_CASE("objective norms") {
    Eigen::VectorXd g(2);
    g << 0.3, -0.4;
    CHECK(vector_norm(g, Norm::L1) == doctest::Approx(0.7));
    CHECK(vector_norm(g, Norm::L2) == doctest::Approx(0.5));
    CHECK(vector_norm(g, Norm::Linf) == doctest::Approx(0.4));
}

TEST_CASE("process increment basics") {
    const Dataset ds = sample({DgpId::Dgp1Uniform, 100, 5});
    const auto oracle = cdf_moment_oracle(DgpId::Dgp1Uniform);
    const Eigen::VectorXd theta0 = theta_true(DgpId::Dgp1Uniform, 0.5);

    CHECK(process_increment(ds, oracle, theta0, theta0).norm() == 0.0);

    // without an oracle the operation is unsupported
    CHECK_THROWS_AS(process_increment(ds, PopulationCdfMoment{}, theta0, theta0), Error);
}

TEST_CASE("process increment shrinks with the distance between points") {
    // median taken over replications: increments at theta0 + n^{-1/2} shrink
    // relative to the raw process magnitude
    const auto oracle = cdf_moment_oracle(DgpId::Dgp1Uniform);
    const Eigen::VectorXd theta0 = theta_true(DgpId::Dgp1Uniform, 0.5);
    double med_incr = 0.0, med_raw = 0.0;
    const int reps = 200;
    std::vector<double> incr, raw;
    for (int r = 0; r < reps; ++r) {
        const Dataset ds = sample({DgpId::Dgp1Uniform, 400, replication_seed(1234, static_cast<std::uint64_t>(r))});
        Eigen::VectorXd near = theta0;
        near(0) += 1.0 / std::sqrt(400.0);
        incr.push_back(process_increment(ds, oracle, near, theta0).lpNorm<1>());
        // raw magnitude of the centered process at theta0 (relative to a far point)
        Eigen::VectorXd far = theta0;
        far(0) += 10.0;
        raw.push_back(process_increment(ds, oracle, far, theta0).lpNorm<1>());
    }
    std::sort(incr.begin(), incr.end());
    std::sort(raw.begin(), raw.end());
    med_incr = incr[reps / 2];
    med_raw = raw[reps / 2];
    CHECK(med_incr < med_raw);
}
