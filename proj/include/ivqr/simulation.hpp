#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ivqr/corrections.hpp"
#include "ivqr/dgp.hpp"

namespace ivqr {

enum class EstimatorKind {
    ExactL1,
    ExactL2,
    ExactLinf,
    OneStep,        // Newton step applied to the exact l1 corner
    Symmetric,      // symmetric step applied to the exact l1 corner
    BiasCorrected,  // symmetric step + additive correction
    ThetaOne,       // infeasible linear benchmark
};

EstimatorKind parse_estimator(const std::string& token);
std::string estimator_name(EstimatorKind e);

struct StudyConfig {
    DgpId dgp = DgpId::Dgp1Uniform;
    std::vector<int> ns = {50};
    int reps = 100;
    std::vector<double> taus = {0.5};
    std::vector<EstimatorKind> estimators = {EstimatorKind::ExactL1, EstimatorKind::BiasCorrected};
    std::uint64_t master_seed = 0;
    int threads = 1;
    NuisanceSource nuisance = NuisanceSource::Analytic;
    PlugInOptions plug;
    SolverOptions solver;
};

// Monte Carlo standard error with the population standard deviation:
// sqrt(mean((x - mean)^2)) / sqrt(R). Throws on fewer than 2 samples.
double mcse(const std::vector<double>& samples);

struct BiasRow {
    double tau = 0.0;
    EstimatorKind estimator = EstimatorKind::ExactL1;
    int coef = 0;
    double scaled_bias = 0.0;  // n * mean(theta_hat - theta0)
    double mcse = 0.0;         // n * sd / sqrt(R)
    double band = 0.0;         // 3 * mcse
};

struct BiasTable {
    DgpId dgp = DgpId::Dgp1Uniform;
    int n = 0;
    int reps = 0;
    int excluded = 0;  // replications voided by an estimator failure
    std::vector<BiasRow> rows;

    void write_csv(std::ostream& os) const;
    std::string default_filename() const;  // bias_<dgp>_<n>.csv
};

// One study: per replication r, data are drawn with seed(master_seed, r),
// every requested estimator is computed at every tau, and n-scaled bias with
// MCSE bands is accumulated. Deterministic for a fixed config regardless of
// thread count (reduction runs in replication order). An estimator failure
// voids that replication at that tau for all estimators, keeping
// comparisons paired.
BiasTable run_bias_study(const StudyConfig& cfg);

struct RateRow {
    std::string quantity;
    int n = 0;
    double median = 0.0;
};

struct SlopeFit {
    double slope = 0.0;
    double se = 0.0;
};

struct RateTable {
    DgpId dgp = DgpId::Dgp1Uniform;
    double tau = 0.5;
    int reps = 0;
    int excluded = 0;
    double support_bound = 0.0;     // m, report metadata
    int distinct_directions = 0;    // s, report metadata
    std::vector<RateRow> rows;
    std::map<std::string, SlopeFit> slopes;  // log-log least squares per quantity

    void write_csv(std::ostream& os) const;
    std::string default_filename() const;  // rates_<dgp>.csv
};

// Rate-of-convergence study over cfg.ns (>= 3 sizes): per n, medians over
// replications of
//   moment_l1      ||g_hat(theta_l1)||_1 at the corner
//   solution_gap   ||theta_l1 - theta_linf||_2
//   newton_vs_linear ||T(theta_l1) - theta_one||_2
//   process_increment ||B_n(theta_l1)||_1 / sqrt(n)
// with fitted log-log slopes. Medians rather than means: these are
// stochastic-order diagnostics and DGP3 is heavy-tailed.
RateTable run_rate_study(const StudyConfig& cfg);

// Monte Carlo average of n (g_hat(theta_hat) + g_star_hat(theta_hat)) / 2 at
// the corner solution of the given variant; the zero-residual point-mass
// component, measurable across replications but not from one sample.
// Returns one k-vector per tau.
std::vector<Eigen::VectorXd> measure_kappa2(const StudyConfig& cfg, MomentVariant variant);

}  // namespace ivqr
