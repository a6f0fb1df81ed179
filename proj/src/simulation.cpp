#include "ivqr/simulation.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <ostream>
#include <thread>

#include "ivqr/rng.hpp"

namespace ivqr {

EstimatorKind parse_estimator(const std::string& token) {
    if (token == "exact-l1") return EstimatorKind::ExactL1;
    if (token == "exact-l2") return EstimatorKind::ExactL2;
    if (token == "exact-linf") return EstimatorKind::ExactLinf;
    if (token == "onestep") return EstimatorKind::OneStep;
    if (token == "sym") return EstimatorKind::Symmetric;
    if (token == "bc") return EstimatorKind::BiasCorrected;
    if (token == "theta1") return EstimatorKind::ThetaOne;
    fail(ErrorCategory::Usage,
         "unknown estimator '" + token +
             "' (expected exact-l1|exact-l2|exact-linf|onestep|sym|bc|theta1)");
}

std::string estimator_name(EstimatorKind e) {
    switch (e) {
        case EstimatorKind::ExactL1: return "exact-l1";
        case EstimatorKind::ExactL2: return "exact-l2";
        case EstimatorKind::ExactLinf: return "exact-linf";
        case EstimatorKind::OneStep: return "onestep";
        case EstimatorKind::Symmetric: return "sym";
        case EstimatorKind::BiasCorrected: return "bc";
        case EstimatorKind::ThetaOne: return "theta1";
    }
    return "?";
}

double mcse(const std::vector<double>& samples) {
    const std::size_t r = samples.size();
    if (r < 2) fail(ErrorCategory::Numeric, "mcse needs at least 2 samples");
    double mean = 0.0;
    for (double v : samples) mean += v;
    mean /= static_cast<double>(r);
    double ss = 0.0;
    for (double v : samples) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(r));
    return sd / std::sqrt(static_cast<double>(r));
}

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double median_of(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

SlopeFit fit_loglog(const std::vector<double>& ns, const std::vector<double>& medians) {
    SlopeFit fit;
    const std::size_t m = ns.size();
    for (double v : medians)
        if (!(v > 0.0)) {
            fit.slope = std::numeric_limits<double>::quiet_NaN();
            fit.se = fit.slope;
            return fit;
        }
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sx += std::log(ns[i]);
        sy += std::log(medians[i]);
    }
    const double xbar = sx / static_cast<double>(m);
    const double ybar = sy / static_cast<double>(m);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double dx = std::log(ns[i]) - xbar;
        sxx += dx * dx;
        sxy += dx * (std::log(medians[i]) - ybar);
    }
    fit.slope = sxy / sxx;
    double rss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double pred = ybar + fit.slope * (std::log(ns[i]) - xbar);
        const double e = std::log(medians[i]) - pred;
        rss += e * e;
    }
    fit.se = m > 2 ? std::sqrt(rss / static_cast<double>(m - 2) / sxx) : 0.0;
    return fit;
}

// Dynamic work pull with results stored by replication index: the reduction
// later runs in index order, so tables do not depend on the thread count.
void parallel_for_reps(int reps, int threads, const std::function<void(int)>& body) {
    threads = std::max(1, threads);
    if (threads == 1) {
        for (int r = 0; r < reps; ++r) body(r);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (int r = next.fetch_add(1); r < reps; r = next.fetch_add(1)) body(r);
        });
    for (auto& th : pool) th.join();
}

void check_common(const StudyConfig& cfg) {
    if (cfg.reps < 2) fail(ErrorCategory::Usage, "need reps >= 2");
    if (cfg.taus.empty()) fail(ErrorCategory::Usage, "need at least one tau");
    for (double t : cfg.taus)
        if (!(t > 0.0 && t < 1.0)) fail(ErrorCategory::Usage, "taus must lie in (0,1)");
    if (cfg.threads < 1) fail(ErrorCategory::Usage, "threads must be >= 1");
    if (cfg.ns.empty()) fail(ErrorCategory::Usage, "need a sample size");
    for (int n : cfg.ns)
        if (n < 3) fail(ErrorCategory::Usage, "sample sizes must be >= 3");
}

bool uses_l1_base(EstimatorKind e) {
    return e == EstimatorKind::ExactL1 || e == EstimatorKind::OneStep ||
           e == EstimatorKind::Symmetric || e == EstimatorKind::BiasCorrected;
}

}  // namespace

void BiasTable::write_csv(std::ostream& os) const {
    os << "tau,estimator,coef,scaled_bias,mcse,band\n";
    for (const auto& r : rows)
        os << fmt(r.tau) << ',' << estimator_name(r.estimator) << ',' << (r.coef + 1) << ','
           << fmt(r.scaled_bias) << ',' << fmt(r.mcse) << ',' << fmt(r.band) << "\n";
}

std::string BiasTable::default_filename() const {
    return "bias_" + dgp_name(dgp) + "_" + std::to_string(n) + ".csv";
}

BiasTable run_bias_study(const StudyConfig& cfg) {
    check_common(cfg);
    if (cfg.ns.size() != 1) fail(ErrorCategory::Usage, "bias study uses a single sample size");
    if (cfg.estimators.empty()) fail(ErrorCategory::Usage, "need at least one estimator");

    const int n = cfg.ns[0];
    const int reps = cfg.reps;
    const int T = static_cast<int>(cfg.taus.size());
    const int E = static_cast<int>(cfg.estimators.size());
    const int k = static_cast<int>(theta_true(cfg.dgp, cfg.taus[0]).size());

    const bool need_l1 = std::any_of(cfg.estimators.begin(), cfg.estimators.end(), uses_l1_base);
    const bool need_l2 = std::count(cfg.estimators.begin(), cfg.estimators.end(), EstimatorKind::ExactL2) > 0;
    const bool need_linf = std::count(cfg.estimators.begin(), cfg.estimators.end(), EstimatorKind::ExactLinf) > 0;
    // corrections working off the exact-l1 corner need nuisance components;
    // theta1 only needs the analytic truth
    const bool need_comps =
        std::any_of(cfg.estimators.begin(), cfg.estimators.end(), [](EstimatorKind e) {
            return e == EstimatorKind::OneStep || e == EstimatorKind::Symmetric ||
                   e == EstimatorKind::BiasCorrected;
        });
    const bool need_truth =
        need_comps ||
        std::count(cfg.estimators.begin(), cfg.estimators.end(), EstimatorKind::ThetaOne) > 0;

    // shared per-tau precomputation
    std::vector<Eigen::VectorXd> theta0s;
    std::vector<AnalyticTruth> truths;
    std::vector<NuisanceComponents> analytic_comps;
    std::vector<CornerQuery> queries;
    // query index of (tau, norm-base): l1 / l2 / linf
    std::vector<std::array<int, 3>> qidx(static_cast<std::size_t>(T), {-1, -1, -1});
    for (int t = 0; t < T; ++t) {
        const double tau = cfg.taus[static_cast<std::size_t>(t)];
        theta0s.push_back(theta_true(cfg.dgp, tau));
        if (need_truth) {
            truths.push_back(analytic_components(cfg.dgp, tau));
            if (cfg.nuisance == NuisanceSource::Analytic && need_comps)
                analytic_comps.push_back(analytic_nuisance(truths.back()));
        }
        if (need_l1) {
            qidx[static_cast<std::size_t>(t)][0] = static_cast<int>(queries.size());
            queries.push_back({tau, Norm::L1, MomentVariant::Standard});
        }
        if (need_l2) {
            qidx[static_cast<std::size_t>(t)][1] = static_cast<int>(queries.size());
            queries.push_back({tau, Norm::L2, MomentVariant::Standard});
        }
        if (need_linf) {
            qidx[static_cast<std::size_t>(t)][2] = static_cast<int>(queries.size());
            queries.push_back({tau, Norm::Linf, MomentVariant::Standard});
        }
    }

    std::vector<double> dev(static_cast<std::size_t>(reps) * T * E * k, 0.0);
    std::vector<std::uint8_t> valid(static_cast<std::size_t>(reps) * T, 1);

    auto worker = [&](int rep) {
        DgpSpec spec{cfg.dgp, n, replication_seed(cfg.master_seed, static_cast<std::uint64_t>(rep))};
        Dataset ds;
        std::vector<CornerSolution> sols;
        try {
            ds = sample(spec);
            if (!queries.empty()) sols = solve_exact_batch(ds, queries, cfg.solver);
        } catch (const std::exception&) {
            for (int t = 0; t < T; ++t) valid[static_cast<std::size_t>(rep) * T + t] = 0;
            return;
        }
        for (int t = 0; t < T; ++t) {
            const double tau = cfg.taus[static_cast<std::size_t>(t)];
            try {
                const Eigen::VectorXd& theta0 = theta0s[static_cast<std::size_t>(t)];
                const CornerSolution* l1 =
                    qidx[static_cast<std::size_t>(t)][0] >= 0
                        ? &sols[static_cast<std::size_t>(qidx[static_cast<std::size_t>(t)][0])]
                        : nullptr;

                NuisanceComponents comps;
                const Eigen::MatrixXd* Gp = nullptr;
                if (need_comps) {
                    if (cfg.nuisance == NuisanceSource::Analytic) {
                        comps = analytic_comps[static_cast<std::size_t>(t)];
                    } else {
                        comps = plugin_nuisance(ds, tau, l1->theta, cfg.plug);
                    }
                    Gp = &comps.G;
                }

                Eigen::VectorXd theta_sym;
                for (int e = 0; e < E; ++e) {
                    const EstimatorKind kind = cfg.estimators[static_cast<std::size_t>(e)];
                    Eigen::VectorXd th;
                    switch (kind) {
                        case EstimatorKind::ExactL1: th = l1->theta; break;
                        case EstimatorKind::ExactL2:
                            th = sols[static_cast<std::size_t>(qidx[static_cast<std::size_t>(t)][1])].theta;
                            break;
                        case EstimatorKind::ExactLinf:
                            th = sols[static_cast<std::size_t>(qidx[static_cast<std::size_t>(t)][2])].theta;
                            break;
                        case EstimatorKind::OneStep:
                            th = newton_step(ds, tau, l1->theta, *Gp);
                            break;
                        case EstimatorKind::Symmetric:
                            if (theta_sym.size() == 0)
                                theta_sym = symmetric_step(ds, tau, l1->theta, *Gp);
                            th = theta_sym;
                            break;
                        case EstimatorKind::BiasCorrected:
                            if (theta_sym.size() == 0)
                                theta_sym = symmetric_step(ds, tau, l1->theta, *Gp);
                            th = bias_correct(theta_sym, comps, ds.n());
                            break;
                        case EstimatorKind::ThetaOne:
                            th = theta_one(ds, tau, theta0,
                                           truths[static_cast<std::size_t>(t)].G);
                            break;
                    }
                    for (int c = 0; c < k; ++c)
                        dev[((static_cast<std::size_t>(rep) * T + t) * E + e) * k + c] =
                            th(c) - theta0(c);
                }
            } catch (const std::exception&) {
                valid[static_cast<std::size_t>(rep) * T + t] = 0;
            }
        }
    };
    parallel_for_reps(reps, cfg.threads, worker);

    BiasTable table;
    table.dgp = cfg.dgp;
    table.n = n;
    table.reps = reps;
    int excluded = 0;
    for (int rep = 0; rep < reps; ++rep)
        for (int t = 0; t < T; ++t)
            if (!valid[static_cast<std::size_t>(rep) * T + t]) ++excluded;
    table.excluded = excluded;

    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(reps));
    for (int t = 0; t < T; ++t)
        for (int e = 0; e < E; ++e)
            for (int c = 0; c < k; ++c) {
                vals.clear();
                for (int rep = 0; rep < reps; ++rep)
                    if (valid[static_cast<std::size_t>(rep) * T + t])
                        vals.push_back(dev[((static_cast<std::size_t>(rep) * T + t) * E + e) * k + c]);
                if (vals.size() < 2)
                    fail(ErrorCategory::Numeric, "fewer than 2 valid replications at tau=" +
                                                     std::to_string(cfg.taus[static_cast<std::size_t>(t)]));
                double mean = 0.0;
                for (double v : vals) mean += v;
                mean /= static_cast<double>(vals.size());
                BiasRow row;
                row.tau = cfg.taus[static_cast<std::size_t>(t)];
                row.estimator = cfg.estimators[static_cast<std::size_t>(e)];
                row.coef = c;
                row.scaled_bias = n * mean;
                row.mcse = n * mcse(vals);
                row.band = 3.0 * row.mcse;
                table.rows.push_back(row);
            }
    return table;
}

void RateTable::write_csv(std::ostream& os) const {
    os << "quantity,n,median,slope,slope_se\n";
    for (const auto& r : rows) {
        const auto it = slopes.find(r.quantity);
        os << r.quantity << ',' << r.n << ',' << fmt(r.median) << ','
           << fmt(it == slopes.end() ? std::numeric_limits<double>::quiet_NaN() : it->second.slope)
           << ','
           << fmt(it == slopes.end() ? std::numeric_limits<double>::quiet_NaN() : it->second.se)
           << "\n";
    }
}

std::string RateTable::default_filename() const {
    return "rates_" + dgp_name(dgp) + ".csv";
}

RateTable run_rate_study(const StudyConfig& cfg) {
    check_common(cfg);
    if (cfg.ns.size() < 3) fail(ErrorCategory::Usage, "rate study needs at least 3 sample sizes");
    for (std::size_t i = 1; i < cfg.ns.size(); ++i)
        if (cfg.ns[i] <= cfg.ns[i - 1])
            fail(ErrorCategory::Usage, "sample sizes must be strictly increasing");

    const double tau = cfg.taus[0];
    const int reps = cfg.reps;
    const AnalyticTruth truth = analytic_components(cfg.dgp, tau);
    const auto oracle = cdf_moment_oracle(cfg.dgp);
    const std::vector<CornerQuery> queries = {{tau, Norm::L1, MomentVariant::Standard},
                                              {tau, Norm::Linf, MomentVariant::Standard}};
    static const char* kQuantities[4] = {"moment_l1", "solution_gap", "newton_vs_linear",
                                         "process_increment"};

    RateTable table;
    table.dgp = cfg.dgp;
    table.tau = tau;
    table.reps = reps;

    std::vector<std::vector<double>> medians(4);
    for (const int n : cfg.ns) {
        std::vector<double> q(static_cast<std::size_t>(reps) * 4, 0.0);
        std::vector<std::uint8_t> valid(static_cast<std::size_t>(reps), 1);
        auto worker = [&](int rep) {
            try {
                DgpSpec spec{cfg.dgp, n,
                             replication_seed(cfg.master_seed, static_cast<std::uint64_t>(rep))};
                const Dataset ds = sample(spec);
                const auto sols = solve_exact_batch(ds, queries, cfg.solver);
                const auto& l1 = sols[0];
                const auto& linf = sols[1];
                const Eigen::VectorXd t1 = theta_one(ds, tau, truth.theta0, truth.G);
                const Eigen::VectorXd stepped = newton_step(ds, tau, l1.theta, truth.G);
                const Eigen::VectorXd incr = process_increment(ds, oracle, l1.theta, truth.theta0);
                double* out = q.data() + static_cast<std::size_t>(rep) * 4;
                out[0] = l1.objective_value;
                out[1] = (l1.theta - linf.theta).norm();
                out[2] = (stepped - t1).norm();
                out[3] = incr.lpNorm<1>() / std::sqrt(static_cast<double>(n));
            } catch (const std::exception&) {
                valid[static_cast<std::size_t>(rep)] = 0;
            }
        };
        parallel_for_reps(reps, cfg.threads, worker);

        std::vector<double> vals;
        for (int qi = 0; qi < 4; ++qi) {
            vals.clear();
            for (int rep = 0; rep < reps; ++rep)
                if (valid[static_cast<std::size_t>(rep)])
                    vals.push_back(q[static_cast<std::size_t>(rep) * 4 + qi]);
            const double med = median_of(vals);
            medians[static_cast<std::size_t>(qi)].push_back(med);
            table.rows.push_back({kQuantities[qi], n, med});
        }
        for (int rep = 0; rep < reps; ++rep)
            if (!valid[static_cast<std::size_t>(rep)]) ++table.excluded;
    }

    std::vector<double> nsd(cfg.ns.begin(), cfg.ns.end());
    for (int qi = 0; qi < 4; ++qi)
        table.slopes[kQuantities[qi]] = fit_loglog(nsd, medians[static_cast<std::size_t>(qi)]);

    // support diagnostics reported as metadata (first replication, largest n)
    const Dataset probe = sample({cfg.dgp, cfg.ns.back(), replication_seed(cfg.master_seed, 0)});
    const auto diag = validate(probe);
    table.support_bound = diag.support_bound;
    table.distinct_directions = diag.distinct_directions;
    return table;
}

std::vector<Eigen::VectorXd> measure_kappa2(const StudyConfig& cfg, MomentVariant variant) {
    check_common(cfg);
    if (cfg.ns.size() != 1) fail(ErrorCategory::Usage, "kappa2 study uses a single sample size");
    const int n = cfg.ns[0];
    const int reps = cfg.reps;
    const int T = static_cast<int>(cfg.taus.size());
    const int k = static_cast<int>(theta_true(cfg.dgp, cfg.taus[0]).size());

    std::vector<CornerQuery> queries;
    for (double tau : cfg.taus) queries.push_back({tau, Norm::L1, variant});

    std::vector<double> acc(static_cast<std::size_t>(reps) * T * k, 0.0);
    std::vector<std::uint8_t> valid(static_cast<std::size_t>(reps), 1);
    auto worker = [&](int rep) {
        try {
            DgpSpec spec{cfg.dgp, n, replication_seed(cfg.master_seed, static_cast<std::uint64_t>(rep))};
            const Dataset ds = sample(spec);
            const auto sols = solve_exact_batch(ds, queries, cfg.solver);
            for (int t = 0; t < T; ++t) {
                const double tau = cfg.taus[static_cast<std::size_t>(t)];
                const Eigen::VectorXd v =
                    0.5 * static_cast<double>(n) *
                    (g_hat(ds, tau, sols[static_cast<std::size_t>(t)].theta) +
                     g_star_hat(ds, tau, sols[static_cast<std::size_t>(t)].theta));
                for (int c = 0; c < k; ++c)
                    acc[(static_cast<std::size_t>(rep) * T + t) * k + c] = v(c);
            }
        } catch (const std::exception&) {
            valid[static_cast<std::size_t>(rep)] = 0;
        }
    };
    parallel_for_reps(reps, cfg.threads, worker);

    std::vector<Eigen::VectorXd> out(static_cast<std::size_t>(T), Eigen::VectorXd::Zero(k));
    for (int t = 0; t < T; ++t) {
        int m = 0;
        for (int rep = 0; rep < reps; ++rep) {
            if (!valid[static_cast<std::size_t>(rep)]) continue;
            ++m;
            for (int c = 0; c < k; ++c)
                out[static_cast<std::size_t>(t)](c) += acc[(static_cast<std::size_t>(rep) * T + t) * k + c];
        }
        if (m == 0) fail(ErrorCategory::Numeric, "no valid replications");
        out[static_cast<std::size_t>(t)] /= static_cast<double>(m);
    }
    return out;
}

}  // namespace ivqr
