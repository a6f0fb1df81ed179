#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "ivqr/cli_config.hpp"
#include "ivqr/corrections.hpp"
#include "ivqr/milp.hpp"
#include "ivqr/simulation.hpp"

namespace {

using namespace ivqr;

int exit_code(ErrorCategory cat) {
    switch (cat) {
        case ErrorCategory::Usage: return 2;
        case ErrorCategory::Schema: return 3;
        case ErrorCategory::Numeric: return 4;
        case ErrorCategory::Io: return 5;
        case ErrorCategory::Unsupported: return 6;
    }
    return 1;
}

std::string vec_str(const Eigen::VectorXd& v) {
    std::string s = "(";
    char buf[64];
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.10g", v(i));
        s += buf;
        if (i + 1 < v.size()) s += ", ";
    }
    return s + ")";
}

struct CommonStudyFlags {
    std::string config_path;
    std::string dgp = "dgp1";
    int n = 50;
    std::string ns = "50,100,200,400,800";
    int reps = 0;
    double tau = 0.5;
    std::string taus;
    long long seed = 0;
    int threads = 1;
    std::string estimators;
    std::string nuisance;
    std::string kernel;
    double bandwidth = 0.0;
    double bandwidth_deriv = 0.0;
    std::string theta_box;
    std::string out_dir = ".";
    bool summary = false;
};

void add_study_flags(CLI::App* cmd, CommonStudyFlags& f, bool rate_mode) {
    cmd->add_option("--config", f.config_path, "key=value config file; flags override");
    cmd->add_option("--dgp", f.dgp, "dgp1|dgp2|dgp3|uniform1d");
    if (rate_mode) {
        cmd->add_option("--ns", f.ns, "comma list of sample sizes");
        cmd->add_option("--tau", f.tau, "quantile level");
    } else {
        cmd->add_option("--n", f.n, "sample size");
        cmd->add_option("--taus", f.taus, "comma list or start:stop:step");
        cmd->add_option("--tau", f.tau, "single quantile level");
        cmd->add_option("--estimators", f.estimators,
                        "comma list of exact-l1|exact-l2|exact-linf|onestep|sym|bc|theta1");
    }
    cmd->add_option("--reps", f.reps, "replication count");
    cmd->add_option("--seed", f.seed, "master seed (required; no wall-clock seeding)");
    cmd->add_option("--threads", f.threads, "worker threads");
    cmd->add_option("--nuisance", f.nuisance, "analytic|plugin");
    cmd->add_option("--kernel", f.kernel, "gaussian|epanechnikov|uniform");
    cmd->add_option("--bandwidth", f.bandwidth, "kernel bandwidth override");
    cmd->add_option("--bandwidth-deriv", f.bandwidth_deriv, "derivative bandwidth override");
    cmd->add_option("--theta-box", f.theta_box, "parameter box lo:hi or l1,l2:h1,h2");
    cmd->add_option("--out-dir", f.out_dir, "output directory");
    cmd->add_flag("--summary", f.summary, "print an aligned table to stdout");
}

// flags given on the command line override config-file values
StudyConfig build_study_config(const CLI::App* cmd, const CommonStudyFlags& f, bool rate_mode) {
    StudyConfig cfg;
    bool config_has_seed = false;
    if (cmd->count("--config") > 0) {
        const auto kv = read_config_file(f.config_path);
        config_has_seed = kv.count("seed") > 0;
        for (const auto& [key, value] : kv) apply_config_entry(cfg, key, value);
    }
    if (cmd->count("--dgp")) cfg.dgp = parse_dgp(f.dgp);
    if (rate_mode) {
        if (cmd->count("--ns")) cfg.ns = parse_int_list(f.ns);
        if (cmd->count("--tau")) cfg.taus = {f.tau};
    } else {
        if (cmd->count("--n")) cfg.ns = {f.n};
        if (cmd->count("--taus"))
            cfg.taus = parse_tau_list(f.taus);
        else if (cmd->count("--tau"))
            cfg.taus = {f.tau};
        if (cmd->count("--estimators")) cfg.estimators = parse_estimator_list(f.estimators);
    }
    if (cmd->count("--reps")) cfg.reps = f.reps;
    if (cmd->count("--threads")) cfg.threads = f.threads;
    if (cmd->count("--nuisance")) apply_config_entry(cfg, "nuisance", f.nuisance);
    if (cmd->count("--kernel")) cfg.plug.kernel = parse_kernel(f.kernel);
    if (cmd->count("--bandwidth")) cfg.plug.bandwidth = f.bandwidth;
    if (cmd->count("--bandwidth-deriv")) cfg.plug.bandwidth_deriv = f.bandwidth_deriv;
    if (cmd->count("--theta-box")) cfg.solver.theta_box = parse_theta_box(f.theta_box);
    if (cmd->count("--seed"))
        cfg.master_seed = static_cast<std::uint64_t>(f.seed);
    else if (!config_has_seed)
        fail(ErrorCategory::Usage, "simulation commands require an explicit --seed");
    return cfg;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) fail(ErrorCategory::Io, "cannot write '" + path + "'");
    out << content;
}

int cmd_estimate(const std::string& data_path, double tau, const std::string& estimator,
                 const std::string& norm_tok, const std::string& nuisance,
                 const PlugInOptions& plug, const SolverOptions& sopts) {
    const Dataset ds = load_dataset(data_path);
    const Norm p = parse_norm(norm_tok);
    const EstimatorKind kind = parse_estimator(estimator);
    if (nuisance == "analytic")
        fail(ErrorCategory::Usage,
             "analytic nuisance components require a synthetic design; use --nuisance plugin "
             "for file data");

    if (kind == EstimatorKind::ThetaOne)
        fail(ErrorCategory::Unsupported,
             "theta1 is the infeasible oracle benchmark; it needs a synthetic design");

    if (kind == EstimatorKind::ExactL1 || kind == EstimatorKind::ExactL2 ||
        kind == EstimatorKind::ExactLinf) {
        const Norm pn = kind == EstimatorKind::ExactL1
                            ? Norm::L1
                            : (kind == EstimatorKind::ExactL2 ? Norm::L2 : Norm::Linf);
        const CornerSolution sol = solve_exact(ds, tau, pn, MomentVariant::Standard, sopts);
        std::cout << "estimator: " << estimator << "\n";
        std::cout << "theta: " << vec_str(sol.theta) << "\n";
        std::cout << "subset:";
        for (int i : sol.subset) std::cout << " " << (i + 1);
        std::cout << "\nobjective (" << norm_name(sol.norm) << "): " << sol.objective_value
                  << "\nsearch value: " << sol.search_value << "\nties: " << sol.ties << "\n";
        return 0;
    }

    const CornerSolution sol = solve_exact(ds, tau, p, MomentVariant::Standard, sopts);
    const NuisanceComponents comps = plugin_nuisance(ds, tau, sol.theta, plug);
    if (kind == EstimatorKind::OneStep) {
        const Eigen::VectorXd th = newton_step(ds, tau, sol.theta, comps.G);
        std::cout << "estimator: onestep\ncorner theta: " << vec_str(sol.theta)
                  << "\ntheta: " << vec_str(th) << "\n";
        return 0;
    }
    if (kind == EstimatorKind::Symmetric) {
        const Eigen::VectorXd th = symmetric_step(ds, tau, sol.theta, comps.G);
        std::cout << "estimator: sym\ncorner theta: " << vec_str(sol.theta)
                  << "\ntheta: " << vec_str(th) << "\n";
        return 0;
    }
    // bias corrected: full breakdown
    const EstimateBreakdown br = estimate_bias_corrected(ds, tau, p, comps, sopts);
    std::cout << "estimator: bc\n";
    std::cout << "corner theta: " << vec_str(br.corner.theta) << "\n";
    std::cout << "subset:";
    for (int i : br.corner.subset) std::cout << " " << (i + 1);
    std::cout << "\nobjective (" << norm_name(p) << "): " << br.corner.objective_value << "\n";
    std::cout << "theta_sym: " << vec_str(br.theta_sym) << "\n";
    std::cout << "kappa1 term: " << vec_str(br.kappa1_term) << "\n";
    std::cout << "curvature term: " << vec_str(br.curvature_term) << "\n";
    std::cout << "theta: " << vec_str(br.theta_bc) << "\n";
    std::cout << "nuisance: plugin (" << kernel_name(plug.kernel) << ", h=" << comps.bandwidth
              << ", h_deriv=" << comps.bandwidth_deriv << ")\n";
    return 0;
}

void print_bias_summary(const BiasTable& t) {
    std::printf("%-8s %-10s %-5s %14s %12s %12s\n", "tau", "estimator", "coef", "scaled_bias",
                "mcse", "band");
    for (const auto& r : t.rows)
        std::printf("%-8.4g %-10s %-5d %14.6f %12.6f %12.6f\n", r.tau,
                    estimator_name(r.estimator).c_str(), r.coef + 1, r.scaled_bias, r.mcse,
                    r.band);
    if (t.excluded > 0) std::printf("excluded replications: %d\n", t.excluded);
}

void print_rate_summary(const RateTable& t) {
    std::printf("%-20s %-8s %14s %10s %10s\n", "quantity", "n", "median", "slope", "slope_se");
    for (const auto& r : t.rows) {
        const auto& s = t.slopes.at(r.quantity);
        std::printf("%-20s %-8d %14.8g %10.4f %10.4f\n", r.quantity.c_str(), r.n, r.median,
                    s.slope, s.se);
    }
    std::printf("support bound m = %.6g, distinct directions s = %d\n", t.support_bound,
                t.distinct_directions);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"exact quantile / IV-quantile moment estimators, corrections and studies"};
    app.require_subcommand(1);

    // estimate
    auto* est = app.add_subcommand("estimate", "estimate theta from a CSV dataset");
    std::string est_data, est_estimator = "exact-l1", est_norm = "l1", est_nuisance = "plugin";
    std::string est_kernel = "gaussian", est_box;
    double est_tau = 0.5, est_h = 0.0, est_hd = 0.0;
    est->add_option("--data", est_data, "CSV with header y,w1..wk[,z1..zk]")->required();
    est->add_option("--tau", est_tau, "quantile level")->required();
    est->add_option("--estimator", est_estimator, "exact-l1|exact-l2|exact-linf|onestep|sym|bc");
    est->add_option("--norm", est_norm, "l1|l2|linf (base norm for corrections)");
    est->add_option("--nuisance", est_nuisance, "plugin (analytic needs a synthetic design)");
    est->add_option("--kernel", est_kernel, "gaussian|epanechnikov|uniform");
    est->add_option("--bandwidth", est_h, "kernel bandwidth override");
    est->add_option("--bandwidth-deriv", est_hd, "derivative bandwidth override");
    est->add_option("--theta-box", est_box, "parameter box lo:hi or l1,l2:h1,h2");

    // simulate
    auto* sim = app.add_subcommand("simulate", "Monte Carlo bias study; writes bias_<dgp>_<n>.csv");
    CommonStudyFlags simf;
    add_study_flags(sim, simf, /*rate_mode=*/false);

    // rates
    auto* rat = app.add_subcommand("rates", "rate-of-convergence study; writes rates_<dgp>.csv");
    CommonStudyFlags ratf;
    add_study_flags(rat, ratf, /*rate_mode=*/true);

    // orderstat
    auto* ord = app.add_subcommand("orderstat",
                                   "exact vs asymptotic order-statistic bias (uniform sample)");
    int ord_n = 10;
    std::string ord_taus = "0.05:0.95:0.05", ord_out;
    ord->add_option("--n", ord_n, "sample size")->required();
    ord->add_option("--taus", ord_taus, "comma list or start:stop:step");
    ord->add_option("--out", ord_out, "output CSV path (default: stdout)");

    // export-milp
    auto* mil = app.add_subcommand("export-milp", "write the SOS1 model text for a dataset");
    std::string mil_data, mil_out;
    double mil_tau = 0.5;
    mil->add_option("--data", mil_data, "CSV dataset")->required();
    mil->add_option("--tau", mil_tau, "quantile level")->required();
    mil->add_option("--out", mil_out, "output path (default: stdout)");

    // validate
    auto* val = app.add_subcommand("validate", "dataset diagnostics");
    std::string val_data;
    val->add_option("--data", val_data, "CSV dataset")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (est->parsed()) {
            PlugInOptions plug;
            plug.kernel = ivqr::parse_kernel(est_kernel);
            if (est->count("--bandwidth")) plug.bandwidth = est_h;
            if (est->count("--bandwidth-deriv")) plug.bandwidth_deriv = est_hd;
            ivqr::SolverOptions sopts;
            if (est->count("--theta-box")) sopts.theta_box = ivqr::parse_theta_box(est_box);
            return cmd_estimate(est_data, est_tau, est_estimator, est_norm, est_nuisance, plug,
                                sopts);
        }
        if (sim->parsed()) {
            ivqr::StudyConfig cfg = build_study_config(sim, simf, false);
            const ivqr::BiasTable table = ivqr::run_bias_study(cfg);
            const std::string path = simf.out_dir + "/" + table.default_filename();
            std::ofstream out(path);
            if (!out) ivqr::fail(ivqr::ErrorCategory::Io, "cannot write '" + path + "'");
            table.write_csv(out);
            std::cout << "wrote " << path << "\n";
            if (simf.summary) print_bias_summary(table);
            return 0;
        }
        if (rat->parsed()) {
            ivqr::StudyConfig cfg = build_study_config(rat, ratf, true);
            const ivqr::RateTable table = ivqr::run_rate_study(cfg);
            const std::string path = ratf.out_dir + "/" + table.default_filename();
            std::ofstream out(path);
            if (!out) ivqr::fail(ivqr::ErrorCategory::Io, "cannot write '" + path + "'");
            table.write_csv(out);
            std::cout << "wrote " << path << "\n";
            if (ratf.summary) print_rate_summary(table);
            return 0;
        }
        if (ord->parsed()) {
            const auto taus = ivqr::parse_tau_list(ord_taus);
            std::string csv = "tau,exact_lower,asymptotic_lower,exact_upper,asymptotic_upper\n";
            char buf[256];
            for (double tau : taus) {
                using ivqr::BiasKind;
                using ivqr::OrderStatCorner;
                std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", tau,
                              ivqr::uniform_orderstat_bias(ord_n, tau, OrderStatCorner::Lower, BiasKind::Exact),
                              ivqr::uniform_orderstat_bias(ord_n, tau, OrderStatCorner::Lower, BiasKind::Asymptotic),
                              ivqr::uniform_orderstat_bias(ord_n, tau, OrderStatCorner::Upper, BiasKind::Exact),
                              ivqr::uniform_orderstat_bias(ord_n, tau, OrderStatCorner::Upper, BiasKind::Asymptotic));
                csv += buf;
            }
            if (ord_out.empty())
                std::cout << csv;
            else {
                write_file(ord_out, csv);
                std::cout << "wrote " << ord_out << "\n";
            }
            return 0;
        }
        if (mil->parsed()) {
            const ivqr::Dataset ds = ivqr::load_dataset(mil_data);
            const std::string text = ivqr::export_milp_sos(ds, mil_tau);
            if (mil_out.empty())
                std::cout << text;
            else {
                write_file(mil_out, text);
                std::cout << "wrote " << mil_out << "\n";
            }
            return 0;
        }
        if (val->parsed()) {
            const ivqr::Dataset ds = ivqr::load_dataset(val_data);
            const auto d = ivqr::validate(ds);
            std::cout << "n: " << ds.n() << "\nk: " << ds.k() << "\n";
            std::cout << "rank of En[z w']: " << d.rank << (d.full_rank ? " (full)" : " (RANK-DEFICIENT: fatal for Newton corrections)") << "\n";
            std::cout << "condition of En[z w']: " << d.zw_condition << "\n";
            std::cout << "support bound m: " << d.support_bound << "\n";
            std::cout << "distinct regressor directions s: " << d.distinct_directions << "\n";
            return 0;
        }
    } catch (const ivqr::Error& e) {
        std::cerr << "error[" << ivqr::category_name(e.category()) << "]: " << e.what() << "\n";
        return exit_code(e.category());
    } catch (const std::exception& e) {
        std::cerr << "error[internal]: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
