#include "ivqr/exact_solver.hpp"

#include <cmath>
#include <limits>

namespace ivqr {

std::string variant_name(MomentVariant v) {
    return v == MomentVariant::Standard ? "standard" : "symmetrized";
}

namespace {

bool next_combination(std::vector<int>& c, int n) {
    const int k = static_cast<int>(c.size());
    for (int i = k - 1; i >= 0; --i) {
        if (c[i] < n - k + i) {
            ++c[i];
            for (int j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
            return true;
        }
    }
    return false;
}

struct QueryState {
    CornerQuery q;
    Eigen::VectorXd tau_zbar;  // tau * colwise mean of z
    bool found = false;
    double best_search = std::numeric_limits<double>::infinity();
    double best_atcorner = std::numeric_limits<double>::infinity();
    std::vector<int> best_subset;
    Eigen::VectorXd best_theta;
    int ties = 0;
};

// theta_S = W_S^{-1} y_S; false when |det W_S| is below the Hadamard-scaled
// singularity threshold.
bool basic_solution(const Dataset& ds, const std::vector<int>& sub, double rtol,
                    double* theta) {
    const int k = static_cast<int>(ds.k());
    if (k == 1) {
        const double a = ds.w(sub[0], 0);
        if (a == 0.0) return false;
        theta[0] = ds.y(sub[0]) / a;
        return true;
    }
    if (k == 2) {
        const int i0 = sub[0], i1 = sub[1];
        const double a = ds.w(i0, 0), b = ds.w(i0, 1);
        const double c = ds.w(i1, 0), d = ds.w(i1, 1);
        const double det = a * d - b * c;
        const double had = std::sqrt((a * a + b * b) * (c * c + d * d));
        if (had == 0.0 || std::abs(det) <= rtol * had) return false;
        const double y0 = ds.y(i0), y1 = ds.y(i1);
        theta[0] = (y0 * d - y1 * b) / det;
        theta[1] = (a * y1 - c * y0) / det;
        return true;
    }
    Eigen::MatrixXd W(k, k);
    Eigen::VectorXd yS(k);
    double had = 1.0;
    for (int r = 0; r < k; ++r) {
        W.row(r) = ds.w.row(sub[static_cast<std::size_t>(r)]);
        yS(r) = ds.y(sub[static_cast<std::size_t>(r)]);
        had *= W.row(r).norm();
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(W);
    const double det = lu.determinant();
    if (had == 0.0 || std::abs(det) <= rtol * had) return false;
    Eigen::Map<Eigen::VectorXd>(theta, k) = lu.solve(yS);
    return true;
}

double norm_of(const double* v, int k, Norm p) {
    switch (p) {
        case Norm::L1: {
            double a = 0.0;
            for (int j = 0; j < k; ++j) a += std::abs(v[j]);
            return a;
        }
        case Norm::L2: {
            double a = 0.0;
            for (int j = 0; j < k; ++j) a += v[j] * v[j];
            return std::sqrt(a);
        }
        case Norm::Linf: {
            double a = 0.0;
            for (int j = 0; j < k; ++j) a = std::max(a, std::abs(v[j]));
            return a;
        }
    }
    return 0.0;
}

// Shared corner-scan engine. For every nonsingular k-subset it computes the
// strictly-below moment sum u, the zero-residual set, and feeds each query's
// search/at-corner keys. Queries share the O(n) residual scan.
class CornerScan {
public:
    CornerScan(const Dataset& ds, std::span<const CornerQuery> queries,
               const SolverOptions& opts)
        : ds_(ds), opts_(opts), n_(static_cast<int>(ds.n())), k_(static_cast<int>(ds.k())) {
        if (n_ < k_ + 1) fail(ErrorCategory::Numeric, "need n >= k + 1 observations");
        if (queries.empty()) fail(ErrorCategory::Usage, "no solver queries given");
        zeta_ = zero_tolerance(ds);
        const Eigen::VectorXd zbar = ds.z.colwise().mean();
        states_.reserve(queries.size());
        for (const auto& q : queries) {
            if (!(q.tau > 0.0 && q.tau < 1.0))
                fail(ErrorCategory::Numeric, "quantile level must lie in (0,1)");
            QueryState st;
            st.q = q;
            st.tau_zbar = q.tau * zbar;
            states_.push_back(std::move(st));
        }
        yp_ = ds.y.data();
        wcol_.resize(static_cast<std::size_t>(k_));
        zcol_.resize(static_cast<std::size_t>(k_));
        for (int j = 0; j < k_; ++j) {
            wcol_[static_cast<std::size_t>(j)] = ds.w.col(j).data();
            zcol_[static_cast<std::size_t>(j)] = ds.z.col(j).data();
        }
    }

    void run() {
        std::vector<int> sub(static_cast<std::size_t>(k_));
        for (int j = 0; j < k_; ++j) sub[static_cast<std::size_t>(j)] = j;
        std::vector<double> theta(static_cast<std::size_t>(k_));
        do {
            if (!basic_solution(ds_, sub, opts_.det_rtol, theta.data())) {
                ++singular_skipped_;
                continue;
            }
            if (outside_box(theta.data())) {
                ++box_skipped_;
                continue;
            }
            evaluate_corner(sub, theta.data());
        } while (next_combination(sub, n_));
    }

    std::vector<CornerSolution> results() const {
        std::vector<CornerSolution> out;
        out.reserve(states_.size());
        for (const auto& st : states_) {
            if (!st.found)
                fail(ErrorCategory::Numeric,
                     "no usable corner: every k-subset was singular or outside the box");
            CornerSolution s;
            s.theta = st.best_theta;
            s.subset = st.best_subset;
            s.objective_value = st.best_atcorner;
            s.search_value = st.best_search;
            s.tau = st.q.tau;
            s.norm = st.q.norm;
            s.variant = st.q.variant;
            s.ties = st.ties;
            s.singular_skipped = singular_skipped_;
            s.box_skipped = box_skipped_;
            out.push_back(std::move(s));
        }
        return out;
    }

private:
    bool outside_box(const double* theta) const {
        if (!opts_.theta_box) return false;
        const auto& [lo, hi] = *opts_.theta_box;
        for (int j = 0; j < k_; ++j)
            if (theta[j] < lo(j) || theta[j] > hi(j)) return true;
        return false;
    }

    void evaluate_corner(const std::vector<int>& sub, const double* theta) {
        double u[8] = {0};  // sum of z over strictly-below observations
        int nz = 0;
        const double zeta = zeta_;

        if (k_ == 2) {
            const double t0 = theta[0], t1 = theta[1];
            const double* w0 = wcol_[0];
            const double* w1 = wcol_[1];
            const double* z0 = zcol_[0];
            const double* z1 = zcol_[1];
            double u0 = 0.0, u1 = 0.0;
            for (int i = 0; i < n_; ++i) {
                const double r = yp_[i] - (w0[i] * t0 + w1[i] * t1);
                const bool below = r < -zeta;
                u0 += below ? z0[i] : 0.0;
                u1 += below ? z1[i] : 0.0;
                nz += std::abs(r) <= zeta;
            }
            u[0] = u0;
            u[1] = u1;
        } else if (k_ == 1) {
            const double t0 = theta[0];
            const double* w0 = wcol_[0];
            const double* z0 = zcol_[0];
            double u0 = 0.0;
            for (int i = 0; i < n_; ++i) {
                const double r = yp_[i] - w0[i] * t0;
                u0 += (r < -zeta) ? z0[i] : 0.0;
                nz += std::abs(r) <= zeta;
            }
            u[0] = u0;
        } else {
            for (int i = 0; i < n_; ++i) {
                double fit = 0.0;
                for (int j = 0; j < k_; ++j) fit += wcol_[static_cast<std::size_t>(j)][i] * theta[j];
                const double r = yp_[i] - fit;
                if (r < -zeta)
                    for (int j = 0; j < k_; ++j) u[j] += zcol_[static_cast<std::size_t>(j)][i];
                else if (std::abs(r) <= zeta)
                    ++nz;
            }
        }

        // zero-residual membership: generically exactly the defining subset
        zero_rows_.clear();
        bool defining_zero = true;
        for (int r = 0; r < k_ && defining_zero; ++r) {
            double fit = 0.0;
            const int i = sub[static_cast<std::size_t>(r)];
            for (int j = 0; j < k_; ++j) fit += wcol_[static_cast<std::size_t>(j)][i] * theta[j];
            defining_zero = std::abs(yp_[i] - fit) <= zeta;
        }
        if (defining_zero && nz == k_) {
            for (int r = 0; r < k_; ++r) zero_rows_.push_back(sub[static_cast<std::size_t>(r)]);
        } else {
            for (int i = 0; i < n_ && static_cast<int>(zero_rows_.size()) < kMaxZeros; ++i) {
                double fit = 0.0;
                for (int j = 0; j < k_; ++j) fit += wcol_[static_cast<std::size_t>(j)][i] * theta[j];
                if (std::abs(yp_[i] - fit) <= zeta) zero_rows_.push_back(i);
            }
        }

        const int zc = static_cast<int>(zero_rows_.size());
        const int masks = 1 << zc;
        const double inv_n = 1.0 / static_cast<double>(n_);

        // cell values reachable from this corner: each zero residual toggled
        // to either side of its hyperplane
        cells_.resize(static_cast<std::size_t>(masks) * static_cast<std::size_t>(k_));
        for (int m = 0; m < masks; ++m) {
            double* cell = cells_.data() + static_cast<std::size_t>(m) * static_cast<std::size_t>(k_);
            for (int j = 0; j < k_; ++j) cell[j] = u[j];
            for (int b = 0; b < zc; ++b)
                if (m & (1 << b)) {
                    const int i = zero_rows_[static_cast<std::size_t>(b)];
                    for (int j = 0; j < k_; ++j) cell[j] += zcol_[static_cast<std::size_t>(j)][i];
                }
            for (int j = 0; j < k_; ++j) cell[j] *= inv_n;
        }

        double gvec[8];
        for (auto& st : states_) {
            double search = std::numeric_limits<double>::infinity();
            for (int m = 0; m < masks; ++m) {
                const double* cell = cells_.data() + static_cast<std::size_t>(m) * static_cast<std::size_t>(k_);
                for (int j = 0; j < k_; ++j) gvec[j] = cell[j] - st.tau_zbar(j);
                search = std::min(search, norm_of(gvec, k_, st.q.norm));
            }
            // at-corner value under the variant's own inclusion convention
            double atcorner;
            if (st.q.variant == MomentVariant::Standard) {
                const double* full = cells_.data() + static_cast<std::size_t>(masks - 1) * static_cast<std::size_t>(k_);
                for (int j = 0; j < k_; ++j) gvec[j] = full[j] - st.tau_zbar(j);
                atcorner = norm_of(gvec, k_, st.q.norm);
            } else {
                for (int j = 0; j < k_; ++j) gvec[j] = st.tau_zbar(j) - u[j] * inv_n;
                atcorner = norm_of(gvec, k_, st.q.norm);
            }

            if (!st.found || search < st.best_search) {
                st.found = true;
                st.best_search = search;
                st.best_atcorner = atcorner;
                st.best_subset = sub;
                st.best_theta = Eigen::Map<const Eigen::VectorXd>(theta, k_);
                st.ties = 1;
            } else if (search == st.best_search) {
                ++st.ties;
                if (atcorner < st.best_atcorner) {
                    st.best_atcorner = atcorner;
                    st.best_subset = sub;
                    st.best_theta = Eigen::Map<const Eigen::VectorXd>(theta, k_);
                }
            }
        }
    }

    static constexpr int kMaxZeros = 12;

    const Dataset& ds_;
    const SolverOptions& opts_;
    int n_;
    int k_;
    double zeta_ = 0.0;
    const double* yp_ = nullptr;
    std::vector<const double*> wcol_;
    std::vector<const double*> zcol_;
    std::vector<QueryState> states_;
    std::vector<int> zero_rows_;
    std::vector<double> cells_;
    int singular_skipped_ = 0;
    int box_skipped_ = 0;
};

}  // namespace

std::vector<std::pair<std::vector<int>, Eigen::VectorXd>>
enumerate_corners(const Dataset& ds, double det_rtol) {
    const int n = static_cast<int>(ds.n());
    const int k = static_cast<int>(ds.k());
    if (n < k) fail(ErrorCategory::Numeric, "need n >= k observations");

    std::vector<std::pair<std::vector<int>, Eigen::VectorXd>> out;
    std::vector<int> sub(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) sub[static_cast<std::size_t>(j)] = j;
    std::vector<double> theta(static_cast<std::size_t>(k));
    do {
        if (basic_solution(ds, sub, det_rtol, theta.data()))
            out.emplace_back(sub, Eigen::Map<const Eigen::VectorXd>(theta.data(), k));
    } while (next_combination(sub, n));
    return out;
}

std::vector<CornerSolution> solve_exact_batch(const Dataset& ds,
                                              std::span<const CornerQuery> queries,
                                              const SolverOptions& opts) {
    if (static_cast<int>(ds.k()) > 8)
        fail(ErrorCategory::Unsupported, "corner enumeration supports k <= 8");
    CornerScan scan(ds, queries, opts);
    scan.run();
    return scan.results();
}

CornerSolution solve_exact(const Dataset& ds, double tau, Norm p, MomentVariant variant,
                           const SolverOptions& opts) {
    CornerQuery q{tau, p, variant};
    auto res = solve_exact_batch(ds, std::span<const CornerQuery>(&q, 1), opts);
    return std::move(res.front());
}

Eigen::VectorXd grid_oracle(const Dataset& ds, double tau, Norm p, const GridSpec& grid) {
    const Eigen::Index k = ds.k();
    if (grid.lo.size() != k || grid.hi.size() != k)
        fail(ErrorCategory::Usage, "grid bounds must have dimension k");
    if (grid.points_per_dim < 1) fail(ErrorCategory::Usage, "empty grid");
    for (Eigen::Index j = 0; j < k; ++j)
        if (!(grid.lo(j) <= grid.hi(j))) fail(ErrorCategory::Usage, "empty grid");

    const int g = grid.points_per_dim;
    std::vector<int> idx(static_cast<std::size_t>(k), 0);
    Eigen::VectorXd theta(k), best;
    double best_val = std::numeric_limits<double>::infinity();
    while (true) {
        for (Eigen::Index j = 0; j < k; ++j) {
            const double t = g == 1 ? 0.0 : static_cast<double>(idx[static_cast<std::size_t>(j)]) / (g - 1);
            theta(j) = grid.lo(j) + t * (grid.hi(j) - grid.lo(j));
        }
        const double v = objective(ds, tau, theta, p);
        if (v < best_val) {
            best_val = v;
            best = theta;
        }
        Eigen::Index j = 0;
        for (; j < k; ++j) {
            if (++idx[static_cast<std::size_t>(j)] < g) break;
            idx[static_cast<std::size_t>(j)] = 0;
        }
        if (j == k) break;
    }
    return best;
}

}  // namespace ivqr
