#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "wb/errors.hpp"
#include "wb/estimators.hpp"
#include "wb/metric.hpp"
#include "wb/rng.hpp"

namespace wb {

// Exact square-assignment optimum by the shortest-augmenting-path method
// with dual potentials, O(N^3) on a dense cost matrix.
inline double assignment_min_cost(const Eigen::MatrixXd& a) {
    const int n = static_cast<int>(a.rows());
    if (n == 0 || a.cols() != n) throw InvalidInput("assignment_min_cost: need a square matrix");
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> match(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = match[j0];
            int j1 = -1;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const int j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    double cost = 0.0;
    for (int j = 1; j <= n; ++j) cost += a(match[j] - 1, j - 1);
    return cost;
}

// Empirical W_p between two equal-size point clouds, solved exactly as a
// minimum-cost perfect matching.
inline double exact_empirical_wp(const Eigen::MatrixXd& Xs, const Eigen::MatrixXd& Ys, double p,
                                 const Metric& metric = Metric::euclidean()) {
    if (Xs.rows() != Ys.rows()) throw InvalidInput("exact_empirical_wp: sample count mismatch");
    if (Xs.rows() > 4096) throw InvalidInput("exact_empirical_wp: N over the 4096 guard");
    const Eigen::MatrixXd cost = pairwise_cost_matrix(metric, p, Xs, Ys);
    const double total = assignment_min_cost(cost);
    return std::pow(std::max(total, 0.0) / static_cast<double>(Xs.rows()), 1.0 / p);
}

// Exhaustive permutation minimum; oracle for the assignment solver.
inline double brute_force_wp(const Eigen::MatrixXd& Xs, const Eigen::MatrixXd& Ys, double p,
                             const Metric& metric = Metric::euclidean()) {
    const int n = static_cast<int>(Xs.rows());
    if (n != Ys.rows()) throw InvalidInput("brute_force_wp: sample count mismatch");
    if (n > 8) throw InvalidInput("brute_force_wp: N must be <= 8");
    const Eigen::MatrixXd cost = pairwise_cost_matrix(metric, p, Xs, Ys);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (int i = 0; i < n; ++i) total += cost(i, perm[i]);
        best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return std::pow(best / static_cast<double>(n), 1.0 / p);
}

struct SinkhornConfig {
    double regularization = 0.1; // lambda, in the cost's own units
    double tolerance = 1e-6;     // sup-norm marginal violation
    int max_iterations = 100000;
};

struct TransportResult {
    double cost = 0.0;
    int iterations = 0;
    bool converged = false;
    double marginal_error = 0.0;
};

// Entropy-regularized transport between uniform empirical measures,
// iterated entirely in the log domain. The reported cost is the transport
// cost induced by the regularized plan (not the regularized objective).
inline TransportResult sinkhorn(const Eigen::MatrixXd& Xs, const Eigen::MatrixXd& Ys, double p,
                                const Metric& metric, const SinkhornConfig& cfg) {
    if (!(cfg.regularization > 0.0)) throw InvalidInput("sinkhorn: lambda must be positive");
    if (Xs.rows() != Ys.rows()) throw InvalidInput("sinkhorn: sample count mismatch");
    const int n = static_cast<int>(Xs.rows());
    const double lam = cfg.regularization;
    const Eigen::MatrixXd cost = pairwise_cost_matrix(metric, p, Xs, Ys);
    const double log_mass = -std::log(static_cast<double>(n)); // uniform marginals

    Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);

    auto lse_rows = [&](const Eigen::MatrixXd& M) -> Eigen::VectorXd {
        // row-wise log-sum-exp with the max subtracted
        const Eigen::VectorXd mx = M.rowwise().maxCoeff();
        return (mx.array() +
                ((M.colwise() - mx).array().exp().rowwise().sum()).log())
            .matrix();
    };

    TransportResult out;
    Eigen::MatrixXd logk(n, n);
    for (int it = 1; it <= cfg.max_iterations; ++it) {
        // f-update fixes the row marginals exactly
        logk = -cost / lam;
        logk.rowwise() += g.transpose() / lam;
        f = lam * (Eigen::VectorXd::Constant(n, log_mass) - lse_rows(logk));
        // g-update by symmetry on the transpose
        Eigen::MatrixXd logkT = (-cost.transpose()) / lam;
        logkT.rowwise() += f.transpose() / lam;
        g = lam * (Eigen::VectorXd::Constant(n, log_mass) - lse_rows(logkT));

        // plan in log space: log gamma_ij = (f_i + g_j - C_ij) / lam
        Eigen::MatrixXd logplan = (-cost) / lam;
        logplan.colwise() += f / lam;
        logplan.rowwise() += g.transpose() / lam;
        if (!logplan.allFinite()) throw NumericalFailure("sinkhorn: non-finite plan");
        const Eigen::MatrixXd plan = logplan.array().exp();
        const double row_err = (plan.rowwise().sum().array() - 1.0 / n).abs().maxCoeff();
        const double col_err = (plan.colwise().sum().array() - 1.0 / n).abs().maxCoeff();
        out.marginal_error = std::max(row_err, col_err);
        out.iterations = it;
        if (out.marginal_error <= cfg.tolerance) {
            out.converged = true;
            out.cost = std::pow(std::max((plan.array() * cost.array()).sum(), 0.0), 1.0 / p);
            return out;
        }
    }
    Eigen::MatrixXd logplan = (-cost) / lam;
    logplan.colwise() += f / lam;
    logplan.rowwise() += g.transpose() / lam;
    const Eigen::MatrixXd plan = logplan.array().exp();
    out.cost = std::pow(std::max((plan.array() * cost.array()).sum(), 0.0), 1.0 / p);
    return out;
}

inline double median_pairwise_cost(const Eigen::MatrixXd& Xs, const Eigen::MatrixXd& Ys, double p,
                                   const Metric& metric = Metric::euclidean()) {
    Eigen::MatrixXd cost = pairwise_cost_matrix(metric, p, Xs, Ys);
    std::vector<double> flat(cost.data(), cost.data() + cost.size());
    std::nth_element(flat.begin(), flat.begin() + flat.size() / 2, flat.end());
    return flat[flat.size() / 2];
}

// Empirical-Wasserstein baseline: exact W_p over I independent N-sample
// replicates, averaged on the p-th-power scale with a delta-method SE.
inline Estimate empirical_wp_mean(const std::function<Eigen::VectorXd(StepRng&)>& sample_p,
                                  const std::function<Eigen::VectorXd(StepRng&)>& sample_q, int N,
                                  double p, const Metric& metric, int replicates,
                                  std::uint64_t seed) {
    if (N < 1 || replicates < 1) throw InvalidInput("empirical_wp_mean: bad sizes");
    Eigen::VectorXd pows(replicates);
    for (int r = 0; r < replicates; ++r) {
        const ChainRng rng(seed, static_cast<std::uint64_t>(r));
        StepRng sx = rng.at(ChainRng::Slot::left_only, 0);
        StepRng sy = rng.at(ChainRng::Slot::right_only, 0);
        Eigen::VectorXd probe_x = sample_p(sx);
        Eigen::MatrixXd X(N, probe_x.size()), Y(N, probe_x.size());
        X.row(0) = probe_x;
        for (int i = 1; i < N; ++i) X.row(i) = sample_p(sx);
        for (int i = 0; i < N; ++i) Y.row(i) = sample_q(sy);
        pows(r) = std::pow(exact_empirical_wp(X, Y, p, metric), p);
    }
    const double mean_pow = pows.mean();
    const double se_pow =
        replicates > 1 ? detail::sample_sd(pows) / std::sqrt(static_cast<double>(replicates)) : 0.0;
    return detail::root_transform(mean_pow, se_pow, p);
}

} // namespace wb
