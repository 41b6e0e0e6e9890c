#pragma once

// Independent checking utilities shared by the unit and acceptance suites:
// finite-difference gradients, an energy-distance two-sample permutation
// test, and a Kolmogorov-Smirnov test against the standard normal.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracles {

inline Eigen::VectorXd finite_difference_gradient(
    const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
    double h = 1e-6) {
    Eigen::VectorXd g(x.size());
    for (int j = 0; j < x.size(); ++j) {
        Eigen::VectorXd hi = x, lo = x;
        const double step = h * (1.0 + std::abs(x(j)));
        hi(j) += step;
        lo(j) -= step;
        g(j) = (f(hi) - f(lo)) / (2.0 * step);
    }
    return g;
}

inline double max_relative_error(const Eigen::VectorXd& got, const Eigen::VectorXd& want) {
    double worst = 0.0;
    for (int j = 0; j < got.size(); ++j) {
        const double scale = std::max(1.0, std::abs(want(j)));
        worst = std::max(worst, std::abs(got(j) - want(j)) / scale);
    }
    return worst;
}

inline double energy_statistic(const Eigen::MatrixXd& pooled, const std::vector<int>& labels) {
    const int n = static_cast<int>(pooled.rows());
    double within_a = 0.0, within_b = 0.0, between = 0.0;
    int na = 0;
    for (int i = 0; i < n; ++i) na += labels[i] == 0 ? 1 : 0;
    const int nb = n - na;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double d = (pooled.row(i) - pooled.row(j)).norm();
            if (labels[i] == labels[j]) {
                (labels[i] == 0 ? within_a : within_b) += d;
            } else {
                between += d;
            }
        }
    }
    return 2.0 * between / (static_cast<double>(na) * nb) -
           2.0 * within_a / (static_cast<double>(na) * na) -
           2.0 * within_b / (static_cast<double>(nb) * nb);
}

// Energy-distance permutation test at significance 0.001 with 999
// permutations. Returns true when the samples are consistent with a common
// law (p-value > 0.001). Early exit: one permuted statistic at or above the
// observed one already certifies p >= 2/1000.
inline bool energy_two_sample_consistent(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                         std::uint64_t seed = 99) {
    const int n = static_cast<int>(a.rows() + b.rows());
    Eigen::MatrixXd pooled(n, a.cols());
    pooled.topRows(a.rows()) = a;
    pooled.bottomRows(b.rows()) = b;
    std::vector<int> labels(n, 0);
    for (int i = static_cast<int>(a.rows()); i < n; ++i) labels[i] = 1;
    const double observed = energy_statistic(pooled, labels);

    std::mt19937_64 eng(seed);
    for (int rep = 0; rep < 999; ++rep) {
        std::vector<int> perm = labels;
        std::shuffle(perm.begin(), perm.end(), eng);
        if (energy_statistic(pooled, perm) >= observed) return true;
    }
    return false;
}

inline double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// One-sample Kolmogorov-Smirnov test against N(0,1); consistent when the
// statistic stays below the alpha=0.001 critical value 1.9495/sqrt(n).
inline bool ks_standard_normal_consistent(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double stat = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double cdf = standard_normal_cdf(xs[i]);
        stat = std::max(stat, std::abs(cdf - (static_cast<double>(i) + 1.0) / n));
        stat = std::max(stat, std::abs(cdf - static_cast<double>(i) / n));
    }
    return stat < 1.9495 / std::sqrt(n);
}

} // namespace oracles
