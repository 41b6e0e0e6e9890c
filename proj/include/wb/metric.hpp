#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "wb/errors.hpp"

namespace wb {

// Ground metric c on R^d. Either the Euclidean norm or its capped variant
// min(cap, ||x-y||_2).
struct Metric {
    enum class Kind { euclidean, capped_euclidean };

    Kind kind = Kind::euclidean;
    double cap = 1.0;

    static Metric euclidean() { return Metric{Kind::euclidean, 1.0}; }

    static Metric capped(double cap = 1.0) {
        if (!(cap > 0.0)) throw InvalidInput("Metric::capped: cap must be positive");
        return Metric{Kind::capped_euclidean, cap};
    }

    const char* name() const {
        return kind == Kind::euclidean ? "euclidean" : "capped-euclidean";
    }
};

inline double distance(const Metric& m,
                       const Eigen::Ref<const Eigen::VectorXd>& x,
                       const Eigen::Ref<const Eigen::VectorXd>& y) {
    if (x.size() != y.size()) throw InvalidInput("distance: dimension mismatch");
    const double d = (x - y).norm();
    return m.kind == Metric::Kind::euclidean ? d : std::min(m.cap, d);
}

// N x N matrix with entry (i,j) = c(Xs.row(i), Ys.row(j))^p. Point clouds
// are stored row-wise.
inline Eigen::MatrixXd pairwise_cost_matrix(const Metric& m, double p,
                                            const Eigen::Ref<const Eigen::MatrixXd>& Xs,
                                            const Eigen::Ref<const Eigen::MatrixXd>& Ys) {
    if (Xs.rows() == 0 || Ys.rows() == 0)
        throw InvalidInput("pairwise_cost_matrix: empty point set");
    if (Xs.rows() != Ys.rows() || Xs.cols() != Ys.cols())
        throw InvalidInput("pairwise_cost_matrix: size mismatch");
    const Eigen::Index n = Xs.rows();
    Eigen::MatrixXd cost(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            cost(i, j) = std::pow(distance(m, Xs.row(i), Ys.row(j)), p);
    return cost;
}

} // namespace wb
