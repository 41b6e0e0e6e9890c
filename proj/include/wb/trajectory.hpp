#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wb/errors.hpp"
#include "wb/metric.hpp"

namespace wb {

// Monte Carlo configuration shared by the coupled-chain estimators:
// Wasserstein order p, number of independent chains I, burn-in S and
// trajectory length T > S.
struct EstimatorConfig {
    double p = 2.0;
    int num_chains = 1;
    int burn_in = 0;
    int horizon = 1;
    std::uint64_t master_seed = 0;

    void validate() const {
        if (!(p >= 1.0)) throw InvalidInput("EstimatorConfig: p must be >= 1");
        if (num_chains < 1) throw InvalidInput("EstimatorConfig: need at least one chain");
        if (burn_in < 0) throw InvalidInput("EstimatorConfig: burn_in must be nonnegative");
        if (horizon < burn_in) throw InvalidInput("EstimatorConfig: need horizon T >= burn_in S");
    }
};

// I paired trajectories of length T+1 with per-step distances c(X_t, Y_t).
// States are optional: at large d the estimators only need distances.
struct TrajectoryBatch {
    int dimension = 0;
    Metric metric;
    Eigen::MatrixXd distances;          // I x (T+1)
    std::vector<Eigen::MatrixXd> xs;    // per chain, (T+1) x d; empty if distances-only
    std::vector<Eigen::MatrixXd> ys;
    std::string coupling_name;
    std::string left_kernel;
    std::string right_kernel;
    std::uint64_t seed = 0;

    int num_chains() const { return static_cast<int>(distances.rows()); }
    int horizon() const { return static_cast<int>(distances.cols()) - 1; }
    bool has_states() const { return !xs.empty(); }

    // Post-burn-in marginal samples pooled over chains and times S+1..T,
    // one sample per row.
    std::pair<Eigen::MatrixXd, Eigen::MatrixXd> marginal_samples(int burn_in) const {
        if (!has_states()) throw InvalidInput("marginal_samples: batch is distances-only");
        const int T = horizon();
        if (burn_in < 0 || burn_in >= T) throw InvalidInput("marginal_samples: bad burn-in");
        const int per_chain = T - burn_in;
        Eigen::MatrixXd X(num_chains() * per_chain, dimension);
        Eigen::MatrixXd Y(num_chains() * per_chain, dimension);
        for (int i = 0; i < num_chains(); ++i) {
            X.middleRows(i * per_chain, per_chain) = xs[i].middleRows(burn_in + 1, per_chain);
            Y.middleRows(i * per_chain, per_chain) = ys[i].middleRows(burn_in + 1, per_chain);
        }
        return {X, Y};
    }

    // CSV schema: `chain,t,dist` when distances-only, otherwise
    // `chain,t,dist,x_0..x_{d-1},y_0..y_{d-1}`.
    void write_csv(std::ostream& out) const {
        out.precision(17);
        out << "chain,t,dist";
        if (has_states()) {
            for (int j = 0; j < dimension; ++j) out << ",x_" << j;
            for (int j = 0; j < dimension; ++j) out << ",y_" << j;
        }
        out << "\n";
        for (int i = 0; i < num_chains(); ++i) {
            for (int t = 0; t <= horizon(); ++t) {
                out << i << "," << t << "," << distances(i, t);
                if (has_states()) {
                    for (int j = 0; j < dimension; ++j) out << "," << xs[i](t, j);
                    for (int j = 0; j < dimension; ++j) out << "," << ys[i](t, j);
                }
                out << "\n";
            }
        }
    }
    static TrajectoryBatch read_csv(std::istream& in) {
        std::string header;
        if (!std::getline(in, header)) throw InvalidInput("read_csv: empty input");
        int d = 0;
        {
            size_t pos = 0;
            int cols = 1;
            while ((pos = header.find(',', pos)) != std::string::npos) { ++cols; ++pos; }
            if (cols < 3) throw InvalidInput("read_csv: bad header");
            d = (cols - 3) / 2;
        }
        std::vector<std::vector<double>> dist_rows;
        std::vector<std::vector<Eigen::RowVectorXd>> xrows, yrows;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::vector<double> f;
            size_t start = 0;
            while (start <= line.size()) {
                const size_t comma = line.find(',', start);
                const std::string tok = line.substr(start, comma == std::string::npos
                                                              ? std::string::npos
                                                              : comma - start);
                f.push_back(std::stod(tok));
                if (comma == std::string::npos) break;
                start = comma + 1;
            }
            const int chain = static_cast<int>(f[0]);
            if (chain >= static_cast<int>(dist_rows.size())) {
                dist_rows.resize(chain + 1);
                xrows.resize(chain + 1);
                yrows.resize(chain + 1);
            }
            dist_rows[chain].push_back(f[2]);
            if (d > 0) {
                Eigen::RowVectorXd x(d), y(d);
                for (int j = 0; j < d; ++j) x(j) = f[3 + j];
                for (int j = 0; j < d; ++j) y(j) = f[3 + d + j];
                xrows[chain].push_back(x);
                yrows[chain].push_back(y);
            }
        }
        TrajectoryBatch b;
        b.dimension = d;
        const int I = static_cast<int>(dist_rows.size());
        if (I == 0) throw InvalidInput("read_csv: no rows");
        const int len = static_cast<int>(dist_rows[0].size());
        b.distances.resize(I, len);
        for (int i = 0; i < I; ++i)
            for (int t = 0; t < len; ++t) b.distances(i, t) = dist_rows[i][t];
        if (d > 0) {
            b.xs.resize(I);
            b.ys.resize(I);
            for (int i = 0; i < I; ++i) {
                b.xs[i].resize(len, d);
                b.ys[i].resize(len, d);
                for (int t = 0; t < len; ++t) {
                    b.xs[i].row(t) = xrows[i][t];
                    b.ys[i].row(t) = yrows[i][t];
                }
            }
        }
        return b;
    }
};

} // namespace wb
