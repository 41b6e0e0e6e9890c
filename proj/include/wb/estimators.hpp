#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wb/couplings.hpp"
#include "wb/errors.hpp"
#include "wb/metric.hpp"
#include "wb/target.hpp"
#include "wb/trajectory.hpp"

namespace wb {

struct Estimate {
    double value = 0.0;
    double se = 0.0;
};

namespace detail {

inline double sample_sd(const Eigen::VectorXd& v) {
    if (v.size() < 2) return 0.0;
    const double mean = v.mean();
    return std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size() - 1));
}

// SE of the mean of a single autocorrelated sequence via batch means.
inline double batch_means_se(const Eigen::VectorXd& v) {
    const int n = static_cast<int>(v.size());
    const int k = std::max(2, static_cast<int>(std::floor(std::sqrt(static_cast<double>(n)))));
    const int len = n / k;
    if (len < 1) return 0.0;
    Eigen::VectorXd bm(k);
    for (int b = 0; b < k; ++b) bm(b) = v.segment(b * len, len).mean();
    return sample_sd(bm) / std::sqrt(static_cast<double>(k));
}

// Delta method for the 1/p power of a mean of p-th powers.
inline Estimate root_transform(double mean_pow, double se_pow, double p) {
    if (!(mean_pow > 0.0)) return Estimate{0.0, 0.0};
    const double value = std::pow(mean_pow, 1.0 / p);
    const double se = se_pow * (1.0 / p) * std::pow(mean_pow, 1.0 / p - 1.0);
    return Estimate{value, se};
}

} // namespace detail

// Time-and-chain-averaged coupling upper bound over t = S+1..T. The SE
// reflects across-chain variance of the per-chain means (chains are
// independent); a single chain falls back to batch means over time.
inline Estimate cub(const TrajectoryBatch& batch, double p, int S, int T) {
    if (!(p >= 1.0)) throw InvalidInput("cub: p must be >= 1");
    if (S < 0 || S >= T || T > batch.horizon()) throw InvalidInput("cub: need 0 <= S < T <= horizon");
    const int I = batch.num_chains();
    const int span = T - S;
    Eigen::VectorXd chain_means(I);
    for (int i = 0; i < I; ++i)
        chain_means(i) =
            batch.distances.row(i).segment(S + 1, span).array().pow(p).mean();
    const double mean_pow = chain_means.mean();
    double se_pow;
    if (I > 1) {
        se_pow = detail::sample_sd(chain_means) / std::sqrt(static_cast<double>(I));
    } else {
        se_pow = detail::batch_means_se(
            batch.distances.row(0).segment(S + 1, span).array().pow(p).matrix().transpose());
    }
    return detail::root_transform(mean_pow, se_pow, p);
}

// Instantaneous coupling bound at a fixed time t, averaged across chains.
inline Estimate cub_instant(const TrajectoryBatch& batch, double p, int t) {
    if (!(p >= 1.0)) throw InvalidInput("cub_instant: p must be >= 1");
    if (t < 0 || t > batch.horizon()) throw InvalidInput("cub_instant: t out of range");
    const Eigen::VectorXd pw = batch.distances.col(t).array().pow(p);
    const double mean_pow = pw.mean();
    const double se_pow = detail::sample_sd(pw) / std::sqrt(static_cast<double>(pw.size()));
    return detail::root_transform(mean_pow, se_pow, p);
}

// Sum over coordinates of empirical 1-D W_p^p terms (sorted matching is
// optimal in one dimension), to the 1/p.
inline double lower_bound_marginal(const Eigen::MatrixXd& Xs, const Eigen::MatrixXd& Ys, double p) {
    if (Xs.rows() != Ys.rows() || Xs.cols() != Ys.cols())
        throw InvalidInput("lower_bound_marginal: shape mismatch");
    if (Xs.rows() < 2) throw InvalidInput("lower_bound_marginal: need at least 2 samples");
    const Eigen::Index N = Xs.rows();
    double total = 0.0;
    std::vector<double> xcol(N), ycol(N);
    for (Eigen::Index j = 0; j < Xs.cols(); ++j) {
        for (Eigen::Index i = 0; i < N; ++i) {
            xcol[i] = Xs(i, j);
            ycol[i] = Ys(i, j);
        }
        std::sort(xcol.begin(), xcol.end());
        std::sort(ycol.begin(), ycol.end());
        double acc = 0.0;
        for (Eigen::Index i = 0; i < N; ++i) acc += std::pow(std::abs(xcol[i] - ycol[i]), p);
        total += acc / static_cast<double>(N);
    }
    return std::pow(total, 1.0 / p);
}

// Gelbrich moment-matching lower bound: closed-form Gaussian W2 between the
// sample moments of the two clouds.
inline double lower_bound_gelbrich(const Eigen::MatrixXd& Xs, const Eigen::MatrixXd& Ys) {
    if (Xs.cols() != Ys.cols()) throw InvalidInput("lower_bound_gelbrich: dimension mismatch");
    const Eigen::Index d = Xs.cols();
    if (Xs.rows() < d + 1 || Ys.rows() < d + 1)
        throw InvalidInput("lower_bound_gelbrich: need at least d+1 samples per side");
    auto moments = [d](const Eigen::MatrixXd& S) {
        const Eigen::RowVectorXd mean = S.colwise().mean();
        const Eigen::MatrixXd centered = S.rowwise() - mean;
        Eigen::MatrixXd cov =
            centered.transpose() * centered / static_cast<double>(S.rows() - 1);
        cov += 1e-9 * Eigen::MatrixXd::Identity(d, d);
        return std::pair<Eigen::VectorXd, Eigen::MatrixXd>(mean.transpose(), cov);
    };
    const auto [mx, cx] = moments(Xs);
    const auto [my, cy] = moments(Ys);
    return gaussian_w2(mx, cx, my, cy);
}

// max of the coordinatewise and Gelbrich lower bounds (W2 only).
inline double combined_lower_bound(const Eigen::MatrixXd& Xs, const Eigen::MatrixXd& Ys) {
    return std::max(lower_bound_marginal(Xs, Ys, 2.0), lower_bound_gelbrich(Xs, Ys));
}

struct BoundReport {
    double upper_cub = 0.0;
    double upper_se = 0.0;
    double lower_marginal = 0.0;
    double lower_gelbrich = 0.0;
    double lower_combined = 0.0;
    double p = 2.0;
    int num_chains = 0;
    int burn_in = 0;
    int horizon = 0;
    std::string coupling;
    std::uint64_t seed = 0;
    std::optional<double> analytic_truth;
    std::optional<double> analytic_independent_bound;
};

inline BoundReport bound_report(const TrajectoryBatch& batch, const EstimatorConfig& cfg) {
    BoundReport r;
    const Estimate ub = cub(batch, cfg.p, cfg.burn_in, cfg.horizon);
    r.upper_cub = ub.value;
    r.upper_se = ub.se;
    if (batch.has_states()) {
        const auto [X, Y] = batch.marginal_samples(cfg.burn_in);
        r.lower_marginal = lower_bound_marginal(X, Y, 2.0);
        r.lower_gelbrich = lower_bound_gelbrich(X, Y);
        r.lower_combined = std::max(r.lower_marginal, r.lower_gelbrich);
    }
    r.p = cfg.p;
    r.num_chains = cfg.num_chains;
    r.burn_in = cfg.burn_in;
    r.horizon = cfg.horizon;
    r.coupling = batch.coupling_name;
    r.seed = cfg.master_seed;
    return r;
}

// Dobson-style comparison bound on W1 under the capped metric.
struct DobsonReport {
    double alpha_estimate = 0.0;          // one-step contraction ratio on Omega
    double delta_estimate = 0.0;          // E[c(X1, Y1)] from a common stationary point
    double mass_outside = 0.0;            // epsilon = 1 - quantile
    double bound_value = std::numeric_limits<double>::quiet_NaN();
    bool has_bound = false;
    double companion_cub1 = 0.0;
    double companion_cub1_se = 0.0;
};

struct DobsonConfig {
    double quantile = 0.99;
    int num_alpha_pairs = 2000;
};

// k1 is the exact (Metropolis-corrected) kernel, k2 the approximate one.
// q_samples holds stationary draws of the k2 chain, one per row.
inline DobsonReport dobson_bound(const KernelConfig& k1, const KernelConfig& k2,
                                 const Eigen::MatrixXd& q_samples, const EstimatorConfig& cfg,
                                 const DobsonConfig& dob = DobsonConfig{}) {
    k1.validate();
    k2.validate();
    cfg.validate();
    if (q_samples.rows() < 10) throw InvalidInput("dobson_bound: too few stationary samples");
    const Metric capped = Metric::capped(1.0);
    const int d = k1.target->dim;

    DobsonReport rep;
    rep.mass_outside = 1.0 - dob.quantile;

    // Omega: Euclidean ball at the sample mean holding `quantile` of the mass.
    const Eigen::RowVectorXd center = q_samples.colwise().mean();
    std::vector<double> radii(q_samples.rows());
    for (Eigen::Index i = 0; i < q_samples.rows(); ++i)
        radii[i] = (q_samples.row(i) - center).norm();
    std::vector<double> sorted = radii;
    std::sort(sorted.begin(), sorted.end());
    const auto qidx = static_cast<size_t>(dob.quantile * (static_cast<double>(sorted.size()) - 1.0));
    const double radius = sorted[qidx];
    std::vector<int> inside;
    for (size_t i = 0; i < radii.size(); ++i)
        if (radii[i] <= radius) inside.push_back(static_cast<int>(i));

    // alpha_Omega: mean one-step capped-distance ratio under Gamma_1 (a CRN
    // coupling of k1 with itself). Start pairs sit strictly inside the cap
    // (a point of Omega plus a sub-unit offset toward another sample), since
    // pairs saturating the cap show ratio 1 regardless of contraction.
    CoupledKernel gamma1;
    gamma1.left = k1;
    gamma1.right = k1;
    gamma1.coupling = CouplingKind::crn;
    double ratio_sum = 0.0;
    int ratio_count = 0;
    for (int j = 0; j < dob.num_alpha_pairs; ++j) {
        const ChainRng rng(cfg.master_seed ^ 0xd0b50ull, static_cast<std::uint64_t>(j));
        StepRng pick = rng.at(ChainRng::Slot::init, 0);
        const int a = inside[static_cast<int>(pick.uniform() * static_cast<double>(inside.size()))];
        const int b = inside[static_cast<int>(pick.uniform() * static_cast<double>(inside.size()))];
        if (a == b) continue;
        const Eigen::VectorXd x0 = q_samples.row(a);
        Eigen::VectorXd dir = Eigen::VectorXd(q_samples.row(b)) - x0;
        const double gap = dir.norm();
        if (gap <= 0.0) continue;
        const Eigen::VectorXd y0 = x0 + std::min(gap, 0.5 + 0.5 * pick.uniform()) / gap * dir;
        const double c0 = distance(capped, x0, y0);
        if (c0 <= 0.0) continue;
        const PairOutcome out = gamma1.step(x0, y0, rng, 0);
        ratio_sum += distance(capped, out.x, out.y) / c0;
        ++ratio_count;
    }
    if (ratio_count == 0) throw InvalidInput("dobson_bound: no usable start pairs in Omega");
    rep.alpha_estimate = ratio_sum / static_cast<double>(ratio_count);

    // Delta: mean capped distance after one Gamma_Delta step (CRN coupling
    // of k1 and k2 from a common stationary point of the k2 chain).
    CoupledKernel gamma_delta;
    gamma_delta.left = k1;
    gamma_delta.right = k2;
    gamma_delta.coupling = CouplingKind::crn;
    double delta_sum = 0.0;
    for (Eigen::Index i = 0; i < q_samples.rows(); ++i) {
        const ChainRng rng(cfg.master_seed ^ 0xde17a0ull, static_cast<std::uint64_t>(i));
        const Eigen::VectorXd ystar = q_samples.row(i);
        const PairOutcome out = gamma_delta.step(ystar, ystar, rng, 0);
        delta_sum += distance(capped, out.x, out.y);
    }
    rep.delta_estimate = delta_sum / static_cast<double>(q_samples.rows());

    if (rep.alpha_estimate < 1.0) {
        rep.bound_value =
            (rep.delta_estimate + 2.0 * rep.mass_outside) / (1.0 - rep.alpha_estimate);
        rep.has_bound = true;
    }

    // Companion CUB_1 from the same Gamma_1 / Gamma_Delta composition.
    CoupledKernel composed;
    composed.left = k1;
    composed.right = k2;
    composed.coupling = CouplingKind::composed;
    InitCoupling init = InitCoupling::independent(
        [d](StepRng& s) { return s.normal_vector(d); },
        [d](StepRng& s) { return s.normal_vector(d); });
    EstimatorConfig run_cfg = cfg;
    run_cfg.p = 1.0;
    const TrajectoryBatch batch = run_coupled_chains(composed, init, run_cfg, capped);
    const Estimate c1 = cub(batch, 1.0, cfg.burn_in, cfg.horizon);
    rep.companion_cub1 = c1.value;
    rep.companion_cub1_se = c1.se;
    return rep;
}

// Analytic reference values for the stylized Gaussian experiments.
enum class PanelProblem { ar1_vs_isotropic, ula_bias };

struct AnalyticPanel {
    double true_w2 = 0.0;
    double independent_bound = 0.0;
    std::optional<double> dm_bound;
    std::optional<GaussianAnalytic> ula_limit;
};

inline AnalyticPanel analytic_panel(PanelProblem problem, int d, double sigma,
                                    double ar1_correlation = 0.5) {
    if (d < 1) throw InvalidInput("analytic_panel: d must be >= 1");
    Eigen::MatrixXd Sigma(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) Sigma(i, j) = std::pow(ar1_correlation, std::abs(i - j));
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(d);

    AnalyticPanel panel;
    switch (problem) {
        case PanelProblem::ar1_vs_isotropic: {
            panel.true_w2 = gaussian_w2(zero, Sigma, zero, I);
            panel.independent_bound = std::sqrt(Sigma.trace() + static_cast<double>(d));
            break;
        }
        case PanelProblem::ula_bias: {
            const GaussianAnalytic limit = ula_gaussian_limit(Sigma, sigma);
            panel.true_w2 = gaussian_w2(zero, Sigma, zero, limit.cov);
            panel.independent_bound = std::sqrt(Sigma.trace() + limit.cov.trace());
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Sigma);
            const double m = 1.0 / es.eigenvalues().maxCoeff();
            const double L = 1.0 / es.eigenvalues().minCoeff();
            panel.dm_bound = dm_ula_bias_bound(m, L, 0.0, sigma, d);
            panel.ula_limit = limit;
            break;
        }
    }
    return panel;
}

} // namespace wb
