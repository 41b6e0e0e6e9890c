#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wb/couplings.hpp"
#include "wb/csv.hpp"
#include "wb/errors.hpp"
#include "wb/estimators.hpp"
#include "wb/kernels.hpp"
#include "wb/ot.hpp"
#include "wb/target.hpp"

namespace wb {

inline constexpr const char* kVersion = "0.1.0";

struct ExperimentConfig {
    std::string experiment;
    std::vector<int> dims;
    int chains = -1;   // -1: per-experiment default
    int burn_in = -1;
    int horizon = -1;
    CouplingKind coupling = CouplingKind::crn;
    std::optional<double> step; // explicit sigma; otherwise 0.5 d^{-1/6}
    double p = 2.0;
    std::uint64_t seed = 1;
    std::string out_path;
    std::string dataset;
    bool standardize = true;
    double prior_variance = 10.0;
    std::vector<double> lambda_grid = {1.0, 0.1, 0.01}; // units of median pairwise cost

    double sigma_for(int d) const { return step ? *step : default_langevin_step(d); }
};

struct ResultRow {
    std::string experiment;
    int d = 0;
    int t_or_horizon = 0;
    std::string coupling;
    std::string estimator;
    double value = 0.0;
    double se = 0.0;
    std::optional<double> analytic;
    double runtime_ms = 0.0; // reported in summaries, excluded from the CSV body
};

namespace detail {

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

inline ResultRow row(const std::string& experiment, int d, int t, const std::string& coupling,
                     const std::string& estimator, double value, double se,
                     std::optional<double> analytic = std::nullopt, double runtime_ms = 0.0) {
    return ResultRow{experiment, d, t, coupling, estimator, value, se, analytic, runtime_ms};
}

} // namespace detail

// CSV serialization: `#`-prefixed metadata lines, then a fixed column
// order. Runtimes are excluded from the body so identical (experiment,
// seed) invocations produce byte-identical files.
inline std::string results_to_csv(const std::vector<ResultRow>& rows,
                                  const ExperimentConfig& cfg) {
    std::ostringstream out;
    out.precision(12);
    out << "# wasserbound " << kVersion << "\n";
    out << "# experiment=" << cfg.experiment << " seed=" << cfg.seed << " p=" << cfg.p << "\n";
    out << "# chains=" << cfg.chains << " burnin=" << cfg.burn_in << " horizon=" << cfg.horizon
        << " coupling=" << coupling_name(cfg.coupling)
        << " step=" << (cfg.step ? std::to_string(*cfg.step) : std::string("auto"))
        << "\n";
    out << "experiment,d,t,coupling,estimator,value,se,analytic\n";
    for (const auto& r : rows) {
        out << r.experiment << "," << r.d << "," << r.t_or_horizon << "," << r.coupling << ","
            << r.estimator << "," << r.value << "," << r.se << ",";
        if (r.analytic) out << *r.analytic;
        out << "\n";
    }
    return out.str();
}

// Fig. 1: AR(1)-vs-isotropic Gaussians, CRN MALA-MALA from stationary
// initializations, against the analytic truth, the independent-coupling
// bound, the empirical-Wasserstein baseline and the combined lower bound.
inline std::vector<ResultRow> run_gaussian_ar1(const ExperimentConfig& cfg) {
    std::vector<int> dims = cfg.dims.empty() ? std::vector<int>{5, 20, 50, 100} : cfg.dims;
    const int I = cfg.chains > 0 ? cfg.chains : 5;
    const int S = cfg.burn_in >= 0 ? cfg.burn_in : 0;
    const int T = cfg.horizon > 0 ? cfg.horizon : 1000;
    const bool trajectory_mode = dims.size() == 1;

    std::vector<ResultRow> rows;
    for (const int d : dims) {
        detail::Stopwatch watch;
        const double sigma = cfg.sigma_for(d);
        auto P = std::make_shared<const TargetModel>(ar1_gaussian(d, 0.5));
        auto Q = std::make_shared<const TargetModel>(isotropic_gaussian(d));
        CoupledKernel ck = crn_mala_mala(P, Q, sigma, sigma);
        ck.coupling = cfg.coupling;
        const InitCoupling init = InitCoupling::independent(gaussian_sampler(*P->analytic),
                                                            gaussian_sampler(*Q->analytic));
        EstimatorConfig est{cfg.p, I, S, T, cfg.seed};
        const TrajectoryBatch batch =
            run_coupled_chains(ck, init, est, Metric::euclidean(), true);

        const AnalyticPanel panel = analytic_panel(PanelProblem::ar1_vs_isotropic, d, sigma);
        if (trajectory_mode) {
            for (int t = 1; t <= T; t = std::max(t + 1, (t * 5) / 4)) {
                if (t <= S) continue;
                const Estimate e = cub(batch, cfg.p, S, t);
                rows.push_back(detail::row(cfg.experiment, d, t, batch.coupling_name, "cub",
                                           e.value, e.se, panel.true_w2));
            }
        }
        const Estimate e = cub(batch, cfg.p, S, T);
        const double ms = watch.ms();
        rows.push_back(detail::row(cfg.experiment, d, T, batch.coupling_name, "cub", e.value,
                                   e.se, panel.true_w2, ms));
        rows.push_back(detail::row(cfg.experiment, d, T, "analytic", "true_w2", panel.true_w2,
                                   0.0, panel.true_w2));
        rows.push_back(detail::row(cfg.experiment, d, T, "analytic", "independent_bound",
                                   panel.independent_bound, 0.0, panel.independent_bound));

        const auto [Xs, Ys] = batch.marginal_samples(S);
        rows.push_back(detail::row(cfg.experiment, d, T, batch.coupling_name,
                                   "lower_bound_marginal", lower_bound_marginal(Xs, Ys, 2.0), 0.0));
        rows.push_back(detail::row(cfg.experiment, d, T, batch.coupling_name,
                                   "lower_bound_gelbrich", lower_bound_gelbrich(Xs, Ys), 0.0));
        rows.push_back(detail::row(cfg.experiment, d, T, batch.coupling_name,
                                   "lower_bound_combined", combined_lower_bound(Xs, Ys), 0.0,
                                   panel.true_w2));

        const int N = std::min(T, 500);
        const Estimate emp = empirical_wp_mean(gaussian_sampler(*P->analytic),
                                               gaussian_sampler(*Q->analytic), N, cfg.p,
                                               Metric::euclidean(), I, cfg.seed ^ 0xe31ull);
        rows.push_back(detail::row(cfg.experiment, d, N, "empirical", "empirical_wp_mean",
                                   emp.value, emp.se, panel.true_w2));
    }
    return rows;
}

// Fig. 2: asymptotic ULA bias against MALA on the AR(1) Gaussian, with the
// analytic limit, the Durmus-Moulines bound and the independent bound.
inline std::vector<ResultRow> run_ula_bias(const ExperimentConfig& cfg) {
    std::vector<int> dims = cfg.dims.empty() ? std::vector<int>{2, 5, 10, 20} : cfg.dims;
    const int I = cfg.chains > 0 ? cfg.chains : 10;
    const int S = cfg.burn_in >= 0 ? cfg.burn_in : 1000;
    const int T = cfg.horizon > 0 ? cfg.horizon : 3000;

    std::vector<ResultRow> rows;
    for (const int d : dims) {
        detail::Stopwatch watch;
        const double sigma = cfg.sigma_for(d);
        AnalyticPanel panel;
        try {
            panel = analytic_panel(PanelProblem::ula_bias, d, sigma);
        } catch (const StepSizeTooLarge&) {
            rows.push_back(detail::row(cfg.experiment, d, T, "analytic",
                                       "skipped_step_size_too_large", 0.0, 0.0));
            continue;
        }
        auto P = std::make_shared<const TargetModel>(ar1_gaussian(d, 0.5));
        CoupledKernel ck = crn_mala_ula(P, P, sigma, sigma);
        auto std_normal = [d](StepRng& s) { return s.normal_vector(d); };
        const InitCoupling init = InitCoupling::independent(std_normal, std_normal);
        EstimatorConfig est{cfg.p, I, S, T, cfg.seed};
        const TrajectoryBatch batch = run_coupled_chains(ck, init, est);
        const Estimate e = cub(batch, cfg.p, S, T);
        const double ms = watch.ms();
        rows.push_back(detail::row(cfg.experiment, d, T, batch.coupling_name, "cub", e.value,
                                   e.se, panel.true_w2, ms));
        rows.push_back(detail::row(cfg.experiment, d, T, "analytic", "true_w2", panel.true_w2,
                                   0.0, panel.true_w2));
        rows.push_back(detail::row(cfg.experiment, d, T, "analytic", "dm_bound",
                                   panel.dm_bound.value(), 0.0, panel.dm_bound));
        rows.push_back(detail::row(cfg.experiment, d, T, "analytic", "independent_bound",
                                   panel.independent_bound, 0.0, panel.independent_bound));
    }
    return rows;
}

namespace detail {

// Stationary-like initial draw produced by a long marginal MALA pre-run
// from a mode, used for the mixture targets that lack direct samplers.
inline std::function<Eigen::VectorXd(StepRng&)> mala_prerun_sampler(
    std::shared_ptr<const TargetModel> target, double sigma, Eigen::VectorXd start, int steps) {
    KernelConfig k{KernelKind::mala, sigma, 1.0, std::move(target)};
    return [k, start, steps](StepRng& s) {
        Eigen::VectorXd x = start;
        for (int t = 0; t < steps; ++t) x = kernel_step(k, x, s).next_state;
        return x;
    };
}

} // namespace detail

// Fig. 3 scenarios: (A) bimodal-vs-unimodal in d=4 from a common mode with
// CRN, isolating chain-averaging effects; (B) two 1-D bimodal targets with
// CRN versus reflection couplings.
inline std::vector<ResultRow> run_bimodal(const ExperimentConfig& cfg) {
    std::vector<ResultRow> rows;

    { // scenario A
        const int d = 4;
        const int T = cfg.horizon > 0 ? cfg.horizon : 1000;
        const int I = cfg.chains > 0 ? cfg.chains : 100;
        const double sigma = cfg.step ? *cfg.step : std::pow(static_cast<double>(d), -1.0 / 6.0);
        const Eigen::VectorXd mode = Eigen::VectorXd::Ones(d);
        auto P = std::make_shared<const TargetModel>(
            gaussian_mixture({0.5, 0.5}, {mode, -mode}, 1.0));
        auto Q = std::make_shared<const TargetModel>(isotropic_gaussian(d, mode, 1.0));
        const CoupledKernel ck = crn_mala_mala(P, Q, sigma, sigma);
        const InitCoupling init = InitCoupling::at_points(mode, mode);
        EstimatorConfig est{1.0, I, 0, T, cfg.seed};
        const TrajectoryBatch batch = run_coupled_chains(ck, init, est);
        for (int t = 0; t <= T; t += 10) {
            rows.push_back(detail::row(cfg.experiment, d, t, batch.coupling_name,
                                       "instant_single_chain", batch.distances(0, t), 0.0));
            const Estimate avg = cub_instant(batch, 1.0, t);
            rows.push_back(detail::row(cfg.experiment, d, t, batch.coupling_name,
                                       "instant_chain_avg", avg.value, avg.se));
        }
        EstimatorConfig single{1.0, 1, 0, T, cfg.seed ^ 0xa1ull};
        const TrajectoryBatch one = run_coupled_chains(ck, init, single);
        const Estimate time_avg = cub(one, 1.0, T / 10, T);
        rows.push_back(detail::row(cfg.experiment, d, T, one.coupling_name,
                                   "cub1_single_chain_time_avg", time_avg.value, time_avg.se));
    }

    { // scenario B
        const int T = cfg.horizon > 0 ? cfg.horizon : 10000;
        const int I = cfg.chains > 0 ? cfg.chains : 1000;
        const double sigma = cfg.step ? *cfg.step : 2.0;
        const Eigen::VectorXd two = Eigen::VectorXd::Constant(1, 2.0);
        const Eigen::VectorXd one_v = Eigen::VectorXd::Constant(1, 1.0);
        auto P = std::make_shared<const TargetModel>(gaussian_mixture({0.5, 0.5}, {two, -two}, 1.0));
        auto Q = std::make_shared<const TargetModel>(
            gaussian_mixture({0.5, 0.5}, {one_v, -one_v}, 1.0));
        const InitCoupling init = InitCoupling::independent(
            detail::mala_prerun_sampler(P, sigma, two, 10000),
            detail::mala_prerun_sampler(Q, sigma, one_v, 10000));
        for (const CouplingKind kind : {CouplingKind::crn, CouplingKind::reflection}) {
            detail::Stopwatch watch;
            CoupledKernel ck = crn_mala_mala(P, Q, sigma, sigma);
            ck.coupling = kind;
            EstimatorConfig est{1.0, I, 0, T, cfg.seed};
            const TrajectoryBatch batch = run_coupled_chains(ck, init, est);
            const Estimate e = cub(batch, 1.0, 0, T);
            rows.push_back(detail::row(cfg.experiment, 1, T, batch.coupling_name, "cub1", e.value,
                                       e.se, std::nullopt, watch.ms()));
            for (int t = 0; t <= T; t += std::max(1, T / 100)) {
                const Estimate avg = cub_instant(batch, 1.0, t);
                rows.push_back(detail::row(cfg.experiment, 1, t, batch.coupling_name,
                                           "instant_chain_avg", avg.value, avg.se));
            }
        }
    }
    return rows;
}

// Sinkhorn-vs-exact comparison on the d=10 stylized pair, with the CUB
// bound computed from a CRN coupled run for reference.
inline std::vector<ResultRow> run_ot_compare(const ExperimentConfig& cfg) {
    const int d = cfg.dims.empty() ? 10 : cfg.dims[0];
    const int I = cfg.chains > 0 ? cfg.chains : 10;
    const int S = cfg.burn_in >= 0 ? cfg.burn_in : 100;
    const int T = cfg.horizon > 0 ? cfg.horizon : 500;
    const double sigma = cfg.sigma_for(d);

    std::vector<ResultRow> rows;
    auto P = std::make_shared<const TargetModel>(ar1_gaussian(d, 0.5));
    auto Q = std::make_shared<const TargetModel>(isotropic_gaussian(d));
    const CoupledKernel ck = crn_mala_mala(P, Q, sigma, sigma);
    const InitCoupling init = InitCoupling::independent(gaussian_sampler(*P->analytic),
                                                        gaussian_sampler(*Q->analytic));
    EstimatorConfig est{cfg.p, I, S, T, cfg.seed};
    const TrajectoryBatch batch = run_coupled_chains(ck, init, est);
    const Estimate e = cub(batch, cfg.p, S, T);
    const AnalyticPanel panel = analytic_panel(PanelProblem::ar1_vs_isotropic, d, sigma);
    rows.push_back(detail::row(cfg.experiment, d, T, batch.coupling_name, "cub", e.value, e.se,
                               panel.true_w2));
    rows.push_back(
        detail::row(cfg.experiment, d, T, "analytic", "true_w2", panel.true_w2, 0.0, panel.true_w2));
    rows.push_back(detail::row(cfg.experiment, d, T, "analytic", "independent_bound",
                               panel.independent_bound, 0.0, panel.independent_bound));

    const int N = 500;
    const ChainRng rng(cfg.seed ^ 0x07c0ull, 0);
    StepRng sx = rng.at(ChainRng::Slot::left_only, 0);
    StepRng sy = rng.at(ChainRng::Slot::right_only, 0);
    const auto sp = gaussian_sampler(*P->analytic);
    const auto sq = gaussian_sampler(*Q->analytic);
    Eigen::MatrixXd Xs(N, d), Ys(N, d);
    for (int i = 0; i < N; ++i) Xs.row(i) = sp(sx);
    for (int i = 0; i < N; ++i) Ys.row(i) = sq(sy);

    const double exact = exact_empirical_wp(Xs, Ys, cfg.p);
    rows.push_back(detail::row(cfg.experiment, d, N, "empirical", "exact_empirical_wp", exact, 0.0,
                               panel.true_w2));
    const double med = median_pairwise_cost(Xs, Ys, cfg.p);
    for (const double scale : cfg.lambda_grid) {
        detail::Stopwatch watch;
        SinkhornConfig sc;
        sc.regularization = scale * med;
        const TransportResult tr = sinkhorn(Xs, Ys, cfg.p, Metric::euclidean(), sc);
        const double ms = watch.ms();
        std::ostringstream name;
        name.precision(6);
        name << "sinkhorn_cost_lambda=" << scale << "xmed";
        rows.push_back(detail::row(cfg.experiment, d, N, "empirical", name.str(), tr.cost,
                                   tr.converged ? 0.0 : -1.0, exact, ms));
        std::ostringstream iters;
        iters.precision(6);
        iters << "sinkhorn_iterations_lambda=" << scale << "xmed";
        rows.push_back(detail::row(cfg.experiment, d, N, "empirical", iters.str(),
                                   static_cast<double>(tr.iterations), 0.0, std::nullopt, ms));
    }
    return rows;
}

// Synthetic logistic data drawn from the model itself.
inline LogisticDataset synthetic_logistic_data(int n, int d, std::uint64_t seed) {
    const ChainRng rng(seed, 0);
    StepRng s = rng.at(ChainRng::Slot::init, 7);
    LogisticDataset ds;
    ds.X.resize(n, d);
    ds.y.resize(n);
    Eigen::VectorXd beta(d);
    for (int j = 0; j < d; ++j) beta(j) = (j % 2 == 0 ? 1.0 : -1.0) / std::sqrt(static_cast<double>(d));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) ds.X(i, j) = s.normal();
        const double prob = detail::sigmoid(ds.X.row(i).dot(beta));
        ds.y(i) = s.uniform() < prob ? 1.0 : -1.0;
    }
    return ds;
}

// Tall-data pipeline: MALA reference chain CRN-coupled against ULA, SGLD at
// two subsampling rates and a MALA chain on the Laplace approximation.
inline std::vector<ResultRow> run_logistic(const ExperimentConfig& cfg) {
    LogisticDataset ds = cfg.dataset.empty()
                             ? synthetic_logistic_data(500, 5, cfg.seed ^ 0xda7aull)
                             : load_logistic_csv(cfg.dataset, cfg.standardize);
    const int d = static_cast<int>(ds.X.cols());
    const int I = cfg.chains > 0 ? cfg.chains : 20;
    const int S = cfg.burn_in >= 0 ? cfg.burn_in : 500;
    const int T = cfg.horizon > 0 ? cfg.horizon : 1500;
    const double sigma = cfg.step ? *cfg.step : 0.05;

    auto posterior =
        std::make_shared<const TargetModel>(logistic_posterior(ds.X, ds.y, cfg.prior_variance));

    std::vector<ResultRow> rows;
    GaussianApprox laplace;
    bool laplace_ok = true;
    try {
        // fd-hessian noise caps how far the gradient can be polished on tall data
        laplace = laplace_approximation(*posterior, Eigen::VectorXd::Zero(d), 1e-6, 200);
        laplace_ok = laplace.converged;
    } catch (const std::exception&) {
        laplace_ok = false;
    }
    const Eigen::VectorXd start = laplace_ok ? laplace.mean : Eigen::VectorXd::Zero(d);

    struct Comparison {
        std::string name;
        KernelConfig right;
    };
    std::vector<Comparison> comparisons;
    comparisons.push_back({"ula", KernelConfig{KernelKind::ula, sigma, 1.0, posterior}});
    comparisons.push_back({"sgld_10pct", KernelConfig{KernelKind::sgld, sigma, 0.1, posterior}});
    comparisons.push_back({"sgld_50pct", KernelConfig{KernelKind::sgld, sigma, 0.5, posterior}});
    if (laplace_ok) {
        auto approx = std::make_shared<const TargetModel>(gaussian_target(laplace.mean, laplace.cov));
        comparisons.push_back({"laplace_mala", KernelConfig{KernelKind::mala, sigma, 1.0, approx}});
    } else {
        rows.push_back(detail::row(cfg.experiment, d, T, "crn", "laplace_failed", 0.0, 0.0));
    }

    for (const auto& comp : comparisons) {
        detail::Stopwatch watch;
        CoupledKernel ck;
        ck.left = KernelConfig{KernelKind::mala, sigma, 1.0, posterior};
        ck.right = comp.right;
        ck.coupling = cfg.coupling;
        const InitCoupling init = InitCoupling::at_points(start, start);
        EstimatorConfig est{cfg.p, I, S, T, cfg.seed};
        const TrajectoryBatch batch = run_coupled_chains(ck, init, est, Metric::euclidean(), true);
        const Estimate e = cub(batch, cfg.p, S, T);
        const double ms = watch.ms();
        rows.push_back(detail::row(cfg.experiment, d, T, batch.coupling_name, "cub_" + comp.name,
                                   e.value, e.se, std::nullopt, ms));
        const auto [Xs, Ys] = batch.marginal_samples(S);
        rows.push_back(detail::row(cfg.experiment, d, T, batch.coupling_name,
                                   "lower_bound_combined_" + comp.name,
                                   combined_lower_bound(Xs, Ys), 0.0));
    }
    return rows;
}

inline std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
    if (cfg.experiment == "gaussian-ar1") return run_gaussian_ar1(cfg);
    if (cfg.experiment == "ula-bias") return run_ula_bias(cfg);
    if (cfg.experiment == "bimodal" || cfg.experiment == "coupling-compare") return run_bimodal(cfg);
    if (cfg.experiment == "ot-compare") return run_ot_compare(cfg);
    if (cfg.experiment == "logistic") return run_logistic(cfg);
    throw InvalidInput("run_experiment: unknown experiment " + cfg.experiment);
}

} // namespace wb
