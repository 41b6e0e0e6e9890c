#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wb/errors.hpp"
#include "wb/kernels.hpp"
#include "wb/metric.hpp"
#include "wb/parallel.hpp"
#include "wb/rng.hpp"
#include "wb/trajectory.hpp"

namespace wb {

enum class CouplingKind { crn, reflection, independent, composed };

inline const char* coupling_name(CouplingKind k) {
    switch (k) {
        case CouplingKind::crn: return "crn";
        case CouplingKind::reflection: return "reflection";
        case CouplingKind::independent: return "independent";
        case CouplingKind::composed: return "composed";
    }
    return "?";
}

struct CouplingOptions {
    // Coincident proposal means degenerate the reflection direction; below
    // this gap the reflection falls back to CRN noise.
    double reflection_degenerate_threshold = 1e-12;
    // Optional switching rule: use CRN noise whenever ||x - y|| drops below
    // this threshold (reflection coupling only).
    std::optional<double> crn_switch_threshold;
    // Gamma_1 flavor for the composed kernel.
    enum class Gamma1 { crn, reflection } gamma1 = Gamma1::crn;
};

struct PairOutcome {
    Eigen::VectorXd x;
    Eigen::VectorXd y;
    bool x_accepted = true;
    bool y_accepted = true;
    std::optional<Eigen::VectorXd> z; // materialized only by the composed kernel
};

namespace detail {

// One side of a coupled step given shared randomness. `shared_batch`
// carries CRN minibatch indices when both sides subsample the same data.
inline StepOutcome coupled_side(const KernelConfig& cfg, const Eigen::VectorXd& state,
                                const Eigen::VectorXd& noise, double u, StepRng& rng,
                                const std::vector<int>* shared_batch) {
    switch (cfg.kind) {
        case KernelKind::mala:
            return mala_update(cfg, state, noise, u);
        case KernelKind::ula:
            return ula_update(cfg, state, noise);
        case KernelKind::sgld: {
            if (shared_batch) return sgld_update(cfg, state, noise, *shared_batch);
            const auto batch = rng.sample_indices(cfg.target->logistic->n(), sgld_batch_size(cfg));
            return sgld_update(cfg, state, noise, batch);
        }
    }
    throw InvalidInput("coupled_side: unknown kernel kind");
}

inline bool uses_uniform(const KernelConfig& cfg) { return cfg.kind == KernelKind::mala; }

inline Eigen::VectorXd reflect_noise(const Eigen::VectorXd& noise, const Eigen::VectorXd& mu_x,
                                     const Eigen::VectorXd& mu_y, double threshold) {
    const Eigen::VectorXd diff = mu_x - mu_y;
    const double gap = diff.norm();
    if (gap < threshold) return noise;
    const Eigen::VectorXd e = diff / gap;
    return noise - 2.0 * e.dot(noise) * e;
}

// Reflection-maximal coupling of the two Gaussian proposals: with the
// maximal-coupling probability the proposals coincide exactly (the pair can
// meet), otherwise the noise is reflected. Marginals stay N(0, I) either way.
inline Eigen::VectorXd reflection_maximal_noise(const Eigen::VectorXd& noise,
                                                const Eigen::VectorXd& mu_x,
                                                const Eigen::VectorXd& mu_y, double sigma,
                                                double u, double threshold) {
    const Eigen::VectorXd z = (mu_x - mu_y) / sigma;
    const double gap = z.norm();
    if (gap < threshold) return noise;
    const double log_ratio = -(noise.dot(z) + 0.5 * gap * gap);
    if (std::log(u) < log_ratio) return noise + z; // proposal points coincide
    return noise - 2.0 * (z.dot(noise) / (gap * gap)) * z;
}

} // namespace detail

// One-step kernel on state pairs whose marginals are the left and right
// kernels (the joint-kernel constraint both estimator modules rely on).
struct CoupledKernel {
    KernelConfig left;
    KernelConfig right;
    CouplingKind coupling = CouplingKind::crn;
    CouplingOptions opts;

    std::string name() const {
        std::string n = coupling_name(coupling);
        if (coupling == CouplingKind::composed)
            n += opts.gamma1 == CouplingOptions::Gamma1::reflection ? "(reflection,crn)" : "(crn,crn)";
        return n;
    }

    void validate() const {
        left.validate();
        right.validate();
        if (left.target->dim != right.target->dim)
            throw InvalidInput("CoupledKernel: dimension mismatch between sides");
        if (coupling == CouplingKind::reflection && left.step_size != right.step_size)
            throw InvalidInput("CoupledKernel: reflection coupling needs a shared step size");
    }

    PairOutcome step(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const ChainRng& rng,
                     std::int64_t t) const {
        switch (coupling) {
            case CouplingKind::crn: return crn_step(x, y, rng, t);
            case CouplingKind::reflection: return reflection_step(x, y, rng, t);
            case CouplingKind::independent: return independent_step(x, y, rng, t);
            case CouplingKind::composed: return composed_step(x, y, rng, t);
        }
        throw InvalidInput("CoupledKernel: unknown coupling kind");
    }

private:
    // Shared-slot draw order: d proposal normals, one MH uniform if either
    // side is Metropolis-corrected, then minibatch indices (left before
    // right; one shared draw when both sides subsample the same data).
    PairOutcome crn_step(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const ChainRng& rng,
                         std::int64_t t) const {
        StepRng s = rng.at(ChainRng::Slot::shared, t);
        const Eigen::VectorXd eps = s.normal_vector(left.target->dim);
        const double u = (detail::uses_uniform(left) || detail::uses_uniform(right))
                             ? s.uniform()
                             : 0.5;
        std::vector<int> shared_batch;
        const bool share_batch = left.kind == KernelKind::sgld && right.kind == KernelKind::sgld &&
                                 left.target->logistic->n() == right.target->logistic->n() &&
                                 left.minibatch_fraction == right.minibatch_fraction;
        if (share_batch)
            shared_batch = s.sample_indices(left.target->logistic->n(), sgld_batch_size(left));
        const StepOutcome lx = detail::coupled_side(left, x, eps, u, s,
                                                    share_batch ? &shared_batch : nullptr);
        const StepOutcome ry = detail::coupled_side(right, y, eps, u, s,
                                                    share_batch ? &shared_batch : nullptr);
        return PairOutcome{lx.next_state, ry.next_state, lx.accepted, ry.accepted, std::nullopt};
    }

    // Reflection-maximal coupling of the proposal step (coincident proposals
    // with the maximal-coupling probability, reflected noise otherwise);
    // accept-reject is CRN-coupled.
    PairOutcome reflection_step(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                const ChainRng& rng, std::int64_t t) const {
        StepRng s = rng.at(ChainRng::Slot::shared, t);
        const Eigen::VectorXd eps = s.normal_vector(left.target->dim);
        const double u = (detail::uses_uniform(left) || detail::uses_uniform(right))
                             ? s.uniform()
                             : 0.5;
        const double u_max = s.uniform();
        const double s2 = left.step_size * left.step_size;
        const Eigen::VectorXd mu_x = x + 0.5 * s2 * left.target->grad_log_density(x);
        const Eigen::VectorXd mu_y = y + 0.5 * s2 * right.target->grad_log_density(y);
        Eigen::VectorXd eps_y;
        if (opts.crn_switch_threshold && (x - y).norm() < *opts.crn_switch_threshold) {
            eps_y = eps;
        } else {
            eps_y = detail::reflection_maximal_noise(eps, mu_x, mu_y, left.step_size, u_max,
                                                     opts.reflection_degenerate_threshold);
        }
        const StepOutcome lx = detail::coupled_side(left, x, eps, u, s, nullptr);
        const StepOutcome ry = detail::coupled_side(right, y, eps_y, u, s, nullptr);
        return PairOutcome{lx.next_state, ry.next_state, lx.accepted, ry.accepted, std::nullopt};
    }

    PairOutcome independent_step(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                 const ChainRng& rng, std::int64_t t) const {
        StepRng sl = rng.at(ChainRng::Slot::left_only, t);
        StepRng sr = rng.at(ChainRng::Slot::right_only, t);
        const StepOutcome lx = kernel_step(left, x, sl);
        const StepOutcome ry = kernel_step(right, y, sr);
        return PairOutcome{lx.next_state, ry.next_state, lx.accepted, ry.accepted, std::nullopt};
    }

    // Gamma_1 / Gamma_Delta composition: (X, Z) ~ Gamma_1(x, y) couples the
    // left kernel with itself, (Z, Y) ~ Gamma_Delta(y) couples the two
    // kernels from the common point y. Gluing is by shared randomness, and
    // Z is materialized on this generic path.
    PairOutcome composed_step(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                              const ChainRng& rng, std::int64_t t) const {
        StepRng s = rng.at(ChainRng::Slot::shared, t);
        const Eigen::VectorXd eps = s.normal_vector(left.target->dim);
        const double u = (detail::uses_uniform(left) || detail::uses_uniform(right))
                             ? s.uniform()
                             : 0.5;
        Eigen::VectorXd eps_z = eps;
        if (opts.gamma1 == CouplingOptions::Gamma1::reflection) {
            const double u_max = s.uniform();
            const double s2 = left.step_size * left.step_size;
            const Eigen::VectorXd mu_x = x + 0.5 * s2 * left.target->grad_log_density(x);
            const Eigen::VectorXd mu_y = y + 0.5 * s2 * left.target->grad_log_density(y);
            eps_z = detail::reflection_maximal_noise(eps, mu_x, mu_y, left.step_size, u_max,
                                                     opts.reflection_degenerate_threshold);
        }
        const StepOutcome lx = detail::coupled_side(left, x, eps, u, s, nullptr);
        const StepOutcome lz = detail::coupled_side(left, y, eps_z, u, s, nullptr);
        const StepOutcome ry = detail::coupled_side(right, y, eps_z, u, s, nullptr);
        PairOutcome out{lx.next_state, ry.next_state, lx.accepted, ry.accepted, std::nullopt};
        out.z = lz.next_state;
        return out;
    }
};

// Convenience constructors mirroring the couplings used in the experiments.

inline CoupledKernel crn_mala_mala(std::shared_ptr<const TargetModel> p,
                                   std::shared_ptr<const TargetModel> q, double sigma_p,
                                   double sigma_q) {
    CoupledKernel ck;
    ck.left = KernelConfig{KernelKind::mala, sigma_p, 1.0, std::move(p)};
    ck.right = KernelConfig{KernelKind::mala, sigma_q, 1.0, std::move(q)};
    ck.coupling = CouplingKind::crn;
    return ck;
}

inline CoupledKernel crn_mala_ula(std::shared_ptr<const TargetModel> p,
                                  std::shared_ptr<const TargetModel> q, double sigma_p,
                                  double sigma_q) {
    CoupledKernel ck;
    ck.left = KernelConfig{KernelKind::mala, sigma_p, 1.0, std::move(p)};
    ck.right = KernelConfig{KernelKind::ula, sigma_q, 1.0, std::move(q)};
    ck.coupling = CouplingKind::crn;
    return ck;
}

// Initial distribution on state pairs.
struct InitCoupling {
    enum class Mode { independent, crn, deterministic };
    Mode mode = Mode::deterministic;
    std::function<Eigen::VectorXd(StepRng&)> sample_left;
    std::function<Eigen::VectorXd(StepRng&)> sample_right;
    Eigen::VectorXd x0;
    Eigen::VectorXd y0;

    static InitCoupling at_points(Eigen::VectorXd x, Eigen::VectorXd y) {
        InitCoupling init;
        init.mode = Mode::deterministic;
        init.x0 = std::move(x);
        init.y0 = std::move(y);
        return init;
    }

    static InitCoupling independent(std::function<Eigen::VectorXd(StepRng&)> left,
                                    std::function<Eigen::VectorXd(StepRng&)> right) {
        InitCoupling init;
        init.mode = Mode::independent;
        init.sample_left = std::move(left);
        init.sample_right = std::move(right);
        return init;
    }

    static InitCoupling crn(std::function<Eigen::VectorXd(StepRng&)> left,
                            std::function<Eigen::VectorXd(StepRng&)> right) {
        InitCoupling init;
        init.mode = Mode::crn;
        init.sample_left = std::move(left);
        init.sample_right = std::move(right);
        return init;
    }

    std::pair<Eigen::VectorXd, Eigen::VectorXd> draw(const ChainRng& rng) const {
        switch (mode) {
            case Mode::deterministic:
                return {x0, y0};
            case Mode::crn: {
                StepRng sl = rng.at(ChainRng::Slot::init, 0);
                StepRng sr = rng.at(ChainRng::Slot::init, 0);
                return {sample_left(sl), sample_right(sr)};
            }
            case Mode::independent: {
                StepRng sl = rng.at(ChainRng::Slot::init, 0);
                StepRng sr = rng.at(ChainRng::Slot::init, 1);
                return {sample_left(sl), sample_right(sr)};
            }
        }
        throw InvalidInput("InitCoupling: unknown mode");
    }
};

// Algorithm driver: I independent coupled chains of length T, chain i on a
// stream derived from (master_seed, i). Chains may run concurrently; output
// ordering is by chain index regardless of schedule.
inline TrajectoryBatch run_coupled_chains(const CoupledKernel& coupled, const InitCoupling& init,
                                          const EstimatorConfig& cfg,
                                          const Metric& metric = Metric::euclidean(),
                                          bool store_states = false) {
    coupled.validate();
    cfg.validate();
    const int I = cfg.num_chains;
    const int T = cfg.horizon;
    const int d = coupled.left.target->dim;

    TrajectoryBatch batch;
    batch.dimension = d;
    batch.metric = metric;
    batch.distances.resize(I, T + 1);
    if (store_states) {
        batch.xs.assign(I, Eigen::MatrixXd(T + 1, d));
        batch.ys.assign(I, Eigen::MatrixXd(T + 1, d));
    }
    batch.coupling_name = coupled.name();
    batch.left_kernel = kernel_name(coupled.left.kind);
    batch.right_kernel = kernel_name(coupled.right.kind);
    batch.seed = cfg.master_seed;

    parallel_for(I, [&](int i) {
        const ChainRng rng(cfg.master_seed, static_cast<std::uint64_t>(i));
        auto [x, y] = init.draw(rng);
        if (x.size() != d || y.size() != d)
            throw InvalidInput("run_coupled_chains: init dimension mismatch");
        batch.distances(i, 0) = distance(metric, x, y);
        if (store_states) {
            batch.xs[i].row(0) = x;
            batch.ys[i].row(0) = y;
        }
        for (int t = 0; t < T; ++t) {
            try {
                PairOutcome out = coupled.step(x, y, rng, t);
                x = std::move(out.x);
                y = std::move(out.y);
            } catch (const std::exception& e) {
                throw NumericalFailure("chain " + std::to_string(i) + " step " +
                                       std::to_string(t) + ": " + e.what());
            }
            batch.distances(i, t + 1) = distance(metric, x, y);
            if (store_states) {
                batch.xs[i].row(t + 1) = x;
                batch.ys[i].row(t + 1) = y;
            }
        }
    });
    return batch;
}

} // namespace wb
