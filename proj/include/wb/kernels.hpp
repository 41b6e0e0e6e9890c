#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wb/errors.hpp"
#include "wb/rng.hpp"
#include "wb/target.hpp"

namespace wb {

enum class KernelKind { mala, ula, sgld };

inline const char* kernel_name(KernelKind k) {
    switch (k) {
        case KernelKind::mala: return "mala";
        case KernelKind::ula: return "ula";
        case KernelKind::sgld: return "sgld";
    }
    return "?";
}

struct KernelConfig {
    KernelKind kind = KernelKind::mala;
    double step_size = 0.1;
    double minibatch_fraction = 1.0; // sgld only
    std::shared_ptr<const TargetModel> target;

    void validate() const {
        if (!target) throw InvalidInput("KernelConfig: missing target");
        if (!(step_size > 0.0)) throw InvalidInput("KernelConfig: step size must be positive");
        if (!(minibatch_fraction > 0.0 && minibatch_fraction <= 1.0))
            throw InvalidInput("KernelConfig: minibatch fraction must lie in (0,1]");
        if (kind == KernelKind::sgld && !target->logistic)
            throw InvalidInput("KernelConfig: sgld needs a target with per-observation structure");
    }
};

struct StepOutcome {
    Eigen::VectorXd next_state;
    Eigen::VectorXd proposal;
    bool accepted = true;
    double log_accept_ratio = 0.0;
};

// Rule-of-thumb MALA step size 0.5 d^{-1/6}.
inline double default_langevin_step(int d) { return 0.5 * std::pow(static_cast<double>(d), -1.0 / 6.0); }

// Euler-Maruyama proposal: state + (sigma^2/2) grad log p(state) + sigma * noise.
inline Eigen::VectorXd langevin_proposal(const TargetModel& target, double sigma,
                                         const Eigen::VectorXd& state,
                                         const Eigen::VectorXd& noise) {
    if (noise.size() != state.size()) throw InvalidInput("langevin_proposal: noise dimension mismatch");
    const Eigen::VectorXd g = target.grad_log_density(state);
    if (!g.allFinite()) throw NumericalFailure("langevin_proposal: non-finite gradient");
    return state + 0.5 * sigma * sigma * g + sigma * noise;
}

// log [ p(x*) q(x | x*) / ( p(x) q(x* | x) ) ] with q the Gaussian Langevin
// proposal density; evaluated wholly in log space.
inline double mala_log_accept(const TargetModel& target, double sigma,
                              const Eigen::VectorXd& current, const Eigen::VectorXd& proposal) {
    if (current.size() != proposal.size()) throw InvalidInput("mala_log_accept: dimension mismatch");
    const double s2 = sigma * sigma;
    const Eigen::VectorXd mu_fwd = current + 0.5 * s2 * target.grad_log_density(current);
    const Eigen::VectorXd mu_bwd = proposal + 0.5 * s2 * target.grad_log_density(proposal);
    const double lp_prop = target.log_density(proposal);
    const double lp_cur = target.log_density(current);
    if (!std::isfinite(lp_prop) || !std::isfinite(lp_cur))
        throw NumericalFailure("mala_log_accept: non-finite log density");
    const double lq_fwd = -(proposal - mu_fwd).squaredNorm() / (2.0 * s2);
    const double lq_bwd = -(current - mu_bwd).squaredNorm() / (2.0 * s2);
    return lp_prop + lq_bwd - lp_cur - lq_fwd;
}

// Deterministic kernel updates given externally drawn randomness. The
// couplings orchestrate shared draws and call these directly.

inline StepOutcome mala_update(const KernelConfig& cfg, const Eigen::VectorXd& state,
                               const Eigen::VectorXd& noise, double u) {
    StepOutcome out;
    out.proposal = langevin_proposal(*cfg.target, cfg.step_size, state, noise);
    out.log_accept_ratio = mala_log_accept(*cfg.target, cfg.step_size, state, out.proposal);
    out.accepted = std::log(u) <= out.log_accept_ratio;
    out.next_state = out.accepted ? out.proposal : state;
    return out;
}

inline StepOutcome ula_update(const KernelConfig& cfg, const Eigen::VectorXd& state,
                              const Eigen::VectorXd& noise) {
    StepOutcome out;
    out.proposal = langevin_proposal(*cfg.target, cfg.step_size, state, noise);
    out.accepted = true;
    out.next_state = out.proposal;
    return out;
}

inline StepOutcome sgld_update(const KernelConfig& cfg, const Eigen::VectorXd& state,
                               const Eigen::VectorXd& noise, const std::vector<int>& batch) {
    if (!cfg.target->logistic)
        throw InvalidInput("sgld_update: target lacks per-observation structure");
    const Eigen::VectorXd g = logistic_grad_estimate(*cfg.target->logistic, state, batch);
    if (!g.allFinite()) throw NumericalFailure("sgld_update: non-finite gradient estimate");
    StepOutcome out;
    out.proposal = state + 0.5 * cfg.step_size * cfg.step_size * g + cfg.step_size * noise;
    out.accepted = true;
    out.next_state = out.proposal;
    return out;
}

inline int sgld_batch_size(const KernelConfig& cfg) {
    const int n = cfg.target->logistic->n();
    return static_cast<int>(std::ceil(cfg.minibatch_fraction * n));
}

// One marginal step. RNG contract: d proposal normals, then one uniform
// (MALA only), then one minibatch draw (SGLD only), in that order.
inline StepOutcome kernel_step(const KernelConfig& cfg, const Eigen::VectorXd& state,
                               StepRng& rng) {
    cfg.validate();
    const Eigen::VectorXd noise = rng.normal_vector(cfg.target->dim);
    switch (cfg.kind) {
        case KernelKind::mala: {
            const double u = rng.uniform();
            return mala_update(cfg, state, noise, u);
        }
        case KernelKind::ula:
            return ula_update(cfg, state, noise);
        case KernelKind::sgld: {
            const auto batch = rng.sample_indices(cfg.target->logistic->n(), sgld_batch_size(cfg));
            return sgld_update(cfg, state, noise, batch);
        }
    }
    throw InvalidInput("kernel_step: unknown kernel kind");
}

inline StepOutcome mala_step(const KernelConfig& cfg, const Eigen::VectorXd& state, StepRng& rng) {
    if (cfg.kind != KernelKind::mala) throw InvalidInput("mala_step: config kind is not mala");
    return kernel_step(cfg, state, rng);
}

inline StepOutcome ula_step(const KernelConfig& cfg, const Eigen::VectorXd& state, StepRng& rng) {
    if (cfg.kind != KernelKind::ula) throw InvalidInput("ula_step: config kind is not ula");
    return kernel_step(cfg, state, rng);
}

inline StepOutcome sgld_step(const KernelConfig& cfg, const Eigen::VectorXd& state, StepRng& rng) {
    if (cfg.kind != KernelKind::sgld) throw InvalidInput("sgld_step: config kind is not sgld");
    return kernel_step(cfg, state, rng);
}

} // namespace wb
