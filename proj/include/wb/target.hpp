#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "wb/errors.hpp"
#include "wb/rng.hpp"

namespace wb {

// Gaussian with explicit moments, used both as an analytic reference and
// for direct stationary sampling.
struct GaussianAnalytic {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

// Logistic regression data, kept around so SGLD can form per-observation
// stochastic gradients. Labels in {-1,+1}.
struct LogisticData {
    Eigen::MatrixXd X; // n x d
    Eigen::VectorXd y; // n
    double prior_variance = 10.0;

    int n() const { return static_cast<int>(X.rows()); }
    int d() const { return static_cast<int>(X.cols()); }
};

// Target distribution known up to an additive constant in the log density.
struct TargetModel {
    int dim = 0;
    std::function<double(const Eigen::VectorXd&)> log_density;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad_log_density;
    std::optional<GaussianAnalytic> analytic;
    std::shared_ptr<const LogisticData> logistic; // set only by logistic_posterior
};

namespace detail {

inline double log1pexp(double t) {
    // log(1 + exp(t)) without overflow
    if (t > 35.0) return t;
    if (t < -35.0) return std::exp(t);
    return std::log1p(std::exp(t));
}

inline double sigmoid(double t) {
    if (t >= 0.0) {
        const double e = std::exp(-t);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(t);
    return e / (1.0 + e);
}

} // namespace detail

// Zero-mean Gaussian with AR(1) covariance Sigma_ij = r^|i-j|.
inline TargetModel ar1_gaussian(int d, double r) {
    if (d < 1) throw InvalidInput("ar1_gaussian: d must be >= 1");
    if (!(r > 0.0 && r < 1.0)) throw InvalidInput("ar1_gaussian: r must lie in (0,1)");
    Eigen::MatrixXd cov(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) cov(i, j) = std::pow(r, std::abs(i - j));
    auto llt = std::make_shared<Eigen::LLT<Eigen::MatrixXd>>(cov);
    if (llt->info() != Eigen::Success) throw NumericalFailure("ar1_gaussian: factorization failed");

    TargetModel t;
    t.dim = d;
    t.log_density = [llt](const Eigen::VectorXd& x) {
        return -0.5 * x.dot(llt->solve(x));
    };
    t.grad_log_density = [llt](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return -llt->solve(x);
    };
    t.analytic = GaussianAnalytic{Eigen::VectorXd::Zero(d), cov};
    return t;
}

inline TargetModel isotropic_gaussian(int d, const Eigen::VectorXd& mean, double variance) {
    if (d < 1 || mean.size() != d) throw InvalidInput("isotropic_gaussian: bad dimension");
    if (!(variance > 0.0)) throw InvalidInput("isotropic_gaussian: variance must be positive");
    TargetModel t;
    t.dim = d;
    t.log_density = [mean, variance](const Eigen::VectorXd& x) {
        return -0.5 * (x - mean).squaredNorm() / variance;
    };
    t.grad_log_density = [mean, variance](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return -(x - mean) / variance;
    };
    t.analytic = GaussianAnalytic{mean, variance * Eigen::MatrixXd::Identity(d, d)};
    return t;
}

inline TargetModel isotropic_gaussian(int d, double mean = 0.0, double variance = 1.0) {
    return isotropic_gaussian(d, Eigen::VectorXd::Constant(d, mean), variance);
}

// Mixture of isotropic Gaussians with a common variance. Responsibilities
// are computed in log space with the max subtracted.
inline TargetModel gaussian_mixture(const std::vector<double>& weights,
                                    const std::vector<Eigen::VectorXd>& means,
                                    double variance) {
    if (weights.empty() || weights.size() != means.size())
        throw InvalidInput("gaussian_mixture: need matching nonempty weights and means");
    if (!(variance > 0.0)) throw InvalidInput("gaussian_mixture: variance must be positive");
    const int d = static_cast<int>(means[0].size());
    double wsum = 0.0;
    for (size_t k = 0; k < weights.size(); ++k) {
        if (!(weights[k] > 0.0)) throw InvalidInput("gaussian_mixture: weights must be positive");
        if (means[k].size() != d) throw InvalidInput("gaussian_mixture: mean dimension mismatch");
        wsum += weights[k];
    }
    if (std::abs(wsum - 1.0) > 1e-12)
        throw InvalidInput("gaussian_mixture: weights must sum to 1");

    const size_t K = weights.size();
    auto log_terms = [weights, means, variance, K](const Eigen::VectorXd& x) {
        Eigen::VectorXd lt(static_cast<Eigen::Index>(K));
        for (size_t k = 0; k < K; ++k)
            lt(static_cast<Eigen::Index>(k)) =
                std::log(weights[k]) - 0.5 * (x - means[k]).squaredNorm() / variance;
        return lt;
    };

    TargetModel t;
    t.dim = d;
    t.log_density = [log_terms](const Eigen::VectorXd& x) {
        const Eigen::VectorXd lt = log_terms(x);
        const double m = lt.maxCoeff();
        return m + std::log((lt.array() - m).exp().sum());
    };
    t.grad_log_density = [log_terms, means, variance, K](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        const Eigen::VectorXd lt = log_terms(x);
        const double m = lt.maxCoeff();
        const Eigen::VectorXd resp = (lt.array() - m).exp() / (lt.array() - m).exp().sum();
        Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
        for (size_t k = 0; k < K; ++k)
            g -= resp(static_cast<Eigen::Index>(k)) * (x - means[k]) / variance;
        return g;
    };
    return t;
}

// Per-observation likelihood gradient sum over a subset of rows, scaled to
// an unbiased full-likelihood estimate, plus the prior gradient.
inline Eigen::VectorXd logistic_grad_estimate(const LogisticData& data,
                                              const Eigen::VectorXd& beta,
                                              const std::vector<int>& batch) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(data.d());
    for (const int i : batch) {
        const double t = data.y(i) * data.X.row(i).dot(beta);
        g += data.y(i) * detail::sigmoid(-t) * data.X.row(i).transpose();
    }
    g *= static_cast<double>(data.n()) / static_cast<double>(batch.size());
    g -= beta / data.prior_variance;
    return g;
}

// Bayesian logistic regression posterior with an isotropic Gaussian prior.
inline TargetModel logistic_posterior(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                      double prior_variance) {
    if (X.rows() < 1 || X.rows() != y.size())
        throw InvalidInput("logistic_posterior: need n >= 1 with matching labels");
    if (!(prior_variance > 0.0))
        throw InvalidInput("logistic_posterior: prior variance must be positive");
    for (Eigen::Index i = 0; i < y.size(); ++i)
        if (y(i) != 1.0 && y(i) != -1.0)
            throw InvalidInput("logistic_posterior: labels must be -1 or +1");

    auto data = std::make_shared<LogisticData>(LogisticData{X, y, prior_variance});
    TargetModel t;
    t.dim = data->d();
    t.log_density = [data](const Eigen::VectorXd& beta) {
        double ll = 0.0;
        for (int i = 0; i < data->n(); ++i)
            ll -= detail::log1pexp(-data->y(i) * data->X.row(i).dot(beta));
        return ll - 0.5 * beta.squaredNorm() / data->prior_variance;
    };
    t.grad_log_density = [data](const Eigen::VectorXd& beta) -> Eigen::VectorXd {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(data->d());
        for (int i = 0; i < data->n(); ++i) {
            const double s = data->y(i) * data->X.row(i).dot(beta);
            g += data->y(i) * detail::sigmoid(-s) * data->X.row(i).transpose();
        }
        return g - beta / data->prior_variance;
    };
    t.logistic = data;
    return t;
}

// Symmetric positive square root via eigendecomposition. Eigenvalues in
// [-1e-10, 0] are clamped to zero; anything more negative is rejected.
inline Eigen::MatrixXd matrix_sqrt_sym(const Eigen::MatrixXd& S) {
    if (S.rows() != S.cols()) throw InvalidInput("matrix_sqrt_sym: matrix must be square");
    if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, S.cwiseAbs().maxCoeff()))
        throw InvalidInput("matrix_sqrt_sym: matrix not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    if (es.info() != Eigen::Success) throw NumericalFailure("matrix_sqrt_sym: eigensolver failed");
    Eigen::VectorXd ev = es.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) < -1e-10) throw InvalidInput("matrix_sqrt_sym: matrix has a negative eigenvalue");
        ev(i) = std::max(ev(i), 0.0);
    }
    return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

// Closed-form W2 between Gaussians (Bures metric plus mean shift).
inline double gaussian_w2(const Eigen::VectorXd& m1, const Eigen::MatrixXd& S1,
                          const Eigen::VectorXd& m2, const Eigen::MatrixXd& S2) {
    if (m1.size() != m2.size() || S1.rows() != S2.rows())
        throw InvalidInput("gaussian_w2: dimension mismatch");
    const Eigen::MatrixXd R1 = matrix_sqrt_sym(S1);
    const Eigen::MatrixXd cross = matrix_sqrt_sym(R1 * S2 * R1);
    const double sq = (m1 - m2).squaredNorm() + S1.trace() + S2.trace() - 2.0 * cross.trace();
    return std::sqrt(std::max(sq, 0.0));
}

inline double gaussian_w2(const GaussianAnalytic& a, const GaussianAnalytic& b) {
    return gaussian_w2(a.mean, a.cov, b.mean, b.cov);
}

// Limiting law of ULA targeting N(0, Sigma) with step size sigma_q:
// N(0, sigma_q^2 (I - B^2)^{-1}) with B = I - (sigma_q^2/2) Sigma^{-1},
// valid only while ||B||_op < 1.
inline GaussianAnalytic ula_gaussian_limit(const Eigen::MatrixXd& Sigma, double sigma_q) {
    if (!(sigma_q > 0.0)) throw InvalidInput("ula_gaussian_limit: step size must be positive");
    const int d = static_cast<int>(Sigma.rows());
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
    Eigen::LLT<Eigen::MatrixXd> llt(Sigma);
    if (llt.info() != Eigen::Success) throw InvalidInput("ula_gaussian_limit: Sigma not SPD");
    const Eigen::MatrixXd B = I - 0.5 * sigma_q * sigma_q * llt.solve(I);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B);
    if (es.eigenvalues().cwiseAbs().maxCoeff() >= 1.0)
        throw StepSizeTooLarge("ula_gaussian_limit: ||B|| >= 1, no limiting law");
    Eigen::MatrixXd cov = sigma_q * sigma_q * (I - B * B).inverse();
    cov = 0.5 * (cov + cov.transpose());
    return GaussianAnalytic{Eigen::VectorXd::Zero(d), cov};
}

// Durmus-Moulines asymptotic ULA bias bound under m-strong convexity, an
// L-Lipschitz gradient and an Ltilde-Lipschitz Hessian. Returns the bound
// on W2 itself (square root of the quadratic form).
inline double dm_ula_bias_bound(double m, double L, double Ltilde, double sigma, int d) {
    if (!(m > 0.0) || !(L >= m)) throw InvalidInput("dm_ula_bias_bound: need 0 < m <= L");
    if (!(sigma > 0.0) || d < 1) throw InvalidInput("dm_ula_bias_bound: bad step/dimension");
    const double gamma = 0.5 * sigma * sigma;
    if (!(gamma < 1.0 / (m + L)))
        throw InvalidInput("dm_ula_bias_bound: step too large, bound inapplicable");
    const double kappa = 2.0 * m * L / (m + L);
    const double L2 = L * L;
    const double L4 = L2 * L2;
    const double inner = 2.0 * L2 + gamma * L4 * (gamma / 6.0 + 1.0 / m) +
                         (1.0 / kappa) * (4.0 * d * Ltilde * Ltilde / 3.0 + gamma * L4 +
                                          4.0 * L4 / (3.0 * m));
    return std::sqrt(2.0 / kappa * gamma * gamma * d * inner);
}

struct GaussianApprox {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    bool converged = false;
    int iterations = 0;
};

// Hessian of the log density by central finite differences of the
// analytic gradient. Adequate at desk scale (d <= 20 or so).
inline Eigen::MatrixXd fd_hessian(const TargetModel& target, const Eigen::VectorXd& x) {
    const int d = target.dim;
    const double h = 1e-5 * (1.0 + x.norm());
    Eigen::MatrixXd H(d, d);
    for (int j = 0; j < d; ++j) {
        Eigen::VectorXd xp = x, xm = x;
        xp(j) += h;
        xm(j) -= h;
        H.col(j) = (target.grad_log_density(xp) - target.grad_log_density(xm)) / (2.0 * h);
    }
    return 0.5 * (H + H.transpose());
}

// Laplace approximation: damped Newton ascent on the log density with
// backtracking, then the inverse negative Hessian at the mode.
inline GaussianApprox laplace_approximation(const TargetModel& target, const Eigen::VectorXd& init,
                                            double tol = 1e-8, int max_iter = 100) {
    Eigen::VectorXd x = init;
    double lp = target.log_density(x);
    GaussianApprox out;
    int iter = 0;
    for (; iter < max_iter; ++iter) {
        const Eigen::VectorXd g = target.grad_log_density(x);
        if (g.norm() <= tol) break;
        Eigen::MatrixXd negH = -fd_hessian(target, x);
        Eigen::LLT<Eigen::MatrixXd> llt(negH);
        Eigen::VectorXd step;
        if (llt.info() == Eigen::Success) {
            step = llt.solve(g);
        } else {
            // Hessian not usable away from the mode; fall back to ascent.
            step = g;
        }
        double scale = 1.0;
        for (int back = 0; back < 60; ++back) {
            const Eigen::VectorXd cand = x + scale * step;
            const double lp_cand = target.log_density(cand);
            if (std::isfinite(lp_cand) && lp_cand >= lp) {
                x = cand;
                lp = lp_cand;
                break;
            }
            scale *= 0.5;
        }
    }
    const Eigen::VectorXd g = target.grad_log_density(x);
    out.mean = x;
    out.iterations = iter;
    out.converged = g.norm() <= tol;
    if (out.converged) {
        const Eigen::MatrixXd negH = -fd_hessian(target, x);
        Eigen::LLT<Eigen::MatrixXd> llt(negH);
        if (llt.info() != Eigen::Success)
            throw ApproximationFailed("laplace_approximation: negative Hessian not SPD at mode");
        out.cov = llt.solve(Eigen::MatrixXd::Identity(target.dim, target.dim));
        out.cov = 0.5 * (out.cov + out.cov.transpose());
    }
    return out;
}

// MALA-ready Gaussian target from explicit moments (used for chains
// targeting a Laplace approximation).
inline TargetModel gaussian_target(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
    auto llt = std::make_shared<Eigen::LLT<Eigen::MatrixXd>>(cov);
    if (llt->info() != Eigen::Success) throw InvalidInput("gaussian_target: covariance not SPD");
    TargetModel t;
    t.dim = static_cast<int>(mean.size());
    t.log_density = [mean, llt](const Eigen::VectorXd& x) {
        return -0.5 * (x - mean).dot(llt->solve(x - mean));
    };
    t.grad_log_density = [mean, llt](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return -llt->solve(x - mean);
    };
    t.analytic = GaussianAnalytic{mean, cov};
    return t;
}

// Exact sampler for a GaussianAnalytic, consuming d normal slots per draw.
inline std::function<Eigen::VectorXd(StepRng&)> gaussian_sampler(const GaussianAnalytic& g) {
    const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(g.cov).matrixL();
    const Eigen::VectorXd mean = g.mean;
    const int d = static_cast<int>(mean.size());
    return [chol, mean, d](StepRng& rng) -> Eigen::VectorXd {
        return mean + chol * rng.normal_vector(d);
    };
}

} // namespace wb
