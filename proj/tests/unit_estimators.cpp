#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <memory>

#include "support/oracles.hpp"
#include "wb/estimators.hpp"
#include "wb/ot.hpp"

using namespace wb;

namespace {

std::shared_ptr<const TargetModel> shared_target(TargetModel t) {
    return std::make_shared<const TargetModel>(std::move(t));
}

TrajectoryBatch batch_from(const Eigen::MatrixXd& distances) {
    TrajectoryBatch b;
    b.dimension = 1;
    b.distances = distances;
    return b;
}

} // namespace

TEST_CASE("cub trivial cases") {
    CHECK(cub(batch_from(Eigen::MatrixXd::Zero(3, 11)), 2.0, 0, 10).value == 0.0);

    Eigen::MatrixXd d(1, 3);
    d << 9.0, 1.0, 7.0;
    const Estimate single = cub(batch_from(d), 2.0, 1, 2); // only t = T contributes
    CHECK(single.value == doctest::Approx(7.0));

    Eigen::MatrixXd two(1, 3);
    two << 0.0, 3.0, 4.0;
    CHECK(cub(batch_from(two), 2.0, 0, 2).value == doctest::Approx(std::sqrt(12.5)));
    CHECK(cub(batch_from(two), 1.0, 0, 2).value == doctest::Approx(3.5));
    CHECK_THROWS_AS(cub(batch_from(two), 2.0, 2, 2), InvalidInput);
    CHECK_THROWS_AS(cub(batch_from(two), 0.5, 0, 2), InvalidInput);
}

TEST_CASE("cub_instant matches its definition") {
    Eigen::MatrixXd d(3, 4);
    d << 0, 1, 2, 3, 0, 2, 2, 5, 0, 3, 2, 1;
    const TrajectoryBatch b = batch_from(d);
    CHECK(cub_instant(b, 1.0, 0).value == 0.0);
    CHECK(cub_instant(b, 1.0, 1).value == doctest::Approx(2.0));
    CHECK(cub_instant(b, 2.0, 2).value == doctest::Approx(2.0));
    // equals cub over the single-time window S = t-1, T = t
    const Estimate a = cub_instant(b, 2.0, 3);
    const Estimate c = cub(b, 2.0, 2, 3);
    CHECK(a.value == doctest::Approx(c.value));
}

TEST_CASE("cub standard error shrinks with the chain count") {
    std::mt19937_64 eng(5);
    std::normal_distribution<double> normal(2.0, 0.3);
    auto make = [&](int I) {
        Eigen::MatrixXd d(I, 101);
        for (int i = 0; i < I; ++i)
            for (int t = 0; t <= 100; ++t) d(i, t) = std::abs(normal(eng));
        return batch_from(d);
    };
    const Estimate small = cub(make(10), 2.0, 0, 100);
    const Estimate large = cub(make(160), 2.0, 0, 100);
    CHECK(large.se < small.se);
    const double ratio = small.se / large.se; // expect about 4 = sqrt(160/10)
    CHECK(ratio > 1.5);
    CHECK(ratio < 12.0);
}

TEST_CASE("post-convergence cub trace shows no drift") {
    auto P = shared_target(ar1_gaussian(2, 0.5));
    auto Q = shared_target(isotropic_gaussian(2));
    const CoupledKernel ck = crn_mala_mala(P, Q, 0.4, 0.4);
    const InitCoupling init = InitCoupling::independent(gaussian_sampler(*P->analytic),
                                                        gaussian_sampler(*Q->analytic));
    EstimatorConfig cfg{2.0, 20, 200, 1200, 12};
    const TrajectoryBatch batch = run_coupled_chains(ck, init, cfg);
    // least-squares slope of the instantaneous mean over the kept window
    const int S = 200, T = 1200;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int n = T - S;
    for (int t = S + 1; t <= T; ++t) {
        const double x = static_cast<double>(t - S);
        const double y = cub_instant(batch, 2.0, t).value;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double level = sy / n;
    CHECK(std::abs(slope) * n < 0.2 * level);
}

TEST_CASE("marginal lower bound examples") {
    Eigen::MatrixXd xs(4, 2);
    xs << 0, 1, 2, 3, -1, 0.5, 4, 4;
    Eigen::MatrixXd ys = xs;
    ys.row(0).swap(ys.row(2));
    CHECK(lower_bound_marginal(xs, ys, 2.0) == doctest::Approx(0.0).epsilon(1e-12));

    Eigen::MatrixXd a(2, 1), b(2, 1);
    a << 0, 1;
    b << 2, 3;
    CHECK(lower_bound_marginal(a, b, 2.0) == doctest::Approx(2.0));
    // in one dimension the sorted matching is the exact empirical distance
    StepRng rng(6);
    Eigen::MatrixXd ra(40, 1), rb(40, 1);
    for (int i = 0; i < 40; ++i) {
        ra(i, 0) = rng.normal();
        rb(i, 0) = 2.0 * rng.normal() + 1.0;
    }
    CHECK(lower_bound_marginal(ra, rb, 2.0) ==
          doctest::Approx(exact_empirical_wp(ra, rb, 2.0)).epsilon(1e-10));
}

TEST_CASE("gelbrich lower bound examples") {
    StepRng rng(7);
    Eigen::MatrixXd xs(200, 2);
    for (int i = 0; i < 200; ++i) xs.row(i) = rng.normal_vector(2);
    CHECK(lower_bound_gelbrich(xs, xs) < 1e-6);

    Eigen::MatrixXd shifted = xs;
    shifted.col(0).array() += 3.0;
    shifted.col(1).array() += 4.0;
    CHECK(lower_bound_gelbrich(xs, shifted) == doctest::Approx(5.0).epsilon(1e-9));

    // large-sample check against the analytic gaussian W2
    const TargetModel P = ar1_gaussian(5, 0.5);
    auto sp = gaussian_sampler(*P.analytic);
    const int N = 100000;
    Eigen::MatrixXd gx(N, 5), gy(N, 5);
    StepRng ra(8), rb(9);
    for (int i = 0; i < N; ++i) {
        gx.row(i) = sp(ra);
        gy.row(i) = rb.normal_vector(5);
    }
    const double truth = gaussian_w2(P.analytic->mean, P.analytic->cov,
                                     Eigen::VectorXd::Zero(5), Eigen::MatrixXd::Identity(5, 5));
    CHECK(std::abs(lower_bound_gelbrich(gx, gy) - truth) / truth < 0.05);
}

TEST_CASE("combined lower bound never exceeds the exact empirical distance") {
    const TargetModel P = ar1_gaussian(3, 0.5);
    auto sp = gaussian_sampler(*P.analytic);
    const int N = 2048; // capped by the assignment solver guard
    Eigen::MatrixXd xs(N, 3), ys(N, 3);
    StepRng ra(10), rb(11);
    for (int i = 0; i < N; ++i) {
        xs.row(i) = sp(ra);
        ys.row(i) = rb.normal_vector(3);
    }
    const double lower = combined_lower_bound(xs, ys);
    const double exact = exact_empirical_wp(xs, ys, 2.0);
    CHECK(lower <= exact + 1e-9);
    // one-dimensional clouds: the marginal term is exact, so it wins or ties
    Eigen::MatrixXd a(50, 1), b(50, 1);
    for (int i = 0; i < 50; ++i) {
        a(i, 0) = ra.normal();
        b(i, 0) = rb.normal() + 2.0;
    }
    CHECK(lower_bound_marginal(a, b, 2.0) >= lower_bound_gelbrich(a, b) - 1e-9);
}

TEST_CASE("bound report aggregates estimates consistently") {
    auto P = shared_target(ar1_gaussian(2, 0.5));
    auto Q = shared_target(isotropic_gaussian(2));
    const CoupledKernel ck = crn_mala_mala(P, Q, 0.4, 0.4);
    const InitCoupling init = InitCoupling::independent(gaussian_sampler(*P->analytic),
                                                        gaussian_sampler(*Q->analytic));
    EstimatorConfig cfg{2.0, 5, 100, 600, 13};
    const TrajectoryBatch batch = run_coupled_chains(ck, init, cfg, Metric::euclidean(), true);
    const BoundReport r = bound_report(batch, cfg);
    CHECK(r.upper_cub == doctest::Approx(cub(batch, 2.0, 100, 600).value));
    CHECK(r.lower_combined == doctest::Approx(std::max(r.lower_marginal, r.lower_gelbrich)));
    CHECK(r.lower_combined <= r.upper_cub + 3.0 * r.upper_se);
    CHECK(r.coupling == "crn");
}

TEST_CASE("dobson bound degenerates cleanly when both kernels coincide") {
    const int d = 3;
    auto P = shared_target(ar1_gaussian(d, 0.5));
    KernelConfig k{KernelKind::mala, 0.3, 1.0, P};
    auto sp = gaussian_sampler(*P->analytic);
    StepRng rng(14);
    Eigen::MatrixXd q_samples(500, d);
    for (int i = 0; i < 500; ++i) q_samples.row(i) = sp(rng);
    EstimatorConfig cfg{1.0, 10, 50, 300, 15};
    const DobsonReport rep = dobson_bound(k, k, q_samples, cfg);
    CHECK(rep.delta_estimate == 0.0);
    REQUIRE(rep.has_bound);
    CHECK(rep.bound_value ==
          doctest::Approx(2.0 * rep.mass_outside / (1.0 - rep.alpha_estimate)));
    CHECK(rep.alpha_estimate > 0.0);
    CHECK(rep.alpha_estimate < 1.0);
    // identical kernels coalesce under gamma_1 gluing, so cub1 is tiny
    CHECK(rep.companion_cub1 <= rep.bound_value);
}

TEST_CASE("analytic panel values") {
    {
        const AnalyticPanel p = analytic_panel(PanelProblem::ar1_vs_isotropic, 1, 0.5);
        CHECK(p.true_w2 == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(p.independent_bound == doctest::Approx(std::sqrt(2.0)));
    }
    {
        const AnalyticPanel p = analytic_panel(PanelProblem::ar1_vs_isotropic, 100, 0.2);
        CHECK(p.independent_bound == doctest::Approx(std::sqrt(200.0)));
        const Eigen::MatrixXd S = ar1_gaussian(100, 0.5).analytic->cov;
        const double frob = (matrix_sqrt_sym(S) - Eigen::MatrixXd::Identity(100, 100)).norm();
        CHECK(p.true_w2 == doctest::Approx(frob));
    }
    {
        const AnalyticPanel p = analytic_panel(PanelProblem::ula_bias, 2, 0.2);
        REQUIRE(p.ula_limit.has_value());
        REQUIRE(p.dm_bound.has_value());
        CHECK(p.true_w2 <= *p.dm_bound);
        CHECK(*p.dm_bound <= p.independent_bound);
        // cross-check truth against the two building blocks directly
        const Eigen::MatrixXd S = ar1_gaussian(2, 0.5).analytic->cov;
        const GaussianAnalytic lim = ula_gaussian_limit(S, 0.2);
        CHECK(p.true_w2 == doctest::Approx(gaussian_w2(Eigen::VectorXd::Zero(2), S,
                                                       Eigen::VectorXd::Zero(2), lim.cov)));
    }
}
