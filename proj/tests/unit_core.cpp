#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "support/oracles.hpp"
#include "wb/metric.hpp"
#include "wb/rng.hpp"
#include "wb/trajectory.hpp"

using namespace wb;

TEST_CASE("euclidean metric examples") {
    Eigen::VectorXd x(2), y(2);
    x << 0, 0;
    y << 3, 4;
    CHECK(distance(Metric::euclidean(), x, y) == doctest::Approx(5.0));
    CHECK(distance(Metric::euclidean(), y, y) == 0.0);
    CHECK(distance(Metric::capped(1.0), x, y) == doctest::Approx(1.0));
}

TEST_CASE("metric axioms hold on random points") {
    StepRng rng(7);
    for (const Metric& m : {Metric::euclidean(), Metric::capped(1.0), Metric::capped(2.5)}) {
        for (int rep = 0; rep < 200; ++rep) {
            const Eigen::VectorXd a = rng.normal_vector(4);
            const Eigen::VectorXd b = rng.normal_vector(4);
            const Eigen::VectorXd c = rng.normal_vector(4);
            CHECK(distance(m, a, b) >= 0.0);
            CHECK(distance(m, a, a) == 0.0);
            CHECK(distance(m, a, b) == doctest::Approx(distance(m, b, a)));
            CHECK(distance(m, a, c) <= distance(m, a, b) + distance(m, b, c) + 1e-12);
        }
    }
}

TEST_CASE("capped metric never exceeds the cap") {
    StepRng rng(11);
    for (int rep = 0; rep < 100; ++rep) {
        const Eigen::VectorXd a = 10.0 * rng.normal_vector(3);
        const Eigen::VectorXd b = 10.0 * rng.normal_vector(3);
        CHECK(distance(Metric::capped(1.0), a, b) <= 1.0);
    }
}

TEST_CASE("pairwise cost matrix examples") {
    {
        const Eigen::MatrixXd z = Eigen::MatrixXd::Zero(1, 1);
        const Eigen::MatrixXd c = pairwise_cost_matrix(Metric::euclidean(), 2.0, z, z);
        CHECK(c(0, 0) == 0.0);
    }
    {
        Eigen::MatrixXd xs(1, 1), ys(1, 1);
        xs << 0;
        ys << 2;
        const Eigen::MatrixXd c = pairwise_cost_matrix(Metric::euclidean(), 2.0, xs, ys);
        CHECK(c(0, 0) == doctest::Approx(4.0));
    }
    {
        Eigen::MatrixXd xs(2, 1), ys(2, 1);
        xs << 0, 1;
        ys << 1, 3;
        const Eigen::MatrixXd c = pairwise_cost_matrix(Metric::euclidean(), 1.0, xs, ys);
        CHECK(c(0, 0) == doctest::Approx(1.0));
        CHECK(c(0, 1) == doctest::Approx(3.0));
        CHECK(c(1, 0) == doctest::Approx(0.0));
        CHECK(c(1, 1) == doctest::Approx(2.0));
    }
}

TEST_CASE("estimator config validation") {
    EstimatorConfig ok{2.0, 5, 100, 1000, 1};
    CHECK_NOTHROW(ok.validate());
    EstimatorConfig bad_p{0.5, 5, 100, 1000, 1};
    CHECK_THROWS_AS(bad_p.validate(), InvalidInput);
    EstimatorConfig bad_chains{2.0, 0, 0, 10, 1};
    CHECK_THROWS_AS(bad_chains.validate(), InvalidInput);
    EstimatorConfig bad_burnin{2.0, 1, -1, 10, 1};
    CHECK_THROWS_AS(bad_burnin.validate(), InvalidInput);
    EstimatorConfig bad_span{2.0, 1, 10, 5, 1};
    CHECK_THROWS_AS(bad_span.validate(), InvalidInput);
}

TEST_CASE("trajectory batch CSV round trip is exact") {
    TrajectoryBatch b;
    b.dimension = 2;
    b.distances.resize(2, 3);
    b.distances << 0.1, 0.25, 1.0 / 3.0, 0.0, 2.0, 4.0 / 7.0;
    b.xs.assign(2, Eigen::MatrixXd(3, 2));
    b.ys.assign(2, Eigen::MatrixXd(3, 2));
    StepRng rng(3);
    for (int i = 0; i < 2; ++i)
        for (int t = 0; t < 3; ++t) {
            b.xs[i].row(t) = rng.normal_vector(2);
            b.ys[i].row(t) = rng.normal_vector(2);
        }
    std::ostringstream out;
    b.write_csv(out);
    std::istringstream in(out.str());
    const TrajectoryBatch back = TrajectoryBatch::read_csv(in);
    CHECK(back.num_chains() == 2);
    CHECK(back.horizon() == 2);
    CHECK(back.dimension == 2);
    CHECK((back.distances - b.distances).cwiseAbs().maxCoeff() == 0.0);
    for (int i = 0; i < 2; ++i) {
        CHECK((back.xs[i] - b.xs[i]).cwiseAbs().maxCoeff() == 0.0);
        CHECK((back.ys[i] - b.ys[i]).cwiseAbs().maxCoeff() == 0.0);
    }
    std::ostringstream out2;
    back.write_csv(out2);
    CHECK(out.str() == out2.str());
}

TEST_CASE("step rng uniforms live strictly inside (0,1)") {
    StepRng rng(5);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("step rng normals pass a KS test") {
    StepRng rng(13);
    std::vector<double> xs(20000);
    for (auto& v : xs) v = rng.normal();
    CHECK(oracles::ks_standard_normal_consistent(xs));
}

TEST_CASE("sample_indices draws distinct in-range indices") {
    StepRng rng(17);
    for (int rep = 0; rep < 100; ++rep) {
        auto idx = rng.sample_indices(50, 13);
        CHECK(idx.size() == 13);
        std::sort(idx.begin(), idx.end());
        CHECK(std::unique(idx.begin(), idx.end()) == idx.end());
        CHECK(idx.front() >= 0);
        CHECK(idx.back() < 50);
    }
    CHECK(rng.sample_indices(5, 5).size() == 5);
    CHECK_THROWS_AS(rng.sample_indices(5, 6), InvalidInput);
}

TEST_CASE("chain rng streams are reproducible and slot-separated") {
    const ChainRng a(42, 3);
    const ChainRng b(42, 3);
    StepRng s1 = a.at(ChainRng::Slot::shared, 10);
    StepRng s2 = b.at(ChainRng::Slot::shared, 10);
    for (int i = 0; i < 100; ++i) CHECK(s1.uniform() == s2.uniform());

    StepRng left = a.at(ChainRng::Slot::left_only, 10);
    StepRng right = a.at(ChainRng::Slot::right_only, 10);
    int equal = 0;
    for (int i = 0; i < 100; ++i) equal += left.uniform() == right.uniform() ? 1 : 0;
    CHECK(equal == 0);
}
