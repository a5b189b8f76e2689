#include <cmath>
#include <random>

#include "basisrisk/asymptotics.hpp"
#include "basisrisk/errors.hpp"
#include "basisrisk/harness.hpp"
#include "basisrisk/metrics.hpp"
#include "basisrisk/panel_io.hpp"
#include "basisrisk/sampler.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace basisrisk;

TEST_CASE("zero covariance returns the mean") {
    Eigen::VectorXd mu(3);
    mu << 1.0, -2.0, 3.5;
    SampleSpec spec{5, mu, DenseCovariance{Eigen::MatrixXd::Zero(3, 3)}, 9};
    const auto panel = sample_dense(spec);
    for (Eigen::Index t = 0; t < 5; ++t) CHECK(panel.values.row(t) == mu.transpose());
}

TEST_CASE("identity covariance: law of large numbers") {
    NormalStream stream(1);
    const Eigen::MatrixXd y = DenseSampler(Eigen::MatrixXd::Identity(3, 3)).draw(10000, stream);
    const Eigen::MatrixXd c = sample_moments(y).covariance;
    CHECK((c - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 0.1);
}

TEST_CASE("rank-one covariance: rows lie on the line through the mean") {
    Eigen::VectorXd v(4);
    v << 1.0, -2.0, 0.5, 3.0;
    const DenseSampler sampler(v * v.transpose());
    CHECK(sampler.rank() == 1);
    NormalStream stream(2);
    const Eigen::MatrixXd y = sampler.draw(20, stream);
    const Eigen::VectorXd u = v.normalized();
    for (Eigen::Index t = 0; t < y.rows(); ++t) {
        const Eigen::VectorXd row = y.row(t).transpose();
        CHECK((row - u * u.dot(row)).norm() < 1e-10 * (1.0 + row.norm()));
    }
}

TEST_CASE("rank-deficient calibrated covariance is sampled") {
    std::mt19937_64 rng(3);
    const Eigen::MatrixXd y = testing_support::gaussian_matrix(4, 30, rng);
    const DenseSampler sampler(sample_moments(y).covariance);
    CHECK(sampler.rank() <= 3);
    NormalStream stream(4);
    CHECK(sampler.draw(10, stream).allFinite());
}

TEST_CASE("indefinite covariance is rejected, roundoff is clamped") {
    Eigen::MatrixXd bad(2, 2);
    bad << 1.0, 0.0, 0.0, -0.1;
    CHECK_THROWS_AS(DenseSampler{bad}, NumericError);
    Eigen::MatrixXd tiny(2, 2);
    tiny << 1.0, 0.0, 0.0, -1e-12;
    CHECK_NOTHROW(DenseSampler{tiny});
    Eigen::MatrixXd asym(2, 2);
    asym << 1.0, 0.5, 0.0, 1.0;
    CHECK_THROWS_AS(DenseSampler{asym}, NumericError);
}

TEST_CASE("spiked sampler with lambda_1 = b is isotropic") {
    const Eigen::Index n = 25;
    SpikedModel m{2.0 / std::sqrt(25.0), 2.0, 0.5, n, 3};  // a N^alpha = 2 = b
    NormalStream a(11), b(11);
    const Eigen::MatrixXd y = SpikedSampler(m).draw(5, a);
    Eigen::MatrixXd e(5, n);
    b.fill(e);
    CHECK((y - std::sqrt(2.0) * e).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("determinism") {
    const SpikedModel m = constant_spike_from_target(0.4, 30, SpikeCalibration::ExactTarget, 5);
    SampleSpec spec{6, {}, m, 42};
    CHECK(sample_spiked(spec).values == sample_spiked(spec).values);
    CHECK(sample_panel(spec).values == sample_spiked(spec).values);
    SampleSpec other = spec;
    other.seed = 43;
    CHECK(sample_spiked(other).values != sample_spiked(spec).values);

    SampleSpec dense{6, {}, DenseCovariance{materialize_covariance(m)}, 42};
    CHECK(sample_dense(dense).values == sample_dense(dense).values);
    CHECK_THROWS_AS(sample_dense(spec), NumericError);
    CHECK_THROWS_AS(sample_spiked(dense), NumericError);
}

TEST_CASE("fast path covariance matches the rank-one population") {
    const SpikedModel m = constant_spike_from_target(0.6, 8, SpikeCalibration::ExactTarget, 21);
    const Eigen::MatrixXd sigma = rank_one_covariance(m);
    NormalStream stream(22);
    const int draws = 100000;
    const Eigen::MatrixXd y = SpikedSampler(m).draw(draws, stream);
    const Eigen::MatrixXd second = y.transpose() * y / static_cast<double>(draws);  // mean is zero
    for (Eigen::Index i = 0; i < 8; ++i) {
        for (Eigen::Index j = 0; j < 8; ++j) {
            const double se = std::sqrt((sigma(i, i) * sigma(j, j) + sigma(i, j) * sigma(i, j)) / draws);
            CHECK(std::abs(second(i, j) - sigma(i, j)) < 3.0 * se);
        }
    }
}

TEST_CASE("dense and fast spiked paths agree in distribution") {
    const SpikedModel m = constant_spike_from_target(0.5, 20, SpikeCalibration::ExactTarget, 8);
    const CovarianceModel dense = DenseCovariance{materialize_covariance(m)};
    const auto fast = replicate_metric(m, Metric::LambdaShare, 6, 500, 100);
    const auto slow = replicate_metric(dense, Metric::LambdaShare, 6, 500, 100);
    const double d = testing_support::ks_statistic(fast, slow);
    CHECK(d < testing_support::ks_critical_1pct(500, 500));
}

TEST_CASE("N=1000, share 0.8, T=4: mean estimate near the limit law") {
    const SpikedModel m = constant_spike_from_target(0.8, 1000, SpikeCalibration::ExactTarget, 31);
    const auto shares = replicate_metric(m, Metric::LambdaShare, 4, 500, 32);
    double mean = 0.0;
    for (double s : shares) mean += s / shares.size();
    const double predicted = 0.8 + asymptotic_bias(SpikeRegime::Constant, 4, 0.8);
    CHECK(std::abs(mean - predicted) < 0.02);
}
