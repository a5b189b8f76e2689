#include <cmath>
#include <random>
#include <set>

#include "basisrisk/asymptotics.hpp"
#include "basisrisk/errors.hpp"
#include "basisrisk/harness.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace basisrisk;

namespace {

// Sigma = I_N written as a spike equal to the bulk.
SpikedModel identity_as_spiked(Eigen::Index n) {
    SpikedModel m;
    m.a = 1.0 / static_cast<double>(n);
    m.alpha = 1.0;
    m.b = 1.0;
    m.n = n;
    return m;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

YieldPanel common_factor_panel(Eigen::Index t, Eigen::Index n, double noise, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const Eigen::MatrixXd factor = testing_support::gaussian_matrix(t, 1, rng);
    const Eigen::MatrixXd eps = testing_support::gaussian_matrix(t, n, rng);
    Eigen::MatrixXd y = factor.replicate(1, n) + noise * eps;
    y.array() += 100.0;
    return make_panel(y);
}

}  // namespace

TEST_CASE("identity population gives the vanishing-spike limit 1/(T-1)") {
    const auto shares = replicate_metric(identity_as_spiked(2000), Metric::LambdaShare, 4, 500, 11);
    CHECK(std::abs(mean_of(shares) - 1.0 / 3.0) < 0.02);
}

TEST_CASE("constant spike matches the asymptotic bias") {
    McExperiment e;
    e.dgp = constant_spike_from_target(0.5, 1000, SpikeCalibration::ExactTarget, 3);
    e.t_grid = {4};
    e.n_reps = 500;
    e.base_seed = 12;
    e.metrics = {Metric::LambdaShare};
    const auto s = run_experiment(e);
    const auto& row = s.row(Metric::LambdaShare, 4);
    CHECK(row.population_value == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::abs(row.bias - asymptotic_bias(SpikeRegime::Constant, 4, 0.5)) < 0.02);
}

TEST_CASE("summary arithmetic") {
    McExperiment e;
    e.dgp = DenseCovariance{Eigen::MatrixXd::Identity(6, 6)};
    e.t_grid = {4, 10};
    e.n_reps = 40;
    e.base_seed = 2;
    e.population_oracle_size = 2000;
    const auto s = run_experiment(e);
    REQUIRE(s.rows.size() == 6);
    CHECK(s.rows[0].t == 4);
    CHECK(s.rows[5].t == 10);
    for (const auto& r : s.rows) {
        CHECK(r.mean_estimate - r.population_value == r.bias);
        CHECK(r.n_reps == 40);
        CHECK(r.n_failed == 0);
    }
    CHECK(s.row(Metric::R2Area, 4).population_value == doctest::Approx(1.0 / 6.0));

    SUBCASE("standard error from the replication draws") {
        const auto draws = replicate_metric(e.dgp, Metric::LambdaShare, 10, 40, 2);
        const double m = mean_of(draws);
        double ss = 0.0;
        for (double x : draws) ss += (x - m) * (x - m);
        const auto& row = s.row(Metric::LambdaShare, 10);
        CHECK(row.mean_estimate == doctest::Approx(m).epsilon(1e-13));
        CHECK(row.mc_standard_error == doctest::Approx(std::sqrt(ss / 39.0) / std::sqrt(40.0)).epsilon(1e-12));
    }
}

TEST_CASE("single replication") {
    McExperiment e;
    e.dgp = DenseCovariance{Eigen::MatrixXd::Identity(5, 5)};
    e.t_grid = {6};
    e.n_reps = 1;
    e.base_seed = 9;
    e.metrics = {Metric::LambdaShare};
    const auto summary = run_experiment(e);
    const auto& row = summary.row(Metric::LambdaShare, 6);
    const auto draw = replicate_metric(e.dgp, Metric::LambdaShare, 6, 1, 9);
    CHECK(row.mean_estimate == draw[0]);
    CHECK(row.bias == draw[0] - 0.2);
    CHECK(row.mc_standard_error == 0.0);
}

TEST_CASE("determinism and thread invariance") {
    McExperiment e;
    e.dgp = constant_spike_from_target(0.3, 40, SpikeCalibration::ExactTarget, 1);
    e.t_grid = {4, 20};
    e.n_reps = 60;
    e.base_seed = 77;
    e.population_oracle_size = 3000;
    e.threads = 1;
    const auto a = run_experiment(e);
    e.threads = 3;
    const auto b = run_experiment(e);
    const auto c = run_experiment(e);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].mean_estimate == b.rows[i].mean_estimate);
        CHECK(a.rows[i].mc_standard_error == b.rows[i].mc_standard_error);
        CHECK(a.rows[i].population_value == b.rows[i].population_value);
        CHECK(b.rows[i].mean_estimate == c.rows[i].mean_estimate);
    }
    e.base_seed = 78;
    CHECK(run_experiment(e).rows[0].mean_estimate != a.rows[0].mean_estimate);
}

TEST_CASE("replication streams never collide") {
    std::set<std::uint64_t> seen;
    std::size_t count = 0;
    for (int t = 2; t <= 200; ++t) {
        for (int r = 0; r < 500; ++r) {
            seen.insert(replication_seed(5, t, r));
            ++count;
        }
    }
    seen.insert(oracle_seed(5));
    CHECK(seen.size() == count + 1);
}

TEST_CASE("T = 2 pins the eigenvalue share at 1") {
    const auto shares = replicate_metric(constant_spike_from_target(0.2, 30), Metric::LambdaShare, 2, 50, 4);
    for (double s : shares) CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("population values") {
    const std::set<Metric> linear{Metric::R2Area, Metric::LambdaShare};
    const auto id = population_values(DenseCovariance{Eigen::MatrixXd::Identity(8, 8)}, linear, 0.3, 0, 0);
    CHECK(id.at(Metric::R2Area) == doctest::Approx(1.0 / 8.0));
    CHECK(id.at(Metric::LambdaShare) == doctest::Approx(1.0 / 8.0));

    const SpikedModel m = constant_spike_from_target(0.4, 60, SpikeCalibration::ExactTarget, 21);
    const auto sp = population_values(m, linear, 0.3, 0, 0);
    CHECK(sp.at(Metric::LambdaShare) == population_lambda_share(m));
    const Eigen::MatrixXd sigma = materialize_covariance(m);
    CHECK(sp.at(Metric::R2Area) ==
          doctest::Approx(total_r2_matrix(sigma, IndexWeights::area_yield(60))).epsilon(1e-10));
    CHECK(spiked_total_r2_area(m) == doctest::Approx(total_r2_matrix(sigma, IndexWeights::area_yield(60))).epsilon(1e-10));
}

TEST_CASE("quantile population oracle is stable across seeds") {
    const SpikedModel m = constant_spike_from_target(0.6, 200, SpikeCalibration::ExactTarget, 8);
    const auto a = population_values(m, {Metric::R2Quantile}, 0.3, 25000, 1, 0);
    const auto b = population_values(m, {Metric::R2Quantile}, 0.3, 25000, 2, 0);
    CHECK(std::abs(a.at(Metric::R2Quantile) - b.at(Metric::R2Quantile)) < 0.01);
}

TEST_CASE("calibrated experiments") {
    SUBCASE("rank-deficient source panel still simulates") {
        std::mt19937_64 rng(3);
        const YieldPanel p = make_panel(testing_support::gaussian_matrix(4, 10, rng));
        const auto dgp = calibrated_dgp(p);
        const DenseSampler sampler(std::get<DenseCovariance>(dgp).sigma);
        CHECK(sampler.rank() <= 3);
        const auto s = run_calibrated(p, {4, 10}, 20, 1, 0.3, 1, 500);
        CHECK(s.rows.size() == 6);
    }
    SUBCASE("high correlation: bias near zero or negative") {
        const YieldPanel p = common_factor_panel(30, 10, 0.01, 4);
        const auto s = run_calibrated(p, {4, 10, 20}, 200, 5, 0.3, 0, 5000);
        for (int t : {4, 10, 20}) {
            CHECK(s.row(Metric::R2Area, t).bias < 0.005);
            CHECK(s.row(Metric::LambdaShare, t).bias < 0.005);
        }
    }
    SUBCASE("low correlation: quantile pseudo-R2 more than doubles at T = 4") {
        std::mt19937_64 rng(6);
        const YieldPanel p = make_panel(testing_support::gaussian_matrix(60, 20, rng));
        const auto s = run_calibrated(p, {4}, 200, 7, 0.3, 0, 5000);
        const auto& q = s.row(Metric::R2Quantile, 4);
        CHECK(q.bias / q.population_value > 1.0);
    }
}

TEST_CASE("failure accounting") {
    const CovarianceModel zero = DenseCovariance{Eigen::MatrixXd::Zero(3, 3)};
    for (double v : replicate_metric(zero, Metric::LambdaShare, 4, 10, 1)) CHECK(std::isnan(v));

    McExperiment e;
    e.dgp = zero;
    e.metrics = {Metric::LambdaShare};
    e.n_reps = 10;
    CHECK_THROWS_AS(run_experiment(e), NumericError);

    e.dgp = DenseCovariance{Eigen::MatrixXd::Identity(3, 3)};
    e.n_reps = 0;
    CHECK_THROWS_AS(run_experiment(e), NumericError);
    e.n_reps = 5;
    e.t_grid = {1};
    CHECK_THROWS_AS(run_experiment(e), NumericError);
}

TEST_CASE("spiked grid") {
    SUBCASE("default layout") {
        const SpikedGridConfig c;
        CHECK(c.t_grid == std::vector<int>{4, 20, 100});
        CHECK(c.n_grid.size() == 4);
        CHECK(c.lambda_grid.size() == 19);
        CHECK(c.n_reps == 500);
    }
    SUBCASE("T = 100 stays within the worst-case bound") {
        SpikedGridConfig c;
        c.t_grid = {100};
        c.n_grid = {50, 200};
        c.lambda_grid = {0.1, 0.5, 0.9};
        c.n_reps = 100;
        c.base_seed = 3;
        const auto rows = spiked_grid(c);
        REQUIRE(rows.size() == 6);
        for (const auto& r : rows) {
            CHECK(r.empirical_bias <= 1.0 / 99.0 + 3.0 * r.mc_standard_error);
            CHECK(r.worst_bound == doctest::Approx(1.0 / 99.0));
            CHECK(r.lambda == doctest::Approx(r.lambda_target).epsilon(1e-12));
        }
        CHECK(rows[3].n == 200);
        CHECK(rows[4].lambda_target == 0.5);
    }
    SUBCASE("agreement with the formula improves with N") {
        SpikedGridConfig c;
        c.t_grid = {4};
        c.n_grid = {50, 1000};
        c.lambda_grid = {0.1, 0.3, 0.5, 0.7, 0.9};
        c.n_reps = 300;
        c.base_seed = 9;
        const auto rows = spiked_grid(c);
        double worst50 = 0.0, worst1000 = 0.0;
        for (const auto& r : rows) {
            const double gap = std::abs(r.empirical_bias - r.theoretical_bias);
            double& worst = r.n == 50 ? worst50 : worst1000;
            worst = std::max(worst, gap);
        }
        CHECK(worst1000 < worst50);
        CHECK(worst1000 < 0.02);
    }
    SUBCASE("grid rows match direct harness calls") {
        SpikedGridConfig c;
        c.t_grid = {4};
        c.n_grid = {30};
        c.lambda_grid = {0.2, 0.6};
        c.n_reps = 20;
        c.base_seed = 1;
        const auto rows = spiked_grid(c);
        const auto model = spiked_grid_model(c, 30, 1);
        CHECK(rows[1].lambda == population_lambda_share(model));
        CHECK(rows[1].theoretical_bias == asymptotic_bias(SpikeRegime::Constant, 4, 0.6));
    }
    SUBCASE("empty grids are rejected") {
        SpikedGridConfig c;
        c.n_grid.clear();
        CHECK_THROWS_AS(spiked_grid(c), NumericError);
    }
}
