#ifndef BASISRISK_HARNESS_HPP
#define BASISRISK_HARNESS_HPP

#include <cstdint>
#include <map>
#include <set>
#include <string_view>
#include <vector>

#include "basisrisk/metrics.hpp"
#include "basisrisk/panel_io.hpp"
#include "basisrisk/quantreg.hpp"
#include "basisrisk/sampler.hpp"
#include "basisrisk/spiked.hpp"

namespace basisrisk {

enum class Metric { R2Area, LambdaShare, R2Quantile };

std::string_view to_string(Metric metric);
Metric metric_from_string(std::string_view name);

/// Which in-sample index the quantile metric regresses on.
enum class QuantileIndex { Mean, Optimal };

struct McExperiment {
    CovarianceModel dgp;
    std::vector<int> t_grid{4, 10, 20};
    int n_reps = 500;
    std::uint64_t base_seed = 0;
    std::set<Metric> metrics{Metric::R2Area, Metric::LambdaShare, Metric::R2Quantile};
    double tau = kDefaultTau;
    Eigen::Index population_oracle_size = 25000;
    QuantileIndex quantile_index = QuantileIndex::Mean;
    unsigned threads = 0;  // 0: hardware concurrency

    void validate() const;
};

struct McRow {
    Metric metric = Metric::LambdaShare;
    int t = 0;
    double population_value = 0.0;
    double mean_estimate = 0.0;
    double bias = 0.0;  // mean_estimate - population_value
    double mc_standard_error = 0.0;
    int n_reps = 0;
    int n_failed = 0;
};

/// Rows ordered by T (t_grid order), then metric.
struct McSummary {
    std::vector<McRow> rows;

    const McRow& row(Metric metric, int t) const;
};

/// Replications may fail up to this fraction before the experiment aborts.
inline constexpr double kMaxFailureRate = 0.01;

/**
 * Population values of the requested metrics. Linear metrics come from the
 * covariance itself; the quantile pseudo-R^2 is estimated on one simulated
 * panel of `oracle_size` rows drawn from its own stream.
 */
std::map<Metric, double> population_values(const CovarianceModel& dgp, const std::set<Metric>& metrics,
                                           double tau, Eigen::Index oracle_size, std::uint64_t seed,
                                           unsigned threads = 0);

/// Area-yield total R^2 of a spiked population, from its rank-one form.
double spiked_total_r2_area(const SpikedModel& model);

/// Stream seed of replication r at sample size t.
std::uint64_t replication_seed(std::uint64_t base_seed, int t, int replication);
/// Stream seed of the quantile population oracle.
std::uint64_t oracle_seed(std::uint64_t base_seed);

/**
 * Per-replication estimates of one metric, indexed by replication. Failed
 * replications hold NaN.
 */
std::vector<double> replicate_metric(const CovarianceModel& dgp, Metric metric, int t, int n_reps,
                                     std::uint64_t base_seed, double tau = kDefaultTau,
                                     QuantileIndex quantile_index = QuantileIndex::Mean, unsigned threads = 0);

/// Sample T x N panels, re-estimate each metric, and compare to population values.
McSummary run_experiment(const McExperiment& experiment);

/// Panel covariance psd-clamped to use as the pseudo-true population.
CovarianceModel calibrated_dgp(const YieldPanel& panel);

/// run_experiment with the panel's sample covariance as the data-generating process.
McSummary run_calibrated(const YieldPanel& panel, const std::vector<int>& t_grid, int n_reps,
                         std::uint64_t base_seed, double tau = kDefaultTau, unsigned threads = 0,
                         Eigen::Index oracle_size = 25000, QuantileIndex quantile_index = QuantileIndex::Mean);

struct SpikedGridConfig {
    std::vector<int> t_grid{4, 20, 100};
    std::vector<Eigen::Index> n_grid{50, 200, 500, 1000};
    std::vector<double> lambda_grid{0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5,
                                    0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95};
    int n_reps = 500;
    std::uint64_t base_seed = 0;
    SpikeCalibration calibration = SpikeCalibration::ExactTarget;
    unsigned threads = 0;
};

struct SpikedGridRow {
    int t = 0;
    Eigen::Index n = 0;
    double lambda_target = 0.0;    // grid value; the r of the asymptotic formula
    double lambda = 0.0;           // population share of the simulated model
    double mean_estimate = 0.0;
    double empirical_bias = 0.0;
    double theoretical_bias = 0.0;  // constant-spike asymptotic bias at r = lambda_target
    double worst_bound = 0.0;
    double mc_standard_error = 0.0;
    int n_reps = 0;
};

/// Constant-spike model used for grid cell (n, lambda index).
SpikedModel spiked_grid_model(const SpikedGridConfig& config, Eigen::Index n, std::size_t lambda_index);

/// Full factorial over T x N x lambda; rows ordered T, then N, then lambda.
std::vector<SpikedGridRow> spiked_grid(const SpikedGridConfig& config);

}  // namespace basisrisk

#endif
