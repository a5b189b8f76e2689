#include "basisrisk/harness.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "basisrisk/asymptotics.hpp"
#include "basisrisk/errors.hpp"
#include "basisrisk/parallel.hpp"
#include "basisrisk/rng.hpp"
#include "basisrisk/summation.hpp"

namespace basisrisk {

namespace {

constexpr std::array kAllMetrics{Metric::R2Area, Metric::LambdaShare, Metric::R2Quantile};

std::size_t slot(Metric m) { return static_cast<std::size_t>(m); }

using Estimates = std::array<double, kAllMetrics.size()>;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double estimate(Metric metric, const Eigen::MatrixXd& y, double tau, QuantileIndex quantile_index) {
    switch (metric) {
        case Metric::R2Area:
            return total_r2_regression(y, area_yield_index(y)).total;
        case Metric::LambdaShare:
            return lambda_share_from_panel(y);
        case Metric::R2Quantile: {
            const Eigen::VectorXd index = quantile_index == QuantileIndex::Mean
                                              ? area_yield_index(y)
                                              : Eigen::VectorXd(y * optimal_index_from_panel(y).weights.w);
            return total_quantile_r2(y, index, tau);
        }
    }
    return kNaN;
}

// One panel per replication; every requested metric is computed on it.
std::vector<Estimates> replicate(const PanelSampler& sampler, const std::set<Metric>& metrics, int t, int n_reps,
                                 std::uint64_t base_seed, double tau, QuantileIndex quantile_index,
                                 unsigned threads) {
    std::vector<Estimates> out(static_cast<std::size_t>(n_reps));
    parallel_for(out.size(), threads, [&](std::size_t r) {
        NormalStream stream(replication_seed(base_seed, t, static_cast<int>(r)));
        const Eigen::MatrixXd y = sampler.draw(t, stream);
        Estimates& e = out[r];
        e.fill(kNaN);
        for (Metric m : metrics) {
            try {
                e[slot(m)] = estimate(m, y, tau, quantile_index);
            } catch (const NumericError&) {
                e[slot(m)] = kNaN;
            }
        }
    });
    return out;
}

void check_metrics_common(int t, int n_reps) {
    if (t < 2) throw NumericError("T must be at least 2");
    if (n_reps < 1) throw NumericError("need at least one replication");
}

}  // namespace

std::string_view to_string(Metric metric) {
    switch (metric) {
        case Metric::R2Area: return "r2_area";
        case Metric::LambdaShare: return "lambda_share";
        case Metric::R2Quantile: return "r2_quantile";
    }
    return "unknown";
}

Metric metric_from_string(std::string_view name) {
    for (Metric m : kAllMetrics) {
        if (to_string(m) == name) return m;
    }
    throw DataError("unknown metric: " + std::string(name));
}

void McExperiment::validate() const {
    if (n_reps < 1) throw NumericError("n_reps must be at least 1");
    if (t_grid.empty()) throw NumericError("t_grid must not be empty");
    for (int t : t_grid) {
        if (t < 2) throw NumericError("t_grid values must be at least 2");
    }
    if (metrics.empty()) throw NumericError("no metrics requested");
    if (dimension(dgp) < 2) throw NumericError("population dimension must be at least 2");
    if (!(tau > 0.0 && tau < 1.0)) throw NumericError("tau must lie in (0, 1)");
    if (metrics.contains(Metric::R2Quantile) && population_oracle_size < 2) {
        throw NumericError("population oracle needs at least 2 rows");
    }
}

const McRow& McSummary::row(Metric metric, int t) const {
    for (const auto& r : rows) {
        if (r.metric == metric && r.t == t) return r;
    }
    throw NumericError("no summary row for " + std::string(to_string(metric)) + " at T=" + std::to_string(t));
}

std::uint64_t replication_seed(std::uint64_t base_seed, int t, int replication) {
    return derive_seed(base_seed, {stream_tag::replication, static_cast<std::uint64_t>(t),
                                   static_cast<std::uint64_t>(replication)});
}

std::uint64_t oracle_seed(std::uint64_t base_seed) { return derive_seed(base_seed, {stream_tag::oracle}); }

double spiked_total_r2_area(const SpikedModel& model) {
    model.validate();
    const Eigen::VectorXd q1 = haar_first_column(model.n, model.rotation_seed);
    const auto n = static_cast<double>(model.n);
    const double lift = model.spike() - model.b;
    const double m = q1.sum();
    // Sigma 1 = b 1 + lift m q1
    const double index_var = model.b * n + lift * m * m;
    const double sigma1_sq = model.b * model.b * n + (2.0 * model.b * lift + lift * lift) * m * m;
    const double trace = model.spike() + (n - 1.0) * model.b;
    return sigma1_sq / (index_var * trace);
}

std::map<Metric, double> population_values(const CovarianceModel& dgp, const std::set<Metric>& metrics, double tau,
                                           Eigen::Index oracle_size, std::uint64_t seed, unsigned threads) {
    std::map<Metric, double> out;
    const auto* dense = std::get_if<DenseCovariance>(&dgp);
    const auto* spiked = std::get_if<SpikedModel>(&dgp);
    for (Metric m : metrics) {
        switch (m) {
            case Metric::R2Area:
                out[m] = dense ? total_r2_matrix(dense->sigma, IndexWeights::area_yield(dense->sigma.rows()))
                               : spiked_total_r2_area(*spiked);
                break;
            case Metric::LambdaShare:
                out[m] = dense ? lambda_share_from_covariance(dense->sigma) : population_lambda_share(*spiked);
                break;
            case Metric::R2Quantile: {
                if (oracle_size < 2) throw NumericError("population oracle needs at least 2 rows");
                const PanelSampler sampler(dgp);
                NormalStream stream(oracle_seed(seed));
                const Eigen::MatrixXd y = sampler.draw(oracle_size, stream);
                out[m] = total_quantile_r2(y, area_yield_index(y), tau, threads);
                break;
            }
        }
    }
    return out;
}

std::vector<double> replicate_metric(const CovarianceModel& dgp, Metric metric, int t, int n_reps,
                                     std::uint64_t base_seed, double tau, QuantileIndex quantile_index,
                                     unsigned threads) {
    check_metrics_common(t, n_reps);
    const PanelSampler sampler(dgp);
    const auto all = replicate(sampler, {metric}, t, n_reps, base_seed, tau, quantile_index, threads);
    std::vector<double> out(all.size());
    for (std::size_t r = 0; r < all.size(); ++r) out[r] = all[r][slot(metric)];
    return out;
}

McSummary run_experiment(const McExperiment& experiment) {
    experiment.validate();
    const PanelSampler sampler(experiment.dgp);
    const auto population = population_values(experiment.dgp, experiment.metrics, experiment.tau,
                                              experiment.population_oracle_size, experiment.base_seed,
                                              experiment.threads);
    McSummary summary;
    for (int t : experiment.t_grid) {
        const auto estimates = replicate(sampler, experiment.metrics, t, experiment.n_reps, experiment.base_seed,
                                         experiment.tau, experiment.quantile_index, experiment.threads);
        for (Metric m : experiment.metrics) {
            McRow row;
            row.metric = m;
            row.t = t;
            row.population_value = population.at(m);

            CompensatedSum sum;
            int ok = 0;
            for (const auto& e : estimates) {
                if (std::isnan(e[slot(m)])) continue;
                sum.add(e[slot(m)]);
                ++ok;
            }
            row.n_reps = ok;
            row.n_failed = experiment.n_reps - ok;
            if (row.n_failed > kMaxFailureRate * experiment.n_reps) {
                throw NumericError("experiment aborted: " + std::to_string(row.n_failed) + " of " +
                                   std::to_string(experiment.n_reps) + " replications failed for " +
                                   std::string(to_string(m)) + " at T=" + std::to_string(t));
            }
            row.mean_estimate = sum.value() / ok;
            CompensatedSum sq;
            for (const auto& e : estimates) {
                if (std::isnan(e[slot(m)])) continue;
                const double d = e[slot(m)] - row.mean_estimate;
                sq.add(d * d);
            }
            const double sd = ok > 1 ? std::sqrt(sq.value() / (ok - 1)) : 0.0;
            row.mc_standard_error = sd / std::sqrt(static_cast<double>(ok));
            row.bias = row.mean_estimate - row.population_value;
            summary.rows.push_back(row);
        }
    }
    return summary;
}

CovarianceModel calibrated_dgp(const YieldPanel& panel) {
    validate_panel(panel);
    return DenseCovariance{sample_moments(panel, Divisor::TMinus1).covariance};
}

McSummary run_calibrated(const YieldPanel& panel, const std::vector<int>& t_grid, int n_reps,
                         std::uint64_t base_seed, double tau, unsigned threads, Eigen::Index oracle_size,
                         QuantileIndex quantile_index) {
    McExperiment experiment;
    experiment.dgp = calibrated_dgp(panel);
    experiment.t_grid = t_grid;
    experiment.n_reps = n_reps;
    experiment.base_seed = base_seed;
    experiment.tau = tau;
    experiment.threads = threads;
    experiment.population_oracle_size = oracle_size;
    experiment.quantile_index = quantile_index;
    return run_experiment(experiment);
}

SpikedModel spiked_grid_model(const SpikedGridConfig& config, Eigen::Index n, std::size_t lambda_index) {
    const auto rotation = derive_seed(config.base_seed, {stream_tag::rotation, static_cast<std::uint64_t>(n),
                                                         static_cast<std::uint64_t>(lambda_index)});
    return constant_spike_from_target(config.lambda_grid.at(lambda_index), n, config.calibration, rotation);
}

std::vector<SpikedGridRow> spiked_grid(const SpikedGridConfig& config) {
    if (config.t_grid.empty() || config.n_grid.empty() || config.lambda_grid.empty()) {
        throw NumericError("spiked grid needs non-empty T, N and lambda grids");
    }
    if (config.n_reps < 1) throw NumericError("n_reps must be at least 1");

    std::vector<SpikedGridRow> rows;
    for (int t : config.t_grid) {
        if (t < 2) throw NumericError("t_grid values must be at least 2");
        std::vector<double> theory(config.lambda_grid.size());
        for (std::size_t li = 0; li < config.lambda_grid.size(); ++li) {
            theory[li] = asymptotic_bias(SpikeRegime::Constant, t, config.lambda_grid[li]);
        }
        for (Eigen::Index n : config.n_grid) {
            for (std::size_t li = 0; li < config.lambda_grid.size(); ++li) {
                const SpikedModel model = spiked_grid_model(config, n, li);
                const auto cell_seed = derive_seed(config.base_seed, {stream_tag::grid_cell, static_cast<std::uint64_t>(n),
                                                                      static_cast<std::uint64_t>(li)});
                const auto shares = replicate_metric(model, Metric::LambdaShare, t, config.n_reps, cell_seed,
                                                     kDefaultTau, QuantileIndex::Mean, config.threads);
                CompensatedSum sum;
                int ok = 0;
                for (double s : shares) {
                    if (std::isnan(s)) continue;
                    sum.add(s);
                    ++ok;
                }
                const int failed = config.n_reps - ok;
                if (failed > kMaxFailureRate * config.n_reps) {
                    throw NumericError("spiked grid aborted: " + std::to_string(failed) + " failed replications");
                }
                SpikedGridRow row;
                row.t = t;
                row.n = n;
                row.lambda_target = config.lambda_grid[li];
                row.lambda = population_lambda_share(model);
                row.mean_estimate = sum.value() / ok;
                CompensatedSum sq;
                for (double s : shares) {
                    if (!std::isnan(s)) sq.add((s - row.mean_estimate) * (s - row.mean_estimate));
                }
                const double sd = ok > 1 ? std::sqrt(sq.value() / (ok - 1)) : 0.0;
                row.mc_standard_error = sd / std::sqrt(static_cast<double>(ok));
                row.empirical_bias = row.mean_estimate - row.lambda;
                row.theoretical_bias = theory[li];
                row.worst_bound = worst_case_bound(t);
                row.n_reps = ok;
                rows.push_back(row);
            }
        }
    }
    return rows;
}

}  // namespace basisrisk
