#ifndef BASISRISK_METRICS_HPP
#define BASISRISK_METRICS_HPP

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "basisrisk/panel_io.hpp"

namespace basisrisk {

enum class IndexKind { AreaYield, FirstPC, Custom };

/// Field weights w defining the index f = Y w.
struct IndexWeights {
    Eigen::VectorXd w;
    IndexKind kind = IndexKind::Custom;

    static IndexWeights area_yield(Eigen::Index n);
    static IndexWeights custom(Eigen::VectorXd w);
};

/// Values this close outside [0, 1] are treated as roundoff and clamped.
inline constexpr double kUnitIntervalSlack = 1e-10;

/**
 * Total R^2 of an index from the covariance between fields:
 * tr(S w (w'S w)^-1 w'S) / tr(S) = |S w|^2 / ((w'S w) tr(S)).
 *
 * Throws NumericError if the index has zero variance or the result leaves
 * [0, 1] by more than kUnitIntervalSlack.
 */
double total_r2_matrix(const Eigen::Ref<const Eigen::MatrixXd>& cov, const IndexWeights& weights);

struct RegressionR2 {
    double total = 0.0;
    std::vector<std::optional<double>> per_field;  // nullopt where SST_i == 0
};

/**
 * Regress each field on (1, index) by OLS and aggregate 1 - sum SSR / sum SST.
 * Fields with SST_i == 0 contribute to neither sum.
 */
RegressionR2 total_r2_regression(const Eigen::Ref<const Eigen::MatrixXd>& values,
                                 const Eigen::Ref<const Eigen::VectorXd>& index);
RegressionR2 total_r2_regression(const YieldPanel& panel, const Eigen::Ref<const Eigen::VectorXd>& index);

/// Row means of the panel, the area-yield index.
Eigen::VectorXd area_yield_index(const Eigen::Ref<const Eigen::MatrixXd>& values);

struct OptimalIndex {
    IndexWeights weights;  // unit norm, sum of weights >= 0
    double lambda_share = 0.0;
};

/// Leading eigenvector of a covariance matrix and its eigenvalue share.
OptimalIndex optimal_index(const Eigen::Ref<const Eigen::MatrixXd>& cov);

/**
 * Leading principal component of a panel. Uses the T x T dual matrix
 * X X' of the centered data when T <= N and maps its leading eigenvector u
 * back to w ~ X'u, so the N x N covariance is never formed.
 */
OptimalIndex optimal_index_from_panel(const Eigen::Ref<const Eigen::MatrixXd>& values);
OptimalIndex optimal_index(const YieldPanel& panel);

/// lambda_1 / sum(lambda) of the sample covariance, via the dual when T <= N.
double lambda_share_from_panel(const Eigen::Ref<const Eigen::MatrixXd>& values);
double lambda_share_from_panel(const YieldPanel& panel);

/// Same share, forming the N x N sample covariance. Reference path for tests.
double lambda_share_primal(const Eigen::Ref<const Eigen::MatrixXd>& values);

/// Nonzero spectrum of the (divisor T-1) sample covariance, descending, length min(T, N).
Eigen::VectorXd sample_eigenvalues(const Eigen::Ref<const Eigen::MatrixXd>& values);

/// Eigenvalue share of a covariance matrix.
double lambda_share_from_covariance(const Eigen::Ref<const Eigen::MatrixXd>& cov);

enum class IndexChoice { Mean, Optimal, Weights };

/// All basis-risk measures for one zone.
struct BasisRiskReport {
    double r2_area = 0.0;
    double r2_optimal = 0.0;
    double lambda_share = 0.0;
    double r2_quantile = 0.0;
    double tau = 0.3;
    IndexChoice index = IndexChoice::Mean;
    double r2_index = 0.0;  // total R^2 of the chosen index
    std::vector<std::optional<double>> per_field_r2;  // under the chosen index
    std::vector<std::string> field_ids;
    Eigen::Index periods = 0;
};

/**
 * Computes r2_area (row means), r2_optimal and lambda_share (first PC), and
 * r2_quantile plus per-field R^2 under the chosen index. `custom` is required
 * when index == Weights.
 */
BasisRiskReport compute_report(const YieldPanel& panel, double tau, IndexChoice index,
                               const std::optional<IndexWeights>& custom = std::nullopt);

}  // namespace basisrisk

#endif
