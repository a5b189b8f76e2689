#ifndef BASISRISK_SPIKED_HPP
#define BASISRISK_SPIKED_HPP

#include <cstdint>
#include <string_view>

#include <Eigen/Dense>

namespace basisrisk {

enum class SpikeRegime { Vanishing, Constant, Expanding };

/// alpha < 1 vanishing, alpha == 1 constant, alpha > 1 expanding.
SpikeRegime classify_regime(double alpha);
std::string_view to_string(SpikeRegime regime);

/**
 * Single-spike covariance Sigma = Q diag(a N^alpha, b, ..., b) Q'.
 *
 * Only the rotation seed is stored; the first column of Q, which is all
 * that sampling and population metrics need, is regenerated from it.
 */
struct SpikedModel {
    double a = 1.0;
    double b = 1.0;
    double alpha = 1.0;
    Eigen::Index n = 2;
    std::uint64_t rotation_seed = 0;

    double spike() const;  // a N^alpha
    SpikeRegime regime() const { return classify_regime(alpha); }
    void validate() const;
};

/// a N^alpha / (a N^alpha + (N-1) b)
double population_lambda_share(const SpikedModel& model);

enum class SpikeCalibration {
    ExactTarget,  // finite-N share equals the target exactly
    PaperRecipe   // a = target / (1 - target), b = 1; exact only as N grows
};

/// Constant-spike (alpha = 1, b = 1) model whose share is lambda_tilde.
SpikedModel constant_spike_from_target(double lambda_tilde, Eigen::Index n,
                                       SpikeCalibration calibration = SpikeCalibration::ExactTarget,
                                       std::uint64_t rotation_seed = 0);

/**
 * Haar-distributed orthogonal matrix: QR of an i.i.d. N(0,1) matrix (filled
 * column-major from the seed's stream) with columns of Q multiplied by
 * sign(diag R), zero mapped to +1.
 */
Eigen::MatrixXd haar_orthogonal(Eigen::Index n, std::uint64_t seed);

/// First column of haar_orthogonal(n, seed) in O(n): g / |g| for the first n draws.
Eigen::VectorXd haar_first_column(Eigen::Index n, std::uint64_t seed);

/// Largest dimension materialize_covariance accepts.
inline constexpr Eigen::Index kMaterializeLimit = 5000;

enum class Rotation { Haar, None };

/// Dense Sigma. Throws NumericError above kMaterializeLimit.
Eigen::MatrixXd materialize_covariance(const SpikedModel& model, Rotation rotation = Rotation::Haar);

/// Sigma via b I + (a N^alpha - b) q1 q1'.
Eigen::MatrixXd rank_one_covariance(const SpikedModel& model);

}  // namespace basisrisk

#endif
