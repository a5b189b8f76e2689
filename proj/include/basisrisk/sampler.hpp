#ifndef BASISRISK_SAMPLER_HPP
#define BASISRISK_SAMPLER_HPP

#include <cstdint>
#include <variant>

#include <Eigen/Dense>

#include "basisrisk/panel_io.hpp"
#include "basisrisk/rng.hpp"
#include "basisrisk/spiked.hpp"

namespace basisrisk {

/// A dense population covariance.
struct DenseCovariance {
    Eigen::MatrixXd sigma;
};

using CovarianceModel = std::variant<DenseCovariance, SpikedModel>;

Eigen::Index dimension(const CovarianceModel& model);

/// Eigenvalues below -kPsdTolerance * lambda_max reject the input; those up to +kPsdTolerance * lambda_max become 0.
inline constexpr double kPsdTolerance = 1e-8;

/**
 * Draws rows N(mu, Sigma) through the factor V Lambda^1/2 of the symmetric
 * eigendecomposition, restricted to positive eigenvalues. Works for
 * rank-deficient Sigma, where Cholesky would fail.
 */
class DenseSampler {
public:
    explicit DenseSampler(const Eigen::MatrixXd& sigma, Eigen::VectorXd mean = {});

    /// T x N draw.
    Eigen::MatrixXd draw(Eigen::Index t, NormalStream& stream) const;

    /// Clamped eigenvalues of Sigma, ascending.
    const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
    Eigen::Index dimension() const { return mean_.size(); }
    Eigen::Index rank() const { return factor_.cols(); }

private:
    Eigen::VectorXd mean_;
    Eigen::VectorXd eigenvalues_;
    Eigen::MatrixXd factor_;  // N x rank
};

/**
 * O(N) per row: y = mu + sqrt(b) e + (sqrt(a N^alpha) - sqrt(b)) q1 (q1'e)
 * with e ~ N(0, I_N). Never forms Sigma.
 */
class SpikedSampler {
public:
    explicit SpikedSampler(const SpikedModel& model, Eigen::VectorXd mean = {});

    Eigen::MatrixXd draw(Eigen::Index t, NormalStream& stream) const;

    const Eigen::VectorXd& first_axis() const { return q1_; }

private:
    SpikedModel model_;
    Eigen::VectorXd mean_;
    Eigen::VectorXd q1_;
};

/// Either sampler, built once per population model and shared across replications.
class PanelSampler {
public:
    explicit PanelSampler(const CovarianceModel& model, Eigen::VectorXd mean = {});
    Eigen::MatrixXd draw(Eigen::Index t, NormalStream& stream) const;

private:
    std::variant<DenseSampler, SpikedSampler> impl_;
};

struct SampleSpec {
    Eigen::Index t = 4;
    Eigen::VectorXd mean;  // empty means zero
    CovarianceModel source;
    std::uint64_t seed = 0;
};

/// Throws if the spec is not the dense variant.
YieldPanel sample_dense(const SampleSpec& spec);
/// Throws if the spec is not the spiked variant.
YieldPanel sample_spiked(const SampleSpec& spec);
/// Dispatches on the source.
YieldPanel sample_panel(const SampleSpec& spec);

}  // namespace basisrisk

#endif
