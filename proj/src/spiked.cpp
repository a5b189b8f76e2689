#include "basisrisk/spiked.hpp"

#include <cmath>
#include <string>

#include "basisrisk/errors.hpp"
#include "basisrisk/rng.hpp"

namespace basisrisk {

SpikeRegime classify_regime(double alpha) {
    if (alpha < 1.0) return SpikeRegime::Vanishing;
    if (alpha > 1.0) return SpikeRegime::Expanding;
    return SpikeRegime::Constant;
}

std::string_view to_string(SpikeRegime regime) {
    switch (regime) {
        case SpikeRegime::Vanishing: return "vanishing";
        case SpikeRegime::Constant: return "constant";
        case SpikeRegime::Expanding: return "expanding";
    }
    return "unknown";
}

double SpikedModel::spike() const { return a * std::pow(static_cast<double>(n), alpha); }

void SpikedModel::validate() const {
    if (!(a > 0.0) || !(b > 0.0) || !(alpha > 0.0) || !std::isfinite(a) || !std::isfinite(b) ||
        !std::isfinite(alpha)) {
        throw NumericError("spiked model needs finite a, b, alpha > 0");
    }
    if (n < 2) throw NumericError("spiked model needs n >= 2");
}

double population_lambda_share(const SpikedModel& model) {
    model.validate();
    const double spike = model.spike();
    return spike / (spike + static_cast<double>(model.n - 1) * model.b);
}

SpikedModel constant_spike_from_target(double lambda_tilde, Eigen::Index n, SpikeCalibration calibration,
                                       std::uint64_t rotation_seed) {
    if (!(lambda_tilde > 0.0 && lambda_tilde < 1.0)) {
        throw NumericError("target share must lie in (0, 1), got " + std::to_string(lambda_tilde));
    }
    if (n < 2) throw NumericError("spiked model needs n >= 2");
    SpikedModel m;
    m.b = 1.0;
    m.alpha = 1.0;
    m.n = n;
    m.rotation_seed = rotation_seed;
    const double odds = lambda_tilde / (1.0 - lambda_tilde);
    const auto nd = static_cast<double>(n);
    // Exact: a N / (a N + (N - 1)) = lambda  <=>  a = odds (N - 1) / N.
    m.a = calibration == SpikeCalibration::ExactTarget ? odds * (nd - 1.0) / nd : odds;
    return m;
}

Eigen::MatrixXd haar_orthogonal(Eigen::Index n, std::uint64_t seed) {
    if (n < 1) throw NumericError("haar_orthogonal needs n >= 1");
    NormalStream stream(derive_seed(seed, {stream_tag::haar}));
    Eigen::MatrixXd g(n, n);
    stream.fill(g);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    const auto& r = qr.matrixQR();
    for (Eigen::Index j = 0; j < n; ++j) {
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    }
    return q;
}

Eigen::VectorXd haar_first_column(Eigen::Index n, std::uint64_t seed) {
    if (n < 1) throw NumericError("haar_first_column needs n >= 1");
    NormalStream stream(derive_seed(seed, {stream_tag::haar}));
    Eigen::VectorXd g(n);
    stream.fill(g);
    const double norm = g.norm();
    if (!(norm > 0.0)) throw NumericError("degenerate Gaussian draw");
    return g / norm;
}

Eigen::MatrixXd materialize_covariance(const SpikedModel& model, Rotation rotation) {
    model.validate();
    if (model.n > kMaterializeLimit) {
        throw NumericError("refusing to materialize a " + std::to_string(model.n) + "-dimensional covariance");
    }
    Eigen::VectorXd eig = Eigen::VectorXd::Constant(model.n, model.b);
    eig(0) = model.spike();
    if (rotation == Rotation::None) return eig.asDiagonal();
    const Eigen::MatrixXd q = haar_orthogonal(model.n, model.rotation_seed);
    Eigen::MatrixXd sigma = q * eig.asDiagonal() * q.transpose();
    return 0.5 * (sigma + sigma.transpose());
}

Eigen::MatrixXd rank_one_covariance(const SpikedModel& model) {
    model.validate();
    if (model.n > kMaterializeLimit) {
        throw NumericError("refusing to materialize a " + std::to_string(model.n) + "-dimensional covariance");
    }
    const Eigen::VectorXd q1 = haar_first_column(model.n, model.rotation_seed);
    Eigen::MatrixXd sigma = (model.spike() - model.b) * (q1 * q1.transpose());
    sigma.diagonal().array() += model.b;
    return sigma;
}

}  // namespace basisrisk
