#include "basisrisk/sampler.hpp"

#include <cmath>
#include <string>

#include "basisrisk/errors.hpp"

namespace basisrisk {

namespace {

Eigen::VectorXd mean_or_zero(Eigen::VectorXd mean, Eigen::Index n) {
    if (mean.size() == 0) return Eigen::VectorXd::Zero(n);
    if (mean.size() != n) throw NumericError("mean vector length differs from covariance dimension");
    return mean;
}

YieldPanel to_panel(Eigen::MatrixXd values) {
    YieldPanel panel;
    for (Eigen::Index j = 0; j < values.cols(); ++j) panel.field_ids.push_back("f" + std::to_string(j + 1));
    for (Eigen::Index t = 0; t < values.rows(); ++t) panel.period_ids.push_back(std::to_string(t + 1));
    panel.values = std::move(values);
    return panel;
}

void check_periods(Eigen::Index t) {
    if (t < 2) throw NumericError("sample needs at least 2 periods");
}

}  // namespace

Eigen::Index dimension(const CovarianceModel& model) {
    return std::visit(
        [](const auto& m) -> Eigen::Index {
            if constexpr (std::is_same_v<std::decay_t<decltype(m)>, DenseCovariance>) {
                return m.sigma.rows();
            } else {
                return m.n;
            }
        },
        model);
}

DenseSampler::DenseSampler(const Eigen::MatrixXd& sigma, Eigen::VectorXd mean) {
    if (sigma.rows() != sigma.cols() || sigma.rows() < 1) throw NumericError("covariance must be square");
    const Eigen::Index n = sigma.rows();
    mean_ = mean_or_zero(std::move(mean), n);
    const double asym = (sigma - sigma.transpose()).cwiseAbs().maxCoeff();
    const double scale = std::max(sigma.cwiseAbs().maxCoeff(), 1e-300);
    if (asym > 1e-10 * scale) throw NumericError("covariance is not symmetric");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sigma);
    if (solver.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
    eigenvalues_ = solver.eigenvalues();
    const double lmax = std::max(eigenvalues_.maxCoeff(), 0.0);
    if (eigenvalues_.minCoeff() < -kPsdTolerance * lmax) {
        throw NumericError("covariance is not positive semidefinite (eigenvalue " +
                           std::to_string(eigenvalues_.minCoeff()) + ")");
    }
    // Eigenvalues within roundoff of zero carry no variance.
    eigenvalues_ = (eigenvalues_.array() > kPsdTolerance * lmax).select(eigenvalues_, 0.0);

    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < n; ++i) rank += eigenvalues_(i) > 0.0 ? 1 : 0;
    factor_.resize(n, rank);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (eigenvalues_(i) > 0.0) factor_.col(k++) = solver.eigenvectors().col(i) * std::sqrt(eigenvalues_(i));
    }
}

Eigen::MatrixXd DenseSampler::draw(Eigen::Index t, NormalStream& stream) const {
    check_periods(t);
    Eigen::MatrixXd z(t, factor_.cols());
    stream.fill(z);
    Eigen::MatrixXd y = z * factor_.transpose();
    y.rowwise() += mean_.transpose();
    return y;
}

SpikedSampler::SpikedSampler(const SpikedModel& model, Eigen::VectorXd mean) : model_(model) {
    model_.validate();
    mean_ = mean_or_zero(std::move(mean), model_.n);
    q1_ = haar_first_column(model_.n, model_.rotation_seed);
}

Eigen::MatrixXd SpikedSampler::draw(Eigen::Index t, NormalStream& stream) const {
    check_periods(t);
    Eigen::MatrixXd e(t, model_.n);
    stream.fill(e);
    const double sb = std::sqrt(model_.b);
    const double lift = std::sqrt(model_.spike()) - sb;
    const Eigen::VectorXd proj = e * q1_;  // q1'e per row
    Eigen::MatrixXd y = sb * e;
    y.noalias() += lift * proj * q1_.transpose();
    y.rowwise() += mean_.transpose();
    return y;
}

PanelSampler::PanelSampler(const CovarianceModel& model, Eigen::VectorXd mean)
    : impl_(std::visit(
          [&](const auto& m) -> std::variant<DenseSampler, SpikedSampler> {
              if constexpr (std::is_same_v<std::decay_t<decltype(m)>, DenseCovariance>) {
                  return DenseSampler(m.sigma, std::move(mean));
              } else {
                  return SpikedSampler(m, std::move(mean));
              }
          },
          model)) {}

Eigen::MatrixXd PanelSampler::draw(Eigen::Index t, NormalStream& stream) const {
    return std::visit([&](const auto& s) { return s.draw(t, stream); }, impl_);
}

YieldPanel sample_dense(const SampleSpec& spec) {
    const auto* dense = std::get_if<DenseCovariance>(&spec.source);
    if (!dense) throw NumericError("sample_dense needs a dense covariance");
    if (dense->sigma.rows() < 2) throw NumericError("sample needs at least 2 fields");
    NormalStream stream(spec.seed);
    return to_panel(DenseSampler(dense->sigma, spec.mean).draw(spec.t, stream));
}

YieldPanel sample_spiked(const SampleSpec& spec) {
    const auto* model = std::get_if<SpikedModel>(&spec.source);
    if (!model) throw NumericError("sample_spiked needs a spiked model");
    NormalStream stream(spec.seed);
    return to_panel(SpikedSampler(*model, spec.mean).draw(spec.t, stream));
}

YieldPanel sample_panel(const SampleSpec& spec) {
    return std::holds_alternative<DenseCovariance>(spec.source) ? sample_dense(spec) : sample_spiked(spec);
}

}  // namespace basisrisk
