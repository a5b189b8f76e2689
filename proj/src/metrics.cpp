#include "basisrisk/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "basisrisk/errors.hpp"
#include "basisrisk/quantreg.hpp"
#include "basisrisk/summation.hpp"

namespace basisrisk {

namespace {

double to_unit_interval(double value, const char* what) {
    if (!std::isfinite(value) || value < -kUnitIntervalSlack || value > 1.0 + kUnitIntervalSlack) {
        throw NumericError(std::string(what) + " outside [0, 1]: " + std::to_string(value) +
                           " (covariance not positive semidefinite?)");
    }
    return std::clamp(value, 0.0, 1.0);
}

void fix_sign(Eigen::VectorXd& w) {
    const double s = w.sum();
    if (s < 0.0) {
        w = -w;
    } else if (s == 0.0) {
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            if (w(i) != 0.0) {
                if (w(i) < 0.0) w = -w;
                break;
            }
        }
    }
}

Eigen::MatrixXd centered(const Eigen::Ref<const Eigen::MatrixXd>& values) {
    return values.rowwise() - values.colwise().mean();
}

struct Spectrum {
    double largest = 0.0;
    double trace = 0.0;
    Eigen::VectorXd leading;  // eigenvector of the decomposed matrix
    Eigen::VectorXd values;   // ascending
};

Spectrum decompose(const Eigen::MatrixXd& symmetric, bool want_vector) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
        symmetric, want_vector ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
    Spectrum s;
    s.values = solver.eigenvalues();
    s.largest = s.values(s.values.size() - 1);
    s.trace = symmetric.trace();
    if (want_vector) s.leading = solver.eigenvectors().col(symmetric.cols() - 1);
    return s;
}

// Dual T x T gram matrix when T <= N, primal N x N otherwise; both unscaled.
Eigen::MatrixXd gram(const Eigen::MatrixXd& x, bool dual) {
    const Eigen::Index k = dual ? x.rows() : x.cols();
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(k, k);
    if (dual) {
        g.selfadjointView<Eigen::Lower>().rankUpdate(x);
    } else {
        g.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
    }
    g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
    return g;
}

}  // namespace

IndexWeights IndexWeights::area_yield(Eigen::Index n) {
    return {Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)), IndexKind::AreaYield};
}

IndexWeights IndexWeights::custom(Eigen::VectorXd w) {
    if (w.size() == 0 || (w.array() == 0.0).all()) throw NumericError("index weights must not be all zero");
    return {std::move(w), IndexKind::Custom};
}

double total_r2_matrix(const Eigen::Ref<const Eigen::MatrixXd>& cov, const IndexWeights& weights) {
    if (cov.rows() != cov.cols() || cov.rows() != weights.w.size()) {
        throw NumericError("covariance and weights dimensions disagree");
    }
    const double trace = cov.trace();
    if (!(trace > 0.0)) throw NumericError("covariance has zero total variance");
    const Eigen::VectorXd sw = cov * weights.w;
    const double index_var = weights.w.dot(sw);
    if (!(index_var > 1e-14 * trace * weights.w.squaredNorm())) {
        throw NumericError("degenerate index: zero variance under this covariance");
    }
    return to_unit_interval(sw.squaredNorm() / (index_var * trace), "total R^2");
}

Eigen::VectorXd area_yield_index(const Eigen::Ref<const Eigen::MatrixXd>& values) {
    return values.rowwise().mean();
}

RegressionR2 total_r2_regression(const Eigen::Ref<const Eigen::MatrixXd>& values,
                                 const Eigen::Ref<const Eigen::VectorXd>& index) {
    const Eigen::Index t = values.rows();
    if (index.size() != t) throw NumericError("index length differs from number of periods");
    const double index_mean = index.mean();
    const Eigen::VectorXd fc = index.array() - index_mean;
    const double sff = fc.squaredNorm();
    if (!(sff > 0.0) || (index.array() == index(0)).all()) throw NumericError("index has zero variance");

    RegressionR2 out;
    out.per_field.resize(static_cast<std::size_t>(values.cols()));
    CompensatedSum ssr_total;
    CompensatedSum sst_total;
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
        const auto y = values.col(j);
        if ((y.array() == y(0)).all()) continue;  // SST = 0: excluded from both sums
        const double y_mean = y.mean();
        const Eigen::VectorXd yc = y.array() - y_mean;
        const double slope = yc.dot(fc) / sff;
        const double intercept = y_mean - slope * index_mean;
        const Eigen::VectorXd resid = y.array() - intercept - slope * index.array();
        const double ssr = resid.squaredNorm();
        const double sst = yc.squaredNorm();
        ssr_total.add(ssr);
        sst_total.add(sst);
        out.per_field[static_cast<std::size_t>(j)] = 1.0 - ssr / sst;
    }
    if (!(sst_total.value() > 0.0)) throw NumericError("every field is constant");
    out.total = to_unit_interval(1.0 - ssr_total.value() / sst_total.value(), "total R^2");
    return out;
}

RegressionR2 total_r2_regression(const YieldPanel& panel, const Eigen::Ref<const Eigen::VectorXd>& index) {
    return total_r2_regression(panel.values, index);
}

OptimalIndex optimal_index(const Eigen::Ref<const Eigen::MatrixXd>& cov) {
    if (cov.rows() != cov.cols()) throw NumericError("covariance must be square");
    Spectrum s = decompose(cov, true);
    if (!(s.largest > 0.0) || !(s.trace > 0.0)) throw NumericError("covariance is all zero");
    OptimalIndex out;
    out.weights = {s.leading.normalized(), IndexKind::FirstPC};
    fix_sign(out.weights.w);
    out.lambda_share = to_unit_interval(s.largest / s.trace, "eigenvalue share");
    return out;
}

OptimalIndex optimal_index_from_panel(const Eigen::Ref<const Eigen::MatrixXd>& values) {
    const Eigen::MatrixXd x = centered(values);
    const bool dual = x.rows() <= x.cols();
    Spectrum s = decompose(gram(x, dual), true);
    if (!(s.largest > 0.0) || !(s.trace > 0.0)) throw NumericError("sample covariance is all zero");
    OptimalIndex out;
    Eigen::VectorXd w = dual ? Eigen::VectorXd(x.transpose() * s.leading) : s.leading;
    out.weights = {w.normalized(), IndexKind::FirstPC};
    fix_sign(out.weights.w);
    out.lambda_share = to_unit_interval(s.largest / s.trace, "eigenvalue share");
    return out;
}

OptimalIndex optimal_index(const YieldPanel& panel) { return optimal_index_from_panel(panel.values); }

double lambda_share_from_panel(const Eigen::Ref<const Eigen::MatrixXd>& values) {
    const Eigen::MatrixXd x = centered(values);
    const bool dual = x.rows() <= x.cols();
    const Spectrum s = decompose(gram(x, dual), false);
    if (!(s.largest > 0.0) || !(s.trace > 0.0)) throw NumericError("sample covariance is all zero");
    return to_unit_interval(s.largest / s.trace, "eigenvalue share");
}

double lambda_share_from_panel(const YieldPanel& panel) { return lambda_share_from_panel(panel.values); }

double lambda_share_primal(const Eigen::Ref<const Eigen::MatrixXd>& values) {
    const Eigen::MatrixXd x = centered(values);
    const Spectrum s = decompose(gram(x, false), false);
    if (!(s.largest > 0.0) || !(s.trace > 0.0)) throw NumericError("sample covariance is all zero");
    return to_unit_interval(s.largest / s.trace, "eigenvalue share");
}

double lambda_share_from_covariance(const Eigen::Ref<const Eigen::MatrixXd>& cov) {
    const Spectrum s = decompose(cov, false);
    if (!(s.largest > 0.0) || !(s.trace > 0.0)) throw NumericError("covariance is all zero");
    return to_unit_interval(s.largest / s.trace, "eigenvalue share");
}

Eigen::VectorXd sample_eigenvalues(const Eigen::Ref<const Eigen::MatrixXd>& values) {
    const Eigen::MatrixXd x = centered(values);
    const bool dual = x.rows() <= x.cols();
    const Spectrum s = decompose(gram(x, dual), false);
    return s.values.reverse() / static_cast<double>(values.rows() - 1);
}

BasisRiskReport compute_report(const YieldPanel& panel, double tau, IndexChoice index,
                               const std::optional<IndexWeights>& custom) {
    validate_panel(panel);
    const auto& y = panel.values;

    BasisRiskReport report;
    report.tau = tau;
    report.index = index;
    report.field_ids = panel.field_ids;
    report.periods = panel.periods();

    const Eigen::VectorXd mean_index = area_yield_index(y);
    RegressionR2 area = total_r2_regression(y, mean_index);
    report.r2_area = area.total;

    const OptimalIndex opt = optimal_index_from_panel(y);
    const Eigen::VectorXd pc_index = y * opt.weights.w;
    RegressionR2 optimal = total_r2_regression(y, pc_index);
    report.r2_optimal = optimal.total;
    report.lambda_share = opt.lambda_share;

    Eigen::VectorXd chosen;
    switch (index) {
        case IndexChoice::Mean:
            chosen = mean_index;
            report.r2_index = area.total;
            report.per_field_r2 = std::move(area.per_field);
            break;
        case IndexChoice::Optimal:
            chosen = pc_index;
            report.r2_index = optimal.total;
            report.per_field_r2 = std::move(optimal.per_field);
            break;
        case IndexChoice::Weights: {
            if (!custom) throw NumericError("weights index requested without weights");
            if (custom->w.size() != panel.fields()) {
                throw DataError("weights vector has " + std::to_string(custom->w.size()) + " entries, panel has " +
                                std::to_string(panel.fields()) + " fields");
            }
            chosen = y * custom->w;
            RegressionR2 reg = total_r2_regression(y, chosen);
            report.r2_index = reg.total;
            report.per_field_r2 = std::move(reg.per_field);
            break;
        }
    }
    report.r2_quantile = total_quantile_r2(y, chosen, tau);
    return report;
}

}  // namespace basisrisk
