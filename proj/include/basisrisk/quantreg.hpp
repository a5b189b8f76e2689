#ifndef BASISRISK_QUANTREG_HPP
#define BASISRISK_QUANTREG_HPP

#include <span>

#include <Eigen/Dense>

namespace basisrisk {

inline constexpr double kDefaultTau = 0.3;

struct QuantileFit {
    double intercept = 0.0;
    double slope = 0.0;
    double v_value = 0.0;  // sum of pinball losses at the fitted line
    double tau = kDefaultTau;
};

/// rho_tau(u) = u (tau - 1{u < 0})
inline double pinball(double u, double tau) { return u < 0.0 ? u * (tau - 1.0) : u * tau; }

/// Sum of pinball losses of y - (intercept + slope f), in index order.
double pinball_loss(std::span<const double> y, std::span<const double> f, double intercept, double slope,
                    double tau);

/**
 * Intercept-only quantile fit. The returned intercept is the smallest order
 * statistic of y that minimizes the pinball loss.
 */
QuantileFit fit_quantile_const(std::span<const double> y, double tau);

/// Up to this many observations the line fit enumerates all pair lines.
inline constexpr std::size_t kPairEnumerationLimit = 256;

/**
 * Two-parameter quantile regression y = c + beta f.
 *
 * For T <= kPairEnumerationLimit the global optimum is found exactly among
 * lines through two observations, plus horizontal lines through single
 * observations. Larger inputs use fit_quantile_line_profile.
 * Throws NumericError when f is constant or tau is outside (0, 1).
 */
QuantileFit fit_quantile_line(std::span<const double> y, std::span<const double> f, double tau);

/// Exact O(T^3) pair enumeration.
QuantileFit fit_quantile_line_pairs(std::span<const double> y, std::span<const double> f, double tau);

/**
 * Minimizes the convex profile loss L(beta) = min_c sum rho(y - c - beta f)
 * by bracketing and golden-section search; each evaluation is an exact
 * intercept-only fit on the residuals. For large T.
 */
QuantileFit fit_quantile_line_profile(std::span<const double> y, std::span<const double> f, double tau);

/**
 * Total quantile pseudo-R^2: 1 - sum_i V_i(f) / sum_i V_i(const), fields in
 * columns of `values`. Constant fields contribute to neither sum. Per-field
 * fits may run on `threads` workers; the sums are taken in field order, so
 * the result does not depend on the thread count.
 * Throws NumericError if every field is constant.
 */
double total_quantile_r2(const Eigen::Ref<const Eigen::MatrixXd>& values,
                         const Eigen::Ref<const Eigen::VectorXd>& index, double tau = kDefaultTau,
                         unsigned threads = 1);

}  // namespace basisrisk

#endif
