#ifndef BASISRISK_ASYMPTOTICS_HPP
#define BASISRISK_ASYMPTOTICS_HPP

#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "basisrisk/spiked.hpp"

namespace basisrisk {

/**
 * Fixed-T, N -> infinity law of the sample first-eigenvalue share.
 *
 * Vanishing spike: point mass at 1/(T-1). Expanding spike: point mass at 1.
 * Constant spike with limiting share r: the law of
 *
 *     g(C) = (r C + (1 - r)) / (r C + (1 - r)(T - 1)),   C ~ chi^2_{T-1},
 *
 * which is strictly increasing in C for T > 2 and identically 1 for T = 2.
 */
class LimitDistribution {
public:
    LimitDistribution(SpikeRegime regime, int t, double r);

    SpikeRegime regime() const { return regime_; }
    int periods() const { return t_; }
    double r() const { return r_; }

    bool is_point_mass() const { return point_.has_value(); }
    /// T = 2 makes every regime degenerate.
    bool is_vacuous() const { return t_ == 2; }

    /// g(c) for the constant spike.
    double transform(double chi2) const;
    /// Inverse of transform on (1/(T-1), 1).
    double inverse_transform(double x) const;

    double pdf(double x) const;
    double cdf(double x) const;
    double quantile(double p) const;
    double mean() const;
    double variance() const;
    double sd() const;

    double sample(std::mt19937_64& engine) const;

private:
    SpikeRegime regime_;
    int t_;
    double r_;
    std::optional<double> point_;
};

LimitDistribution limit_distribution(SpikeRegime regime, int t, double r);

/// Absolute error target for the chi-square expectations.
inline constexpr double kQuadratureTolerance = 1e-9;

/**
 * E[h(C)] for C ~ chi^2_{t-1} by adaptive Gauss-Kronrod quadrature on
 * (0, inf), refined until `relative_tolerance` is met. Throws NumericError
 * if the error estimate exceeds kQuadratureTolerance.
 */
double chi2_expectation(int t, const std::function<double(double)>& h, double relative_tolerance = 1e-13);

/**
 * Asymptotic bias E[share] - limiting share.
 * Vanishing: 1/(T-1). Expanding: 0. Constant: E[(1-r)(rC + 1 - r(T-1)) / (rC + (1-r)(T-1))].
 */
double asymptotic_bias(SpikeRegime regime, int t, double r);

/// 1/(T-1), the bias as r -> 0. Throws NumericError for t < 2.
double worst_case_bound(int t);

struct AsymptoticResult {
    SpikeRegime regime = SpikeRegime::Constant;
    int t = 4;
    double r = 0.5;
    double limit_point = 0.0;  // mean of the limit law
    double bias = 0.0;
    double worst_bound = 0.0;
    bool vacuous = false;
};

AsymptoticResult evaluate_asymptotics(SpikeRegime regime, int t, double r);

struct BiasPoint {
    int t = 0;
    double r = 0.0;
    double bias = 0.0;
    double bound = 0.0;
};

/// Constant-spike bias over a grid of limiting shares in (0, 1).
std::vector<BiasPoint> bias_curve(int t, const std::vector<double>& r_grid, unsigned threads = 1);

/// One line of the curve table: bias, bound and a summary of the limit law.
struct CurveRow {
    int t = 0;
    double r = 0.0;
    double bias = 0.0;
    double bound = 0.0;
    double mean = 0.0;
    double sd = 0.0;
    double q01 = 0.0, q05 = 0.0, q50 = 0.0, q95 = 0.0, q99 = 0.0;
    bool vacuous = false;
};

std::vector<CurveRow> asymptotics_table(const std::vector<int>& t_grid, const std::vector<double>& r_grid,
                                        unsigned threads = 1);

/**
 * Root of the constant-spike bias in [lo, hi], found by scanning `steps`
 * subintervals for a sign change and bisecting. nullopt if none.
 */
std::optional<double> bias_sign_change(int t, double lo, double hi, int steps = 200);

}  // namespace basisrisk

#endif
