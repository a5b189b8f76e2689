#include "basisrisk/asymptotics.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "basisrisk/errors.hpp"
#include "basisrisk/parallel.hpp"

namespace basisrisk {

namespace {

void check_periods(int t) {
    if (t < 2) throw NumericError("asymptotics need T >= 2, got " + std::to_string(t));
}

void check_share(double r) {
    if (!(r > 0.0 && r < 1.0)) throw NumericError("constant-spike share r must lie in (0, 1), got " + std::to_string(r));
}

double integrate_piece(const std::function<double(double)>& g, double a, double b, double relative_tolerance) {
    using boost::math::quadrature::gauss_kronrod;
    double error = 0.0;
    const double value = gauss_kronrod<double, 31>::integrate(g, a, b, 20, relative_tolerance, &error);
    if (!std::isfinite(value) || error > 0.5 * kQuadratureTolerance) {
        std::ostringstream msg;
        msg << "quadrature did not converge (error estimate " << error << ")";
        throw NumericError(msg.str());
    }
    return value;
}

}  // namespace

double chi2_expectation(int t, const std::function<double(double)>& h, double relative_tolerance) {
    check_periods(t);
    if (t == 2) throw NumericError("chi-square expectation with 1 degree of freedom is not supported");
    const double dof = t - 1;
    const boost::math::chi_squared_distribution<double> chi2(dof);
    const std::function<double(double)> integrand = [&](double c) {
        return c <= 0.0 ? 0.0 : h(c) * boost::math::pdf(chi2, c);
    };
    // c = u^2 on the bulk [0, dof] removes the sqrt(c) behaviour of odd degrees of freedom at 0.
    const std::function<double(double)> bulk = [&](double u) { return 2.0 * u * integrand(u * u); };
    return integrate_piece(bulk, 0.0, std::sqrt(dof), relative_tolerance) +
           integrate_piece(integrand, dof, std::numeric_limits<double>::infinity(), relative_tolerance);
}

LimitDistribution::LimitDistribution(SpikeRegime regime, int t, double r) : regime_(regime), t_(t), r_(r) {
    check_periods(t);
    switch (regime) {
        case SpikeRegime::Vanishing:
            point_ = 1.0 / (t - 1);
            break;
        case SpikeRegime::Expanding:
            point_ = 1.0;
            break;
        case SpikeRegime::Constant:
            check_share(r);
            if (t == 2) point_ = 1.0;
            break;
    }
}

double LimitDistribution::transform(double chi2) const {
    const double q = 1.0 - r_;
    return (r_ * chi2 + q) / (r_ * chi2 + q * (t_ - 1));
}

double LimitDistribution::inverse_transform(double x) const {
    return (1.0 - r_) * (x * (t_ - 1) - 1.0) / (r_ * (1.0 - x));
}

double LimitDistribution::pdf(double x) const {
    if (point_) return x == *point_ ? std::numeric_limits<double>::infinity() : 0.0;
    const double lo = 1.0 / (t_ - 1);
    if (x <= lo || x >= 1.0) return 0.0;
    const boost::math::chi_squared_distribution<double> chi2(t_ - 1);
    const double jacobian = (1.0 - r_) * (t_ - 2) / (r_ * (1.0 - x) * (1.0 - x));
    return boost::math::pdf(chi2, inverse_transform(x)) * jacobian;
}

double LimitDistribution::cdf(double x) const {
    if (point_) return x >= *point_ ? 1.0 : 0.0;
    if (x <= 1.0 / (t_ - 1)) return 0.0;
    if (x >= 1.0) return 1.0;
    const boost::math::chi_squared_distribution<double> chi2(t_ - 1);
    return boost::math::cdf(chi2, inverse_transform(x));
}

double LimitDistribution::quantile(double p) const {
    if (!(p >= 0.0 && p <= 1.0)) throw NumericError("probability must lie in [0, 1]");
    if (point_) return *point_;
    if (p == 0.0) return 1.0 / (t_ - 1);
    if (p == 1.0) return 1.0;
    const boost::math::chi_squared_distribution<double> chi2(t_ - 1);
    return transform(boost::math::quantile(chi2, p));
}

double LimitDistribution::mean() const {
    if (point_) return *point_;
    return chi2_expectation(t_, [this](double c) { return transform(c); });
}

double LimitDistribution::variance() const {
    if (point_) return 0.0;
    const double m = mean();
    // Squared deviations sit near roundoff when the law is tight; a relative target finer than
    // their noise never converges, so only the absolute error bound is binding here.
    return chi2_expectation(
        t_,
        [this, m](double c) {
            const double d = transform(c) - m;
            return d * d;
        },
        1e-9);
}

double LimitDistribution::sd() const { return std::sqrt(variance()); }

double LimitDistribution::sample(std::mt19937_64& engine) const {
    if (point_) return *point_;
    std::chi_squared_distribution<double> chi2(t_ - 1);
    return transform(chi2(engine));
}

LimitDistribution limit_distribution(SpikeRegime regime, int t, double r) { return {regime, t, r}; }

double worst_case_bound(int t) {
    check_periods(t);
    return 1.0 / (t - 1);
}

double asymptotic_bias(SpikeRegime regime, int t, double r) {
    check_periods(t);
    switch (regime) {
        case SpikeRegime::Vanishing:
            return 1.0 / (t - 1);
        case SpikeRegime::Expanding:
            return 0.0;
        case SpikeRegime::Constant:
            break;
    }
    check_share(r);
    if (t == 2) return 1.0 - r;
    const double q = 1.0 - r;
    const double tm1 = t - 1;
    return chi2_expectation(t, [=](double c) { return q * (r * c + 1.0 - r * tm1) / (r * c + q * tm1); });
}

AsymptoticResult evaluate_asymptotics(SpikeRegime regime, int t, double r) {
    const LimitDistribution dist(regime, t, r);
    AsymptoticResult out;
    out.regime = regime;
    out.t = t;
    out.r = r;
    out.limit_point = dist.mean();
    out.bias = asymptotic_bias(regime, t, r);
    out.worst_bound = worst_case_bound(t);
    out.vacuous = dist.is_vacuous();
    return out;
}

std::vector<BiasPoint> bias_curve(int t, const std::vector<double>& r_grid, unsigned threads) {
    check_periods(t);
    std::vector<BiasPoint> out(r_grid.size());
    parallel_for(r_grid.size(), threads, [&](std::size_t i) {
        out[i] = {t, r_grid[i], asymptotic_bias(SpikeRegime::Constant, t, r_grid[i]), worst_case_bound(t)};
    });
    return out;
}

std::vector<CurveRow> asymptotics_table(const std::vector<int>& t_grid, const std::vector<double>& r_grid,
                                        unsigned threads) {
    std::vector<CurveRow> rows(t_grid.size() * r_grid.size());
    parallel_for(rows.size(), threads, [&](std::size_t i) {
        const int t = t_grid[i / r_grid.size()];
        const double r = r_grid[i % r_grid.size()];
        const LimitDistribution dist(SpikeRegime::Constant, t, r);
        CurveRow& row = rows[i];
        row.t = t;
        row.r = r;
        row.bias = asymptotic_bias(SpikeRegime::Constant, t, r);
        row.bound = worst_case_bound(t);
        row.mean = dist.mean();
        row.sd = dist.sd();
        row.q01 = dist.quantile(0.01);
        row.q05 = dist.quantile(0.05);
        row.q50 = dist.quantile(0.50);
        row.q95 = dist.quantile(0.95);
        row.q99 = dist.quantile(0.99);
        row.vacuous = dist.is_vacuous();
    });
    return rows;
}

std::optional<double> bias_sign_change(int t, double lo, double hi, int steps) {
    auto bias = [t](double r) { return asymptotic_bias(SpikeRegime::Constant, t, r); };
    double a = lo;
    double fa = bias(a);
    for (int i = 1; i <= steps; ++i) {
        double b = lo + (hi - lo) * i / steps;
        const double fb = bias(b);
        if ((fa > 0.0) != (fb > 0.0)) {
            for (int iter = 0; iter < 100 && (b - a) > 1e-14; ++iter) {
                const double m = 0.5 * (a + b);
                const double fm = bias(m);
                if ((fm > 0.0) == (fa > 0.0)) {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            return 0.5 * (a + b);
        }
        a = b;
        fa = fb;
    }
    return std::nullopt;
}

}  // namespace basisrisk
