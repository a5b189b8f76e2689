#include "basisrisk/quantreg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "basisrisk/errors.hpp"
#include "basisrisk/parallel.hpp"
#include "basisrisk/summation.hpp"

namespace basisrisk {

namespace {

void check_tau(double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw NumericError("tau must lie in (0, 1), got " + std::to_string(tau));
}

void check_line_inputs(std::span<const double> y, std::span<const double> f, double tau) {
    check_tau(tau);
    if (y.size() != f.size()) throw NumericError("response and index lengths differ");
    if (y.size() < 2) throw NumericError("quantile line fit needs at least 2 observations");
    if (std::all_of(f.begin(), f.end(), [&](double v) { return v == f[0]; })) {
        throw NumericError("quantile line fit: index is constant");
    }
}

double const_loss(std::span<const double> y, double c, double tau) {
    double s = 0.0;
    for (double v : y) s += pinball(v - c, tau);
    return s;
}

// Smallest minimizing order statistic. The minimizer is the ceil(tau T)-th order
// statistic; its neighbours are checked as well since tau * T is rounded.
double quantile_intercept(std::vector<double>& sorted, double tau) {
    const auto t = static_cast<std::ptrdiff_t>(sorted.size());
    const auto k0 = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(std::ceil(tau * static_cast<double>(t))) - 1,
                                               0, t - 1);
    const std::span<const double> ys(sorted);
    double best_c = sorted[static_cast<std::size_t>(std::max<std::ptrdiff_t>(k0 - 1, 0))];
    double best = const_loss(ys, best_c, tau);
    for (std::ptrdiff_t k = std::max<std::ptrdiff_t>(k0 - 1, 0) + 1; k <= std::min(k0 + 1, t - 1); ++k) {
        const double c = sorted[static_cast<std::size_t>(k)];
        const double loss = const_loss(ys, c, tau);
        if (loss < best - 1e-12 * std::max(1.0, std::abs(best))) {
            best = loss;
            best_c = c;
        }
    }
    return best_c;
}

// Profile loss min_c sum rho(y - beta f - c); nth_element keeps it O(T).
double profile_loss(std::span<const double> y, std::span<const double> f, double beta, double tau,
                    std::vector<double>& scratch) {
    const std::size_t t = y.size();
    scratch.resize(t);
    for (std::size_t i = 0; i < t; ++i) scratch[i] = y[i] - beta * f[i];
    const auto k = static_cast<std::size_t>(
        std::clamp<double>(std::ceil(tau * static_cast<double>(t)) - 1.0, 0.0, static_cast<double>(t - 1)));
    std::vector<double> work = scratch;
    std::nth_element(work.begin(), work.begin() + static_cast<std::ptrdiff_t>(k), work.end());
    const double c = work[k];
    double s = 0.0;
    for (double r : scratch) s += pinball(r - c, tau);
    return s;
}

}  // namespace

double pinball_loss(std::span<const double> y, std::span<const double> f, double intercept, double slope,
                    double tau) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += pinball(y[i] - (intercept + slope * f[i]), tau);
    return s;
}

QuantileFit fit_quantile_const(std::span<const double> y, double tau) {
    check_tau(tau);
    if (y.empty()) throw NumericError("quantile fit needs at least 1 observation");
    std::vector<double> sorted(y.begin(), y.end());
    std::sort(sorted.begin(), sorted.end());
    QuantileFit fit;
    fit.tau = tau;
    fit.slope = 0.0;
    fit.intercept = quantile_intercept(sorted, tau);
    fit.v_value = const_loss(y, fit.intercept, tau);
    return fit;
}

QuantileFit fit_quantile_line_pairs(std::span<const double> y, std::span<const double> f, double tau) {
    check_line_inputs(y, f, tau);
    const std::size_t t = y.size();

    QuantileFit best;
    best.tau = tau;
    best.v_value = std::numeric_limits<double>::infinity();
    auto consider = [&](double c, double beta) {
        const double loss = pinball_loss(y, f, c, beta, tau);
        if (loss < best.v_value) {
            best.v_value = loss;
            best.intercept = c;
            best.slope = beta;
        }
    };

    // Horizontal lines first, in increasing intercept order, so the nested
    // constant model is always available and ties resolve to it.
    std::vector<double> sorted(y.begin(), y.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    for (double c : sorted) consider(c, 0.0);

    for (std::size_t i = 0; i + 1 < t; ++i) {
        for (std::size_t j = i + 1; j < t; ++j) {
            if (f[i] == f[j]) continue;
            const double beta = (y[j] - y[i]) / (f[j] - f[i]);
            consider(y[i] - beta * f[i], beta);
        }
    }
    return best;
}

QuantileFit fit_quantile_line_profile(std::span<const double> y, std::span<const double> f, double tau) {
    check_line_inputs(y, f, tau);
    const std::size_t t = y.size();
    std::vector<double> scratch;
    auto loss = [&](double beta) { return profile_loss(y, f, beta, tau, scratch); };

    const double fm = std::accumulate(f.begin(), f.end(), 0.0) / static_cast<double>(t);
    const double ym = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(t);
    double sff = 0.0, sfy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < t; ++i) {
        sff += (f[i] - fm) * (f[i] - fm);
        sfy += (f[i] - fm) * (y[i] - ym);
        syy += (y[i] - ym) * (y[i] - ym);
    }
    const double ols = sfy / sff;
    double step = std::max({std::abs(ols), std::sqrt(syy / sff), 1e-8});

    // Bracket the minimum of the convex profile.
    double mid = ols;
    double l_mid = loss(mid);
    double lo = mid - step, hi = mid + step;
    double l_lo = loss(lo), l_hi = loss(hi);
    for (int iter = 0; iter < 200 && (l_lo < l_mid || l_hi < l_mid); ++iter) {
        if (l_lo < l_hi) {
            hi = mid;
            l_hi = l_mid;
            mid = lo;
            l_mid = l_lo;
            step *= 2.0;
            lo = mid - step;
            l_lo = loss(lo);
        } else {
            lo = mid;
            l_lo = l_mid;
            mid = hi;
            l_mid = l_hi;
            step *= 2.0;
            hi = mid + step;
            l_hi = loss(hi);
        }
    }

    // Golden section on [lo, hi].
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = loss(x1), f2 = loss(x2);
    for (int iter = 0; iter < 300 && (hi - lo) > 1e-14 * (1.0 + std::abs(mid)); ++iter) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = loss(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = loss(x2);
        }
    }
    const double beta = f1 <= f2 ? x1 : x2;

    auto fit_at = [&](double b) {
        std::vector<double> resid(t);
        for (std::size_t i = 0; i < t; ++i) resid[i] = y[i] - b * f[i];
        QuantileFit q = fit_quantile_const(resid, tau);
        q.slope = b;
        q.v_value = pinball_loss(y, f, q.intercept, b, tau);
        return q;
    };
    QuantileFit best = fit_at(beta);

    // Polish onto a vertex: lines through pairs of the best-fitting points.
    {
        std::vector<std::size_t> order(t);
        std::iota(order.begin(), order.end(), 0);
        const std::size_t keep = std::min<std::size_t>(8, t);
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                          [&](std::size_t a, std::size_t b) {
                              return std::abs(y[a] - best.intercept - best.slope * f[a]) <
                                     std::abs(y[b] - best.intercept - best.slope * f[b]);
                          });
        for (std::size_t a = 0; a < keep; ++a) {
            for (std::size_t b = a + 1; b < keep; ++b) {
                const std::size_t i = order[a], j = order[b];
                if (f[i] == f[j]) continue;
                const double s = (y[j] - y[i]) / (f[j] - f[i]);
                const double c = y[i] - s * f[i];
                const double v = pinball_loss(y, f, c, s, tau);
                if (v < best.v_value) best = {c, s, v, tau};
            }
        }
    }

    QuantileFit flat = fit_quantile_const(y, tau);
    flat.v_value = pinball_loss(y, f, flat.intercept, 0.0, tau);
    if (flat.v_value <= best.v_value) return flat;
    return best;
}

QuantileFit fit_quantile_line(std::span<const double> y, std::span<const double> f, double tau) {
    if (y.size() <= kPairEnumerationLimit) return fit_quantile_line_pairs(y, f, tau);
    return fit_quantile_line_profile(y, f, tau);
}

double total_quantile_r2(const Eigen::Ref<const Eigen::MatrixXd>& values,
                         const Eigen::Ref<const Eigen::VectorXd>& index, double tau, unsigned threads) {
    check_tau(tau);
    const auto t = static_cast<std::size_t>(values.rows());
    if (static_cast<std::size_t>(index.size()) != t) throw NumericError("index length differs from number of periods");
    const Eigen::VectorXd f = index;
    const std::span<const double> fs(f.data(), t);

    const auto n = static_cast<std::size_t>(values.cols());
    std::vector<double> line_losses(n, 0.0);
    std::vector<double> const_losses(n, 0.0);
    parallel_for(n, threads, [&](std::size_t j) {
        const Eigen::VectorXd column = values.col(static_cast<Eigen::Index>(j));
        const std::span<const double> ys(column.data(), t);
        if (std::all_of(ys.begin(), ys.end(), [&](double v) { return v == ys[0]; })) return;
        line_losses[j] = fit_quantile_line(ys, fs, tau).v_value;
        const_losses[j] = fit_quantile_const(ys, tau).v_value;
    });
    const double v_const = compensated_sum(const_losses);
    if (!(v_const > 0.0)) throw NumericError("every field is constant");
    return 1.0 - compensated_sum(line_losses) / v_const;
}

}  // namespace basisrisk
