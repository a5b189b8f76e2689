// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "basisrisk/asymptotics.hpp"
#include "basisrisk/harness.hpp"
#include "basisrisk/metrics.hpp"
#include "basisrisk/panel_io.hpp"
#include "basisrisk/quantreg.hpp"
#include "basisrisk/spiked.hpp"
#include "test_support.hpp"

namespace br = basisrisk;
namespace ts = testing_support;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string num(double x) {
    std::ostringstream s;
    s.precision(6);
    s << x;
    return s.str();
}

// Eigenvalues of a symmetric matrix, descending, via the dense solver.
Eigen::VectorXd eigenvalues_desc(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().reverse();
}

Outcome regression_equivalence() {
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<int> t_dist(3, 12), n_dist(3, 40);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const int t = t_dist(rng), n = n_dist(rng);
        Eigen::MatrixXd y = ts::gaussian_matrix(t, n, rng);
        y.array() += 5.0;
        const Eigen::MatrixXd s = ts::brute_force_covariance(y);
        const double matrix = br::total_r2_matrix(s, br::IndexWeights::area_yield(n));
        const double regression = br::total_r2_regression(y, y.rowwise().mean()).total;
        worst = std::max(worst, std::abs(matrix - regression));
    }
    return {worst <= 1e-10, "max |matrix - regression| = " + num(worst)};
}

Outcome optimal_index_identity() {
    std::mt19937_64 rng(202);
    std::uniform_int_distribution<int> n_dist(2, 30);
    double worst_identity = 0.0;
    double worst_excess = -1.0;
    for (int k = 0; k < 100; ++k) {
        const int n = n_dist(rng);
        const Eigen::MatrixXd sigma = ts::random_spd(n, rng);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
        const Eigen::VectorXd pc = es.eigenvectors().col(n - 1);
        const double share = es.eigenvalues()(n - 1) / es.eigenvalues().sum();
        worst_identity = std::max(worst_identity, std::abs(br::total_r2_matrix(sigma, br::IndexWeights::custom(pc)) - share));
        worst_identity = std::max(worst_identity, std::abs(br::optimal_index(sigma).lambda_share - share));
        for (int w = 0; w < 50; ++w) {
            const Eigen::VectorXd weights = ts::gaussian_matrix(n, 1, rng).col(0);
            worst_excess = std::max(worst_excess, br::total_r2_matrix(sigma, br::IndexWeights::custom(weights)) - share);
        }
    }
    return {worst_identity <= 1e-10 && worst_excess <= 1e-10,
            "max identity gap = " + num(worst_identity) + ", max excess over share = " + num(worst_excess)};
}

Outcome dual_trick() {
    std::mt19937_64 rng(303);
    double worst = 0.0;
    for (int n : {5, 40, 150, 300}) {
        for (int t : {3, 10, 20}) {
            const Eigen::MatrixXd y = ts::gaussian_matrix(t, n, rng);
            const Eigen::VectorXd ev = eigenvalues_desc(ts::brute_force_covariance(y));
            const double primal = ev(0) / ev.sum();
            worst = std::max(worst, std::abs(br::lambda_share_from_panel(y) - primal));
            worst = std::max(worst, std::abs(br::lambda_share_from_panel(y) - br::lambda_share_primal(y)));
        }
    }
    double slowest = 0.0;
    for (int t : {4, 20}) {
        const Eigen::MatrixXd y = ts::gaussian_matrix(t, 2000, rng);
        const auto start = Clock::now();
        const double share = br::lambda_share_from_panel(y);
        slowest = std::max(slowest, seconds_since(start));
        if (!(share > 0.0 && share <= 1.0)) return {false, "invalid share at N=2000"};
    }
    return {worst <= 1e-9 && slowest < 1.0,
            "max |dual - primal| = " + num(worst) + ", slowest N=2000 dual = " + num(slowest) + " s"};
}

Outcome vanishing_spike() {
    br::McExperiment e;
    e.dgp = br::DenseCovariance{Eigen::MatrixXd::Identity(2000, 2000)};
    e.t_grid = {4};
    e.n_reps = 500;
    e.base_seed = 404;
    e.metrics = {br::Metric::LambdaShare};
    const double mean = br::run_experiment(e).row(br::Metric::LambdaShare, 4).mean_estimate;
    return {std::abs(mean - 1.0 / 3.0) <= 0.02, "mean share = " + num(mean) + " (target 1/3 +- 0.02)"};
}

Outcome constant_spike() {
    br::SpikedGridConfig c;
    c.t_grid = {4};
    c.n_grid = {50, 1000};
    c.lambda_grid = {0.1, 0.3, 0.5, 0.7, 0.9};
    c.n_reps = 500;
    c.base_seed = 505;
    double worst50 = 0.0, worst1000 = 0.0;
    for (const auto& r : br::spiked_grid(c)) {
        double& worst = r.n == 50 ? worst50 : worst1000;
        worst = std::max(worst, std::abs(r.empirical_bias - r.theoretical_bias));
    }
    return {worst1000 <= 0.02 && worst50 <= 0.06 && worst50 > worst1000,
            "max gap N=1000: " + num(worst1000) + ", N=50: " + num(worst50)};
}

Outcome worst_case_bound() {
    double excess = -1.0, limit_gap = 0.0;
    for (int t : {4, 10, 20, 100}) {
        const double bound = br::worst_case_bound(t);
        for (int k = 1; k <= 99; ++k) {
            excess = std::max(excess, br::asymptotic_bias(br::SpikeRegime::Constant, t, k / 100.0) - bound);
        }
        limit_gap = std::max(limit_gap, std::abs(br::asymptotic_bias(br::SpikeRegime::Constant, t, 1e-6) - 1.0 / (t - 1)));
    }
    return {excess <= 1e-9 && limit_gap <= 1e-4,
            "max bias - bound = " + num(excess) + ", max gap at r=1e-6 = " + num(limit_gap)};
}

Outcome sign_reversal() {
    const auto root = br::bias_sign_change(4, 0.9, 1.0 - 1e-9);
    if (!root) {
        const auto elsewhere = br::bias_sign_change(4, 1e-6, 1.0 - 1e-9);
        return {false, "no sign change on (0.9, 1): bias(0.9) = " +
                           num(br::asymptotic_bias(br::SpikeRegime::Constant, 4, 0.9)) + ", bias(0.999) = " +
                           num(br::asymptotic_bias(br::SpikeRegime::Constant, 4, 0.999)) +
                           (elsewhere ? ", only root on (0, 1) at r = " + num(*elsewhere) : std::string())};
    }
    const double below = br::asymptotic_bias(br::SpikeRegime::Constant, 4, *root - 1e-3);
    const double above = br::asymptotic_bias(br::SpikeRegime::Constant, 4, std::min(*root + 1e-3, 1.0 - 1e-9));
    return {*root > 0.9 && *root < 1.0 && below > 0.0 && above < 0.0, "root at r = " + num(*root)};
}

Outcome quantile_exactness() {
    std::mt19937_64 rng(808);
    std::uniform_int_distribution<int> t_dist(3, 30);
    const std::vector<double> taus{0.1, 0.3, 0.5, 0.7};
    double worst = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < 200; ++k) {
        const int t = t_dist(rng);
        const double tau = taus[static_cast<std::size_t>(k) % taus.size()];
        std::normal_distribution<double> normal;
        std::vector<double> y(t), f(t);
        for (int i = 0; i < t; ++i) {
            f[i] = normal(rng);
            y[i] = 2.0 + 0.7 * f[i] + normal(rng);
        }
        const auto fit = br::fit_quantile_line_pairs(y, f, tau);
        const double grid = ts::grid_search_loss(y, f, tau, 400, 3.0);
        worst = std::max(worst, fit.v_value - grid);
    }
    return {worst <= 1e-9, "max (exact - grid) loss = " + num(worst)};
}

Outcome limit_distribution_fit() {
    const auto model = br::constant_spike_from_target(0.5, 1000, br::SpikeCalibration::ExactTarget, 909);
    const auto shares = br::replicate_metric(model, br::Metric::LambdaShare, 4, 2000, 910);
    const auto law = br::limit_distribution(br::SpikeRegime::Constant, 4, 0.5);
    std::mt19937_64 engine(911);
    std::vector<double> draws(2000);
    for (double& d : draws) d = law.sample(engine);
    const double d = ts::ks_statistic(shares, draws);
    const double crit = ts::ks_critical_1pct(shares.size(), draws.size());
    return {d < crit, "KS = " + num(d) + ", 1% critical = " + num(crit)};
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(BASISRISK_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome determinism() {
    std::mt19937_64 rng(1010);
    Eigen::MatrixXd y = ts::gaussian_matrix(20, 6, rng);
    y.array() += 3.0;
    {
        std::ofstream out("acceptance_panel.csv");
        br::write_panel_csv(out, br::make_panel(y));
    }
    const std::vector<std::string> commands = {
        "simulate-spiked --t-grid 4,20 --n-grid 50,200 --lambda-grid 0.1,0.5,0.9 --reps 50 --seed 3",
        "simulate-calibrated --panel acceptance_panel.csv --t-grid 4,10,20 --reps 50 --seed 3 --oracle-size 5000",
        "asymptotics --t-grid 4,20,100",
        "sample --t 10 --n 30 --lambda 0.6 --seed 3",
        "sample --t 10 --panel acceptance_panel.csv --seed 3",
    };
    int checked = 0;
    for (const auto& cmd : commands) {
        for (const char* fmt : {"csv", "json"}) {
            const std::string base = cmd + " --format " + fmt + " --out acceptance_run_";
            std::string reference;
            for (const char* threads : {"1", "2", "4", "1"}) {
                const std::string path = std::string("acceptance_run_") + threads + ".out";
                if (run_cli(base + threads + ".out --threads " + threads) != 0) return {false, "failed: " + cmd};
                const std::string text = slurp(path);
                if (text.empty()) return {false, "empty output: " + cmd};
                if (reference.empty()) {
                    reference = text;
                } else if (text != reference) {
                    return {false, "output differs across runs: " + cmd + " --format " + fmt};
                }
                ++checked;
            }
        }
    }
    return {true, std::to_string(checked) + " runs byte-identical"};
}

struct Criterion {
    int id;
    const char* name;
    double time_limit;  // seconds
    std::function<Outcome()> check;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "covariance and regression total R2 agree", 10.0, regression_equivalence},
        {2, "optimal index attains the first eigenvalue share", 10.0, optimal_index_identity},
        {3, "dual eigenvalue share equals the primal one", 60.0, dual_trick},
        {4, "identity covariance gives mean share 1/(T-1)", 120.0, vanishing_spike},
        {5, "constant-spike bias matches the asymptotic formula", 900.0, constant_spike},
        {6, "bias never exceeds 1/(T-1)", 60.0, worst_case_bound},
        {7, "bias changes sign for r near 1 at T=4", 60.0, sign_reversal},
        {8, "pair enumeration beats a 400x400 grid", 60.0, quantile_exactness},
        {9, "simulated shares follow the limit law (KS)", 600.0, limit_distribution_fit},
        {10, "simulation outputs are byte-identical across runs and threads", 600.0, determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = Clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double elapsed = seconds_since(start);
        if (elapsed > c.time_limit) {
            o.pass = false;
            o.detail += "; over time limit of " + num(c.time_limit) + " s";
        }
        if (!o.pass) ++failed;
        std::printf("[%s] %2d %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), elapsed);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
