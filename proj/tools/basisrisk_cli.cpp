#include <charconv>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "basisrisk/asymptotics.hpp"
#include "basisrisk/errors.hpp"
#include "basisrisk/harness.hpp"
#include "basisrisk/metrics.hpp"
#include "basisrisk/panel_io.hpp"
#include "basisrisk/report_io.hpp"
#include "basisrisk/rng.hpp"
#include "basisrisk/sampler.hpp"
#include "basisrisk/spiked.hpp"

namespace br = basisrisk;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

// JSON config: nested objects hold the flags of the subcommand they are named after.
class JsonConfig : public CLI::Config {
public:
    std::string to_config(const CLI::App*, bool, bool, std::string) const override {
        throw CLI::ConfigError("writing JSON config is not supported");
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        json j;
        try {
            j = json::parse(input);
        } catch (const json::exception& e) {
            throw CLI::ConfigError(std::string("invalid JSON config: ") + e.what());
        }
        if (!j.is_object()) throw CLI::ConfigError("JSON config must be an object");
        std::vector<CLI::ConfigItem> items;
        collect(j, {}, items);
        return items;
    }

private:
    static std::string scalar(const json& v) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        if (v.is_number()) return v.dump();
        throw CLI::ConfigError("unsupported JSON config value: " + v.dump());
    }

    static void collect(const json& obj, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& out) {
        for (const auto& [key, value] : obj.items()) {
            if (value.is_null()) continue;
            if (value.is_object()) {
                auto sub = parents;
                sub.push_back(key);
                collect(value, sub, out);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = key;
            if (value.is_array()) {
                for (const auto& v : value) item.inputs.push_back(scalar(v));
            } else {
                item.inputs.push_back(scalar(value));
            }
            out.push_back(std::move(item));
        }
    }
};

struct Global {
    unsigned threads = 0;
    std::string format = "csv";
    std::string out = "-";
};

br::OutputFormat output_format(const Global& g) {
    return g.format == "json" ? br::OutputFormat::Json : br::OutputFormat::Csv;
}

void emit(const Global& g, const std::string& text) {
    if (g.out == "-") {
        std::cout << text << std::flush;
        return;
    }
    std::ofstream file(g.out, std::ios::binary | std::ios::trunc);
    if (!file) throw br::DataError("cannot open output file " + g.out);
    file << text;
    if (!file) throw br::DataError("failed writing output file " + g.out);
}

void add_output_options(CLI::App* cmd, Global& g) {
    cmd->add_option("--threads", g.threads, "Worker threads, 0 for all cores");
    cmd->add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--out", g.out, "Output file, - for stdout");
}

struct PanelInput {
    std::string path;
    bool fail_missing = false;
};

void add_panel_options(CLI::App* cmd, PanelInput& in, bool required) {
    auto* opt = cmd->add_option("--panel", in.path, "Yield panel CSV: header row, one row per period");
    if (required) opt->required();
    auto* group = cmd->add_option_group("missing values");
    auto* drop = group->add_flag("--drop-missing", "Drop fields with missing cells (default)");
    auto* fail = group->add_flag("--fail-missing", in.fail_missing, "Reject panels with missing cells");
    drop->excludes(fail);
}

br::YieldPanel read_panel(const PanelInput& in) {
    br::IngestOptions options;
    options.missing = in.fail_missing ? br::MissingPolicy::Fail : br::MissingPolicy::Drop;
    auto loaded = br::load_panel(in.path, options);
    for (const auto& f : loaded.report.dropped_fields) std::cerr << "dropped field with missing values: " << f << '\n';
    for (const auto& f : loaded.report.constant_fields) std::cerr << "constant field: " << f << '\n';
    return std::move(loaded.panel);
}

std::optional<double> parse_number(std::string s) {
    const auto first = s.find_first_not_of(" \t\r\"");
    const auto last = s.find_last_not_of(" \t\r\"");
    if (first == std::string::npos) return std::nullopt;
    s = s.substr(first, last - first + 1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\"");
    const auto last = s.find_last_not_of(" \t\r\"");
    return first == std::string::npos ? std::string{} : s.substr(first, last - first + 1);
}

// One weight per line, optionally `field_id,weight`; a non-numeric first line is a header.
Eigen::VectorXd read_weights(const std::string& path, const br::YieldPanel& panel) {
    std::ifstream in(path);
    if (!in) throw br::DataError("cannot open weights file " + path);
    std::vector<double> positional;
    std::map<std::string, double> named;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto comma = line.find(',');
        const std::string value_text = comma == std::string::npos ? line : line.substr(comma + 1);
        const auto value = parse_number(value_text);
        if (!value) {
            if (first) {
                first = false;
                continue;
            }
            throw br::DataError("non-numeric weight: " + line);
        }
        first = false;
        if (comma == std::string::npos) {
            positional.push_back(*value);
        } else if (!named.emplace(trim(line.substr(0, comma)), *value).second) {
            throw br::DataError("duplicate field in weights file: " + trim(line.substr(0, comma)));
        }
    }
    if (!positional.empty() && !named.empty()) throw br::DataError("weights file mixes named and positional rows");
    Eigen::VectorXd w(panel.fields());
    if (!named.empty()) {
        if (named.size() != static_cast<std::size_t>(panel.fields())) {
            throw br::DataError("weights file names " + std::to_string(named.size()) + " fields, panel has " +
                                std::to_string(panel.fields()));
        }
        for (Eigen::Index j = 0; j < panel.fields(); ++j) {
            const auto it = named.find(panel.field_ids[static_cast<std::size_t>(j)]);
            if (it == named.end()) throw br::DataError("no weight for field " + panel.field_ids[static_cast<std::size_t>(j)]);
            w(j) = it->second;
        }
        return w;
    }
    if (positional.size() != static_cast<std::size_t>(panel.fields())) {
        throw br::DataError("weights file has " + std::to_string(positional.size()) + " values, panel has " +
                            std::to_string(panel.fields()) + " fields");
    }
    for (Eigen::Index j = 0; j < panel.fields(); ++j) w(j) = positional[static_cast<std::size_t>(j)];
    return w;
}

struct CalibrationFlags {
    bool paper_recipe = false;
};

void add_calibration_options(CLI::App* cmd, CalibrationFlags& c) {
    auto* group = cmd->add_option_group("spike calibration");
    auto* exact = group->add_flag("--exact-target", "Finite-N share equals each lambda exactly (default)");
    auto* paper = group->add_flag("--paper-recipe", c.paper_recipe, "a = lambda / (1 - lambda), b = 1");
    exact->excludes(paper);
}

br::SpikeCalibration calibration(const CalibrationFlags& c) {
    return c.paper_recipe ? br::SpikeCalibration::PaperRecipe : br::SpikeCalibration::ExactTarget;
}

std::string render(const br::Table& table, br::OutputFormat format) {
    std::ostringstream s;
    br::write_table(s, table, format);
    return s.str();
}

std::vector<double> default_r_grid() {
    std::vector<double> r;
    for (int k = 1; k <= 99; ++k) r.push_back(k / 100.0);
    return r;
}

int run(int argc, char** argv) {
    CLI::App app{"Basis-risk measures for area-yield index insurance, with Monte Carlo and asymptotic bias tools"};
    app.config_formatter(std::make_shared<JsonConfig>());
    app.set_config("--config", "", "Optional JSON config; flags override it");
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);

    Global g;

    // metrics
    auto* metrics = app.add_subcommand("metrics", "Basis-risk measures of a yield panel");
    PanelInput metrics_panel;
    double metrics_tau = br::kDefaultTau;
    std::string index_name = "mean";
    std::string weights_path;
    add_panel_options(metrics, metrics_panel, true);
    metrics->add_option("--tau", metrics_tau, "Quantile level of the pseudo-R2")->check(CLI::Range(0.0, 1.0));
    metrics->add_option("--index", index_name, "Index for the quantile and per-field measures")
        ->check(CLI::IsMember({"mean", "optimal", "weights-file"}));
    metrics->add_option("--weights", weights_path, "Weights file for --index weights-file");

    // simulate-spiked
    auto* spiked = app.add_subcommand("simulate-spiked", "Eigenvalue-share bias over a T x N x lambda grid");
    br::SpikedGridConfig grid;
    CalibrationFlags spiked_cal;
    spiked->add_option("--t-grid", grid.t_grid, "Sample sizes T")->delimiter(',');
    spiked->add_option("--n-grid", grid.n_grid, "Dimensions N")->delimiter(',');
    spiked->add_option("--lambda-grid", grid.lambda_grid, "Population eigenvalue shares")->delimiter(',');
    spiked->add_option("--reps", grid.n_reps, "Replications per cell")->check(CLI::PositiveNumber);
    spiked->add_option("--seed", grid.base_seed, "Base seed");
    add_calibration_options(spiked, spiked_cal);

    // simulate-calibrated
    auto* calibrated = app.add_subcommand("simulate-calibrated", "Bias of all measures with a panel's covariance as truth");
    PanelInput cal_panel;
    std::vector<int> cal_t_grid{4, 10, 20};
    int cal_reps = 500;
    std::uint64_t cal_seed = 0;
    double cal_tau = br::kDefaultTau;
    Eigen::Index oracle_size = 25000;
    std::string quantile_index = "mean";
    add_panel_options(calibrated, cal_panel, true);
    calibrated->add_option("--t-grid", cal_t_grid, "Sample sizes T")->delimiter(',');
    calibrated->add_option("--reps", cal_reps, "Replications per T")->check(CLI::PositiveNumber);
    calibrated->add_option("--seed", cal_seed, "Base seed");
    calibrated->add_option("--tau", cal_tau, "Quantile level of the pseudo-R2")->check(CLI::Range(0.0, 1.0));
    calibrated->add_option("--oracle-size", oracle_size, "Rows of the simulated quantile population oracle");
    calibrated->add_option("--quantile-index", quantile_index, "In-sample index for the quantile measure")
        ->check(CLI::IsMember({"mean", "optimal"}));

    // asymptotics
    auto* asym = app.add_subcommand("asymptotics", "Limit law of the eigenvalue share and its bias");
    std::vector<int> asym_t{4, 20, 100};
    std::vector<double> r_grid = default_r_grid();
    asym->add_option("--t-grid", asym_t, "Sample sizes T")->delimiter(',');
    asym->add_option("--r-grid", r_grid, "Limiting eigenvalue shares in (0, 1)")->delimiter(',');

    // sample
    auto* sample = app.add_subcommand("sample", "Write a simulated panel as CSV");
    PanelInput sample_panel;
    Eigen::Index sample_t = 4;
    Eigen::Index sample_n = 50;
    double sample_lambda = 0.5;
    std::optional<double> sample_a;
    double sample_b = 1.0;
    double sample_alpha = 1.0;
    std::uint64_t sample_seed = 0;
    CalibrationFlags sample_cal;
    sample->add_option("--t", sample_t, "Periods to draw")->check(CLI::PositiveNumber);
    sample->add_option("--n", sample_n, "Fields of the spiked model");
    sample->add_option("--lambda", sample_lambda, "Eigenvalue share of the constant-spike model");
    sample->add_option("--a", sample_a, "Spike scale a in a N^alpha; overrides --lambda");
    sample->add_option("--b", sample_b, "Bulk eigenvalue, with --a");
    sample->add_option("--alpha", sample_alpha, "Spike growth exponent, with --a");
    sample->add_option("--seed", sample_seed, "Seed of the draw and the rotation");
    add_calibration_options(sample, sample_cal);
    add_panel_options(sample, sample_panel, false);
    sample->get_option("--panel")->description("Draw from this panel's mean and covariance instead");

    for (auto* cmd : {metrics, spiked, calibrated, asym, sample}) add_output_options(cmd, g);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    const auto format = output_format(g);

    if (*metrics) {
        const br::YieldPanel panel = read_panel(metrics_panel);
        br::IndexChoice choice = br::IndexChoice::Mean;
        std::optional<br::IndexWeights> custom;
        if (index_name == "optimal") {
            choice = br::IndexChoice::Optimal;
        } else if (index_name == "weights-file") {
            if (weights_path.empty()) throw CLI::RequiredError("--weights is required with --index weights-file");
            choice = br::IndexChoice::Weights;
            custom = br::IndexWeights::custom(read_weights(weights_path, panel));
        }
        const auto report = br::compute_report(panel, metrics_tau, choice, custom);
        std::ostringstream s;
        br::write_report(s, report, format);
        emit(g, s.str());
    } else if (*spiked) {
        grid.calibration = calibration(spiked_cal);
        grid.threads = g.threads;
        emit(g, render(br::spiked_grid_table(br::spiked_grid(grid)), format));
    } else if (*calibrated) {
        const br::YieldPanel panel = read_panel(cal_panel);
        const auto qi = quantile_index == "optimal" ? br::QuantileIndex::Optimal : br::QuantileIndex::Mean;
        const auto summary =
            br::run_calibrated(panel, cal_t_grid, cal_reps, cal_seed, cal_tau, g.threads, oracle_size, qi);
        emit(g, render(br::summary_table(summary), format));
    } else if (*asym) {
        emit(g, render(br::curve_table(br::asymptotics_table(asym_t, r_grid, g.threads)), format));
    } else if (*sample) {
        br::SampleSpec spec;
        spec.t = sample_t;
        spec.seed = br::derive_seed(sample_seed, {br::stream_tag::replication});
        const auto rotation = br::derive_seed(sample_seed, {br::stream_tag::rotation});
        std::optional<br::YieldPanel> source;
        if (!sample_panel.path.empty()) {
            source = read_panel(sample_panel);
            const auto moments = br::sample_moments(*source);
            spec.mean = moments.mean;
            spec.source = br::DenseCovariance{moments.covariance};
        } else if (sample_a) {
            br::SpikedModel m;
            m.a = *sample_a;
            m.b = sample_b;
            m.alpha = sample_alpha;
            m.n = sample_n;
            m.rotation_seed = rotation;
            m.validate();
            spec.source = m;
        } else {
            spec.source = br::constant_spike_from_target(sample_lambda, sample_n, calibration(sample_cal), rotation);
        }
        br::YieldPanel panel = br::sample_panel(spec);
        if (source) panel.field_ids = source->field_ids;
        std::ostringstream s;
        if (format == br::OutputFormat::Csv) {
            br::write_panel_csv(s, panel);
        } else {
            json values = json::array();
            for (Eigen::Index i = 0; i < panel.periods(); ++i) {
                json row = json::array();
                for (Eigen::Index j = 0; j < panel.fields(); ++j) row.push_back(panel.values(i, j));
                values.push_back(std::move(row));
            }
            s << br::dump_json({{"field_ids", panel.field_ids}, {"period_ids", panel.period_ids}, {"values", values}});
        }
        emit(g, s.str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const br::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const br::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumeric;
    }
}
