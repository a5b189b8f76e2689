#include "basisrisk/report_io.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

#include "basisrisk/errors.hpp"

namespace basisrisk {

using nlohmann::json;

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc{}) throw NumericError("cannot format number");
    return {buf, ptr};
}

namespace {

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

std::string cell_text(const Table::Cell& cell) {
    return std::visit(
        [](const auto& v) -> std::string {
            using V = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<V, std::monostate>) {
                return "";
            } else if constexpr (std::is_same_v<V, double>) {
                return format_double(v);
            } else if constexpr (std::is_same_v<V, std::int64_t>) {
                return std::to_string(v);
            } else if constexpr (std::is_same_v<V, bool>) {
                return v ? "true" : "false";
            } else {
                return csv_escape(v);
            }
        },
        cell);
}

json cell_json(const Table::Cell& cell) {
    return std::visit(
        [](const auto& v) -> json {
            using V = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<V, std::monostate>) {
                return nullptr;
            } else if constexpr (std::is_same_v<V, double>) {
                return std::isfinite(v) ? json(v) : json(nullptr);
            } else {
                return json(v);
            }
        },
        cell);
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::int64_t i64(auto v) { return static_cast<std::int64_t>(v); }

}  // namespace

void write_csv(std::ostream& out, const Table& table) {
    for (std::size_t c = 0; c < table.columns.size(); ++c) out << (c ? "," : "") << csv_escape(table.columns[c]);
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << cell_text(row[c]);
        out << '\n';
    }
}

json to_json(const Table& table) {
    json arr = json::array();
    for (const auto& row : table.rows) {
        json obj = json::object();
        for (std::size_t c = 0; c < row.size(); ++c) obj[table.columns[c]] = cell_json(row[c]);
        arr.push_back(std::move(obj));
    }
    return arr;
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

void write_table(std::ostream& out, const Table& table, OutputFormat format) {
    if (format == OutputFormat::Csv) {
        write_csv(out, table);
    } else {
        out << dump_json(to_json(table));
    }
}

Table summary_table(const McSummary& summary) {
    Table table;
    table.columns = {"metric", "t", "population_value", "mean_estimate", "bias", "mc_standard_error", "n_reps",
                     "n_failed"};
    for (const auto& r : summary.rows) {
        table.rows.push_back({std::string(to_string(r.metric)), i64(r.t), r.population_value, r.mean_estimate, r.bias,
                              r.mc_standard_error, i64(r.n_reps), i64(r.n_failed)});
    }
    return table;
}

Table spiked_grid_table(const std::vector<SpikedGridRow>& rows) {
    Table table;
    table.columns = {"t",         "n",          "lambda_target",    "lambda",          "mean_estimate",
                     "empirical_bias", "theoretical_bias", "worst_bound", "mc_standard_error", "n_reps"};
    for (const auto& r : rows) {
        table.rows.push_back({i64(r.t), i64(r.n), r.lambda_target, r.lambda, r.mean_estimate, r.empirical_bias,
                              r.theoretical_bias, r.worst_bound, r.mc_standard_error, i64(r.n_reps)});
    }
    return table;
}

Table curve_table(const std::vector<CurveRow>& rows) {
    Table table;
    table.columns = {"t", "r", "bias", "bound", "mean", "sd", "q01", "q05", "q50", "q95", "q99", "vacuous"};
    for (const auto& r : rows) {
        table.rows.push_back({i64(r.t), r.r, r.bias, r.bound, r.mean, r.sd, r.q01, r.q05, r.q50, r.q95, r.q99,
                              r.vacuous});
    }
    return table;
}

std::string_view to_string(IndexChoice index) {
    switch (index) {
        case IndexChoice::Mean: return "mean";
        case IndexChoice::Optimal: return "optimal";
        case IndexChoice::Weights: return "weights-file";
    }
    return "unknown";
}

json report_to_json(const BasisRiskReport& report) {
    json j;
    j["r2_area"] = report.r2_area;
    j["r2_optimal"] = report.r2_optimal;
    j["lambda_share"] = report.lambda_share;
    j["r2_quantile"] = report.r2_quantile;
    j["tau"] = report.tau;
    j["index"] = std::string(to_string(report.index));
    j["r2_index"] = report.r2_index;
    j["periods"] = report.periods;
    j["fields"] = report.field_ids.size();
    json per_field = json::array();
    for (const auto& v : report.per_field_r2) per_field.push_back(optional_number(v));
    j["per_field_r2"] = std::move(per_field);
    j["field_ids"] = report.field_ids;
    return j;
}

void write_report_csv(std::ostream& out, const BasisRiskReport& report) {
    Table table;
    table.columns = {"metric", "field_id", "value"};
    auto scalar = [&](const char* name, double v) { table.rows.push_back({std::string(name), std::monostate{}, v}); };
    scalar("r2_area", report.r2_area);
    scalar("r2_optimal", report.r2_optimal);
    scalar("lambda_share", report.lambda_share);
    scalar("r2_quantile", report.r2_quantile);
    scalar("tau", report.tau);
    scalar("r2_index", report.r2_index);
    for (std::size_t i = 0; i < report.per_field_r2.size(); ++i) {
        Table::Cell value = std::monostate{};
        if (report.per_field_r2[i]) value = *report.per_field_r2[i];
        table.rows.push_back({std::string("per_field_r2"), report.field_ids.at(i), value});
    }
    write_csv(out, table);
}

void write_report(std::ostream& out, const BasisRiskReport& report, OutputFormat format) {
    if (format == OutputFormat::Csv) {
        write_report_csv(out, report);
    } else {
        out << dump_json(report_to_json(report));
    }
}

json model_to_json(const SpikedModel& model) {
    return {{"a", model.a}, {"b", model.b}, {"alpha", model.alpha}, {"n", model.n}, {"rotation_seed", model.rotation_seed}};
}

SpikedModel model_from_json(const json& j) {
    try {
        SpikedModel m;
        m.a = j.at("a").get<double>();
        m.b = j.at("b").get<double>();
        m.alpha = j.at("alpha").get<double>();
        m.n = j.at("n").get<Eigen::Index>();
        m.rotation_seed = j.value("rotation_seed", std::uint64_t{0});
        m.validate();
        return m;
    } catch (const json::exception& e) {
        throw DataError(std::string("invalid spiked model JSON: ") + e.what());
    }
}

McExperiment experiment_from_json(const json& j) {
    McExperiment e;
    try {
        const json& dgp = j.at("dgp");
        const auto kind = dgp.at("kind").get<std::string>();
        if (kind == "spiked") {
            e.dgp = model_from_json(dgp);
        } else if (kind == "identity") {
            e.dgp = DenseCovariance{Eigen::MatrixXd::Identity(dgp.at("n").get<Eigen::Index>(), dgp.at("n").get<Eigen::Index>())};
        } else if (kind == "dense") {
            const auto rows = dgp.at("sigma").get<std::vector<std::vector<double>>>();
            Eigen::MatrixXd sigma(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (rows[i].size() != rows.size()) throw DataError("dense sigma must be square");
                for (std::size_t k = 0; k < rows.size(); ++k) {
                    sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
                }
            }
            e.dgp = DenseCovariance{std::move(sigma)};
        } else {
            throw DataError("unknown dgp kind: " + kind);
        }
        e.t_grid = j.value("t_grid", e.t_grid);
        e.n_reps = j.value("n_reps", e.n_reps);
        e.base_seed = j.value("base_seed", e.base_seed);
        if (j.contains("metrics")) {
            e.metrics.clear();
            for (const auto& m : j.at("metrics")) e.metrics.insert(metric_from_string(m.get<std::string>()));
        }
        e.tau = j.value("tau", e.tau);
        e.population_oracle_size = j.value("population_oracle_size", e.population_oracle_size);
        if (j.contains("quantile_index")) {
            const auto qi = j.at("quantile_index").get<std::string>();
            if (qi == "mean") {
                e.quantile_index = QuantileIndex::Mean;
            } else if (qi == "optimal") {
                e.quantile_index = QuantileIndex::Optimal;
            } else {
                throw DataError("unknown quantile_index: " + qi);
            }
        }
    } catch (const json::exception& ex) {
        throw DataError(std::string("invalid experiment JSON: ") + ex.what());
    }
    e.validate();
    return e;
}

json experiment_to_json(const McExperiment& e) {
    json j;
    if (const auto* m = std::get_if<SpikedModel>(&e.dgp)) {
        j["dgp"] = model_to_json(*m);
        j["dgp"]["kind"] = "spiked";
    } else {
        const auto& sigma = std::get<DenseCovariance>(e.dgp).sigma;
        std::vector<std::vector<double>> rows(static_cast<std::size_t>(sigma.rows()));
        for (Eigen::Index i = 0; i < sigma.rows(); ++i) {
            for (Eigen::Index k = 0; k < sigma.cols(); ++k) rows[static_cast<std::size_t>(i)].push_back(sigma(i, k));
        }
        j["dgp"] = {{"kind", "dense"}, {"sigma", rows}};
    }
    j["t_grid"] = e.t_grid;
    j["n_reps"] = e.n_reps;
    j["base_seed"] = e.base_seed;
    json metrics = json::array();
    for (Metric m : e.metrics) metrics.push_back(std::string(to_string(m)));
    j["metrics"] = metrics;
    j["tau"] = e.tau;
    j["population_oracle_size"] = e.population_oracle_size;
    j["quantile_index"] = e.quantile_index == QuantileIndex::Mean ? "mean" : "optimal";
    return j;
}

}  // namespace basisrisk
