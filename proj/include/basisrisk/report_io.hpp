#ifndef BASISRISK_REPORT_IO_HPP
#define BASISRISK_REPORT_IO_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "basisrisk/asymptotics.hpp"
#include "basisrisk/harness.hpp"
#include "basisrisk/metrics.hpp"
#include "basisrisk/spiked.hpp"

namespace basisrisk {

/// Shortest decimal that round-trips to the same double; "nan"/"inf" otherwise.
std::string format_double(double x);

/// A tidy table: named columns, one cell per column per row. monostate is a missing cell.
struct Table {
    using Cell = std::variant<std::monostate, double, std::int64_t, std::string, bool>;

    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

void write_csv(std::ostream& out, const Table& table);
/// Array of objects keyed by column name.
nlohmann::json to_json(const Table& table);

enum class OutputFormat { Csv, Json };

/// JSON is dumped with two-space indent and a trailing newline.
void write_table(std::ostream& out, const Table& table, OutputFormat format);

Table summary_table(const McSummary& summary);
Table spiked_grid_table(const std::vector<SpikedGridRow>& rows);
Table curve_table(const std::vector<CurveRow>& rows);

std::string_view to_string(IndexChoice index);

nlohmann::json report_to_json(const BasisRiskReport& report);
/// Long format: metric,field_id,value. Scalars leave field_id empty.
void write_report_csv(std::ostream& out, const BasisRiskReport& report);
void write_report(std::ostream& out, const BasisRiskReport& report, OutputFormat format);

nlohmann::json model_to_json(const SpikedModel& model);
SpikedModel model_from_json(const nlohmann::json& j);

/**
 * Experiment spec. `dgp` is {"kind": "spiked", a, b, alpha, n, rotation_seed},
 * {"kind": "identity", "n": N} or {"kind": "dense", "sigma": [[...], ...]}.
 * Other keys mirror McExperiment field names; missing keys keep defaults.
 */
McExperiment experiment_from_json(const nlohmann::json& j);
nlohmann::json experiment_to_json(const McExperiment& experiment);

/// Dumps JSON the way every writer here does.
std::string dump_json(const nlohmann::json& j);

}  // namespace basisrisk

#endif
