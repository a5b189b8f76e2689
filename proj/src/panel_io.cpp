#include "basisrisk/panel_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "basisrisk/errors.hpp"
#include "basisrisk/report_io.hpp"

namespace basisrisk {

namespace {

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(trim(cell));
            cell.clear();
        } else {
            cell += c;
        }
    }
    if (quoted) throw DataError("unterminated quote in CSV line: " + line);
    cells.push_back(trim(cell));
    return cells;
}

bool is_missing(const std::string& cell) {
    if (cell.empty()) return true;
    const auto l = lower(cell);
    return l == "nan" || l == "na" || l == "null";
}

double parse_number(const std::string& cell, std::size_t line_no) {
    double value = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || !std::isfinite(value)) {
        throw DataError("line " + std::to_string(line_no) + ": not a number: '" + cell + "'");
    }
    return value;
}

void require_unique(const std::vector<std::string>& ids, const char* what) {
    std::unordered_set<std::string> seen;
    for (const auto& id : ids) {
        if (!seen.insert(id).second) throw DataError(std::string("duplicate ") + what + " identifier: " + id);
    }
}

}  // namespace

YieldPanel make_panel(Eigen::MatrixXd values) {
    YieldPanel panel;
    panel.field_ids.reserve(values.cols());
    for (Eigen::Index j = 0; j < values.cols(); ++j) panel.field_ids.push_back("f" + std::to_string(j + 1));
    for (Eigen::Index t = 0; t < values.rows(); ++t) panel.period_ids.push_back(std::to_string(t + 1));
    panel.values = std::move(values);
    validate_panel(panel);
    return panel;
}

void validate_panel(const YieldPanel& panel) {
    if (panel.periods() < 2) throw DataError("panel needs at least 2 periods");
    if (panel.fields() < 2) throw DataError("panel needs at least 2 usable fields");
    if (static_cast<Eigen::Index>(panel.field_ids.size()) != panel.fields() ||
        static_cast<Eigen::Index>(panel.period_ids.size()) != panel.periods()) {
        throw DataError("panel labels do not match its dimensions");
    }
    if (!panel.values.allFinite()) throw DataError("panel has missing or non-finite values");
    require_unique(panel.field_ids, "field");
    require_unique(panel.period_ids, "period");
}

LoadedPanel parse_panel(std::istream& in, const IngestOptions& options) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
        if (!trim(line).empty()) {
            header = split_csv_line(line);
            break;
        }
    }
    if (header.empty()) throw DataError("CSV has no header row");

    const bool has_period_column = lower(header.front()) == "period";
    const std::size_t first_field = has_period_column ? 1 : 0;
    std::vector<std::string> field_ids(header.begin() + static_cast<std::ptrdiff_t>(first_field), header.end());
    for (const auto& id : field_ids) {
        if (id.empty()) throw DataError("empty field identifier in header");
    }
    require_unique(field_ids, "field");

    const std::size_t n = field_ids.size();
    std::vector<std::string> period_ids;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                            " cells, found " + std::to_string(cells.size()));
        }
        period_ids.push_back(has_period_column ? cells.front() : std::to_string(rows.size() + 1));
        std::vector<double> row(n);
        for (std::size_t j = 0; j < n; ++j) {
            const auto& cell = cells[first_field + j];
            row[j] = is_missing(cell) ? std::numeric_limits<double>::quiet_NaN() : parse_number(cell, line_no);
        }
        rows.push_back(std::move(row));
    }
    require_unique(period_ids, "period");
    if (rows.size() < 2) throw DataError("panel needs at least 2 periods, found " + std::to_string(rows.size()));

    LoadedPanel result;
    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < n; ++j) {
        const bool any_missing = std::any_of(rows.begin(), rows.end(), [j](const auto& r) { return std::isnan(r[j]); });
        if (!any_missing) {
            keep.push_back(j);
        } else if (options.missing == MissingPolicy::Fail) {
            throw DataError("field '" + field_ids[j] + "' has missing values");
        } else {
            result.report.dropped_fields.push_back(field_ids[j]);
        }
    }
    if (keep.size() < 2) throw DataError("fewer than 2 usable fields after dropping missing data");

    auto& panel = result.panel;
    panel.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        panel.field_ids.push_back(field_ids[keep[k]]);
        for (std::size_t t = 0; t < rows.size(); ++t) {
            panel.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) = rows[t][keep[k]];
        }
    }
    panel.period_ids = std::move(period_ids);
    validate_panel(panel);

    for (Eigen::Index j = 0; j < panel.fields(); ++j) {
        const auto col = panel.values.col(j);
        if ((col.array() == col(0)).all()) result.report.constant_fields.push_back(panel.field_ids[j]);
    }
    return result;
}

LoadedPanel load_panel(const std::filesystem::path& path, const IngestOptions& options) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open panel file: " + path.string());
    return parse_panel(in, options);
}

void write_panel_csv(std::ostream& out, const YieldPanel& panel) {
    out << "period";
    for (const auto& id : panel.field_ids) out << ',' << id;
    out << '\n';
    for (Eigen::Index t = 0; t < panel.periods(); ++t) {
        out << panel.period_ids[static_cast<std::size_t>(t)];
        for (Eigen::Index j = 0; j < panel.fields(); ++j) out << ',' << format_double(panel.values(t, j));
        out << '\n';
    }
}

SampleMoments sample_moments(const Eigen::Ref<const Eigen::MatrixXd>& values, Divisor divisor) {
    const Eigen::Index t = values.rows();
    if (t < 2) throw DataError("sample moments need at least 2 periods");
    SampleMoments m;
    m.divisor = divisor;
    m.mean = values.colwise().mean().transpose();
    const Eigen::MatrixXd centered = values.rowwise() - m.mean.transpose();
    const double denom = divisor == Divisor::T ? static_cast<double>(t) : static_cast<double>(t - 1);
    m.covariance = (centered.transpose() * centered) / denom;
    // exact symmetry
    m.covariance = (0.5 * (m.covariance + m.covariance.transpose())).eval();
    return m;
}

SampleMoments sample_moments(const YieldPanel& panel, Divisor divisor) {
    return sample_moments(panel.values, divisor);
}

}  // namespace basisrisk
