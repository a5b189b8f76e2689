#ifndef BASISRISK_PANEL_IO_HPP
#define BASISRISK_PANEL_IO_HPP

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace basisrisk {

/**
 * T x N matrix of field yields. Rows are periods, columns are fields.
 *
 * A validated panel has T >= 2, N >= 2, no missing values and unique
 * labels on both axes.
 */
struct YieldPanel {
    Eigen::MatrixXd values;
    std::vector<std::string> field_ids;
    std::vector<std::string> period_ids;

    Eigen::Index periods() const { return values.rows(); }
    Eigen::Index fields() const { return values.cols(); }
};

/// Wrap a matrix with generated labels ("f1".., "1"..) and validate it.
YieldPanel make_panel(Eigen::MatrixXd values);

/// Throws DataError if any panel invariant is violated.
void validate_panel(const YieldPanel& panel);

enum class MissingPolicy { Drop, Fail };

struct IngestOptions {
    MissingPolicy missing = MissingPolicy::Drop;
};

struct IngestReport {
    std::vector<std::string> dropped_fields;   // had at least one missing cell
    std::vector<std::string> constant_fields;  // zero variance; kept
};

struct LoadedPanel {
    YieldPanel panel;
    IngestReport report;
};

/**
 * Parse a yield panel from CSV text.
 *
 * Layout: header row, then one row per period. If the first header cell is
 * `period` the first column holds period labels, otherwise periods are
 * numbered from 1. Empty cells and NaN/NA spellings are missing values.
 */
LoadedPanel parse_panel(std::istream& in, const IngestOptions& options = {});
LoadedPanel load_panel(const std::filesystem::path& path, const IngestOptions& options = {});

/// Writes the layout read by parse_panel, with a leading `period` column.
void write_panel_csv(std::ostream& out, const YieldPanel& panel);

enum class Divisor { T, TMinus1 };

struct SampleMoments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
    Divisor divisor = Divisor::TMinus1;
};

/// Column means and centered cross-product over the chosen divisor.
SampleMoments sample_moments(const YieldPanel& panel, Divisor divisor = Divisor::TMinus1);
SampleMoments sample_moments(const Eigen::Ref<const Eigen::MatrixXd>& values,
                             Divisor divisor = Divisor::TMinus1);

}  // namespace basisrisk

#endif
