#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mtebounds/common.hpp"

namespace mtebounds {

// ---------------------------------------------------------------------------
// Case-level data: outcome y, mismeasured treatment t, optional true
// treatment d, instrument z, group label x, optional judge id. Immutable
// after construction; all transformations return new tables.
// ---------------------------------------------------------------------------
struct ObservationTable {
    std::vector<double> y;
    std::vector<std::uint8_t> t;
    std::optional<std::vector<std::uint8_t>> d;
    std::vector<double> z;
    std::vector<int> x;  // index into group_labels
    std::vector<std::string> group_labels;
    std::optional<std::vector<int>> judge;  // index into judge_labels
    std::vector<std::string> judge_labels;

    std::size_t size() const { return y.size(); }
    int group_count() const { return static_cast<int>(group_labels.size()); }
    bool has_d() const { return d.has_value(); }
    bool has_judge() const { return judge.has_value(); }

    /// Column lengths, binary codes, finite z, no empty group. Throws on violation.
    void validate() const;

    /// Row subset; group and judge labels are compacted so that every
    /// surviving label keeps at least one observation.
    ObservationTable select(const std::vector<std::size_t>& rows) const;

    /// Rows whose group index equals g.
    std::vector<std::size_t> rows_of_group(int g) const;
};

struct ColumnMap {
    std::string y = "y";
    std::string t = "t";
    std::string z = "z";
    std::optional<std::string> d;
    std::optional<std::string> x;
    std::optional<std::string> judge;
};

struct LoadResult {
    ObservationTable table;
    std::size_t rows_read = 0;
    std::size_t rows_dropped_missing = 0;
};

/// Reads a CSV with a header row; rows with an empty cell in any mapped
/// column are dropped and counted. Non-binary t/d codes raise DataError
/// naming the offending data row (1-based, excluding the header).
LoadResult load_table(const std::string& path, const ColumnMap& columns);

/// Writes y,t[,d],z,x[,judge] with round-trip-exact doubles.
void write_table_csv(const ObservationTable& table, const std::string& path);

struct LooResult {
    ObservationTable table;
    std::size_t judges_dropped = 0;
    std::size_t rows_dropped = 0;
};

/// Replaces z with the leave-one-out mean of t across the same judge's other
/// cases: (S_j - t_i) / (n_j - 1). Judges with at most `min_cases` cases are
/// dropped entirely (single-case judges in particular).
LooResult leave_one_out_rate(const ObservationTable& table, int min_cases = 20);

enum class TreatmentArm { mismeasured, true_treatment };

struct TrimResult {
    ObservationTable table;
    std::size_t rows_dropped = 0;
    double z_lo = 0.0;
    double z_hi = 0.0;
};

/// Keeps rows with z in the closed interval [max of arm minima, min of arm
/// maxima] so the instrument's range coincides across both arms.
TrimResult common_support_trim(const ObservationTable& table,
                               TreatmentArm arm = TreatmentArm::mismeasured);

// ---------------------------------------------------------------------------
// Evaluation grid: ordered z points, evaluated per group or pooled.
// ---------------------------------------------------------------------------
struct GridSpec {
    std::vector<double> points;
    bool per_group = true;

    void validate() const;  // strictly increasing, finite, non-empty

    /// k quantiles of z at levels 1/(k+1), ..., k/(k+1); the default k = 19
    /// gives the 5th, 10th, ..., 95th percentiles.
    static GridSpec quantiles(const ObservationTable& table, int k = 19, bool per_group = true);
};

}  // namespace mtebounds
