#include "mtebounds/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace mtebounds {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw DataError(what);
}

}  // namespace

void ObservationTable::validate() const {
    const std::size_t n = y.size();
    require(n >= 1, "table must have at least one row");
    require(t.size() == n && z.size() == n && x.size() == n,
            "columns must all have the same length");
    if (d) require(d->size() == n, "d column length mismatch");
    if (judge) require(judge->size() == n, "judge column length mismatch");
    std::vector<int> group_seen(group_labels.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
        require(t[i] == 0 || t[i] == 1, "t must be coded 0/1 at row " + std::to_string(i + 1));
        if (d) {
            const auto v = (*d)[i];
            require(v == 0 || v == 1, "d must be coded 0/1 at row " + std::to_string(i + 1));
        }
        require(std::isfinite(z[i]), "z must be finite at row " + std::to_string(i + 1));
        require(std::isfinite(y[i]), "y must be finite at row " + std::to_string(i + 1));
        require(x[i] >= 0 && x[i] < static_cast<int>(group_labels.size()),
                "group index out of range at row " + std::to_string(i + 1));
        group_seen[static_cast<std::size_t>(x[i])] = 1;
    }
    for (std::size_t g = 0; g < group_seen.size(); ++g)
        require(group_seen[g] == 1, "group '" + group_labels[g] + "' has no observations");
}

ObservationTable ObservationTable::select(const std::vector<std::size_t>& rows) const {
    ObservationTable out;
    out.y.reserve(rows.size());
    out.t.reserve(rows.size());
    out.z.reserve(rows.size());
    out.x.reserve(rows.size());
    if (d) out.d.emplace();
    if (judge) out.judge.emplace();

    std::vector<int> group_map(group_labels.size(), -1);
    std::vector<int> judge_map(judge_labels.size(), -1);
    for (std::size_t i : rows) {
        out.y.push_back(y[i]);
        out.t.push_back(t[i]);
        out.z.push_back(z[i]);
        if (d) out.d->push_back((*d)[i]);
        int& g = group_map[static_cast<std::size_t>(x[i])];
        if (g < 0) {
            g = static_cast<int>(out.group_labels.size());
            out.group_labels.push_back(group_labels[static_cast<std::size_t>(x[i])]);
        }
        out.x.push_back(g);
        if (judge) {
            int& j = judge_map[static_cast<std::size_t>((*judge)[i])];
            if (j < 0) {
                j = static_cast<int>(out.judge_labels.size());
                out.judge_labels.push_back(judge_labels[static_cast<std::size_t>((*judge)[i])]);
            }
            out.judge->push_back(j);
        }
    }
    return out;
}

std::vector<std::size_t> ObservationTable::rows_of_group(int g) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < size(); ++i)
        if (x[i] == g) rows.push_back(i);
    return rows;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace {

// One record, honoring quoted fields with "" escapes. Returns false at EOF.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
    fields.clear();
    std::string field;
    bool in_quotes = false;
    bool saw_any = false;
    int ch;
    while ((ch = in.get()) != EOF) {
        saw_any = true;
        const char c = static_cast<char>(ch);
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    field.push_back('"');
                    in.get();
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            break;
        } else if (c == '\r') {
            // swallow; \r\n handled by the \n branch next iteration
        } else {
            field.push_back(c);
        }
    }
    if (!saw_any) return false;
    fields.push_back(std::move(field));
    return true;
}

double parse_double(const std::string& s, const std::string& col, std::size_t row) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        if (pos != s.size() || !std::isfinite(v))
            throw DataError("non-numeric value '" + s + "' in column '" + col + "' at row " +
                            std::to_string(row));
        return v;
    } catch (const DataError&) {
        throw;
    } catch (...) {
        throw DataError("non-numeric value '" + s + "' in column '" + col + "' at row " +
                        std::to_string(row));
    }
}

std::uint8_t parse_binary(const std::string& s, const std::string& col, std::size_t row) {
    const double v = parse_double(s, col, row);
    if (v == 0.0) return 0;
    if (v == 1.0) return 1;
    throw DataError("column '" + col + "' must be coded 0/1 but has '" + s + "' at row " +
                    std::to_string(row));
}

int column_index(const std::vector<std::string>& header, const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    throw ConfigError("column '" + name + "' not found in CSV header");
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

}  // namespace

LoadResult load_table(const std::string& path, const ColumnMap& columns) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open input file '" + path + "'");

    std::vector<std::string> header;
    if (!read_record(in, header)) throw DataError("empty CSV file '" + path + "'");

    const int iy = column_index(header, columns.y);
    const int it = column_index(header, columns.t);
    const int iz = column_index(header, columns.z);
    const int id = columns.d ? column_index(header, *columns.d) : -1;
    const int ix = columns.x ? column_index(header, *columns.x) : -1;
    const int ij = columns.judge ? column_index(header, *columns.judge) : -1;

    LoadResult result;
    ObservationTable& tab = result.table;
    if (id >= 0) tab.d.emplace();
    if (ij >= 0) tab.judge.emplace();
    std::unordered_map<std::string, int> group_ids;
    std::unordered_map<std::string, int> judge_ids;

    std::vector<std::string> fields;
    std::size_t row = 0;
    while (read_record(in, fields)) {
        ++row;
        if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
        auto cell = [&](int idx) -> const std::string& {
            static const std::string empty;
            if (idx < 0 || static_cast<std::size_t>(idx) >= fields.size()) return empty;
            return fields[static_cast<std::size_t>(idx)];
        };
        ++result.rows_read;
        bool missing = cell(iy).empty() || cell(it).empty() || cell(iz).empty();
        if (id >= 0 && cell(id).empty()) missing = true;
        if (ix >= 0 && cell(ix).empty()) missing = true;
        if (ij >= 0 && cell(ij).empty()) missing = true;
        if (missing) {
            ++result.rows_dropped_missing;
            continue;
        }
        tab.y.push_back(parse_double(cell(iy), columns.y, row));
        tab.t.push_back(parse_binary(cell(it), columns.t, row));
        tab.z.push_back(parse_double(cell(iz), columns.z, row));
        if (id >= 0) tab.d->push_back(parse_binary(cell(id), *columns.d, row));
        const std::string group = ix >= 0 ? cell(ix) : std::string("0");
        auto [git, inserted] = group_ids.emplace(group, static_cast<int>(tab.group_labels.size()));
        if (inserted) tab.group_labels.push_back(group);
        tab.x.push_back(git->second);
        if (ij >= 0) {
            auto [jit, jnew] = judge_ids.emplace(cell(ij), static_cast<int>(tab.judge_labels.size()));
            if (jnew) tab.judge_labels.push_back(cell(ij));
            tab.judge->push_back(jit->second);
        }
    }
    if (tab.size() == 0) throw DataError("no usable rows in '" + path + "'");
    tab.validate();
    return result;
}

void write_table_csv(const ObservationTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file '" + path + "'");
    out << "y,t";
    if (table.has_d()) out << ",d";
    out << ",z,x";
    if (table.has_judge()) out << ",judge";
    out << "\n";
    for (std::size_t i = 0; i < table.size(); ++i) {
        out << fmt_double(table.y[i]) << ',' << int(table.t[i]);
        if (table.has_d()) out << ',' << int((*table.d)[i]);
        out << ',' << fmt_double(table.z[i]) << ','
            << csv_escape(table.group_labels[static_cast<std::size_t>(table.x[i])]);
        if (table.has_judge())
            out << ',' << csv_escape(table.judge_labels[static_cast<std::size_t>((*table.judge)[i])]);
        out << "\n";
    }
}

// ---------------------------------------------------------------------------
// Instrument construction and sample restriction
// ---------------------------------------------------------------------------

LooResult leave_one_out_rate(const ObservationTable& table, int min_cases) {
    if (!table.has_judge()) throw ConfigError("leave-one-out rate requires a judge column");
    if (min_cases < 2) throw ParamError("min_cases must be at least 2");

    const std::size_t n_judges = table.judge_labels.size();
    std::vector<std::size_t> count(n_judges, 0);
    std::vector<double> sum(n_judges, 0.0);
    for (std::size_t i = 0; i < table.size(); ++i) {
        const auto j = static_cast<std::size_t>((*table.judge)[i]);
        ++count[j];
        sum[j] += table.t[i];
    }

    std::vector<std::size_t> keep;
    keep.reserve(table.size());
    std::size_t judges_dropped = 0;
    for (std::size_t j = 0; j < n_judges; ++j)
        if (count[j] <= static_cast<std::size_t>(min_cases)) ++judges_dropped;
    for (std::size_t i = 0; i < table.size(); ++i) {
        const auto j = static_cast<std::size_t>((*table.judge)[i]);
        if (count[j] > static_cast<std::size_t>(min_cases)) keep.push_back(i);
    }
    if (keep.empty()) throw SupportError("no judge exceeds the min_cases threshold");

    LooResult result;
    result.judges_dropped = judges_dropped;
    result.rows_dropped = table.size() - keep.size();
    result.table = table.select(keep);
    // z_i = (S_j - t_i) / (n_j - 1) from the original per-judge totals
    for (std::size_t k = 0; k < keep.size(); ++k) {
        const auto j = static_cast<std::size_t>((*table.judge)[keep[k]]);
        result.table.z[k] = (sum[j] - table.t[keep[k]]) / static_cast<double>(count[j] - 1);
    }
    result.table.validate();
    return result;
}

TrimResult common_support_trim(const ObservationTable& table, TreatmentArm arm) {
    const std::vector<std::uint8_t>* treat = &table.t;
    if (arm == TreatmentArm::true_treatment) {
        if (!table.has_d()) throw ConfigError("common-support trim on d requires a d column");
        treat = &*table.d;
    }
    double min0 = std::numeric_limits<double>::infinity(), max0 = -min0;
    double min1 = min0, max1 = -min0;
    std::size_t n0 = 0, n1 = 0;
    for (std::size_t i = 0; i < table.size(); ++i) {
        if ((*treat)[i] == 0) {
            ++n0;
            min0 = std::min(min0, table.z[i]);
            max0 = std::max(max0, table.z[i]);
        } else {
            ++n1;
            min1 = std::min(min1, table.z[i]);
            max1 = std::max(max1, table.z[i]);
        }
    }
    if (n0 == 0 || n1 == 0)
        throw SupportError("common-support trim needs observations in both treatment arms");

    TrimResult result;
    result.z_lo = std::max(min0, min1);
    result.z_hi = std::min(max0, max1);
    std::vector<std::size_t> keep;
    keep.reserve(table.size());
    for (std::size_t i = 0; i < table.size(); ++i)
        if (table.z[i] >= result.z_lo && table.z[i] <= result.z_hi) keep.push_back(i);
    if (keep.empty()) throw SupportError("treatment arms have disjoint instrument support");
    result.rows_dropped = table.size() - keep.size();
    result.table = table.select(keep);
    result.table.validate();
    return result;
}

// ---------------------------------------------------------------------------
// Grids
// ---------------------------------------------------------------------------

void GridSpec::validate() const {
    if (points.empty()) throw ParamError("grid must have at least one point");
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!std::isfinite(points[i])) throw ParamError("grid points must be finite");
        if (i > 0 && points[i] <= points[i - 1])
            throw ParamError("grid points must be strictly increasing");
    }
}

static GridSpec quantile_grid(std::vector<double> zs, int k, bool per_group) {
    std::sort(zs.begin(), zs.end());
    GridSpec grid;
    grid.per_group = per_group;
    const std::size_t n = zs.size();
    for (int i = 1; i <= k; ++i) {
        const double p = static_cast<double>(i) / (k + 1);
        // type-7 quantile
        const double h = p * static_cast<double>(n - 1);
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const auto hi = std::min(lo + 1, n - 1);
        const double q = zs[lo] + (h - static_cast<double>(lo)) * (zs[hi] - zs[lo]);
        if (grid.points.empty() || q > grid.points.back()) grid.points.push_back(q);
    }
    grid.validate();
    return grid;
}

GridSpec GridSpec::quantiles(const ObservationTable& table, int k, bool per_group) {
    if (k < 1) throw ParamError("quantile grid needs k >= 1");
    return quantile_grid(table.z, k, per_group);
}

}  // namespace mtebounds
