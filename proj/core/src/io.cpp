#include "mtebounds/io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mtebounds {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// Numbers pass through fmt_double so JSON bytes round-trip exactly and stay
// independent of the library's float printer.
ordered_json num(double v) {
    if (!std::isfinite(v)) return nullptr;
    return ordered_json::parse(fmt_double(v), nullptr, true);
}

ordered_json point_array(const std::vector<CurvePoint>& points,
                         const std::vector<std::string>& labels,
                         const std::vector<double>* values) {
    ordered_json arr = ordered_json::array();
    for (std::size_t i = 0; i < points.size(); ++i) {
        ordered_json item;
        item["z"] = num(points[i].z);
        item["x"] = points[i].group < 0
                        ? "pooled"
                        : labels[static_cast<std::size_t>(points[i].group)];
        item["value"] = num(values ? (*values)[i] : points[i].value);
        arr.push_back(std::move(item));
    }
    return arr;
}

std::string kind_name(CurveKind kind) {
    return kind == CurveKind::mismeasured_liv ? "mismeasured-liv" : "benchmark-mte";
}

std::string provenance_name(BandProvenance p) {
    switch (p) {
        case BandProvenance::theta1: return "theta1";
        case BandProvenance::theta2_envelope: return "theta2-envelope";
        case BandProvenance::intersection: return "intersection";
    }
    return "theta1";
}

std::string te_kind_name(TeKind k) {
    switch (k) {
        case TeKind::ate: return "ate";
        case TeKind::att: return "att";
        case TeKind::atu: return "atu";
        case TeKind::prte: return "prte";
    }
    return "ate";
}

}  // namespace

std::string curve_csv(const LivCurve& curve) {
    std::ostringstream out;
    out << "z,x,value\n";
    for (const auto& p : curve.points)
        out << fmt_double(p.z) << ',' << curve.group_name(p.group) << ',' << fmt_double(p.value)
            << "\n";
    return out.str();
}

std::string curve_json(const LivCurve& curve) {
    ordered_json doc;
    doc["kind"] = kind_name(curve.kind);
    doc["points"] = point_array(curve.points, curve.group_labels, nullptr);
    return doc.dump(2) + "\n";
}

std::string band_csv(const BoundsBand& band) {
    std::ostringstream out;
    out << "z,x,f,lower,upper,width,c\n";
    for (std::size_t i = 0; i < band.size(); ++i) {
        const auto& p = band.base[i];
        const std::string label = p.group < 0
                                      ? std::string("pooled")
                                      : band.group_labels[static_cast<std::size_t>(p.group)];
        out << fmt_double(p.z) << ',' << label << ',' << fmt_double(p.value) << ','
            << fmt_double(band.lower[i]) << ',' << fmt_double(band.upper[i]) << ','
            << fmt_double(band.width(i)) << ',' << fmt_double(band.c) << "\n";
    }
    return out.str();
}

std::string band_json(const BoundsBand& band) {
    ordered_json doc;
    doc["provenance"] = provenance_name(band.provenance);
    doc["c"] = num(band.c);
    if (!band.source_cs.empty()) {
        ordered_json cs = ordered_json::array();
        for (double c : band.source_cs) cs.push_back(num(c));
        doc["source_cs"] = std::move(cs);
    }
    ordered_json arr = ordered_json::array();
    for (std::size_t i = 0; i < band.size(); ++i) {
        const auto& p = band.base[i];
        ordered_json item;
        item["z"] = num(p.z);
        item["x"] = p.group < 0 ? "pooled"
                                : band.group_labels[static_cast<std::size_t>(p.group)];
        item["f"] = num(p.value);
        item["lower"] = num(band.lower[i]);
        item["upper"] = num(band.upper[i]);
        arr.push_back(std::move(item));
    }
    doc["points"] = std::move(arr);
    return doc.dump(2) + "\n";
}

std::string te_bounds_json(const TeBounds& bounds) {
    ordered_json doc;
    doc["parameter"] = te_kind_name(bounds.kind);
    doc["lower"] = num(bounds.lower);
    doc["upper"] = num(bounds.upper);
    doc["c"] = num(bounds.c);
    doc["a_grid"] = bounds.a_grid;
    doc["u_grid"] = bounds.u_grid;
    doc["policy"] = bounds.policy == IntegrationPolicy::restrict_to_identified ? "restrict"
                                                                               : "extrapolate";
    doc["u_range_at_lower"] = {num(bounds.u_lo_at_lower), num(bounds.u_hi_at_lower)};
    return doc.dump(2) + "\n";
}

std::string late_json(const LateDeltas& deltas, const LateBand& band) {
    ordered_json doc;
    doc["delta_y"] = num(deltas.dy);
    doc["delta_t"] = num(deltas.dt);
    if (deltas.dd) doc["delta_d"] = num(*deltas.dd);
    doc["n_z0"] = deltas.n0;
    doc["n_z1"] = deltas.n1;
    doc["wald"] = num(deltas.wald());
    doc["sign"] = band.sign;
    doc["c"] = num(band.c);
    // the sharp-set reading of the interval needs c <= 1/max(P_T); the outer
    // band accepts any c >= 1, so flag which object this is
    doc["band"] = band.degenerate_zero ? ordered_json::array({num(0.0), num(0.0)})
                                       : ordered_json::array({num(band.lower), num(band.upper)});
    doc["interpretation"] = "outer band, any c >= 1";
    return doc.dump(2) + "\n";
}

std::string mc_report_csv(const McReport& report) {
    std::ostringstream out;
    out << "z,x,c,theta_truth,f_truth,bias_benchmark,bias_mismeasured,coverage\n";
    for (std::size_t ci = 0; ci < report.c_values.size(); ++ci)
        for (std::size_t p = 0; p < report.z.size(); ++p)
            out << fmt_double(report.z[p]) << ',' << report.x[p] << ','
                << fmt_double(report.c_values[ci]) << ',' << fmt_double(report.theta_truth[p])
                << ',' << fmt_double(report.f_truth[p]) << ','
                << fmt_double(report.bias_benchmark[p]) << ','
                << fmt_double(report.bias_mismeasured[p]) << ','
                << fmt_double(report.coverage[ci][p]) << "\n";
    return out.str();
}

std::string mc_report_json(const McReport& report, const GridSpec& grid) {
    ordered_json doc;
    doc["replications"] = report.replications;
    doc["failures"] = report.failures;
    ordered_json gz = ordered_json::array();
    for (double z : grid.points) gz.push_back(num(z));
    doc["grid"] = std::move(gz);
    ordered_json cs = ordered_json::array();
    for (double c : report.c_values) cs.push_back(num(c));
    doc["c_values"] = std::move(cs);
    ordered_json rows = ordered_json::array();
    for (std::size_t p = 0; p < report.z.size(); ++p) {
        ordered_json item;
        item["z"] = num(report.z[p]);
        item["x"] = report.x[p];
        item["theta_truth"] = num(report.theta_truth[p]);
        item["bias_benchmark"] = num(report.bias_benchmark[p]);
        item["bias_mismeasured"] = num(report.bias_mismeasured[p]);
        ordered_json cov = ordered_json::array();
        for (std::size_t ci = 0; ci < report.c_values.size(); ++ci)
            cov.push_back(num(report.coverage[ci][p]));
        item["coverage"] = std::move(cov);
        rows.push_back(std::move(item));
    }
    doc["points"] = std::move(rows);
    return doc.dump(2) + "\n";
}

std::string boot_band_csv(const BootBand& band, const std::vector<double>& grid_z,
                          const std::vector<std::string>& grid_group) {
    std::ostringstream out;
    out << "z,x,lower,estimate,upper\n";
    for (std::size_t i = 0; i < band.estimate.size(); ++i) {
        out << (i < grid_z.size() ? fmt_double(grid_z[i]) : std::to_string(i)) << ','
            << (i < grid_group.size() ? grid_group[i] : std::string("")) << ','
            << fmt_double(band.lower[i]) << ',' << fmt_double(band.estimate[i]) << ','
            << fmt_double(band.upper[i]) << "\n";
    }
    return out.str();
}

std::string iv_weight_json(const IvWeightDiagnostic& diag) {
    ordered_json doc;
    doc["integral"] = num(diag.integral);
    doc["cov_ratio"] = num(diag.cov_ratio);
    ordered_json arr = ordered_json::array();
    for (std::size_t i = 0; i < diag.u.size(); ++i)
        arr.push_back(ordered_json::array({num(diag.u[i]), num(diag.omega[i])}));
    doc["omega"] = std::move(arr);
    return doc.dump(2) + "\n";
}

std::string manifest_json(const RunManifest& manifest) {
    ordered_json doc;
    doc["subcommand"] = manifest.subcommand;
    ordered_json opts;
    for (const auto& [key, value] : manifest.options) opts[key] = value;
    doc["options"] = std::move(opts);
    doc["input"]["rows"] = manifest.input_rows;
    {
        std::ostringstream hex;
        hex << std::hex << manifest.input_hash;
        doc["input"]["column_hash"] = hex.str();
    }
    doc["version"] = kVersion;
    doc["seed"] = manifest.seed;
    return doc.dump(2) + "\n";
}

std::pair<std::size_t, std::uint64_t> fingerprint(const ObservationTable& table) {
    std::string bytes;
    bytes.reserve(table.size() * 16);
    auto feed = [&](const std::string& s) {
        bytes += s;
        bytes += '\x1f';
    };
    feed("y");
    for (double v : table.y) feed(fmt_double(v));
    feed("t");
    for (auto v : table.t) feed(std::to_string(int(v)));
    if (table.d) {
        feed("d");
        for (auto v : *table.d) feed(std::to_string(int(v)));
    }
    feed("z");
    for (double v : table.z) feed(fmt_double(v));
    feed("x");
    for (int v : table.x) feed(table.group_labels[static_cast<std::size_t>(v)]);
    if (table.judge) {
        feed("judge");
        for (int v : *table.judge) feed(table.judge_labels[static_cast<std::size_t>(v)]);
    }
    return {table.size(), fnv1a(bytes)};
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file '" + path + "'");
    out << contents;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace mtebounds
