#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mtebounds/bounds.hpp"
#include "mtebounds/infer.hpp"
#include "mtebounds/late.hpp"
#include "mtebounds/liv.hpp"
#include "mtebounds/simulate.hpp"

namespace mtebounds {

// Exports are byte-deterministic: identical inputs produce identical files.

std::string curve_csv(const LivCurve& curve);
std::string curve_json(const LivCurve& curve);

std::string band_csv(const BoundsBand& band);
std::string band_json(const BoundsBand& band);

std::string te_bounds_json(const TeBounds& bounds);

std::string late_json(const LateDeltas& deltas, const LateBand& band);

std::string mc_report_csv(const McReport& report);
std::string mc_report_json(const McReport& report, const GridSpec& grid);

std::string boot_band_csv(const BootBand& band, const std::vector<double>& grid_z,
                          const std::vector<std::string>& grid_group);

std::string iv_weight_json(const IvWeightDiagnostic& diag);

/// Every output file is accompanied by a manifest recording the subcommand,
/// resolved options, an input fingerprint, the library version and the seed.
struct RunManifest {
    std::string subcommand;
    std::vector<std::pair<std::string, std::string>> options;
    std::size_t input_rows = 0;
    std::uint64_t input_hash = 0;
    std::uint64_t seed = 0;
};

std::string manifest_json(const RunManifest& manifest);

/// Row count + order-sensitive hash of all column bytes.
std::pair<std::size_t, std::uint64_t> fingerprint(const ObservationTable& table);

void write_file(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

}  // namespace mtebounds
