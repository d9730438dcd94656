#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mtebounds/data.hpp"

namespace mtebounds {

enum class ResampleUnit { row, cluster };

/// Produces one value per grid evaluation point for a given sample. Anything
/// that maps a table to grid values works: derivative-ratio curves, band
/// edges, scalar summaries on a one-point grid.
using CurveEstimator =
    std::function<std::vector<double>(const ObservationTable&, const GridSpec&)>;

struct BootBand {
    std::vector<double> estimate;  // estimator on the original table
    std::vector<double> lower;
    std::vector<double> upper;
    double level = 0.9;
    int replications = 0;
    int failures = 0;
    ResampleUnit unit = ResampleUnit::row;
};

/// Pointwise percentile band from B resampled refits. Row bootstrap redraws
/// rows; cluster bootstrap redraws whole groups, with repeated draws kept as
/// distinct groups. Refits that throw are dropped and counted; more than 5%
/// failures aborts. Deterministic in (seed, replicate index) regardless of
/// worker count.
BootBand bootstrap_bands(const ObservationTable& table, const CurveEstimator& estimator,
                         const GridSpec& grid, int replications, double level, ResampleUnit unit,
                         std::uint64_t seed);

}  // namespace mtebounds
