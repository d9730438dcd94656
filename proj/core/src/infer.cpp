#include "mtebounds/infer.hpp"

#include <algorithm>
#include <cmath>

#include "mtebounds/parallel.hpp"
#include "mtebounds/rng.hpp"

namespace mtebounds {

namespace {

ObservationTable resample_rows(const ObservationTable& table, Rng& rng) {
    std::vector<std::size_t> rows(table.size());
    for (auto& r : rows) r = static_cast<std::size_t>(rng.below(table.size()));
    return table.select(rows);
}

// Whole-group resampling; a group drawn k times enters as k distinct groups
// so the fixed-effects design keeps one intercept per draw.
ObservationTable resample_clusters(const ObservationTable& table, Rng& rng) {
    const int G = table.group_count();
    std::vector<std::vector<std::size_t>> by_group(static_cast<std::size_t>(G));
    for (std::size_t i = 0; i < table.size(); ++i)
        by_group[static_cast<std::size_t>(table.x[i])].push_back(i);

    ObservationTable out;
    if (table.d) out.d.emplace();
    if (table.judge) out.judge.emplace();
    out.judge_labels = table.judge_labels;
    for (int draw = 0; draw < G; ++draw) {
        const auto g = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(G)));
        const int new_group = static_cast<int>(out.group_labels.size());
        out.group_labels.push_back(table.group_labels[g] + "#" + std::to_string(draw));
        for (std::size_t i : by_group[g]) {
            out.y.push_back(table.y[i]);
            out.t.push_back(table.t[i]);
            if (table.d) out.d->push_back((*table.d)[i]);
            out.z.push_back(table.z[i]);
            out.x.push_back(new_group);
            if (table.judge) out.judge->push_back((*table.judge)[i]);
        }
    }
    return out;
}

double percentile(std::vector<double> values, double p) {
    // type-7 quantile on the replicate draws
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n == 1) return values[0];
    const double h = p * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, n - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace

BootBand bootstrap_bands(const ObservationTable& table, const CurveEstimator& estimator,
                         const GridSpec& grid, int replications, double level, ResampleUnit unit,
                         std::uint64_t seed) {
    if (replications < 1) throw ParamError("need at least one bootstrap replication");
    if (!(level > 0.0 && level < 1.0)) throw ParamError("confidence level must lie in (0, 1)");
    grid.validate();

    BootBand band;
    band.level = level;
    band.replications = replications;
    band.unit = unit;
    band.estimate = estimator(table, grid);  // must succeed on the original sample
    const std::size_t n_points = band.estimate.size();

    struct Replicate {
        bool ok = false;
        std::vector<double> values;
    };
    std::vector<Replicate> reps(static_cast<std::size_t>(replications));
    parallel_for_index(static_cast<std::size_t>(replications), [&](std::size_t b) {
        Rng rng(derive_seed(seed, b));
        try {
            const ObservationTable resampled =
                unit == ResampleUnit::row ? resample_rows(table, rng) : resample_clusters(table, rng);
            reps[b].values = estimator(resampled, grid);
            reps[b].ok = reps[b].values.size() == n_points;
        } catch (const Error&) {
            reps[b].ok = false;
        }
    });

    std::vector<std::vector<double>> per_point(n_points);
    for (const Replicate& rep : reps) {
        if (!rep.ok) {
            ++band.failures;
            continue;
        }
        for (std::size_t p = 0; p < n_points; ++p) per_point[p].push_back(rep.values[p]);
    }
    if (band.failures * 20 > replications)
        throw NumericError("more than 5% of bootstrap refits failed (" +
                           std::to_string(band.failures) + " of " +
                           std::to_string(replications) + ")");

    const double tail = (1.0 - level) / 2.0;
    band.lower.resize(n_points);
    band.upper.resize(n_points);
    for (std::size_t p = 0; p < n_points; ++p) {
        band.lower[p] = percentile(per_point[p], tail);
        band.upper[p] = percentile(per_point[p], 1.0 - tail);
    }
    return band;
}

}  // namespace mtebounds
