#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mtebounds/data.hpp"
#include "mtebounds/regress.hpp"

namespace mtebounds {

// ---------------------------------------------------------------------------
// Propensity score: separable polynomial model with group intercepts and
// common slope coefficients, so the derivative in z does not depend on the
// group. Target is the mismeasured column T or the true column D.
// ---------------------------------------------------------------------------
struct PsFit {
    TreatmentArm target = TreatmentArm::mismeasured;
    int degree = 1;
    std::vector<double> intercepts;  // per group
    std::vector<double> slopes;      // gamma_1 .. gamma_L
    std::vector<std::string> group_labels;
    std::vector<double> group_shares;
    double z_min = 0.0;
    double z_max = 1.0;
    std::vector<double> fitted;      // fitted P over the estimation sample
    std::vector<int> fitted_group;   // group of each sample row
    FePolyFit ols;                   // underlying regression (SEs, F-statistic)

    double level(double z, int g) const;
    /// Group-share-weighted level, for pooled evaluation.
    double level_pooled(double z) const;
    double dlevel(double z) const;  // group-free by construction

    /// Population-coefficient construction; `z_sample`/`groups` provide the
    /// rows used for empirical CDFs and the observed range.
    static PsFit from_coefficients(TreatmentArm target, std::vector<double> intercepts,
                                   std::vector<double> slopes,
                                   std::vector<std::string> group_labels,
                                   const std::vector<double>& z_sample,
                                   const std::vector<int>& groups);
};

PsFit fit_ps(const ObservationTable& table, TreatmentArm target, int degree);

// ---------------------------------------------------------------------------
// Outcome reduced form: group intercepts, group-interacted powers up to the
// propensity degree L*, common powers above, total degree L*(K+1). The
// common high-degree coefficients carry no group subscript unless
// full_interaction is requested.
// ---------------------------------------------------------------------------
struct RfFit {
    int degree_ps = 1;   // L*
    int degree_mte = 0;  // K
    bool full_interaction = false;
    std::vector<std::string> group_labels;
    std::vector<double> group_shares;
    std::vector<double> intercepts;
    std::vector<std::vector<double>> interacted;  // [group][j-1]
    std::vector<double> common;
    double z_min = 0.0;
    double z_max = 1.0;
    FePolyFit ols;

    int total_degree() const { return degree_ps * (degree_mte + 1); }
    double level(double z, int g) const;
    double dlevel(double z, int g) const;
    double dlevel_pooled(double z) const;

    static RfFit from_coefficients(std::vector<double> intercepts,
                                   std::vector<std::vector<double>> interacted,
                                   std::vector<double> common, int degree_ps, int degree_mte,
                                   std::vector<std::string> group_labels, double z_min,
                                   double z_max);
};

RfFit fit_outcome_rf(const ObservationTable& table, int degree_ps, int degree_mte,
                     bool full_interaction = false);

// ---------------------------------------------------------------------------
// Derivative-ratio curves on a grid. With the mismeasured propensity score in
// the denominator the values estimate the observable derivative ratio; with
// the true propensity score they estimate the benchmark MTE.
// ---------------------------------------------------------------------------
enum class CurveKind { mismeasured_liv, benchmark_mte };

struct CurvePoint {
    double z = 0.0;
    int group = 0;  // -1 for pooled
    double value = 0.0;
};

struct LivCurve {
    CurveKind kind = CurveKind::mismeasured_liv;
    std::vector<CurvePoint> points;
    std::vector<std::string> group_labels;
    std::shared_ptr<const RfFit> rf;
    std::shared_ptr<const PsFit> ps;

    double min_value() const;
    double max_value() const;
    std::string group_name(int g) const {
        return g < 0 ? std::string("pooled") : group_labels[static_cast<std::size_t>(g)];
    }
    bool single_group() const;
};

inline constexpr double kDefaultMinDenominator = 1e-6;

/// Rejects grid points where |dP/dz| falls below `min_denominator`, naming
/// the point (rank-condition violation).
LivCurve liv_curve(const RfFit& rf, const PsFit& ps, const GridSpec& grid,
                   double min_denominator = kDefaultMinDenominator);

}  // namespace mtebounds
