#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mtebounds/liv.hpp"

namespace mtebounds {

// ---------------------------------------------------------------------------
// Pointwise identified-set envelopes over a (z, group) grid.
// ---------------------------------------------------------------------------
enum class BandProvenance { theta1, theta2_envelope, intersection };

struct BoundsBand {
    std::vector<CurvePoint> base;  // generating curve values f at each point
    std::vector<double> lower;
    std::vector<double> upper;
    double c = 1.0;
    BandProvenance provenance = BandProvenance::theta1;
    std::vector<double> source_cs;  // for intersections
    std::vector<std::string> group_labels;

    std::size_t size() const { return base.size(); }
    double width(std::size_t i) const { return upper[i] - lower[i]; }
};

/// Sign of a single estimand value; applied pointwise in the curve variant.
int mte_sign(double value);
std::vector<int> mte_sign(const LivCurve& curve);

/// Envelopes [f/c, c f] for nonnegative f and [c f, f/c] otherwise; c >= 1.
BoundsBand theta1_band(const LivCurve& curve, double c);

// ---------------------------------------------------------------------------
// Largest sensitivity constant compatible with an effect range: the scaled
// curve extremes must stay inside [effect_floor, effect_ceiling].
// ---------------------------------------------------------------------------
struct MaxPlausibleC {
    enum class Status { ok, no_valid_c, unbounded } status = Status::ok;
    double c = 1.0;
    bool valid() const { return status == Status::ok; }
};

MaxPlausibleC max_plausible_c(const LivCurve& curve, double effect_floor, double effect_ceiling);

// ---------------------------------------------------------------------------
// Pointwise intersection of bands on a common grid. An empty interval at any
// point produces a rejection report naming the points instead of a band.
// ---------------------------------------------------------------------------
struct IntersectResult {
    std::optional<BoundsBand> band;
    std::vector<std::size_t> rejected_points;  // indices into the common grid
    std::string message;
    bool rejected() const { return !rejected_points.empty(); }
};

IntersectResult intersect_bands(const std::vector<BoundsBand>& bands);

// ---------------------------------------------------------------------------
// Constant-scaling family: members f/a for a in [1/c, c], each with the
// implied scaled propensity a * P_T validated to lie in [0, 1].
// ---------------------------------------------------------------------------
struct ScaledMember {
    double a = 1.0;
    std::vector<double> values;
    bool propensity_in_unit_interval = true;
};

struct ScaledFamily {
    LivCurve base;
    double c = 1.0;
    std::vector<ScaledMember> members;
};

ScaledFamily theta2_family(const LivCurve& curve, const PsFit& ps_t, double c, int a_grid_size);

// ---------------------------------------------------------------------------
// Constructive sharpness check for one family member: rebuild the candidate
// outcome probabilities, recompute the candidate MTE through the inverted
// scaled propensity, and compare the implied outcome derivative against the
// fitted one.
// ---------------------------------------------------------------------------
struct SharpnessReport {
    double a = 1.0;
    double max_mte_discrepancy = 0.0;
    double max_slope_discrepancy = 0.0;
    bool ok(double tol = 1e-8) const {
        return max_mte_discrepancy <= tol && max_slope_discrepancy <= tol;
    }
};

SharpnessReport verify_sharp_candidate(const LivCurve& curve, double a, const PsFit& ps_t,
                                       const RfFit& rf);

// ---------------------------------------------------------------------------
// Bounds on weighted integrals of the MTE under constant scaling.
// ---------------------------------------------------------------------------
enum class TeKind { ate, att, atu, prte };

/// Tabulated CDF on [0, 1]: knots strictly increasing, values nondecreasing
/// in [0, 1]; evaluated by linear interpolation, constant outside the knots.
struct TabulatedCdf {
    std::vector<double> knots;
    std::vector<double> values;
    double operator()(double u) const;
    double mean() const;  // integral of (1 - F) over [0, 1]
    void validate() const;
};

enum class IntegrationPolicy { restrict_to_identified, extrapolate };

struct TeBounds {
    TeKind kind = TeKind::ate;
    double lower = 0.0;
    double upper = 0.0;
    double c = 1.0;
    int a_grid = 0;
    int u_grid = 0;
    IntegrationPolicy policy = IntegrationPolicy::restrict_to_identified;
    double u_lo_at_lower = 0.0;  // effective u-range at the minimizing a
    double u_hi_at_lower = 1.0;
};

TeBounds te_bounds(const LivCurve& curve, const PsFit& ps_t, double c, TeKind kind,
                   int a_grid_size = 201, int u_grid_size = 1001,
                   const std::optional<TabulatedCdf>& p_star = std::nullopt,
                   IntegrationPolicy policy = IntegrationPolicy::restrict_to_identified);

// ---------------------------------------------------------------------------
// Breakdown scan: smallest c on an ascending grid at which a conclusion about
// a treatment-effect parameter stops holding. Bounds are nested in c, so the
// first failure on the grid is the breakdown point at grid resolution.
// ---------------------------------------------------------------------------
enum class Conclusion { lower_positive, upper_negative };

struct BreakdownResult {
    bool holds_throughout = false;
    double c = 1.0;  // first failing grid value when !holds_throughout
};

BreakdownResult breakdown_c(const LivCurve& curve, const PsFit& ps_t, TeKind kind,
                            Conclusion conclusion, const std::vector<double>& c_grid,
                            int a_grid_size = 201, int u_grid_size = 1001,
                            const std::optional<TabulatedCdf>& p_star = std::nullopt,
                            IntegrationPolicy policy = IntegrationPolicy::restrict_to_identified);

}  // namespace mtebounds
