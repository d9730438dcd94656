#pragma once

#include <string>
#include <vector>

#include "mtebounds/data.hpp"

namespace mtebounds {

enum class FePath { automatic, dummies, within };

// ---------------------------------------------------------------------------
// Least squares of a response on group intercepts, group-interacted powers
// z^j (j <= degree_interacted) and common powers z^j
// (degree_interacted < j <= degree_max). Coefficients are reported in the raw
// z basis; internally z is centered at its sample mean for conditioning.
// ---------------------------------------------------------------------------
struct FePolyFit {
    int degree_max = 0;
    int degree_interacted = 0;
    std::vector<std::string> group_labels;
    std::vector<double> group_shares;  // observation share per group

    std::vector<double> intercepts;                   // per group
    std::vector<std::vector<double>> interacted;      // [group][j-1], j = 1..degree_interacted
    std::vector<double> common;                       // j = degree_interacted+1..degree_max

    std::vector<double> intercept_se;                 // HC3
    std::vector<std::vector<double>> interacted_se;   // HC3
    std::vector<double> common_se;                    // HC3

    std::vector<double> residuals;
    double f_statistic = 0.0;  // robust Wald chi2 / restrictions, polynomial block
    int f_restrictions = 0;
    double z_mean = 0.0;
    double z_min = 0.0;
    double z_max = 0.0;

    /// Fitted value of the regression function at (z, group g).
    double value(double z, int g) const;
    /// d/dz of the regression function at (z, g); independent of g when
    /// degree_interacted == 0.
    double derivative(double z, int g) const;
    /// Derivative of the group-share-weighted average regression function.
    double derivative_pooled(double z) const;
};

/// `response` selects the y/t/d column to regress. Refuses rank-deficient
/// designs, naming the offending column. `path` forces dummy expansion or the
/// within transformation; `automatic` uses dummies up to 1000 groups.
enum class ResponseColumn { y, t, d };

FePolyFit fit_fe_poly(const ObservationTable& table, ResponseColumn response, int degree_max,
                      int degree_interacted, FePath path = FePath::automatic);

// ---------------------------------------------------------------------------
// Naive 2SLS comparator: coefficient of the treatment column on y,
// instrumented by z, with group fixed effects (within-group demeaned Wald
// ratio). Ignores misclassification by construction.
// ---------------------------------------------------------------------------
struct NaiveIvResult {
    double coefficient = 0.0;
    double se_robust = 0.0;
    double se_cluster = 0.0;  // one-way, clustered by group
    double first_stage_cov = 0.0;
};

NaiveIvResult naive_iv(const ObservationTable& table,
                       TreatmentArm treatment = TreatmentArm::mismeasured);

}  // namespace mtebounds
