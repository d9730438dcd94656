#include "mtebounds/liv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mtebounds {

namespace {

double poly_level(const std::vector<double>& coefs, double z, double intercept) {
    double v = intercept;
    double pw = 1.0;
    for (double c : coefs) {
        pw *= z;
        v += c * pw;
    }
    return v;
}

double poly_derivative(const std::vector<double>& coefs, double z) {
    double v = 0.0;
    double pw = 1.0;
    for (std::size_t j = 0; j < coefs.size(); ++j) {
        v += static_cast<double>(j + 1) * coefs[j] * pw;
        pw *= z;
    }
    return v;
}

}  // namespace

double PsFit::level(double z, int g) const {
    return poly_level(slopes, z, intercepts[static_cast<std::size_t>(g)]);
}

double PsFit::level_pooled(double z) const {
    double intercept = 0.0;
    for (std::size_t g = 0; g < intercepts.size(); ++g) intercept += group_shares[g] * intercepts[g];
    return poly_level(slopes, z, intercept);
}

double PsFit::dlevel(double z) const { return poly_derivative(slopes, z); }

PsFit PsFit::from_coefficients(TreatmentArm target, std::vector<double> intercepts,
                               std::vector<double> slopes, std::vector<std::string> group_labels,
                               const std::vector<double>& z_sample,
                               const std::vector<int>& groups) {
    if (intercepts.size() != group_labels.size())
        throw ConfigError("one intercept per group label required");
    if (z_sample.empty() || z_sample.size() != groups.size())
        throw ConfigError("z sample and group assignments must be non-empty and aligned");
    PsFit fit;
    fit.target = target;
    fit.degree = static_cast<int>(slopes.size());
    fit.intercepts = std::move(intercepts);
    fit.slopes = std::move(slopes);
    fit.group_labels = std::move(group_labels);
    fit.group_shares.assign(fit.group_labels.size(), 0.0);
    fit.z_min = *std::min_element(z_sample.begin(), z_sample.end());
    fit.z_max = *std::max_element(z_sample.begin(), z_sample.end());
    fit.fitted.reserve(z_sample.size());
    fit.fitted_group = groups;
    for (std::size_t i = 0; i < z_sample.size(); ++i) {
        fit.fitted.push_back(fit.level(z_sample[i], groups[i]));
        fit.group_shares[static_cast<std::size_t>(groups[i])] +=
            1.0 / static_cast<double>(z_sample.size());
    }
    return fit;
}

PsFit fit_ps(const ObservationTable& table, TreatmentArm target, int degree) {
    if (degree < 1) throw ParamError("propensity score degree must be at least 1");
    const ResponseColumn col =
        target == TreatmentArm::mismeasured ? ResponseColumn::t : ResponseColumn::d;
    PsFit fit;
    fit.ols = fit_fe_poly(table, col, degree, /*degree_interacted=*/0);
    fit.target = target;
    fit.degree = degree;
    fit.intercepts = fit.ols.intercepts;
    fit.slopes = fit.ols.common;
    fit.group_labels = fit.ols.group_labels;
    fit.group_shares = fit.ols.group_shares;
    fit.z_min = fit.ols.z_min;
    fit.z_max = fit.ols.z_max;
    fit.fitted.reserve(table.size());
    fit.fitted_group.assign(table.x.begin(), table.x.end());
    for (std::size_t i = 0; i < table.size(); ++i)
        fit.fitted.push_back(fit.level(table.z[i], table.x[i]));
    return fit;
}

double RfFit::level(double z, int g) const {
    double v = intercepts[static_cast<std::size_t>(g)];
    double pw = 1.0;
    const auto& ig = interacted[static_cast<std::size_t>(g)];
    for (double c : ig) {
        pw *= z;
        v += c * pw;
    }
    for (double c : common) {
        pw *= z;
        v += c * pw;
    }
    return v;
}

double RfFit::dlevel(double z, int g) const {
    double v = 0.0;
    double pw = 1.0;
    const auto& ig = interacted[static_cast<std::size_t>(g)];
    std::size_t j = 0;
    for (double c : ig) {
        ++j;
        v += static_cast<double>(j) * c * pw;
        pw *= z;
    }
    for (double c : common) {
        ++j;
        v += static_cast<double>(j) * c * pw;
        pw *= z;
    }
    return v;
}

double RfFit::dlevel_pooled(double z) const {
    double v = 0.0;
    for (std::size_t g = 0; g < intercepts.size(); ++g)
        v += group_shares[g] * dlevel(z, static_cast<int>(g));
    return v;
}

RfFit RfFit::from_coefficients(std::vector<double> intercepts,
                               std::vector<std::vector<double>> interacted,
                               std::vector<double> common, int degree_ps, int degree_mte,
                               std::vector<std::string> group_labels, double z_min, double z_max) {
    RfFit fit;
    fit.degree_ps = degree_ps;
    fit.degree_mte = degree_mte;
    fit.intercepts = std::move(intercepts);
    fit.interacted = std::move(interacted);
    fit.common = std::move(common);
    fit.group_labels = std::move(group_labels);
    fit.group_shares.assign(fit.group_labels.size(),
                            1.0 / static_cast<double>(fit.group_labels.size()));
    fit.z_min = z_min;
    fit.z_max = z_max;
    if (fit.intercepts.size() != fit.group_labels.size() ||
        fit.interacted.size() != fit.group_labels.size())
        throw ConfigError("reduced-form coefficient blocks must align with group labels");
    return fit;
}

RfFit fit_outcome_rf(const ObservationTable& table, int degree_ps, int degree_mte,
                     bool full_interaction) {
    if (degree_ps < 1) throw ParamError("propensity degree L* must be at least 1");
    if (degree_mte < 0) throw ParamError("latent-heterogeneity degree K must be nonnegative");
    const int total = degree_ps * (degree_mte + 1);
    const int j_int = full_interaction ? total : degree_ps;
    RfFit fit;
    fit.ols = fit_fe_poly(table, ResponseColumn::y, total, j_int);
    fit.degree_ps = degree_ps;
    fit.degree_mte = degree_mte;
    fit.full_interaction = full_interaction;
    fit.group_labels = fit.ols.group_labels;
    fit.group_shares = fit.ols.group_shares;
    fit.intercepts = fit.ols.intercepts;
    fit.interacted = fit.ols.interacted;
    fit.common = fit.ols.common;
    fit.z_min = fit.ols.z_min;
    fit.z_max = fit.ols.z_max;
    return fit;
}

double LivCurve::min_value() const {
    double v = std::numeric_limits<double>::infinity();
    for (const auto& p : points) v = std::min(v, p.value);
    return v;
}

double LivCurve::max_value() const {
    double v = -std::numeric_limits<double>::infinity();
    for (const auto& p : points) v = std::max(v, p.value);
    return v;
}

bool LivCurve::single_group() const {
    for (const auto& p : points)
        if (p.group != points.front().group) return false;
    return !points.empty();
}

LivCurve liv_curve(const RfFit& rf, const PsFit& ps, const GridSpec& grid,
                   double min_denominator) {
    grid.validate();
    if (rf.group_labels != ps.group_labels)
        throw ConfigError("reduced form and propensity score were fit on different group sets");
    const double lo = std::min(rf.z_min, ps.z_min);
    const double hi = std::max(rf.z_max, ps.z_max);
    const double slack = 1e-9 * std::max(1.0, hi - lo);
    for (double z : grid.points)
        if (z < lo - slack || z > hi + slack)
            throw ConfigError("grid point z=" + fmt_double(z) +
                              " lies outside the observed instrument range");

    LivCurve curve;
    curve.kind = ps.target == TreatmentArm::mismeasured ? CurveKind::mismeasured_liv
                                                        : CurveKind::benchmark_mte;
    curve.group_labels = rf.group_labels;
    curve.rf = std::make_shared<RfFit>(rf);
    curve.ps = std::make_shared<PsFit>(ps);

    auto denom_at = [&](double z) {
        const double den = ps.dlevel(z);
        if (std::fabs(den) < min_denominator)
            throw NumericError("propensity-score derivative " + fmt_double(den) + " at z=" +
                               fmt_double(z) + " is below the rank-condition threshold");
        return den;
    };

    if (grid.per_group) {
        const int G = static_cast<int>(rf.group_labels.size());
        for (int g = 0; g < G; ++g)
            for (double z : grid.points)
                curve.points.push_back({z, g, rf.dlevel(z, g) / denom_at(z)});
    } else {
        for (double z : grid.points)
            curve.points.push_back({z, -1, rf.dlevel_pooled(z) / denom_at(z)});
    }
    return curve;
}

}  // namespace mtebounds
