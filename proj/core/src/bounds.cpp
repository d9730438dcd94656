#include "mtebounds/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace mtebounds {

namespace {

void require_c(double c) {
    if (!(c >= 1.0)) throw ParamError("sensitivity constant c must be at least 1");
}

std::vector<double> a_grid_points(double c, int size) {
    if (size < 1) throw ParamError("a-grid needs at least one point");
    std::vector<double> a;
    if (c == 1.0 || size == 1) {
        a.push_back(1.0);
        return a;
    }
    const double lo = 1.0 / c;
    for (int i = 0; i < size; ++i)
        a.push_back(lo + (c - lo) * static_cast<double>(i) / (size - 1));
    return a;
}

// Monotone inversion of g on [lo, hi] by bisection; assumes g continuous and
// strictly monotone with target between g(lo) and g(hi).
template <typename Fn>
double invert_monotone(Fn&& g, double lo, double hi, double target) {
    double glo = g(lo), ghi = g(hi);
    const bool increasing = glo < ghi;
    if ((increasing && (target < glo || target > ghi)) ||
        (!increasing && (target > glo || target < ghi)))
        throw NumericError("inversion target " + fmt_double(target) + " outside achievable range");
    double a = lo, b = hi;
    for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::fabs(b)); ++it) {
        const double mid = 0.5 * (a + b);
        const double gm = g(mid);
        if ((gm < target) == increasing)
            a = mid;
        else
            b = mid;
    }
    return 0.5 * (a + b);
}

void check_monotone_ps(const PsFit& ps, double z_lo, double z_hi) {
    // Derivative sign must not change over the working range; sweep densely
    // since the slope polynomial has low degree.
    const int sweeps = 257;
    double first = 0.0;
    for (int i = 0; i < sweeps; ++i) {
        const double z = z_lo + (z_hi - z_lo) * static_cast<double>(i) / (sweeps - 1);
        const double d = ps.dlevel(z);
        if (d == 0.0)
            throw NumericError("fitted propensity score is not invertible: flat at z=" +
                               fmt_double(z));
        if (i == 0)
            first = d;
        else if ((first > 0) != (d > 0))
            throw NumericError("fitted propensity score is not invertible: derivative changes "
                               "sign near z=" +
                               fmt_double(z));
    }
}

double ps_level_at(const PsFit& ps, double z, int group) {
    return group < 0 ? ps.level_pooled(z) : ps.level(z, group);
}

double grid_sup_pt(const LivCurve& curve, const PsFit& ps) {
    double sup = -std::numeric_limits<double>::infinity();
    for (const auto& pt : curve.points) sup = std::max(sup, ps_level_at(ps, pt.z, pt.group));
    return sup;
}

}  // namespace

int mte_sign(double value) {
    if (!std::isfinite(value)) throw DataError("sign of a non-finite estimand value");
    return sign_of(value);
}

std::vector<int> mte_sign(const LivCurve& curve) {
    std::vector<int> signs;
    signs.reserve(curve.points.size());
    for (const auto& p : curve.points) signs.push_back(mte_sign(p.value));
    return signs;
}

BoundsBand theta1_band(const LivCurve& curve, double c) {
    require_c(c);
    BoundsBand band;
    band.base = curve.points;
    band.c = c;
    band.provenance = BandProvenance::theta1;
    band.group_labels = curve.group_labels;
    band.lower.reserve(curve.points.size());
    band.upper.reserve(curve.points.size());
    for (const auto& p : curve.points) {
        if (p.value >= 0.0) {
            band.lower.push_back(p.value / c);
            band.upper.push_back(c * p.value);
        } else {
            band.lower.push_back(c * p.value);
            band.upper.push_back(p.value / c);
        }
    }
    return band;
}

MaxPlausibleC max_plausible_c(const LivCurve& curve, double effect_floor, double effect_ceiling) {
    if (!(effect_floor <= 0.0 && 0.0 <= effect_ceiling))
        throw ParamError("effect range must contain zero");
    if (curve.points.empty()) throw ParamError("curve has no points");
    const double hi = curve.max_value();
    const double lo = curve.min_value();

    auto limit_for = [&](double extreme) {
        if (extreme > 0.0) return effect_ceiling / extreme;
        if (extreme < 0.0) return effect_floor / extreme;
        return std::numeric_limits<double>::infinity();
    };
    const double c = std::min(limit_for(hi), limit_for(lo));
    MaxPlausibleC result;
    if (std::isinf(c)) {
        result.status = MaxPlausibleC::Status::unbounded;
        result.c = std::numeric_limits<double>::infinity();
    } else if (c < 1.0) {
        // an extreme already escapes the effect range; no c >= 1 is valid
        result.status = MaxPlausibleC::Status::no_valid_c;
        result.c = std::numeric_limits<double>::quiet_NaN();
    } else {
        result.c = c;
    }
    return result;
}

IntersectResult intersect_bands(const std::vector<BoundsBand>& bands) {
    if (bands.empty()) throw ParamError("need at least one band to intersect");
    const auto& first = bands.front();
    for (const auto& b : bands) {
        if (b.size() != first.size()) throw ConfigError("bands have mismatched grids");
        for (std::size_t i = 0; i < b.size(); ++i)
            if (b.base[i].z != first.base[i].z || b.base[i].group != first.base[i].group)
                throw ConfigError("bands have mismatched grids");
    }

    IntersectResult result;
    BoundsBand out;
    out.base = first.base;
    out.group_labels = first.group_labels;
    out.provenance = BandProvenance::intersection;
    out.c = 0.0;
    for (const auto& b : bands) {
        out.source_cs.push_back(b.c);
        out.c = std::max(out.c, b.c);
    }
    out.lower.resize(first.size());
    out.upper.resize(first.size());
    for (std::size_t i = 0; i < first.size(); ++i) {
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        for (const auto& b : bands) {
            lo = std::max(lo, b.lower[i]);
            hi = std::min(hi, b.upper[i]);
        }
        out.lower[i] = lo;
        out.upper[i] = hi;
        if (lo > hi) result.rejected_points.push_back(i);
    }
    if (result.rejected()) {
        std::ostringstream msg;
        msg << "identified sets are disjoint at " << result.rejected_points.size() << " point(s):";
        for (std::size_t k = 0; k < result.rejected_points.size() && k < 8; ++k) {
            const auto& pt = first.base[result.rejected_points[k]];
            const std::string label =
                pt.group < 0 ? std::string("pooled")
                             : first.group_labels[static_cast<std::size_t>(pt.group)];
            msg << " (z=" << fmt_double(pt.z) << ", x=" << label << ")";
        }
        result.message = msg.str();
        return result;
    }
    result.band = std::move(out);
    return result;
}

ScaledFamily theta2_family(const LivCurve& curve, const PsFit& ps_t, double c, int a_grid_size) {
    require_c(c);
    if (ps_t.target != TreatmentArm::mismeasured)
        throw ConfigError("constant-scaling family needs the mismeasured propensity score");
    const double p_bar = grid_sup_pt(curve, ps_t);
    if (p_bar > 0.0 && c > 1.0 / p_bar + 1e-12)
        throw ParamError("c=" + fmt_double(c) + " exceeds 1/p_bar=" + fmt_double(1.0 / p_bar));
    double z_lo = std::numeric_limits<double>::infinity(), z_hi = -z_lo;
    for (const auto& p : curve.points) {
        z_lo = std::min(z_lo, p.z);
        z_hi = std::max(z_hi, p.z);
    }
    check_monotone_ps(ps_t, z_lo, z_hi);

    ScaledFamily family;
    family.base = curve;
    family.c = c;
    for (double a : a_grid_points(c, a_grid_size)) {
        ScaledMember member;
        member.a = a;
        member.values.reserve(curve.points.size());
        for (const auto& p : curve.points) {
            member.values.push_back(p.value / a);
            const double implied = a * ps_level_at(ps_t, p.z, p.group);
            if (implied < -1e-12 || implied > 1.0 + 1e-12)
                member.propensity_in_unit_interval = false;
        }
        family.members.push_back(std::move(member));
    }
    return family;
}

SharpnessReport verify_sharp_candidate(const LivCurve& curve, double a, const PsFit& ps_t,
                                       const RfFit& rf) {
    if (a <= 0.0) throw ParamError("scale a must be positive");
    double z_lo = std::numeric_limits<double>::infinity(), z_hi = -z_lo;
    for (const auto& p : curve.points) {
        z_lo = std::min(z_lo, p.z);
        z_hi = std::max(z_hi, p.z);
    }
    check_monotone_ps(ps_t, z_lo, z_hi);

    auto theta_tilde = [&](double z, int group) {
        const double num = group < 0 ? rf.dlevel_pooled(z) : rf.dlevel(z, group);
        return num / ps_t.dlevel(z) / a;
    };
    for (const auto& p : curve.points) {
        const double v = theta_tilde(p.z, p.group);
        if (std::fabs(v) > 1.0 + 1e-12)
            throw SupportError("candidate value " + fmt_double(v) + " at z=" + fmt_double(p.z) +
                               " lies outside [-1, 1]; binary outcomes cannot generate it");
    }

    SharpnessReport report;
    report.a = a;
    for (const auto& p : curve.points) {
        // candidate outcome probabilities at the margin u = a * P_T(z)
        const double u = a * ps_level_at(ps_t, p.z, p.group);
        const double z_u = invert_monotone(
            [&](double z) { return a * ps_level_at(ps_t, z, p.group); }, z_lo, z_hi, u);
        const double tt = theta_tilde(z_u, p.group);
        const double p1 = tt >= 0.0 ? tt : 0.0;
        const double p0 = tt < 0.0 ? -tt : 0.0;
        const double candidate_mte = p1 - p0;
        report.max_mte_discrepancy = std::max(report.max_mte_discrepancy,
                                              std::fabs(candidate_mte - theta_tilde(p.z, p.group)));
        // implied outcome derivative must reproduce the fitted one
        const double implied = a * ps_t.dlevel(p.z) * theta_tilde(p.z, p.group);
        const double fitted = p.group < 0 ? rf.dlevel_pooled(p.z) : rf.dlevel(p.z, p.group);
        report.max_slope_discrepancy =
            std::max(report.max_slope_discrepancy, std::fabs(implied - fitted));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Weighted-integral bounds
// ---------------------------------------------------------------------------

double TabulatedCdf::operator()(double u) const {
    if (u <= knots.front()) return values.front();
    if (u >= knots.back()) return values.back();
    const auto it = std::upper_bound(knots.begin(), knots.end(), u);
    const std::size_t hi = static_cast<std::size_t>(it - knots.begin());
    const std::size_t lo = hi - 1;
    const double w = (u - knots[lo]) / (knots[hi] - knots[lo]);
    return values[lo] + w * (values[hi] - values[lo]);
}

double TabulatedCdf::mean() const {
    // E[P*] = int_0^1 (1 - F(u)) du for a distribution supported on [0, 1]
    const int nodes = 2001;
    double acc = 0.0;
    for (int i = 0; i < nodes; ++i) {
        const double u = static_cast<double>(i) / (nodes - 1);
        const double v = 1.0 - (*this)(u);
        acc += (i == 0 || i == nodes - 1) ? 0.5 * v : v;
    }
    return acc / (nodes - 1);
}

void TabulatedCdf::validate() const {
    if (knots.size() < 2 || knots.size() != values.size())
        throw ConfigError("tabulated CDF needs at least two aligned (knot, value) pairs");
    for (std::size_t i = 0; i < knots.size(); ++i) {
        if (values[i] < -1e-12 || values[i] > 1.0 + 1e-12)
            throw ConfigError("CDF values must lie in [0, 1]");
        if (i > 0 && (knots[i] <= knots[i - 1] || values[i] < values[i - 1]))
            throw ConfigError("CDF knots must increase and values must be nondecreasing");
    }
}

namespace {

struct GroupSample {
    std::vector<double> sorted_fitted;  // fitted P_T over the group's rows
    double mean_pt = 0.0;
    double p_min = 0.0;
    double p_max = 0.0;

    double ecdf(double p) const {
        const auto it = std::upper_bound(sorted_fitted.begin(), sorted_fitted.end(), p);
        return static_cast<double>(it - sorted_fitted.begin()) /
               static_cast<double>(sorted_fitted.size());
    }
};

GroupSample group_sample(const PsFit& ps, int group) {
    GroupSample s;
    for (std::size_t i = 0; i < ps.fitted.size(); ++i)
        if (group < 0 || ps.fitted_group[i] == group) s.sorted_fitted.push_back(ps.fitted[i]);
    if (s.sorted_fitted.empty())
        throw SupportError("no sample rows available for the requested group");
    std::sort(s.sorted_fitted.begin(), s.sorted_fitted.end());
    s.mean_pt = std::accumulate(s.sorted_fitted.begin(), s.sorted_fitted.end(), 0.0) /
                static_cast<double>(s.sorted_fitted.size());
    s.p_min = s.sorted_fitted.front();
    s.p_max = s.sorted_fitted.back();
    return s;
}

// z solving P_T(z, g) = p. Inside the observed range this is plain monotone
// inversion; under the extrapolation policy the bracket is widened along the
// monotone extension of the fitted polynomial and clamped where it turns.
double invert_pt(const PsFit& ps, int g, double p, double z_lo, double z_hi, bool extrapolate) {
    auto level = [&](double z) { return ps_level_at(ps, z, g); };
    double lo = z_lo, hi = z_hi;
    double plo = level(lo), phi = level(hi);
    const bool increasing = plo < phi;
    auto contains = [&](double v) {
        return increasing ? (v >= level(lo) && v <= level(hi))
                          : (v <= level(lo) && v >= level(hi));
    };
    if (!contains(p)) {
        // u/a can overshoot the range edge by rounding; snap it back
        const double p_min = std::min(plo, phi), p_max = std::max(plo, phi);
        const double slack = 1e-9 * std::max(1.0, p_max - p_min);
        if (p > p_max && p <= p_max + slack) p = p_max;
        if (p < p_min && p >= p_min - slack) p = p_min;
    }
    if (!contains(p)) {
        if (!extrapolate)
            throw NumericError("propensity value " + fmt_double(p) +
                               " outside the identified range");
        const double span = std::max(z_hi - z_lo, 1e-6);
        for (int grow = 0; grow < 64 && !contains(p); ++grow) {
            const bool need_high = increasing == (p > level(hi));
            double& edge = need_high ? hi : lo;
            const double step = span * std::pow(1.5, grow) * (need_high ? 1.0 : -1.0);
            const double trial = edge + step;
            // stop at a turning point of the polynomial
            if ((ps.dlevel(trial) > 0) != increasing) {
                const double turning = invert_monotone(
                    [&](double z) { return increasing ? ps.dlevel(z) : -ps.dlevel(z); },
                    std::min(edge, trial), std::max(edge, trial), 0.0);
                edge = turning;
                break;
            }
            edge = trial;
        }
        if (!contains(p)) {
            // clamp to the edge attaining the achievable extreme
            const double at_lo = level(lo), at_hi = level(hi);
            if (p >= std::max(at_lo, at_hi)) return at_lo >= at_hi ? lo : hi;
            return at_lo <= at_hi ? lo : hi;
        }
    }
    return invert_monotone(level, lo, hi, p);
}

}  // namespace

TeBounds te_bounds(const LivCurve& curve, const PsFit& ps_t, double c, TeKind kind,
                   int a_grid_size, int u_grid_size, const std::optional<TabulatedCdf>& p_star,
                   IntegrationPolicy policy) {
    require_c(c);
    if (u_grid_size < 2) throw ParamError("u-grid needs at least two nodes");
    if (!curve.single_group())
        throw ConfigError("treatment-effect bounds need a single-group curve; slice by group");
    if (kind == TeKind::prte) {
        if (!p_star) throw ConfigError("PRTE needs an alternative-policy CDF");
        p_star->validate();
    }
    if (ps_t.target != TreatmentArm::mismeasured)
        throw ConfigError("treatment-effect bounds use the mismeasured propensity score");
    if (!curve.rf || !curve.ps) throw ConfigError("curve is missing its underlying fits");

    const int group = curve.points.front().group;
    const GroupSample sample = group_sample(ps_t, group);
    const double p_bar = grid_sup_pt(curve, ps_t);
    if (p_bar > 0.0 && c > 1.0 / p_bar + 1e-12)
        throw ParamError("c=" + fmt_double(c) + " exceeds 1/p_bar=" + fmt_double(1.0 / p_bar));

    double z_lo = std::numeric_limits<double>::infinity(), z_hi = -z_lo;
    for (const auto& p : curve.points) {
        z_lo = std::min(z_lo, p.z);
        z_hi = std::max(z_hi, p.z);
    }
    check_monotone_ps(ps_t, std::min(z_lo, ps_t.z_min), std::max(z_hi, ps_t.z_max));

    const RfFit& rf = *curve.rf;
    auto f_at = [&](double z) {
        const double num = group < 0 ? rf.dlevel_pooled(z) : rf.dlevel(z, group);
        return num / ps_t.dlevel(z);
    };
    const double mean_pstar = p_star ? p_star->mean() : 0.0;

    const bool extrapolate = policy == IntegrationPolicy::extrapolate;
    TeBounds out;
    out.kind = kind;
    out.c = c;
    out.u_grid = u_grid_size;
    out.policy = policy;

    double best_lo = std::numeric_limits<double>::infinity();
    double best_hi = -best_lo;
    const auto a_values = a_grid_points(c, a_grid_size);
    out.a_grid = static_cast<int>(a_values.size());

    for (double a : a_values) {
        const double denom_att = a * sample.mean_pt;
        if (kind == TeKind::att && denom_att == 0.0)
            throw NumericError("treated-population weight has zero denominator");
        if (kind == TeKind::atu && 1.0 - denom_att == 0.0)
            throw NumericError("untreated-population weight has zero denominator");
        if (kind == TeKind::prte && std::fabs(denom_att - mean_pstar) < 1e-14)
            throw NumericError("policy contrast has zero denominator");

        double u_lo = 0.0, u_hi = 1.0;
        if (!extrapolate) {
            u_lo = std::max(0.0, a * sample.p_min);
            u_hi = std::min(1.0, a * sample.p_max);
            if (!(u_hi > u_lo))
                throw SupportError("identified u-range is degenerate for a=" + fmt_double(a));
        }

        auto weight = [&](double u) {
            switch (kind) {
                case TeKind::ate:
                    return 1.0;
                case TeKind::att:
                    return (1.0 - sample.ecdf(u / a)) / denom_att;
                case TeKind::atu:
                    return sample.ecdf(u / a) / (1.0 - denom_att);
                case TeKind::prte:
                    return ((*p_star)(u)-sample.ecdf(u / a)) / (denom_att - mean_pstar);
            }
            return 0.0;
        };

        double acc_v = 0.0, acc_w = 0.0;
        const double h = (u_hi - u_lo) / (u_grid_size - 1);
        for (int i = 0; i < u_grid_size; ++i) {
            const double u = u_lo + h * i;
            const double w = weight(u);
            const double z = invert_pt(ps_t, group, u / a, std::min(z_lo, ps_t.z_min),
                                       std::max(z_hi, ps_t.z_max), extrapolate);
            const double v = (1.0 / a) * f_at(z) * w;
            const double scale = (i == 0 || i == u_grid_size - 1) ? 0.5 : 1.0;
            acc_v += scale * v;
            acc_w += scale * w;
        }
        acc_v *= h;
        acc_w *= h;

        double value;
        if (extrapolate) {
            value = acc_v;
        } else {
            if (std::fabs(acc_w) < 1e-12)
                throw NumericError("weights vanish on the identified u-range for a=" +
                                   fmt_double(a));
            value = acc_v / acc_w;
        }
        if (value < best_lo) {
            best_lo = value;
            out.u_lo_at_lower = u_lo;
            out.u_hi_at_lower = u_hi;
        }
        best_hi = std::max(best_hi, value);
    }
    out.lower = best_lo;
    out.upper = best_hi;
    return out;
}

BreakdownResult breakdown_c(const LivCurve& curve, const PsFit& ps_t, TeKind kind,
                            Conclusion conclusion, const std::vector<double>& c_grid,
                            int a_grid_size, int u_grid_size,
                            const std::optional<TabulatedCdf>& p_star,
                            IntegrationPolicy policy) {
    if (c_grid.empty()) throw ParamError("breakdown scan needs a c grid");
    for (std::size_t i = 0; i < c_grid.size(); ++i) {
        if (c_grid[i] < 1.0) throw ParamError("breakdown grid values must be at least 1");
        if (i > 0 && c_grid[i] <= c_grid[i - 1])
            throw ParamError("breakdown grid must be strictly ascending");
    }
    auto holds = [&](double c) {
        const TeBounds b = te_bounds(curve, ps_t, c, kind, a_grid_size, u_grid_size, p_star, policy);
        return conclusion == Conclusion::lower_positive ? b.lower > 0.0 : b.upper < 0.0;
    };
    if (!holds(1.0))
        throw ParamError("the conclusion must hold at c=1 before scanning for a breakdown point");
    for (double c : c_grid) {
        if (!holds(c)) return {false, c};
    }
    return {true, c_grid.back()};
}

}  // namespace mtebounds
