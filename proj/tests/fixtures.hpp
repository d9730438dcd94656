#pragma once

// Shared synthetic fixtures for the unit and acceptance suites.

#include <cmath>
#include <string>
#include <vector>

#include "mtebounds/data.hpp"
#include "mtebounds/liv.hpp"
#include "mtebounds/rng.hpp"
#include "mtebounds/simulate.hpp"

namespace fixtures {

using namespace mtebounds;

/// Single-group table with caller-supplied y and z (t filled as 1{z > median}).
inline ObservationTable table_from_zy(const std::vector<double>& z, const std::vector<double>& y) {
    ObservationTable t;
    t.y = y;
    t.z = z;
    t.group_labels = {"g0"};
    double med = 0.0;
    for (double v : z) med += v;
    med /= static_cast<double>(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        t.x.push_back(0);
        t.t.push_back(z[i] > med ? 1 : 0);
    }
    t.validate();
    return t;
}

struct PopulationFits {
    PsFit ps_t;
    PsFit ps_d;
    RfFit rf;
};

/// Analytic coefficient fits implied by the three-group linear DGP: linear
/// propensity scores with common slope and a quadratic outcome reduced form
/// whose high-degree coefficient carries no group subscript.
inline PopulationFits population_fits(const McConfig& config,
                                      double z_lo = 0.0, double z_hi = 1.0,
                                      int sample_per_group = 101) {
    std::vector<double> z_sample;
    std::vector<int> groups;
    for (int g = 0; g < 3; ++g)
        for (int i = 0; i < sample_per_group; ++i) {
            z_sample.push_back(z_lo + (z_hi - z_lo) * static_cast<double>(i) /
                                          (sample_per_group - 1));
            groups.push_back(g);
        }

    const double r = config.r;
    std::vector<double> t_intercepts, d_intercepts;
    for (int g = 0; g < 3; ++g) {
        const double gs = config.gamma_star[static_cast<std::size_t>(g)];
        d_intercepts.push_back(gs);
        t_intercepts.push_back(1.0 - r + (2.0 * r - 1.0) * gs);
    }
    PopulationFits fits;
    fits.ps_t = PsFit::from_coefficients(TreatmentArm::mismeasured, t_intercepts,
                                         {(2.0 * r - 1.0) * config.gamma1_star},
                                         {"0", "1", "2"}, z_sample, groups);
    fits.ps_d = PsFit::from_coefficients(TreatmentArm::true_treatment, d_intercepts,
                                         {config.gamma1_star}, {"0", "1", "2"}, z_sample, groups);

    // E[Y | Z, X] = alpha_x + beta_x P_D + (beta1 / 2) P_D^2 expanded in z
    std::vector<double> rf_intercepts;
    std::vector<std::vector<double>> rf_interacted;
    for (int g = 0; g < 3; ++g) {
        const auto gi = static_cast<std::size_t>(g);
        const double gs = config.gamma_star[gi];
        rf_intercepts.push_back(config.alpha[gi] + config.beta[gi] * gs +
                                0.5 * config.beta1 * gs * gs);
        rf_interacted.push_back({config.beta[gi] * config.gamma1_star +
                                 config.beta1 * gs * config.gamma1_star});
    }
    const std::vector<double> rf_common = {0.5 * config.beta1 * config.gamma1_star *
                                           config.gamma1_star};
    fits.rf = RfFit::from_coefficients(rf_intercepts, rf_interacted, rf_common, 1, 1,
                                       {"0", "1", "2"}, z_lo, z_hi);
    return fits;
}

/// Single-group fits with P_T(z) = pt_intercept + pt_slope * z and a
/// derivative-ratio curve f(z) = (rf_d0 + rf_d1 * z) / pt_slope.
inline PopulationFits single_group_fits(double pt_intercept, double pt_slope, double rf_d0,
                                        double rf_d1, double z_lo = 0.0, double z_hi = 1.0,
                                        int sample = 1001) {
    std::vector<double> z_sample;
    std::vector<int> groups(static_cast<std::size_t>(sample), 0);
    for (int i = 0; i < sample; ++i)
        z_sample.push_back(z_lo + (z_hi - z_lo) * static_cast<double>(i) / (sample - 1));
    PopulationFits fits;
    fits.ps_t = PsFit::from_coefficients(TreatmentArm::mismeasured, {pt_intercept}, {pt_slope},
                                         {"g0"}, z_sample, groups);
    fits.ps_d = fits.ps_t;
    fits.ps_d.target = TreatmentArm::true_treatment;
    fits.rf = RfFit::from_coefficients({0.0}, {{rf_d0}}, {rf_d1 / 2.0}, 1, 1, {"g0"}, z_lo, z_hi);
    return fits;
}

inline GridSpec make_grid(std::vector<double> points, bool per_group = true) {
    GridSpec g;
    g.points = std::move(points);
    g.per_group = per_group;
    g.validate();
    return g;
}

}  // namespace fixtures
