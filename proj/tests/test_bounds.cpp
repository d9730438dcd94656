#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fixtures.hpp"
#include "mtebounds/bounds.hpp"
#include "mtebounds/rng.hpp"

using namespace mtebounds;
using fixtures::make_grid;
using fixtures::population_fits;
using fixtures::single_group_fits;

namespace {

LivCurve population_curve(const GridSpec& grid, double r = 0.95) {
    McConfig config;
    config.r = r;
    const auto fits = population_fits(config);
    return liv_curve(fits.rf, fits.ps_t, grid);
}

}  // namespace

TEST_CASE("sign of the estimand value") {
    CHECK(mte_sign(0.44) == 1);
    CHECK(mte_sign(0.0) == 0);
    CHECK(mte_sign(-0.1) == -1);
    CHECK_THROWS_AS(mte_sign(std::numeric_limits<double>::quiet_NaN()), DataError);
}

TEST_CASE("envelope arithmetic for both signs") {
    const auto fits = single_group_fits(0.0, 1.0, 0.9, 0.0);  // f constant 0.9
    const LivCurve curve = liv_curve(fits.rf, fits.ps_t, make_grid({0.5}));
    const BoundsBand band = theta1_band(curve, 10.0 / 9.0);
    CHECK(band.lower[0] == doctest::Approx(0.81).epsilon(1e-12));
    CHECK(band.upper[0] == doctest::Approx(1.0).epsilon(1e-12));

    const auto neg = single_group_fits(0.0, 1.0, -0.9, 0.0);
    const LivCurve ncurve = liv_curve(neg.rf, neg.ps_t, make_grid({0.5}));
    const BoundsBand nband = theta1_band(ncurve, 10.0 / 9.0);
    CHECK(nband.lower[0] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(nband.upper[0] == doctest::Approx(-0.81).epsilon(1e-12));

    CHECK_THROWS_AS(theta1_band(curve, 0.99), ParamError);
}

TEST_CASE("width follows ((c^2 - 1)/c) |f| pointwise") {
    const auto fits = single_group_fits(0.0, 1.0, 0.3, 0.0);
    const LivCurve curve = liv_curve(fits.rf, fits.ps_t, make_grid({0.5}));
    const BoundsBand band = theta1_band(curve, 1.2);
    CHECK(band.width(0) == doctest::Approx(0.11).epsilon(1e-12));

    // random curves, several c values, relative tolerance 1e-12
    Rng rng(17);
    for (int rep = 0; rep < 3; ++rep) {
        const auto f = single_group_fits(0.1, 0.8, rng.normal(), rng.normal());
        const LivCurve c2 = liv_curve(f.rf, f.ps_t, make_grid({0.1, 0.35, 0.62, 0.9}));
        for (double c : {10.0 / 9.0, 1.2, 1.5, 2.0}) {
            const BoundsBand b = theta1_band(c2, c);
            for (std::size_t i = 0; i < b.size(); ++i) {
                const double expected = (c * c - 1.0) / c * std::fabs(b.base[i].value);
                CHECK(b.width(i) == doctest::Approx(expected).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("bands contain the curve, share its sign and nest in c") {
    const LivCurve curve = population_curve(make_grid({0.1, 0.3, 0.5, 0.7, 0.9}));
    const BoundsBand inner = theta1_band(curve, 1.1);
    const BoundsBand outer = theta1_band(curve, 1.4);
    for (std::size_t i = 0; i < inner.size(); ++i) {
        const double f = curve.points[i].value;
        CHECK(inner.lower[i] <= f);
        CHECK(f <= inner.upper[i]);
        CHECK(outer.lower[i] <= inner.lower[i]);
        CHECK(inner.upper[i] <= outer.upper[i]);
        if (f > 0) {
            CHECK(inner.lower[i] > 0);
        } else if (f < 0) {
            CHECK(inner.upper[i] < 0);
        } else {
            CHECK(inner.lower[i] == 0.0);
            CHECK(inner.upper[i] == 0.0);
        }
    }
}

TEST_CASE("largest plausible c from the curve extremes") {
    // extremes 0.5 and -0.4 inside [-1, 1]: the positive side binds first
    const auto fits = single_group_fits(0.0, 1.0, 0.5, -0.9);  // f from 0.5 to -0.4
    const LivCurve curve = liv_curve(fits.rf, fits.ps_t, make_grid({0.0, 1.0}));
    CHECK(curve.max_value() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(curve.min_value() == doctest::Approx(-0.4).epsilon(1e-12));
    const MaxPlausibleC res = max_plausible_c(curve, -1.0, 1.0);
    CHECK(res.status == MaxPlausibleC::Status::ok);
    CHECK(res.c == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("no valid c when an extreme already escapes the effect range") {
    const auto fits = single_group_fits(0.0, 1.0, 1.2, -1.6);  // extremes 1.2, -0.4
    const LivCurve curve = liv_curve(fits.rf, fits.ps_t, make_grid({0.0, 1.0}));
    const MaxPlausibleC res = max_plausible_c(curve, -1.0, 1.0);
    CHECK(res.status == MaxPlausibleC::Status::no_valid_c);
}

TEST_CASE("flat zero curve leaves c unbounded") {
    const auto fits = single_group_fits(0.0, 1.0, 0.0, 0.0);
    const LivCurve curve = liv_curve(fits.rf, fits.ps_t, make_grid({0.3, 0.7}));
    const MaxPlausibleC res = max_plausible_c(curve, -1.0, 1.0);
    CHECK(res.status == MaxPlausibleC::Status::unbounded);
}

TEST_CASE("band intersection on a common grid") {
    const auto fits = single_group_fits(0.0, 1.0, 0.4, 0.0);
    const LivCurve curve = liv_curve(fits.rf, fits.ps_t, make_grid({0.5}));
    BoundsBand a = theta1_band(curve, 1.0);
    BoundsBand b = a;
    a.lower[0] = 0.1;
    a.upper[0] = 0.5;
    b.lower[0] = 0.3;
    b.upper[0] = 0.8;
    const IntersectResult both = intersect_bands({a, b});
    REQUIRE(!both.rejected());
    CHECK(both.band->lower[0] == 0.3);
    CHECK(both.band->upper[0] == 0.5);
    CHECK(both.band->provenance == BandProvenance::intersection);

    const IntersectResult single = intersect_bands({a});
    REQUIRE(!single.rejected());
    CHECK(single.band->lower[0] == a.lower[0]);
    CHECK(single.band->upper[0] == a.upper[0]);

    b.lower[0] = 0.6;
    b.upper[0] = 0.9;
    const IntersectResult disjoint = intersect_bands({a, b});
    CHECK(disjoint.rejected());
    CHECK(disjoint.rejected_points.size() == 1);
    CHECK(!disjoint.message.empty());
}

TEST_CASE("constant-scaling family basics") {
    const auto fits = single_group_fits(0.0, 0.5, 0.15, 0.0);  // P_T = z/2, f = 0.3
    const LivCurve curve = liv_curve(fits.rf, fits.ps_t, make_grid({0.2, 0.5, 0.8}));

    const ScaledFamily singleton = theta2_family(curve, fits.ps_t, 1.0, 7);
    REQUIRE(singleton.members.size() == 1);
    for (std::size_t i = 0; i < curve.points.size(); ++i)
        CHECK(singleton.members[0].values[i] == curve.points[i].value);

    // p_bar = 0.4 on this grid; 1/p_bar = 2.5
    CHECK_NOTHROW(theta2_family(curve, fits.ps_t, 2.5, 5));
    CHECK_THROWS_AS(theta2_family(curve, fits.ps_t, 2.6, 5), ParamError);

    const ScaledFamily family = theta2_family(curve, fits.ps_t, 2.0, 9);
    const BoundsBand band = theta1_band(curve, 2.0);
    for (const auto& member : family.members) {
        CHECK(member.propensity_in_unit_interval);
        for (std::size_t i = 0; i < member.values.size(); ++i) {
            CHECK(member.values[i] >= band.lower[i] - 1e-12);
            CHECK(member.values[i] <= band.upper[i] + 1e-12);
            // every member keeps the zero set of f
            if (curve.points[i].value == 0.0) CHECK(member.values[i] == 0.0);
        }
    }
}

TEST_CASE("sign-changing curves exclude the envelope contours from the family") {
    // f(z) = 0.5 - z changes sign at 0.5; P_T = z/2 keeps 1/p_bar above c
    const auto fits = single_group_fits(0.0, 0.5, 0.25, -0.5);
    const LivCurve curve = liv_curve(fits.rf, fits.ps_t, make_grid({0.2, 0.8}));
    const double c = 1.3;
    const ScaledFamily family = theta2_family(curve, fits.ps_t, c, 41);
    const BoundsBand band = theta1_band(curve, c);
    // no single constant a reproduces the maximal enlargement on both sign
    // regions at once
    for (const auto& member : family.members) {
        bool equals_upper_everywhere = true;
        bool equals_lower_everywhere = true;
        for (std::size_t i = 0; i < member.values.size(); ++i) {
            if (std::fabs(member.values[i] - band.upper[i]) > 1e-12)
                equals_upper_everywhere = false;
            if (std::fabs(member.values[i] - band.lower[i]) > 1e-12)
                equals_lower_everywhere = false;
        }
        CHECK(!equals_upper_everywhere);
        CHECK(!equals_lower_everywhere);
    }
}

TEST_CASE("non-monotone propensity scores are rejected for the family") {
    // slope changes sign inside the grid range
    std::vector<double> z_sample;
    std::vector<int> groups;
    for (int i = 0; i <= 100; ++i) {
        z_sample.push_back(i / 100.0);
        groups.push_back(0);
    }
    PsFit humped = PsFit::from_coefficients(TreatmentArm::mismeasured, {0.1}, {0.8, -0.8},
                                            {"g0"}, z_sample, groups);
    const auto fits = single_group_fits(0.0, 1.0, 0.2, 0.0);
    const LivCurve curve = liv_curve(fits.rf, fits.ps_t, make_grid({0.1, 0.9}));
    CHECK_THROWS_AS(theta2_family(curve, humped, 1.1, 3), NumericError);
}

TEST_CASE("sharpness verification accepts the fitted model itself") {
    McConfig config;
    const auto fits = population_fits(config);
    const GridSpec grid = make_grid({0.1, 0.3, 0.5, 0.7, 0.9});
    const LivCurve curve = liv_curve(fits.rf, fits.ps_t, grid);
    const SharpnessReport report = verify_sharp_candidate(curve, 1.0, fits.ps_t, fits.rf);
    CHECK(report.max_mte_discrepancy <= 1e-10);
    CHECK(report.max_slope_discrepancy <= 1e-10);
}

TEST_CASE("sharpness verification on scaled members of the population fits") {
    McConfig config;
    const auto fits = population_fits(config);
    const GridSpec grid = make_grid({0.1, 0.3, 0.5, 0.7, 0.9});
    const LivCurve curve = liv_curve(fits.rf, fits.ps_t, grid);
    const SharpnessReport report = verify_sharp_candidate(curve, 1.1, fits.ps_t, fits.rf);
    CHECK(report.max_mte_discrepancy <= 1e-8);
    CHECK(report.max_slope_discrepancy <= 1e-8);
}

TEST_CASE("candidates outside the binary-outcome range are refused") {
    const auto fits = single_group_fits(0.0, 1.0, 1.3, 0.0);  // f constant 1.3
    const LivCurve curve = liv_curve(fits.rf, fits.ps_t, make_grid({0.5}));
    CHECK_THROWS_AS(verify_sharp_candidate(curve, 1.0, fits.ps_t, fits.rf), SupportError);
}

TEST_CASE("treatment-effect bounds: point identification at c = 1") {
    const auto fits = single_group_fits(0.0, 1.0, 0.2, 0.0);  // f = 0.2, P_T = z
    const LivCurve curve = liv_curve(fits.rf, fits.ps_t, make_grid({0.2, 0.5, 0.8}));
    const TeBounds b = te_bounds(curve, fits.ps_t, 1.0, TeKind::ate, 201, 801);
    CHECK(b.lower == doctest::Approx(0.2).epsilon(1e-9));
    CHECK(b.upper == doctest::Approx(0.2).epsilon(1e-9));
    CHECK(b.lower == b.upper);
}

TEST_CASE("constant curve scales the bounds by 1/a") {
    const auto fits = single_group_fits(0.0, 0.5, 0.15, 0.0);  // f = 0.3, P_T = z/2
    const LivCurve curve = liv_curve(fits.rf, fits.ps_t, make_grid({0.2, 0.5, 0.8}));
    const TeBounds b = te_bounds(curve, fits.ps_t, 2.0, TeKind::ate, 201, 801);
    CHECK(b.lower == doctest::Approx(0.15).epsilon(1e-9));
    CHECK(b.upper == doctest::Approx(0.6).epsilon(1e-9));
}

TEST_CASE("c = 1 collapses every parameter kind") {
    const auto fits = single_group_fits(0.05, 0.8, 0.1, 0.15);
    const LivCurve curve = liv_curve(fits.rf, fits.ps_t, make_grid({0.1, 0.5, 0.9}));
    TabulatedCdf pstar;
    pstar.knots = {0.0, 0.5, 1.0};
    pstar.values = {0.0, 0.8, 1.0};
    for (TeKind kind : {TeKind::ate, TeKind::att, TeKind::atu, TeKind::prte}) {
        const TeBounds b = te_bounds(curve, fits.ps_t, 1.0, kind, 51, 501, pstar);
        CHECK(b.lower == b.upper);
    }
}

TEST_CASE("treated-population bounds match a reweighted-sample oracle") {
    // P_T(z) = z, f(z) = 0.3 - 0.2 z; with a = 1 the treated-weighted
    // average has the closed form sum(0.3 p - 0.1 p^2) / sum(p)
    Rng rng(23);
    std::vector<double> z_sample;
    std::vector<int> groups;
    for (int i = 0; i < 1000; ++i) {
        z_sample.push_back(rng.uniform01());
        groups.push_back(0);
    }
    PsFit ps = PsFit::from_coefficients(TreatmentArm::mismeasured, {0.0}, {1.0}, {"g0"},
                                        z_sample, groups);
    const RfFit rf = RfFit::from_coefficients({0.0}, {{0.3}}, {-0.1}, 1, 1, {"g0"}, 0.0, 1.0);
    const LivCurve curve = liv_curve(rf, ps, make_grid({0.2, 0.5, 0.8}));

    double oracle_num = 0.0, oracle_den = 0.0;
    for (double p : ps.fitted) {
        oracle_num += 0.3 * p - 0.1 * p * p;
        oracle_den += p;
    }
    const double oracle = oracle_num / oracle_den;
    const TeBounds b = te_bounds(curve, ps, 1.0, TeKind::att, 1, 2001);
    CHECK(b.lower == doctest::Approx(oracle).epsilon(1e-2));
}

TEST_CASE("degenerate identified range and zero weights raise errors") {
    const auto fits = single_group_fits(0.6, 0.2, 0.1, 0.0);  // P_T in [0.6, 0.8]
    const LivCurve curve = liv_curve(fits.rf, fits.ps_t, make_grid({0.2, 0.8}));
    // a * p_min > 1 for a = 1/p? choose c so that some a pushes the range
    // beyond [0, 1]: a = 1.25 gives [0.75, 1.0], fine; the error case needs
    // a * p_min >= 1, i.e. a >= 1.6667 -> c above 1/p_bar is refused first
    CHECK_THROWS_AS(te_bounds(curve, fits.ps_t, 3.0, TeKind::ate), ParamError);
}

TEST_CASE("multi-group curves must be sliced before bounding parameters") {
    McConfig config;
    const auto fits = population_fits(config);
    const LivCurve curve = liv_curve(fits.rf, fits.ps_t, make_grid({0.3, 0.6}));
    CHECK_THROWS_AS(te_bounds(curve, fits.ps_t, 1.1, TeKind::ate), ConfigError);
}

TEST_CASE("breakdown scan on a constant positive curve holds throughout") {
    const auto fits = single_group_fits(0.0, 1.0, 0.2, 0.0);
    const LivCurve curve = liv_curve(fits.rf, fits.ps_t, make_grid({0.2, 0.5, 0.8}));
    const BreakdownResult res = breakdown_c(curve, fits.ps_t, TeKind::ate,
                                            Conclusion::lower_positive,
                                            {1.05, 1.1, 1.15, 1.2}, 51, 501);
    CHECK(res.holds_throughout);
}

TEST_CASE("breakdown scan finds the first failing grid value") {
    // P_T(z) = z/2 and f(z) = 0.3 - 0.2 z; integrating over the full unit
    // margin, the member at a = 1/c integrates to 0.3 c - 0.2 c^2, which
    // turns negative beyond c = 1.5. First failing grid value: 1.6.
    const auto fits = single_group_fits(0.0, 0.5, 0.15, -0.1);
    const LivCurve curve = liv_curve(fits.rf, fits.ps_t, make_grid({0.1, 0.5, 0.9}));
    const std::vector<double> grid_c = {1.2, 1.4, 1.6, 1.8};
    const BreakdownResult res =
        breakdown_c(curve, fits.ps_t, TeKind::ate, Conclusion::lower_positive, grid_c, 201, 2001,
                    std::nullopt, IntegrationPolicy::extrapolate);
    REQUIRE(!res.holds_throughout);
    CHECK(res.c == 1.6);
    // cross-check against direct evaluations and the closed form
    for (double c : grid_c) {
        const TeBounds b = te_bounds(curve, fits.ps_t, c, TeKind::ate, 201, 2001, std::nullopt,
                                     IntegrationPolicy::extrapolate);
        const double closed_form = 0.3 * c - 0.2 * c * c;  // value at a = 1/c
        CHECK(b.lower == doctest::Approx(std::min(closed_form, 0.3 / c - 0.2 / (c * c)))
                             .epsilon(1e-6));
        if (c < res.c)
            CHECK(b.lower > 0.0);
        else if (c == res.c)
            CHECK(b.lower <= 0.0);
    }
}

TEST_CASE("breakdown scan requires the conclusion at c = 1") {
    const auto fits = single_group_fits(0.0, 1.0, -0.2, 0.0);  // negative effect
    const LivCurve curve = liv_curve(fits.rf, fits.ps_t, make_grid({0.2, 0.8}));
    CHECK_THROWS_AS(breakdown_c(curve, fits.ps_t, TeKind::ate, Conclusion::lower_positive,
                                {1.1, 1.2}, 51, 501),
                    ParamError);
}
