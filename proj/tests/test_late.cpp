#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"
#include "mtebounds/late.hpp"
#include "mtebounds/rng.hpp"

using namespace mtebounds;

namespace {

ObservationTable binary_table(const std::vector<double>& y0, const std::vector<double>& y1,
                              const std::vector<int>& t0, const std::vector<int>& t1) {
    ObservationTable t;
    t.group_labels = {"g"};
    for (std::size_t i = 0; i < y0.size(); ++i) {
        t.y.push_back(y0[i]);
        t.t.push_back(static_cast<std::uint8_t>(t0[i]));
        t.z.push_back(0.0);
        t.x.push_back(0);
    }
    for (std::size_t i = 0; i < y1.size(); ++i) {
        t.y.push_back(y1[i]);
        t.t.push_back(static_cast<std::uint8_t>(t1[i]));
        t.z.push_back(1.0);
        t.x.push_back(0);
    }
    t.validate();
    return t;
}

}  // namespace

TEST_CASE("arm means, deltas and the Wald ratio") {
    // y means (0.30, 0.35); t means (0.40, 0.60)
    const auto t = binary_table({0.3, 0.3, 0.3, 0.3, 0.3}, {0.35, 0.35, 0.35, 0.35, 0.35},
                                {1, 1, 0, 0, 0}, {1, 1, 1, 0, 0});
    const LateDeltas deltas = late_deltas(t);
    CHECK(deltas.dy == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(deltas.dt == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(deltas.n0 == 5);
    CHECK(deltas.n1 == 5);
    CHECK(deltas.wald() == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("identical outcomes across arms give a zero Wald ratio") {
    const auto t = binary_table({0.5, 0.5}, {0.5, 0.5}, {0, 1}, {1, 1});
    const LateDeltas deltas = late_deltas(t);
    CHECK(deltas.dy == 0.0);
    CHECK(deltas.wald() == 0.0);
    const LateBand band = late_band(deltas, 1.3);
    CHECK(band.degenerate_zero);
    CHECK(band.sign == 0);
    CHECK(band.lower == 0.0);
    CHECK(band.upper == 0.0);
}

TEST_CASE("flat treatment share is a rank violation") {
    const auto t = binary_table({0.0, 1.0}, {1.0, 1.0}, {1, 0}, {0, 1});
    const LateDeltas deltas = late_deltas(t);
    CHECK(deltas.dt == 0.0);
    CHECK_THROWS_AS(deltas.wald(), NumericError);
    CHECK_THROWS_AS(late_band(deltas, 1.2), NumericError);
}

TEST_CASE("non-binary z and empty arms are rejected") {
    ObservationTable bad = fixtures::table_from_zy({0.0, 0.5, 1.0}, {0, 1, 0});
    CHECK_THROWS_AS(late_deltas(bad), DataError);

    ObservationTable one_arm = fixtures::table_from_zy({1.0, 1.0}, {0, 1});
    one_arm.z = {1.0, 1.0};
    CHECK_THROWS_AS(late_deltas(one_arm), SupportError);
}

TEST_CASE("band arithmetic at the reference deltas") {
    LateDeltas deltas;
    deltas.dy = 0.05;
    deltas.dt = 0.10;
    deltas.n0 = deltas.n1 = 10;
    CHECK(deltas.wald() == 0.5);

    const LateBand band = late_band(deltas, 1.25);
    CHECK(band.lower == 0.4);
    CHECK(band.upper == 0.625);
    CHECK(band.sign == 1);

    const LateBand collapsed = late_band(deltas, 1.0);
    CHECK(collapsed.lower == 0.5);
    CHECK(collapsed.upper == 0.5);

    deltas.dy = -0.05;
    const LateBand mirrored = late_band(deltas, 1.25);
    CHECK(mirrored.lower == -0.625);
    CHECK(mirrored.upper == -0.4);
    CHECK(mirrored.sign == -1);

    CHECK_THROWS_AS(late_band(deltas, 0.9), ParamError);
}

TEST_CASE("the Wald ratio lies in every band, nested in c") {
    Rng rng(14);
    for (int rep = 0; rep < 20; ++rep) {
        LateDeltas deltas;
        deltas.dy = rng.normal() * 0.2;
        deltas.dt = 0.05 + rng.uniform01() * 0.5;
        deltas.n0 = deltas.n1 = 10;
        const double w = deltas.wald();
        const LateBand tight = late_band(deltas, 1.1);
        const LateBand wide = late_band(deltas, 1.7);
        CHECK(tight.lower <= w);
        CHECK(w <= tight.upper);
        CHECK(wide.lower <= tight.lower);
        CHECK(tight.upper <= wide.upper);
        CHECK(sign_of(w) == tight.sign);
    }
}

TEST_CASE("with no misclassification the t-based and d-based ratios agree") {
    Rng rng(15);
    ObservationTable t;
    t.group_labels = {"g"};
    t.d.emplace();
    for (int i = 0; i < 500; ++i) {
        const double z = rng.uniform01() < 0.5 ? 0.0 : 1.0;
        const bool treated = rng.uniform01() < 0.3 + 0.4 * z;
        t.z.push_back(z);
        t.t.push_back(treated ? 1 : 0);
        t.d->push_back(treated ? 1 : 0);
        t.y.push_back((treated ? 0.4 : 0.0) + rng.normal() * 0.1);
        t.x.push_back(0);
    }
    t.validate();
    const LateDeltas deltas = late_deltas(t);
    REQUIRE(deltas.dd.has_value());
    CHECK(deltas.dt == *deltas.dd);
    CHECK(deltas.wald() == deltas.dy / *deltas.dd);
}
