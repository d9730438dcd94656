#pragma once

#include <optional>

#include "mtebounds/data.hpp"

namespace mtebounds {

// ---------------------------------------------------------------------------
// Binary-instrument analogue: arm-mean differences, the Wald ratio and the
// interval that bounds the complier effect for a given sensitivity constant.
// ---------------------------------------------------------------------------
struct LateDeltas {
    double dy = 0.0;                // E[Y|Z=1] - E[Y|Z=0]
    double dt = 0.0;                // P[T=1|Z=1] - P[T=1|Z=0]
    std::optional<double> dd;       // same for D when observed
    std::size_t n0 = 0;
    std::size_t n1 = 0;

    double wald() const {
        if (dt == 0.0) throw NumericError("Wald ratio undefined: treatment share does not move");
        return dy / dt;
    }
};

/// Requires z coded exactly 0/1 with both arms non-empty.
LateDeltas late_deltas(const ObservationTable& table);

struct LateBand {
    double lower = 0.0;
    double upper = 0.0;
    int sign = 0;
    double c = 1.0;
    bool degenerate_zero = false;  // Wald == 0 collapses the set to {0}
};

/// [w/c, c w] for positive Wald w, {0} at w = 0, mirrored for negative w.
LateBand late_band(const LateDeltas& deltas, double c);

}  // namespace mtebounds
