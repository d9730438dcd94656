#include "mtebounds/late.hpp"

namespace mtebounds {

LateDeltas late_deltas(const ObservationTable& table) {
    LateDeltas deltas;
    double y0 = 0.0, y1 = 0.0, t0 = 0.0, t1 = 0.0, d0 = 0.0, d1 = 0.0;
    for (std::size_t i = 0; i < table.size(); ++i) {
        const double z = table.z[i];
        if (z != 0.0 && z != 1.0)
            throw DataError("binary-instrument analysis needs z coded 0/1; got " +
                            fmt_double(z) + " at row " + std::to_string(i + 1));
        if (z == 0.0) {
            ++deltas.n0;
            y0 += table.y[i];
            t0 += table.t[i];
            if (table.has_d()) d0 += (*table.d)[i];
        } else {
            ++deltas.n1;
            y1 += table.y[i];
            t1 += table.t[i];
            if (table.has_d()) d1 += (*table.d)[i];
        }
    }
    if (deltas.n0 == 0 || deltas.n1 == 0)
        throw SupportError("both instrument arms need at least one observation");
    const auto m0 = static_cast<double>(deltas.n0);
    const auto m1 = static_cast<double>(deltas.n1);
    deltas.dy = y1 / m1 - y0 / m0;
    deltas.dt = t1 / m1 - t0 / m0;
    if (table.has_d()) deltas.dd = d1 / m1 - d0 / m0;
    return deltas;
}

LateBand late_band(const LateDeltas& deltas, double c) {
    if (!(c >= 1.0)) throw ParamError("sensitivity constant c must be at least 1");
    const double w = deltas.wald();
    LateBand band;
    band.c = c;
    band.sign = sign_of(w);
    if (w > 0.0) {
        band.lower = w / c;
        band.upper = c * w;
    } else if (w < 0.0) {
        band.lower = c * w;
        band.upper = w / c;
    } else {
        band.degenerate_zero = true;
    }
    return band;
}

}  // namespace mtebounds
