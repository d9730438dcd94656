#include "mtebounds/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mtebounds/bounds.hpp"
#include "mtebounds/liv.hpp"
#include "mtebounds/parallel.hpp"
#include "mtebounds/regress.hpp"
#include "mtebounds/rng.hpp"

namespace mtebounds {

void McConfig::validate() const {
    if (r < 0.0 || r > 1.0) throw ParamError("truth-report rate r must lie in [0, 1]");
    double psum = 0.0;
    for (double p : group_probs) {
        if (p < 0.0) throw ParamError("group probabilities must be nonnegative");
        psum += p;
    }
    if (std::fabs(psum - 1.0) > 1e-12) throw ParamError("group probabilities must sum to 1");
    for (int x = 0; x < 3; ++x) {
        const double at0 = gamma_star[static_cast<std::size_t>(x)];
        const double at1 = at0 + gamma1_star;
        if (std::min(at0, at1) < 0.0 || std::max(at0, at1) > 1.0)
            throw ParamError("P_D(z, x) must stay within [0, 1] over z in [0, 1]");
    }
    if (n < 1) throw ParamError("sample size must be positive");
    if (sigma2 < 0.0) throw ParamError("noise variance must be nonnegative");
    for (double c : c_values)
        if (c < 1.0) throw ParamError("every sensitivity constant must be at least 1");
}

TruthRecord analytic_h(const McConfig& config, double z, int x) {
    if (z < 0.0 || z > 1.0) throw ParamError("z must lie in [0, 1]");
    if (x < 0 || x > 2) throw ParamError("x must be one of 0, 1, 2");
    const auto xi = static_cast<std::size_t>(x);
    TruthRecord rec;
    rec.p_d = config.gamma_star[xi] + config.gamma1_star * z;
    rec.p_t = 1.0 - config.r + (2.0 * config.r - 1.0) * rec.p_d;
    rec.theta = config.beta[xi] - config.alpha[xi] + config.beta1 * config.gamma_star[xi] +
                config.beta1 * config.gamma1_star * z;
    rec.f = rec.theta / (2.0 * config.r - 1.0);
    rec.bias = rec.theta * (2.0 - 2.0 * config.r) / (2.0 * config.r - 1.0);
    return rec;
}

ObservationTable gen_appendix_h(const McConfig& config, std::uint64_t seed) {
    config.validate();
    Rng rng(seed);
    const double sd = std::sqrt(config.sigma2);
    ObservationTable table;
    table.group_labels = {"0", "1", "2"};
    table.d.emplace();
    table.y.reserve(static_cast<std::size_t>(config.n));
    for (int i = 0; i < config.n; ++i) {
        const double px = rng.uniform01();
        int x = 2;
        if (px < config.group_probs[0])
            x = 0;
        else if (px < config.group_probs[0] + config.group_probs[1])
            x = 1;
        const auto xi = static_cast<std::size_t>(x);
        const double u = rng.uniform01();
        const double z = rng.uniform01();
        const double v = rng.uniform01();
        const double eps0 = rng.normal(0.0, sd);
        const double eps1 = rng.normal(0.0, sd);
        const bool d = u <= config.gamma_star[xi] + config.gamma1_star * z;
        const bool t = v <= config.r ? d : !d;
        const double y0 = config.alpha[xi] + eps0;
        const double y1 = config.beta[xi] + config.beta1 * u + eps1;
        table.y.push_back(d ? y1 : y0);
        table.t.push_back(t ? 1 : 0);
        table.d->push_back(d ? 1 : 0);
        table.z.push_back(z);
        table.x.push_back(x);
    }
    table.validate();
    return table;
}

McReport run_mc(const McConfig& config, const GridSpec& grid) {
    config.validate();
    grid.validate();
    if (config.replications < 1) throw ParamError("need at least one replication");
    if (!grid.per_group) throw ConfigError("the coverage study evaluates per-group grids");

    McReport report;
    report.c_values = config.c_values;
    report.replications = config.replications;
    for (int g = 0; g < 3; ++g) {
        for (double z : grid.points) {
            report.z.push_back(z);
            report.x.push_back(g);
            const TruthRecord truth = analytic_h(config, z, g);
            report.theta_truth.push_back(truth.theta);
            report.f_truth.push_back(truth.f);
        }
    }
    const std::size_t n_points = report.z.size();
    const std::size_t n_c = config.c_values.size();

    struct RepOutcome {
        bool ok = false;
        std::vector<double> theta_hat;
        std::vector<double> f_hat;
        std::vector<std::vector<std::uint8_t>> covered;  // [c][point]
    };
    std::vector<RepOutcome> outcomes(static_cast<std::size_t>(config.replications));

    parallel_for_index(static_cast<std::size_t>(config.replications), [&](std::size_t rep) {
        RepOutcome& out = outcomes[rep];
        try {
            const ObservationTable table =
                gen_appendix_h(config, derive_seed(config.seed, rep));
            // linear propensity scores, quadratic outcome reduced form
            const PsFit ps_t = fit_ps(table, TreatmentArm::mismeasured, 1);
            const PsFit ps_d = fit_ps(table, TreatmentArm::true_treatment, 1);
            const RfFit rf = fit_outcome_rf(table, 1, 1);
            const LivCurve benchmark = liv_curve(rf, ps_d, grid);
            const LivCurve mismeasured = liv_curve(rf, ps_t, grid);
            if (benchmark.points.size() != n_points)
                throw NumericError("sample lost a group; grid incomplete");
            out.theta_hat.resize(n_points);
            out.f_hat.resize(n_points);
            for (std::size_t p = 0; p < n_points; ++p) {
                out.theta_hat[p] = benchmark.points[p].value;
                out.f_hat[p] = mismeasured.points[p].value;
            }
            out.covered.assign(n_c, std::vector<std::uint8_t>(n_points, 0));
            for (std::size_t ci = 0; ci < n_c; ++ci) {
                const BoundsBand band = theta1_band(mismeasured, config.c_values[ci]);
                for (std::size_t p = 0; p < n_points; ++p) {
                    const double truth = report.theta_truth[p];
                    out.covered[ci][p] =
                        (band.lower[p] <= truth && truth <= band.upper[p]) ? 1 : 0;
                }
            }
            out.ok = true;
        } catch (const Error&) {
            out.ok = false;
        }
    });

    std::vector<double> theta_sum(n_points, 0.0), f_sum(n_points, 0.0);
    std::vector<std::vector<double>> cover_sum(n_c, std::vector<double>(n_points, 0.0));
    int successes = 0;
    for (const RepOutcome& out : outcomes) {  // index order: deterministic reduction
        if (!out.ok) {
            ++report.failures;
            continue;
        }
        ++successes;
        for (std::size_t p = 0; p < n_points; ++p) {
            theta_sum[p] += out.theta_hat[p];
            f_sum[p] += out.f_hat[p];
        }
        for (std::size_t ci = 0; ci < n_c; ++ci)
            for (std::size_t p = 0; p < n_points; ++p) cover_sum[ci][p] += out.covered[ci][p];
    }
    if (report.failures * 100 >= config.replications)
        throw NumericError("more than 1% of replications failed to fit (" +
                           std::to_string(report.failures) + " of " +
                           std::to_string(config.replications) + ")");

    report.bias_benchmark.resize(n_points);
    report.bias_mismeasured.resize(n_points);
    report.coverage.assign(n_c, std::vector<double>(n_points, 0.0));
    for (std::size_t p = 0; p < n_points; ++p) {
        report.bias_benchmark[p] = theta_sum[p] / successes - report.theta_truth[p];
        report.bias_mismeasured[p] = f_sum[p] / successes - report.theta_truth[p];
        for (std::size_t ci = 0; ci < n_c; ++ci)
            report.coverage[ci][p] = cover_sum[ci][p] / successes;
    }
    return report;
}

// ---------------------------------------------------------------------------
// Counterexamples
// ---------------------------------------------------------------------------

double appendix_b_conditional_mean(double z, bool use_true_treatment) {
    if (z < 0.0 || z > 0.5) throw ParamError("the construction is defined for z in [0, 1/2]");
    const double ey0 = 1.0 / 5.0;
    const double egap = 3.0 / 5.0;  // E[Y1 - Y0]
    const double p_d = z;
    if (use_true_treatment) return p_d * ey0 + p_d * egap;
    const double p_t = 1.0 - 2.0 * z;
    return p_t * ey0 + std::min(p_t, p_d) * egap;
}

double counterexample_monotonicity() {
    // P_T(1/4) = 1/2 and P_T(1/3) = 1/3
    return appendix_b_conditional_mean(0.25, false) -
           appendix_b_conditional_mean(1.0 / 3.0, false);
}

std::pair<double, double> counterexample_index_sufficiency(bool condition_on_true) {
    // E[Y0] = 0, E[Y1] = 1, P_D(z) = z: E[Y | Z = z] = z.
    const double at_z1 = 1.0;
    if (condition_on_true) return {at_z1, at_z1};  // P_D(Z) = 1 only at Z = 1
    // P_T(z) = (2z - 1)^2 reaches 1 at both Z = 0 and Z = 1, mixed evenly.
    const double conditioned = 0.5 * (0.0 + 1.0);
    return {at_z1, conditioned};
}

ObservationTable gen_differential_me(std::size_t n, std::uint64_t seed) {
    if (n < 1) throw ParamError("sample size must be positive");
    Rng rng(seed);
    ObservationTable table;
    table.group_labels = {"0"};
    table.d.emplace();
    const double sqrt2 = std::sqrt(2.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double y0 = rng.normal();
        const double y1 = rng.normal();
        const double z = rng.uniform01();
        // the latent margin is the rank of the outcome gap itself
        const double u = 0.5 * (1.0 + std::erf((y1 - y0) / (sqrt2 * sqrt2)));
        const bool d = u <= z;
        const bool t = u <= 0.25 + 0.5 * z;
        table.y.push_back(d ? y1 : y0);
        table.t.push_back(t ? 1 : 0);
        table.d->push_back(d ? 1 : 0);
        table.z.push_back(z);
        table.x.push_back(0);
    }
    table.validate();
    return table;
}

IvWeightDiagnostic iv_weight_integral(const ObservationTable& table, int u_grid, int ps_degree) {
    if (!table.has_d()) throw ConfigError("the weight diagnostic needs the true treatment column");
    if (u_grid < 2) throw ParamError("u-grid needs at least two nodes");
    const auto n = table.size();
    const double nf = static_cast<double>(n);

    double z_mean = 0.0, t_mean = 0.0, d_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        z_mean += table.z[i];
        t_mean += table.t[i];
        d_mean += (*table.d)[i];
    }
    z_mean /= nf;
    t_mean /= nf;
    d_mean /= nf;
    double cov_zt = 0.0, cov_zd = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        cov_zt += (table.z[i] - z_mean) * (table.t[i] - t_mean);
        cov_zd += (table.z[i] - z_mean) * ((*table.d)[i] - d_mean);
    }
    cov_zt /= nf;
    cov_zd /= nf;
    if (cov_zt == 0.0) throw NumericError("Cov(z, t) vanishes: weights undefined");

    const PsFit ps_d = fit_ps(table, TreatmentArm::true_treatment, ps_degree);

    IvWeightDiagnostic diag;
    diag.cov_ratio = cov_zd / cov_zt;
    // The empirical weight function is a step function of u, so its integral
    // over [0, 1] has the exact form sum_i (z_i - mean z) * clamp(p_i, 0, 1).
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        acc += (table.z[i] - z_mean) * std::clamp(ps_d.fitted[i], 0.0, 1.0);
    diag.integral = acc / nf / cov_zt;

    diag.u.reserve(static_cast<std::size_t>(u_grid));
    diag.omega.reserve(static_cast<std::size_t>(u_grid));
    std::vector<double> sorted_p(n);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return ps_d.fitted[a] < ps_d.fitted[b]; });
    // suffix sums of (z - mean z) over rows sorted by fitted propensity
    std::vector<double> suffix(n + 1, 0.0);
    for (std::size_t k = n; k-- > 0;)
        suffix[k] = suffix[k + 1] + (table.z[order[k]] - z_mean);
    for (int j = 0; j < u_grid; ++j) {
        const double u = static_cast<double>(j) / (u_grid - 1);
        // first sorted index with fitted >= u
        std::size_t lo = 0, hi = n;
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (ps_d.fitted[order[mid]] < u)
                lo = mid + 1;
            else
                hi = mid;
        }
        diag.u.push_back(u);
        diag.omega.push_back(suffix[lo] / nf / cov_zt);
    }
    return diag;
}

}  // namespace mtebounds
