#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mtebounds/data.hpp"

namespace mtebounds {

// ---------------------------------------------------------------------------
// Synthetic DGP with three groups, a linear true propensity score, a linear
// latent-heterogeneity effect and symmetric misreporting at rate 1 - r. All
// population objects have closed forms, which makes the generator usable as
// its own oracle.
// ---------------------------------------------------------------------------
struct McConfig {
    std::array<double, 3> gamma_star{0.1, 0.2, 0.3};  // group intercepts of P_D
    double gamma1_star = 0.6;                         // slope of P_D
    std::array<double, 3> alpha{0.0, 0.0, 0.0};       // E[Y0 | X]
    std::array<double, 3> beta{0.0, 0.5, 1.0};        // level of E[Y1 | X]
    double beta1 = -1.0;                              // slope in the latent margin
    std::array<double, 3> group_probs{1.0 / 3, 1.0 / 3, 1.0 / 3};
    double sigma2 = 0.5;  // noise variance of both potential outcomes
    double r = 0.95;      // truth-report rate; t == d with probability r
    int n = 3000;
    int replications = 0;
    std::vector<double> c_values{10.0 / 9, 12.0 / 9, 14.0 / 9, 16.0 / 9};
    std::uint64_t seed = 1;

    void validate() const;
};

struct TruthRecord {
    double p_d = 0.0;
    double p_t = 0.0;
    double theta = 0.0;
    double f = 0.0;
    double bias = 0.0;  // f - theta
};

/// Closed-form population values at (z, x).
TruthRecord analytic_h(const McConfig& config, double z, int x);

/// One synthetic sample of size config.n; both t and d columns populated.
ObservationTable gen_appendix_h(const McConfig& config, std::uint64_t seed);

struct McReport {
    std::vector<double> z;           // flattened (z, x) points, group-major
    std::vector<int> x;
    std::vector<double> theta_truth;
    std::vector<double> f_truth;
    std::vector<double> bias_benchmark;   // mean(theta_hat) - theta
    std::vector<double> bias_mismeasured; // mean(f_hat) - theta
    std::vector<double> c_values;
    std::vector<std::vector<double>> coverage;  // [c][point]
    int replications = 0;
    int failures = 0;
};

/// Bias and coverage study: per replication, generate, fit the linear
/// propensity scores and the quadratic outcome reduced form, evaluate both
/// curves and the envelope for every c, then aggregate in replication order.
McReport run_mc(const McConfig& config, const GridSpec& grid);

// ---------------------------------------------------------------------------
// Closed-form counterexamples
// ---------------------------------------------------------------------------

/// E[W*Y | Z = z] in the two-sided threshold construction, with W = T
/// (mismeasured) or W = D. Valid for z in [0, 1/2].
double appendix_b_conditional_mean(double z, bool use_true_treatment);

/// The monotonicity-test gap E[T*Y | P_T(Z)=1/2] - E[T*Y | P_T(Z)=1/3] = -1/60.
double counterexample_monotonicity();

/// (E[Y | Z=1], E[Y | P(Z)=1]) with the mismeasured propensity score in the
/// conditioning by default; (1, 1) when conditioning on the true one.
std::pair<double, double> counterexample_index_sufficiency(bool condition_on_true = false);

/// Differential measurement error: the latent margin is a function of the
/// outcome gap itself, with P_D(z) = z and P_T(z) = 1/4 + z/2.
ObservationTable gen_differential_me(std::size_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Weight diagnostic for the naive IV estimand: the u-integral of the sample
// weights must match Cov(z, d)/Cov(z, t); departures from 1 quantify how far
// the naive estimand is from a proper weighted average.
// ---------------------------------------------------------------------------
struct IvWeightDiagnostic {
    double integral = 0.0;
    double cov_ratio = 0.0;
    std::vector<double> u;
    std::vector<double> omega;
};

IvWeightDiagnostic iv_weight_integral(const ObservationTable& table, int u_grid = 1001,
                                      int ps_degree = 1);

}  // namespace mtebounds
