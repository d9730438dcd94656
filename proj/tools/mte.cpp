// Command-line surface for the misclassified-treatment MTE toolkit: estimate
// derivative-ratio curves, compute identified-set bands and treatment-effect
// bounds, run the binary-instrument pipeline, generate synthetic samples, and
// reproduce the bias/coverage study. Outputs are tidy CSV/JSON plus a
// manifest; identical inputs and seeds give byte-identical files.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mtebounds/bounds.hpp"
#include "mtebounds/data.hpp"
#include "mtebounds/infer.hpp"
#include "mtebounds/io.hpp"
#include "mtebounds/late.hpp"
#include "mtebounds/liv.hpp"
#include "mtebounds/simulate.hpp"

namespace fs = std::filesystem;
using namespace mtebounds;

namespace {

struct ColumnFlags {
    std::string y = "y";
    std::string t = "t";
    std::string z = "z";
    std::string d;
    std::string x;
    std::string judge;

    ColumnMap map() const {
        ColumnMap m;
        m.y = y;
        m.t = t;
        m.z = z;
        if (!d.empty()) m.d = d;
        if (!x.empty()) m.x = x;
        if (!judge.empty()) m.judge = judge;
        return m;
    }
};

struct PipelineFlags {
    std::string input;
    bool leave_one_out = false;
    int min_cases = 20;
    bool trim_support = false;
    std::string trim_arm = "t";
    int degree_ps = 2;
    int degree_mte = 1;
    bool full_interaction = false;
    int grid_quantiles = 19;
    std::vector<double> grid;
    bool pooled = false;
    double min_denominator = kDefaultMinDenominator;
};

void add_column_flags(CLI::App* cmd, ColumnFlags& cols) {
    cmd->add_option("--col-y", cols.y, "outcome column name");
    cmd->add_option("--col-t", cols.t, "mismeasured treatment column name");
    cmd->add_option("--col-z", cols.z, "instrument column name");
    cmd->add_option("--col-d", cols.d, "true treatment column name (optional)");
    cmd->add_option("--col-x", cols.x, "group column name (optional)");
    cmd->add_option("--col-judge", cols.judge, "judge id column name (optional)");
}

void add_pipeline_flags(CLI::App* cmd, PipelineFlags& flags) {
    cmd->add_option("--input", flags.input, "input CSV")->required();
    cmd->add_flag("--leave-one-out", flags.leave_one_out,
                  "replace z by the judge's leave-one-out treatment rate");
    cmd->add_option("--min-cases", flags.min_cases, "drop judges with at most this many cases");
    cmd->add_flag("--trim-support", flags.trim_support,
                  "restrict to common instrument support across arms");
    cmd->add_option("--trim-arm", flags.trim_arm, "arm column for trimming: t or d");
    cmd->add_option("--degree-ps", flags.degree_ps, "propensity-score polynomial degree");
    cmd->add_option("--degree-mte", flags.degree_mte, "latent-effect polynomial degree K");
    cmd->add_flag("--full-interaction", flags.full_interaction,
                  "interact every reduced-form power with the group");
    cmd->add_option("--grid-quantiles", flags.grid_quantiles,
                    "number of z-quantile evaluation points");
    cmd->add_option("--grid", flags.grid, "explicit z evaluation points")->delimiter(',');
    cmd->add_flag("--pooled", flags.pooled, "evaluate pooled across groups");
    cmd->add_option("--min-denominator", flags.min_denominator,
                    "rank-condition threshold for |dP/dz|");
}

struct Pipeline {
    ObservationTable table;
    GridSpec grid;
    PsFit ps_t;
    std::optional<PsFit> ps_d;
    RfFit rf;
    LivCurve f_curve;
    std::optional<LivCurve> theta_curve;
};

Pipeline run_pipeline(const PipelineFlags& flags, const ColumnFlags& cols) {
    Pipeline p;
    LoadResult loaded = load_table(flags.input, cols.map());
    p.table = std::move(loaded.table);
    if (loaded.rows_dropped_missing > 0)
        std::cerr << "note: dropped " << loaded.rows_dropped_missing
                  << " row(s) with missing fields\n";
    if (flags.leave_one_out) {
        LooResult loo = leave_one_out_rate(p.table, flags.min_cases);
        if (loo.rows_dropped > 0)
            std::cerr << "note: leave-one-out dropped " << loo.judges_dropped << " judge(s), "
                      << loo.rows_dropped << " row(s)\n";
        p.table = std::move(loo.table);
    }
    if (flags.trim_support) {
        const TreatmentArm arm =
            flags.trim_arm == "d" ? TreatmentArm::true_treatment : TreatmentArm::mismeasured;
        TrimResult trim = common_support_trim(p.table, arm);
        if (trim.rows_dropped > 0)
            std::cerr << "note: support trim to [" << fmt_double(trim.z_lo) << ", "
                      << fmt_double(trim.z_hi) << "] dropped " << trim.rows_dropped
                      << " row(s)\n";
        p.table = std::move(trim.table);
    }
    if (!flags.grid.empty()) {
        p.grid.points = flags.grid;
        p.grid.per_group = !flags.pooled;
        p.grid.validate();
    } else {
        p.grid = GridSpec::quantiles(p.table, flags.grid_quantiles, !flags.pooled);
    }
    p.ps_t = fit_ps(p.table, TreatmentArm::mismeasured, flags.degree_ps);
    if (p.table.has_d()) p.ps_d = fit_ps(p.table, TreatmentArm::true_treatment, flags.degree_ps);
    p.rf = fit_outcome_rf(p.table, flags.degree_ps, flags.degree_mte, flags.full_interaction);
    p.f_curve = liv_curve(p.rf, p.ps_t, p.grid, flags.min_denominator);
    if (p.ps_d) p.theta_curve = liv_curve(p.rf, *p.ps_d, p.grid, flags.min_denominator);
    return p;
}

RunManifest make_manifest(const std::string& subcommand, const ObservationTable& table,
                          std::uint64_t seed,
                          const std::vector<std::pair<std::string, std::string>>& options) {
    RunManifest m;
    m.subcommand = subcommand;
    m.options = options;
    const auto [rows, hash] = fingerprint(table);
    m.input_rows = rows;
    m.input_hash = hash;
    m.seed = seed;
    return m;
}

void emit(const fs::path& dir, const std::string& name, const std::string& contents) {
    fs::create_directories(dir);
    write_file((dir / name).string(), contents);
    std::cout << "wrote " << (dir / name).string() << "\n";
}

std::vector<double> curve_z(const LivCurve& curve) {
    std::vector<double> z;
    for (const auto& p : curve.points) z.push_back(p.z);
    return z;
}

std::vector<std::string> curve_groups(const LivCurve& curve) {
    std::vector<std::string> g;
    for (const auto& p : curve.points) g.push_back(curve.group_name(p.group));
    return g;
}

BoundsBand read_band_csv(const std::string& path) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty band file '" + path + "'");
    BoundsBand band;
    std::map<std::string, int> group_ids;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string z, x, f, lo, hi, width, c;
        if (!std::getline(row, z, ',') || !std::getline(row, x, ',') ||
            !std::getline(row, f, ',') || !std::getline(row, lo, ',') ||
            !std::getline(row, hi, ',') || !std::getline(row, width, ',') ||
            !std::getline(row, c, ','))
            throw DataError("malformed band row '" + line + "' in '" + path + "'");
        CurvePoint pt;
        pt.z = std::stod(z);
        if (x == "pooled") {
            pt.group = -1;
        } else {
            auto [it, inserted] = group_ids.emplace(x, static_cast<int>(band.group_labels.size()));
            if (inserted) band.group_labels.push_back(x);
            pt.group = it->second;
        }
        pt.value = std::stod(f);
        band.base.push_back(pt);
        band.lower.push_back(std::stod(lo));
        band.upper.push_back(std::stod(hi));
        band.c = std::stod(c);
    }
    if (band.base.empty()) throw DataError("band file '" + path + "' has no rows");
    return band;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Partial identification of marginal treatment effects when the binary "
                 "treatment is misclassified"};
    app.require_subcommand(0, 1);

    // ----- estimate ---------------------------------------------------------
    PipelineFlags est;
    ColumnFlags est_cols;
    std::string est_out = "out";
    CLI::App* estimate = app.add_subcommand(
        "estimate", "fit propensity scores and the outcome reduced form; emit estimand curves");
    add_pipeline_flags(estimate, est);
    add_column_flags(estimate, est_cols);
    estimate->add_option("--out", est_out, "output directory");

    // ----- bounds -----------------------------------------------------------
    PipelineFlags bnd;
    ColumnFlags bnd_cols;
    std::string bnd_out = "out";
    std::vector<double> bnd_c{1.2};
    bool bnd_theta2 = false;
    bool bnd_verify = false;
    int bnd_a_grid = 201;
    int bnd_u_grid = 1001;
    std::string bnd_te;
    std::string bnd_group;
    std::string bnd_policy = "restrict";
    std::string bnd_pstar_file;
    std::string bnd_breakdown;
    std::vector<double> bnd_c_grid;
    bool bnd_max_c = false;
    double bnd_floor = -1.0, bnd_ceiling = 1.0;
    int bnd_boot = 0;
    double bnd_level = 0.90;
    std::string bnd_unit = "row";
    std::uint64_t bnd_seed = 1;
    std::vector<std::string> bnd_intersect_files;
    CLI::App* bounds_cmd = app.add_subcommand(
        "bounds",
        "identified-set envelopes, scaled families, treatment-effect bounds, breakdown scans");
    add_pipeline_flags(bounds_cmd, bnd);
    add_column_flags(bounds_cmd, bnd_cols);
    bounds_cmd->add_option("--out", bnd_out, "output directory");
    bounds_cmd->add_option("--c", bnd_c, "sensitivity constants (one band per value)")
        ->delimiter(',');
    bounds_cmd->add_flag("--theta2", bnd_theta2, "emit the constant-scaling family");
    bounds_cmd->add_flag("--verify-sharp", bnd_verify,
                         "run the constructive sharpness check on each family member");
    bounds_cmd->add_option("--a-grid", bnd_a_grid, "scale-grid size");
    bounds_cmd->add_option("--u-grid", bnd_u_grid, "integration nodes");
    bounds_cmd->add_option("--te", bnd_te, "bound a parameter: ate, att, atu or prte");
    bounds_cmd->add_option("--group", bnd_group, "group label for --te/--breakdown");
    bounds_cmd->add_option("--policy", bnd_policy, "integration domain: restrict or extrapolate");
    bounds_cmd->add_option("--p-star", bnd_pstar_file,
                           "CSV of (u, F) pairs for the alternative-policy CDF");
    bounds_cmd->add_option("--breakdown", bnd_breakdown, "conclusion: lower>0 or upper<0");
    bounds_cmd->add_option("--c-grid", bnd_c_grid, "ascending c grid for --breakdown")
        ->delimiter(',');
    bounds_cmd->add_flag("--max-c", bnd_max_c, "largest plausible c given the effect range");
    bounds_cmd->add_option("--effect-floor", bnd_floor, "smallest possible effect");
    bounds_cmd->add_option("--effect-ceiling", bnd_ceiling, "largest possible effect");
    bounds_cmd->add_option("--boot", bnd_boot, "bootstrap replications (0 = off)");
    bounds_cmd->add_option("--level", bnd_level, "confidence level for bootstrap bands");
    bounds_cmd->add_option("--unit", bnd_unit, "resampling unit: row or cluster");
    bounds_cmd->add_option("--seed", bnd_seed, "bootstrap seed");
    bounds_cmd->add_option("--intersect-bands", bnd_intersect_files,
                           "band CSVs to intersect on a common grid");

    // ----- late -------------------------------------------------------------
    ColumnFlags late_cols;
    std::string late_input, late_out = "out";
    double late_c = 1.2;
    CLI::App* late_cmd =
        app.add_subcommand("late", "binary-instrument deltas, Wald ratio and sensitivity band");
    late_cmd->add_option("--input", late_input, "input CSV")->required();
    add_column_flags(late_cmd, late_cols);
    late_cmd->add_option("--c", late_c, "sensitivity constant");
    late_cmd->add_option("--out", late_out, "output directory");

    // ----- simulate ---------------------------------------------------------
    std::string sim_dgp = "appendix-h";
    int sim_n = 3000;
    std::uint64_t sim_seed = 1;
    double sim_r = 0.95;
    std::string sim_out = "sample.csv";
    CLI::App* sim_cmd = app.add_subcommand("simulate", "generate one synthetic table");
    sim_cmd->add_option("--dgp", sim_dgp, "appendix-h or differential-me");
    sim_cmd->add_option("--n", sim_n, "sample size");
    sim_cmd->add_option("--seed", sim_seed, "seed");
    sim_cmd->add_option("--r", sim_r, "truth-report rate (appendix-h)");
    sim_cmd->add_option("--out", sim_out, "output CSV path");

    // ----- check ------------------------------------------------------------
    std::string check_counterexample;
    bool check_iv_weights = false;
    std::string check_input;
    ColumnFlags check_cols;
    std::string check_out;
    int check_u_grid = 1001;
    CLI::App* check_cmd = app.add_subcommand(
        "check", "closed-form counterexamples and the IV-weight diagnostic");
    check_cmd->add_option("--counterexample", check_counterexample, "b or c");
    check_cmd->add_flag("--iv-weights", check_iv_weights, "weight-integral diagnostic");
    check_cmd->add_option("--input", check_input, "input CSV for --iv-weights");
    add_column_flags(check_cmd, check_cols);
    check_cmd->add_option("--u-grid", check_u_grid, "nodes for the exported weight curve");
    check_cmd->add_option("--out", check_out, "optional output directory");

    // ----- mc ---------------------------------------------------------------
    int mc_n = 3000, mc_m = 500;
    std::uint64_t mc_seed = 1;
    double mc_r = 0.95;
    std::vector<double> mc_c;
    std::vector<double> mc_grid;
    int mc_grid_quantiles = 19;
    std::string mc_out = "out";
    CLI::App* mc_cmd = app.add_subcommand("mc", "bias and coverage study with CSV report");
    mc_cmd->add_option("--n", mc_n, "sample size per replication");
    mc_cmd->add_option("--m", mc_m, "number of replications");
    mc_cmd->add_option("--seed", mc_seed, "master seed");
    mc_cmd->add_option("--r", mc_r, "truth-report rate");
    mc_cmd->add_option("--c", mc_c, "sensitivity constants")->delimiter(',');
    mc_cmd->add_option("--grid", mc_grid, "explicit z evaluation points")->delimiter(',');
    mc_cmd->add_option("--grid-quantiles", mc_grid_quantiles,
                       "population z-quantile count when --grid is not given");
    mc_cmd->add_option("--out", mc_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints the message and a usage hint
        return 2;
    }
    if (app.get_subcommands().empty()) {
        std::cout << app.help();
        return 2;
    }

    try {
        // ------------------------------------------------------------------ estimate
        if (estimate->parsed()) {
            const Pipeline p = run_pipeline(est, est_cols);
            const fs::path dir(est_out);
            emit(dir, "f_curve.csv", curve_csv(p.f_curve));
            emit(dir, "f_curve.json", curve_json(p.f_curve));
            if (p.theta_curve) {
                emit(dir, "theta_curve.csv", curve_csv(*p.theta_curve));
                emit(dir, "theta_curve.json", curve_json(*p.theta_curve));
            }
            const RunManifest manifest = make_manifest(
                "estimate", p.table, 0,
                {{"input", est.input},
                 {"degree_ps", std::to_string(est.degree_ps)},
                 {"degree_mte", std::to_string(est.degree_mte)},
                 {"leave_one_out", est.leave_one_out ? "true" : "false"},
                 {"trim_support", est.trim_support ? "true" : "false"},
                 {"grid_points", std::to_string(p.grid.points.size())}});
            emit(dir, "manifest.json", manifest_json(manifest));
            return 0;
        }

        // ------------------------------------------------------------------ bounds
        if (bounds_cmd->parsed()) {
            const fs::path dir(bnd_out);
            if (!bnd_intersect_files.empty()) {
                std::vector<BoundsBand> bands;
                bands.reserve(bnd_intersect_files.size());
                for (const auto& file : bnd_intersect_files) bands.push_back(read_band_csv(file));
                const IntersectResult res = intersect_bands(bands);
                if (res.rejected()) throw RejectionError(res.message);
                emit(dir, "intersection.csv", band_csv(*res.band));
                emit(dir, "intersection.json", band_json(*res.band));
                return 0;
            }
            const Pipeline p = run_pipeline(bnd, bnd_cols);
            const IntegrationPolicy policy = bnd_policy == "extrapolate"
                                                 ? IntegrationPolicy::extrapolate
                                                 : IntegrationPolicy::restrict_to_identified;
            for (double c : bnd_c) {
                const BoundsBand band = theta1_band(p.f_curve, c);
                const std::string tag = fmt_double(c);
                emit(dir, "band_c" + tag + ".csv", band_csv(band));
                emit(dir, "band_c" + tag + ".json", band_json(band));
            }
            if (bnd_max_c) {
                const MaxPlausibleC mc = max_plausible_c(p.f_curve, bnd_floor, bnd_ceiling);
                std::ostringstream msg;
                if (mc.status == MaxPlausibleC::Status::no_valid_c)
                    msg << "{\n  \"max_plausible_c\": \"no valid c\"\n}\n";
                else if (mc.status == MaxPlausibleC::Status::unbounded)
                    msg << "{\n  \"max_plausible_c\": \"unbounded\"\n}\n";
                else
                    msg << "{\n  \"max_plausible_c\": " << fmt_double(mc.c) << "\n}\n";
                emit(dir, "max_c.json", msg.str());
                if (mc.status == MaxPlausibleC::Status::ok)
                    std::cout << "max plausible c = " << fmt_double(mc.c) << "\n";
                else if (mc.status == MaxPlausibleC::Status::unbounded)
                    std::cout << "max plausible c unbounded\n";
                else
                    std::cout << "no valid c\n";
            }

            auto slice_curve = [&]() -> LivCurve {
                if (p.f_curve.single_group()) return p.f_curve;
                int target = -2;
                if (bnd_group.empty()) {
                    target = p.f_curve.points.front().group;
                } else {
                    for (std::size_t g = 0; g < p.f_curve.group_labels.size(); ++g)
                        if (p.f_curve.group_labels[g] == bnd_group) target = static_cast<int>(g);
                    if (target == -2) throw ConfigError("unknown group label '" + bnd_group + "'");
                }
                LivCurve sliced = p.f_curve;
                sliced.points.clear();
                for (const auto& pt : p.f_curve.points)
                    if (pt.group == target) sliced.points.push_back(pt);
                return sliced;
            };

            if (bnd_theta2 || bnd_verify) {
                const LivCurve base = slice_curve();
                const double c = bnd_c.front();
                const ScaledFamily family = theta2_family(base, p.ps_t, c, bnd_a_grid);
                std::ostringstream csv;
                csv << "a,z,x,value,propensity_valid\n";
                for (const auto& member : family.members)
                    for (std::size_t i = 0; i < member.values.size(); ++i)
                        csv << fmt_double(member.a) << ',' << fmt_double(family.base.points[i].z)
                            << ',' << family.base.group_name(family.base.points[i].group) << ','
                            << fmt_double(member.values[i]) << ','
                            << (member.propensity_in_unit_interval ? 1 : 0) << "\n";
                emit(dir, "theta2_family.csv", csv.str());
                if (bnd_verify) {
                    std::ostringstream rep;
                    rep << "a,max_mte_discrepancy,max_slope_discrepancy\n";
                    for (const auto& member : family.members) {
                        const SharpnessReport r =
                            verify_sharp_candidate(family.base, member.a, p.ps_t, p.rf);
                        rep << fmt_double(member.a) << ',' << fmt_double(r.max_mte_discrepancy)
                            << ',' << fmt_double(r.max_slope_discrepancy) << "\n";
                    }
                    emit(dir, "sharpness.csv", rep.str());
                }
            }

            std::optional<TabulatedCdf> p_star;
            if (!bnd_pstar_file.empty()) {
                TabulatedCdf cdf;
                std::istringstream in(read_file(bnd_pstar_file));
                std::string line;
                std::getline(in, line);  // header
                while (std::getline(in, line)) {
                    if (line.empty()) continue;
                    std::istringstream row(line);
                    std::string u, f;
                    std::getline(row, u, ',');
                    std::getline(row, f, ',');
                    cdf.knots.push_back(std::stod(u));
                    cdf.values.push_back(std::stod(f));
                }
                cdf.validate();
                p_star = std::move(cdf);
            }

            if (!bnd_te.empty()) {
                TeKind kind;
                if (bnd_te == "ate") kind = TeKind::ate;
                else if (bnd_te == "att") kind = TeKind::att;
                else if (bnd_te == "atu") kind = TeKind::atu;
                else if (bnd_te == "prte") kind = TeKind::prte;
                else throw ConfigError("unknown parameter kind '" + bnd_te + "'");
                const TeBounds te = te_bounds(slice_curve(), p.ps_t, bnd_c.front(), kind,
                                              bnd_a_grid, bnd_u_grid, p_star, policy);
                emit(dir, "te_" + bnd_te + ".json", te_bounds_json(te));
                std::cout << bnd_te << " bounds: [" << fmt_double(te.lower) << ", "
                          << fmt_double(te.upper) << "]\n";
            }

            if (!bnd_breakdown.empty()) {
                if (bnd_c_grid.empty()) throw ConfigError("--breakdown needs an ascending --c-grid");
                Conclusion conclusion;
                if (bnd_breakdown == "lower>0") conclusion = Conclusion::lower_positive;
                else if (bnd_breakdown == "upper<0") conclusion = Conclusion::upper_negative;
                else throw ConfigError("conclusion must be lower>0 or upper<0");
                TeKind kind = TeKind::ate;
                if (bnd_te == "att") kind = TeKind::att;
                else if (bnd_te == "atu") kind = TeKind::atu;
                else if (bnd_te == "prte") kind = TeKind::prte;
                const BreakdownResult res = breakdown_c(slice_curve(), p.ps_t, kind, conclusion,
                                                        bnd_c_grid, bnd_a_grid, bnd_u_grid, p_star,
                                                        policy);
                std::ostringstream msg;
                if (res.holds_throughout)
                    msg << "{\n  \"breakdown\": \"holds throughout\"\n}\n";
                else
                    msg << "{\n  \"breakdown_c\": " << fmt_double(res.c) << "\n}\n";
                emit(dir, "breakdown.json", msg.str());
                std::cout << (res.holds_throughout
                                  ? std::string("conclusion holds throughout the c grid")
                                  : "breakdown at c = " + fmt_double(res.c))
                          << "\n";
            }

            if (bnd_boot > 0) {
                const ResampleUnit unit =
                    bnd_unit == "cluster" ? ResampleUnit::cluster : ResampleUnit::row;
                const PipelineFlags f = bnd;
                CurveEstimator curve_estimator = [f](const ObservationTable& t,
                                                     const GridSpec& g) -> std::vector<double> {
                    const PsFit ps = fit_ps(t, TreatmentArm::mismeasured, f.degree_ps);
                    const RfFit rf = fit_outcome_rf(t, f.degree_ps, f.degree_mte,
                                                    f.full_interaction);
                    const LivCurve curve = liv_curve(rf, ps, g, f.min_denominator);
                    std::vector<double> v;
                    v.reserve(curve.points.size());
                    for (const auto& pt : curve.points) v.push_back(pt.value);
                    return v;
                };
                const double c = bnd_c.front();
                auto edge_estimator = [curve_estimator, c](bool upper) -> CurveEstimator {
                    return [curve_estimator, c, upper](const ObservationTable& t,
                                                       const GridSpec& g) {
                        std::vector<double> v = curve_estimator(t, g);
                        for (double& x : v)
                            x = upper ? (x >= 0 ? c * x : x / c) : (x >= 0 ? x / c : c * x);
                        return v;
                    };
                };
                const auto gz = curve_z(p.f_curve);
                const auto gg = curve_groups(p.f_curve);
                const BootBand bf = bootstrap_bands(p.table, curve_estimator, p.grid, bnd_boot,
                                                    bnd_level, unit, bnd_seed);
                emit(dir, "boot_f.csv", boot_band_csv(bf, gz, gg));
                const BootBand bl = bootstrap_bands(p.table, edge_estimator(false), p.grid,
                                                    bnd_boot, bnd_level, unit, bnd_seed);
                emit(dir, "boot_lower.csv", boot_band_csv(bl, gz, gg));
                const BootBand bu = bootstrap_bands(p.table, edge_estimator(true), p.grid,
                                                    bnd_boot, bnd_level, unit, bnd_seed);
                emit(dir, "boot_upper.csv", boot_band_csv(bu, gz, gg));
            }

            std::vector<std::pair<std::string, std::string>> opts = {
                {"input", bnd.input},
                {"degree_ps", std::to_string(bnd.degree_ps)},
                {"degree_mte", std::to_string(bnd.degree_mte)},
                {"policy", bnd_policy},
                {"boot", std::to_string(bnd_boot)}};
            std::string cs;
            for (double c : bnd_c) cs += (cs.empty() ? "" : ",") + fmt_double(c);
            opts.emplace_back("c", cs);
            emit(dir, "manifest.json",
                 manifest_json(make_manifest("bounds", p.table, bnd_seed, opts)));
            return 0;
        }

        // ------------------------------------------------------------------ late
        if (late_cmd->parsed()) {
            const LoadResult loaded = load_table(late_input, late_cols.map());
            const LateDeltas deltas = late_deltas(loaded.table);
            const LateBand band = late_band(deltas, late_c);
            const fs::path dir(late_out);
            emit(dir, "late.json", late_json(deltas, band));
            emit(dir, "manifest.json",
                 manifest_json(make_manifest("late", loaded.table, 0,
                                             {{"input", late_input}, {"c", fmt_double(late_c)}})));
            std::cout << "wald = " << fmt_double(deltas.wald()) << ", band = ["
                      << fmt_double(band.lower) << ", " << fmt_double(band.upper) << "]\n";
            return 0;
        }

        // ------------------------------------------------------------------ simulate
        if (sim_cmd->parsed()) {
            ObservationTable table;
            if (sim_dgp == "appendix-h") {
                McConfig config;
                config.n = sim_n;
                config.r = sim_r;
                table = gen_appendix_h(config, sim_seed);
            } else if (sim_dgp == "differential-me") {
                table = gen_differential_me(static_cast<std::size_t>(sim_n), sim_seed);
            } else {
                throw ConfigError("unknown DGP '" + sim_dgp + "'");
            }
            const fs::path out(sim_out);
            if (out.has_parent_path()) fs::create_directories(out.parent_path());
            write_table_csv(table, sim_out);
            std::cout << "wrote " << sim_out << "\n";
            write_file(sim_out + ".manifest.json",
                       manifest_json(make_manifest("simulate", table, sim_seed,
                                                   {{"dgp", sim_dgp},
                                                    {"n", std::to_string(sim_n)},
                                                    {"r", fmt_double(sim_r)}})));
            return 0;
        }

        // ------------------------------------------------------------------ check
        if (check_cmd->parsed()) {
            if (!check_counterexample.empty()) {
                if (check_counterexample == "b") {
                    std::cout << fmt_double(counterexample_monotonicity()) << "\n";
                } else if (check_counterexample == "c") {
                    const auto [at_z, at_p] = counterexample_index_sufficiency();
                    std::cout << fmt_double(at_z) << " " << fmt_double(at_p) << "\n";
                } else {
                    throw ConfigError("counterexample must be b or c");
                }
                return 0;
            }
            if (check_iv_weights) {
                if (check_input.empty()) throw ConfigError("--iv-weights needs --input");
                const LoadResult loaded = load_table(check_input, check_cols.map());
                const IvWeightDiagnostic diag = iv_weight_integral(loaded.table, check_u_grid);
                std::cout << "integral = " << fmt_double(diag.integral)
                          << ", cov_ratio = " << fmt_double(diag.cov_ratio) << "\n";
                if (!check_out.empty()) {
                    const fs::path dir(check_out);
                    emit(dir, "iv_weights.json", iv_weight_json(diag));
                    emit(dir, "manifest.json",
                         manifest_json(make_manifest("check", loaded.table, 0,
                                                     {{"input", check_input}})));
                }
                return 0;
            }
            throw ConfigError("check needs --counterexample or --iv-weights");
        }

        // ------------------------------------------------------------------ mc
        if (mc_cmd->parsed()) {
            McConfig config;
            config.n = mc_n;
            config.replications = mc_m;
            config.seed = mc_seed;
            config.r = mc_r;
            if (!mc_c.empty()) config.c_values = mc_c;
            GridSpec grid;
            grid.per_group = true;
            if (!mc_grid.empty()) {
                grid.points = mc_grid;
            } else {
                // population z-quantiles of the uniform instrument
                for (int i = 1; i <= mc_grid_quantiles; ++i)
                    grid.points.push_back(static_cast<double>(i) / (mc_grid_quantiles + 1));
            }
            grid.validate();
            const McReport report = run_mc(config, grid);
            const fs::path dir(mc_out);
            emit(dir, "mc_report.csv", mc_report_csv(report));
            emit(dir, "mc_report.json", mc_report_json(report, grid));
            RunManifest manifest;
            manifest.subcommand = "mc";
            manifest.options = {{"n", std::to_string(mc_n)},
                                {"m", std::to_string(mc_m)},
                                {"r", fmt_double(mc_r)},
                                {"grid_points", std::to_string(grid.points.size())}};
            manifest.seed = mc_seed;
            emit(dir, "manifest.json", manifest_json(manifest));
            std::cout << "replications = " << report.replications
                      << ", failures = " << report.failures << "\n";
            return 0;
        }
    } catch (const RejectionError& e) {
        std::cerr << "rejection: " << e.what() << "\n";
        return 4;
    } catch (const NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
