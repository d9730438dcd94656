#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#ifndef MTE_CLI_PATH
#error "MTE_CLI_PATH must point at the built binary"
#endif

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

CliResult run_cli(const std::string& args, const std::string& env = "") {
    static int counter = 0;
    const fs::path out = fs::temp_directory_path() / ("mte_cli_out_" +
                                                      std::to_string(counter++) + ".txt");
    const std::string cmd =
        env + " " + std::string(MTE_CLI_PATH) + " " + args + " > " + out.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    CliResult res;
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    res.out = slurp(out);
    fs::remove(out);
    return res;
}

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("counterexample subcommands print the closed forms") {
    const CliResult b = run_cli("check --counterexample b");
    CHECK(b.exit_code == 0);
    CHECK(b.out.find("-0.0166666666") != std::string::npos);

    const CliResult c = run_cli("check --counterexample c");
    CHECK(c.exit_code == 0);
    CHECK(c.out.find("1 0.5") != std::string::npos);
}

TEST_CASE("unknown subcommands and flags exit with the usage code") {
    CHECK(run_cli("frobnicate").exit_code == 2);
    CHECK(run_cli("estimate --no-such-flag x").exit_code == 2);
    CHECK(run_cli("").exit_code == 2);
}

TEST_CASE("truthful reporting makes both curves identical") {
    const fs::path dir = temp_dir("mte_cli_r1");
    const std::string sample = (dir / "sample.csv").string();
    CHECK(run_cli("simulate --dgp appendix-h --r 1.0 --n 1000 --seed 7 --out " + sample)
              .exit_code == 0);
    const CliResult est = run_cli("estimate --input " + sample +
                                  " --col-d d --col-x x --degree-ps 1 --grid 0.25,0.5,0.75 "
                                  "--out " +
                                  (dir / "est").string());
    REQUIRE(est.exit_code == 0);
    CHECK(slurp(dir / "est" / "f_curve.csv") == slurp(dir / "est" / "theta_curve.csv"));
    fs::remove_all(dir);
}

TEST_CASE("band CSV satisfies the width law row by row") {
    const fs::path dir = temp_dir("mte_cli_band");
    const std::string sample = (dir / "sample.csv").string();
    REQUIRE(run_cli("simulate --dgp appendix-h --n 2000 --seed 11 --out " + sample).exit_code ==
            0);
    const CliResult res = run_cli("bounds --input " + sample +
                                  " --col-x x --degree-ps 1 --c 1.2 --grid-quantiles 19 --out " +
                                  (dir / "b").string());
    REQUIRE(res.exit_code == 0);

    std::istringstream in(slurp(dir / "b" / "band_c1.2.csv"));
    std::string line;
    REQUIRE(std::getline(in, line));  // header
    int rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        std::vector<double> vals;
        std::string x;
        int col = 0;
        while (std::getline(row, cell, ',')) {
            if (col == 1)
                x = cell;
            else
                vals.push_back(std::stod(cell));
            ++col;
        }
        REQUIRE(vals.size() == 6);  // z, f, lower, upper, width, c
        const double f = vals[1], width = vals[4], c = vals[5];
        const double expected = (c * c - 1.0) / c * std::fabs(f);
        CHECK(width == doctest::Approx(expected).epsilon(1e-12));
        ++rows;
    }
    CHECK(rows == 19 * 3);
    fs::remove_all(dir);
}

TEST_CASE("validation and numerical failures use distinct exit codes") {
    const fs::path dir = temp_dir("mte_cli_err");
    // missing file -> validation error
    CHECK(run_cli("estimate --input " + (dir / "missing.csv").string()).exit_code == 2);

    // constant instrument -> rank failure
    std::ofstream flat(dir / "flat.csv");
    flat << "y,t,z\n";
    for (int i = 0; i < 30; ++i) flat << (i % 2) << "," << (i % 2) << ",0.5\n";
    flat.close();
    const CliResult res =
        run_cli("estimate --input " + (dir / "flat.csv").string() + " --degree-ps 1");
    CHECK(res.exit_code == 3);
    fs::remove_all(dir);
}

TEST_CASE("identical argv, input and seed give byte-identical outputs") {
    const fs::path dir = temp_dir("mte_cli_det");
    const std::string sample = (dir / "sample.csv").string();
    REQUIRE(run_cli("simulate --dgp appendix-h --n 1500 --seed 3 --out " + sample).exit_code ==
            0);
    const std::string args = "bounds --input " + sample +
                             " --col-x x --degree-ps 1 --c 1.2,1.5 --grid 0.3,0.5,0.7 "
                             "--boot 40 --seed 5 --out ";
    REQUIRE(run_cli(args + (dir / "run1").string()).exit_code == 0);
    REQUIRE(run_cli(args + (dir / "run2").string(), "MTE_WORKERS=3").exit_code == 0);
    for (const char* name : {"band_c1.2.csv", "band_c1.5.csv", "boot_f.csv", "boot_lower.csv",
                             "boot_upper.csv", "manifest.json"})
        CHECK(slurp(dir / "run1" / name) == slurp(dir / "run2" / name));
    fs::remove_all(dir);
}

TEST_CASE("late subcommand reports deltas, Wald and the band") {
    const fs::path dir = temp_dir("mte_cli_late");
    std::ofstream csv(dir / "late.csv");
    csv << "y,t,z\n";
    // arm z=0: y mean 0.30, t mean 0.40; arm z=1: y mean 0.35, t mean 0.50
    for (int i = 0; i < 20; ++i)
        csv << (i < 6 ? 1 : 0) << "," << (i < 8 ? 1 : 0) << ",0\n";
    for (int i = 0; i < 20; ++i)
        csv << (i < 7 ? 1 : 0) << "," << (i < 10 ? 1 : 0) << ",1\n";
    csv.close();
    const CliResult res = run_cli("late --input " + (dir / "late.csv").string() +
                                  " --c 1.25 --out " + (dir / "out").string());
    REQUIRE(res.exit_code == 0);
    const std::string json = slurp(dir / "out" / "late.json");
    CHECK(json.find("\"wald\": 0.5") != std::string::npos);
    CHECK(json.find("0.4") != std::string::npos);
    CHECK(json.find("0.625") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("disjoint band files are rejected with the dedicated exit code") {
    const fs::path dir = temp_dir("mte_cli_isect");
    std::ofstream a(dir / "a.csv");
    a << "z,x,f,lower,upper,width,c\n0.5,g,0.2,0.1,0.2,0.1,1.2\n";
    a.close();
    std::ofstream b(dir / "b.csv");
    b << "z,x,f,lower,upper,width,c\n0.5,g,0.6,0.5,0.8,0.3,1.2\n";
    b.close();
    const CliResult res = run_cli("bounds --input unused --intersect-bands " +
                                  (dir / "a.csv").string() + " " + (dir / "b.csv").string() +
                                  " --out " + (dir / "out").string());
    CHECK(res.exit_code == 4);

    std::ofstream c(dir / "c.csv");
    c << "z,x,f,lower,upper,width,c\n0.5,g,0.25,0.15,0.5,0.35,1.2\n";
    c.close();
    const CliResult ok = run_cli("bounds --input unused --intersect-bands " +
                                 (dir / "a.csv").string() + " " + (dir / "c.csv").string() +
                                 " --out " + (dir / "out").string());
    CHECK(ok.exit_code == 0);
    const std::string merged = slurp(dir / "out" / "intersection.csv");
    CHECK(merged.find("0.15,0.2") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("every numeric output column is finite") {
    const fs::path dir = temp_dir("mte_cli_finite");
    const std::string sample = (dir / "sample.csv").string();
    REQUIRE(run_cli("simulate --dgp differential-me --n 3000 --seed 2 --out " + sample)
                .exit_code == 0);
    const CliResult res = run_cli("estimate --input " + sample +
                                  " --col-d d --degree-ps 1 --grid-quantiles 9 --out " +
                                  (dir / "est").string());
    REQUIRE(res.exit_code == 0);
    std::istringstream in(slurp(dir / "est" / "f_curve.csv"));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string z, x, v;
        std::getline(row, z, ',');
        std::getline(row, x, ',');
        std::getline(row, v, ',');
        CHECK(std::isfinite(std::stod(z)));
        CHECK(std::isfinite(std::stod(v)));
    }
    fs::remove_all(dir);
}
