#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>
#include <unistd.h>

#include "commands.hpp"
#include "drlab/csv.hpp"
#include "drlab/dynamics.hpp"
#include "manifest.hpp"
#include "properties.hpp"
#include "validation.hpp"

using namespace drlab;
using Catch::Approx;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Scratch {
    fs::path dir;
    Scratch() {
        static int n = 0;
        dir = fs::temp_directory_path() / ("drlab-cli-test-" + std::to_string(::getpid()) + "-" + std::to_string(n++));
        fs::remove_all(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
};

struct Run {
    int code;
    std::string out, err;
};

Run cli(std::vector<std::string> args, const fs::path& out_dir = {}) {
    args.insert(args.begin(), "drlab");
    if (!out_dir.empty()) args.insert(args.begin() + 1, {"--out", out_dir.string()});
    std::ostringstream o, e;
    const int code = run_cli(args, o, e);
    return {code, o.str(), e.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(p));
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cells.push_back(c);
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

TEST_CASE("csv number formatting") {
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(format_double(2.0) == "2");
    CHECK(std::stod(format_double(std::numbers::pi)) == std::numbers::pi);
    CHECK(format_double(-INFINITY) == "-inf");
    std::ostringstream os;
    CsvWriter w(os, {"a", "b"});
    w.cell(1.5).cell(std::int64_t{3});
    w.end_row();
    CHECK(os.str() == "a,b\n1.5,3\n");
    CHECK_THROWS_AS(w.cell(1.0).end_row(), DomainError);
}

TEST_CASE("phase command") {
    Scratch s;
    auto r = cli({"phase", "--lambda-min", "0.5", "--lambda-max", "2", "--lambda-steps", "4", "--p-min", "0.5",
                  "--p-max", "0.5", "--p-steps", "1", "--svg"},
                 s.dir);
    REQUIRE(r.code == 0);
    const auto rows = read_csv(s.dir / "phase.csv");
    REQUIRE(rows.size() == 5);
    CHECK(rows[0] == std::vector<std::string>{"lambda", "p", "phase", "H"});
    CHECK(rows[1][0] == "0.5");
    CHECK(rows[1][2] == "Pinned");
    CHECK(fs::exists(s.dir / "phase.svg"));
    CHECK(fs::exists(s.dir / "manifest.json"));

    Scratch c;
    r = cli({"phase", "--lambda-min", "2", "--lambda-max", "2", "--lambda-steps", "1", "--p-min", "0.61371",
             "--p-max", "0.61371", "--p-steps", "1", "--tol", "1e-5"},
            c.dir);
    REQUIRE(r.code == 0);
    CHECK(read_csv(c.dir / "phase.csv")[1][2] == "Critical");

    // a regular grid through the critical curve: the band is half a p step
    Scratch g;
    REQUIRE(cli({"phase", "--lambda-min", "2", "--lambda-max", "2", "--lambda-steps", "1", "--p-min", "0.6",
                 "--p-max", "0.62", "--p-steps", "1001"},
                g.dir)
                .code == 0);
    int crit = 0;
    for (const auto& row : read_csv(g.dir / "phase.csv")) crit += row.size() > 2 && row[2] == "Critical";
    CHECK(crit == 1);

    Scratch e;
    CHECK(cli({"phase", "--p-steps", "0"}, e.dir).code == 2);
    CHECK(cli({"phase", "--p-max", "1.0"}, e.dir).code == 2);
    CHECK(cli({"phase", "--no-such-flag"}, e.dir).code == 2);
}

TEST_CASE("trajectory command") {
    Scratch s;
    auto r = cli({"trajectory", "--p", "0", "--lambda", format_double(std::numbers::e), "--t-max", "200"}, s.dir);
    REQUIRE(r.code == 0);
    const auto rows = read_csv(s.dir / "trajectory.csv");
    CHECK(rows[0] == std::vector<std::string>{"t", "p", "lambda", "rho", "H_error"});
    for (std::size_t k = 1; k < rows.size(); ++k) CHECK(std::fabs(std::stod(rows[k][4])) < 1e-10);
    // critical tail lambda ~ 1 + 2/t
    const json j = read_json(s.dir / "trajectory.json");
    CHECK(j["phase"] == "Critical");
    CHECK(j["critical_tail"]["t_times_lambda_minus_1"].get<double>() == Approx(2.0).epsilon(0.05));

    Scratch u;
    REQUIRE(cli({"trajectory", "--p", "0.9", "--lambda", "2", "--t-max", "60", "--points", "60"}, u.dir).code == 0);
    const json ju = read_json(u.dir / "trajectory.json");
    CHECK(ju["phase"] == "Unpinned");
    CHECK(ju["plateau_gap"].get<double>() < 1e-8);
    CHECK(ju["equilibrium_lambda"].get<double>() == Approx(equilibrium_lambda(0.45 + std::log(2.0))).epsilon(1e-12));
    CHECK(read_csv(u.dir / "trajectory.csv").size() == 62);

    Scratch bad;
    CHECK(cli({"trajectory", "--p", "1", "--lambda", "1"}, bad.dir).code == 2);
    CHECK(cli({"trajectory", "--p", "0.2", "--t-max", "-1"}, bad.dir).code == 2);
}

TEST_CASE("free-energy command") {
    Scratch s;
    REQUIRE(cli({"free-energy", "--lambda", "2"}, s.dir).code == 0);
    const json fit = read_json(s.dir / "fit.json");
    CHECK(fit["case"] == "i");
    CHECK(fit["slope"].get<double>() == Approx(-2 * std::numbers::pi).epsilon(0.02));
    CHECK(read_csv(s.dir / "free_energy.csv")[0] == std::vector<std::string>{"p", "gap", "F", "asymptote_shape"});

    Scratch one;
    REQUIRE(cli({"free-energy", "--lambda", "1"}, one.dir).code == 0);
    CHECK(read_json(one.dir / "fit.json")["slope"].get<double>() ==
          Approx(-std::numbers::pi / std::sqrt(2.0)).epsilon(0.03));

    // sweep crossing into the unpinned region: those rows have F = 0
    Scratch u;
    REQUIRE(cli({"free-energy", "--lambda", "2", "--gaps", "0.05,0.01,-0.01,-0.05"}, u.dir).code == 0);
    const auto rows = read_csv(u.dir / "free_energy.csv");
    REQUIRE(rows.size() == 5);
    CHECK(std::stod(rows[2][2]) > 0.0);
    CHECK(std::stod(rows[3][2]) == 0.0);
    CHECK(std::stod(rows[4][2]) == 0.0);
    CHECK(read_json(u.dir / "fit.json")["zero_rows"] == 2);

    Scratch bad;
    CHECK(cli({"free-energy", "--lambda", "3"}, bad.dir).code == 2);
}

TEST_CASE("simulate command") {
    Scratch s;
    REQUIRE(cli({"simulate", "--kind", "paint", "--p", "0", "--lambda", "1", "--t", "3", "--replicas", "20000"}, s.dir)
                .code == 0);
    const json j = read_json(s.dir / "summary.json");
    CHECK(j["exact"]["ks_pass"] == true);
    CHECK(j["summary"]["count"] == 20000);

    Scratch d0;
    REQUIRE(cli({"simulate", "--kind", "particles", "--pmf", "0:1", "--t", "2", "--particles", "1000", "--samples"},
                d0.dir)
                .code == 0);
    const json jd = read_json(d0.dir / "summary.json");
    CHECK(jd["summary"]["zero_fraction"] == 1.0);
    CHECK(jd["summary"]["max"] == 0.0);
    CHECK(read_csv(d0.dir / "samples.csv").size() == 1001);

    Scratch disc;
    REQUIRE(cli({"simulate", "--kind", "discrete", "--pmf", "0:0.8,2:0.2", "--height", "6", "--replicas", "2000"},
                disc.dir)
                .code == 0);
    const json jc = read_json(disc.dir / "summary.json");
    CHECK(jc["cegm"]["equality"] == true);
    CHECK(jc["cegm"]["weighted"] == 1.6);
    CHECK(jc["cegm"]["mass"] == 1.6);

    // pmf from a file
    Scratch pf;
    fs::create_directories(pf.dir);
    std::ofstream(pf.dir / "mu.csv") << "value,prob\n0,0.8\n2,0.2\n";
    REQUIRE(cli({"simulate", "--kind", "discrete", "--pmf-file", (pf.dir / "mu.csv").string(), "--replicas", "0"},
                pf.dir / "out")
                .code == 0);
    CHECK(read_json(pf.dir / "out" / "summary.json")["cegm"]["equality"] == true);

    Scratch big;
    CHECK(cli({"simulate", "--kind", "discrete", "--pmf", "0:0.8,2:0.2", "--height", "30", "--replicas", "10"}, big.dir)
              .code == 4);
    CHECK(cli({"simulate", "--kind", "nope"}, big.dir).code == 2);
    CHECK(cli({"simulate", "--kind", "discrete", "--pmf", "0:0.5,1:0.2"}, big.dir).code == 2);
}

TEST_CASE("redtree command") {
    Scratch s;
    REQUIRE(cli({"redtree", "--t", "30", "--replicas", "4000", "--svg"}, s.dir).code == 0);
    const json j = read_json(s.dir / "summary.json");
    CHECK(j.contains("gammas"));
    CHECK(j["N"]["mean"].get<double>() ==
          Approx(j["N"]["linearized"].get<double>()).margin(4 * j["N"]["se"].get<double>()));
    CHECK(read_csv(s.dir / "replicas.csv")[0] == std::vector<std::string>{"replica", "N", "M", "first_branch_time"});
    CHECK(read_csv(s.dir / "replicas.csv").size() == 4001);
    CHECK(fs::exists(s.dir / "tree.svg"));

    // rho = 0 (lambda = 0): the tree never branches
    Scratch z;
    REQUIRE(cli({"redtree", "--p", "0.5", "--lambda", "0", "--t", "5", "--replicas", "10", "--svg"}, z.dir).code == 0);
    const std::string svg = slurp(z.dir / "tree.svg");
    std::size_t lines = 0;
    for (auto pos = svg.find("<line"); pos != std::string::npos; pos = svg.find("<line", pos + 1)) ++lines;
    CHECK(lines == 1);
}

TEST_CASE("fig-5 style render at t = 200") {
    Scratch s;
    REQUIRE(cli({"redtree", "--t", "200", "--replicas", "500", "--svg"}, s.dir).code == 0);
    // E N_t / t^2 = gamma1 (1 + O(1/t)); the correction is about 5% here
    const json j = read_json(s.dir / "summary.json");
    CHECK(j["N_over_t2_mean"].get<double>() == Approx(j["gammas"]["gamma1"].get<double>()).epsilon(0.12));
    const std::string svg = slurp(s.dir / "tree.svg");
    CHECK(svg.size() > 1000);
    CHECK(svg.rfind("</svg>") != std::string::npos);
}

TEST_CASE("manifest and reproducibility") {
    Scratch a, b;
    const std::vector<std::string> args{"--seed", "42", "simulate", "--kind", "paint", "--p", "0.2", "--lambda", "1.5",
                                        "--t", "2", "--replicas", "500", "--samples"};
    REQUIRE(cli(args, a.dir).code == 0);
    REQUIRE(cli(args, b.dir).code == 0);
    const RunManifest ma = read_manifest(a.dir), mb = read_manifest(b.dir);
    CHECK(ma.checksums == mb.checksums);
    CHECK(ma.checksums.count("samples.csv") == 1);
    CHECK(slurp(a.dir / "samples.csv") == slurp(b.dir / "samples.csv"));
    CHECK(ma.generator == Rng::generator_id);
    CHECK(ma.config.seed == 42);
    CHECK(ma.config.subcommand == "simulate");
    CHECK(ma.version == library_version);
    for (const auto& [file, sum] : ma.checksums) CHECK(sha256_hex(slurp(a.dir / file)) == sum);

    // a different seed changes the samples, worker count does not
    Scratch c, w;
    auto other = args;
    other[1] = "43";
    REQUIRE(cli(other, c.dir).code == 0);
    CHECK(read_manifest(c.dir).checksums.at("samples.csv") != ma.checksums.at("samples.csv"));
    auto workers = args;
    workers.insert(workers.begin(), {"--workers", "3"});
    REQUIRE(cli(workers, w.dir).code == 0);
    CHECK(read_manifest(w.dir).checksums == ma.checksums);

    // the manifest's argv re-runs the experiment
    Scratch r;
    auto argv = ma.config.argv;
    argv.erase(argv.begin());
    REQUIRE(cli(argv, r.dir).code == 0);
    CHECK(read_manifest(r.dir).checksums == ma.checksums);
}

TEST_CASE("toml config, flags win") {
    Scratch s;
    fs::create_directories(s.dir);
    std::ofstream(s.dir / "run.toml") << "seed = 5\n[trajectory]\np = 0.3\nlambda = 2.2\nt-max = 7\n";
    REQUIRE(cli({"--config", (s.dir / "run.toml").string(), "trajectory", "--t-max", "9"}, s.dir / "o").code == 0);
    const RunManifest m = read_manifest(s.dir / "o");
    CHECK(m.config.seed == 5);
    CHECK(m.config.params["p"] == 0.3);
    CHECK(m.config.params["lambda"] == 2.2);
    CHECK(m.config.params["t-max"] == 9.0);
}

TEST_CASE("default output directory from the environment") {
    Scratch s;
    ::setenv(out_dir_env, s.dir.string().c_str(), 1);
    const auto r = cli({"phase", "--lambda-steps", "2", "--p-steps", "2"});
    ::unsetenv(out_dir_env);
    REQUIRE(r.code == 0);
    CHECK(fs::exists(s.dir / "phase.csv"));
    CHECK(fs::exists(s.dir / "manifest.json"));
}

TEST_CASE("validate command") {
    Scratch s;
    auto r = cli({"validate", "--suite", "ode"}, s.dir);
    CHECK(r.code == 0);
    const json j = read_json(s.dir / "validation.json");
    CHECK(j["pass"] == true);
    CHECK(j["criteria"].size() == 2);

    CHECK(cli({"validate", "--suite", "bogus"}, s.dir).code == 2);

    Scratch f;
    const auto t0 = std::chrono::steady_clock::now();
    r = cli({"validate", "--suite", "redtree", "--fast"}, f.dir);
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(sec < 300.0);
    CHECK(read_json(f.dir / "validation.json")["criteria"].size() == 4);
    CHECK((r.code == 0 || r.code == 1));
}

TEST_CASE("suite selection") {
    CHECK(suite_criteria("all").size() == 15);
    CHECK(suite_criteria("properties") == std::vector<int>{15});
    CHECK_THROWS_AS(suite_criteria("x"), UsageError);
    CHECK_THROWS_AS(run_properties("x", {}), UsageError);
}

TEST_CASE("cli properties at reduced case count") {
    PropertyOptions o;
    o.cases = 12;
    for (const auto& p : run_properties("cli", o)) {
        INFO(p.name << " " << p.to_json().dump());
        CHECK(p.pass);
        CHECK(p.failures == 0);
    }
}
