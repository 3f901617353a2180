#include <doctest.h>

#include <elslab/experiment.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "support.hpp"

using namespace elslab;
namespace fs = std::filesystem;
using testutil::close_abs;
using testutil::close_rel;

namespace {

fs::path scratch_root() {
    static const fs::path root = [] {
        auto p = fs::temp_directory_path() / "elslab-test-scratch";
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return root;
}

fs::path scratch(const std::string& leaf) {
    const auto p = scratch_root() / leaf;
    fs::create_directories(p);
    return p;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream f(p);
    f << text;
}

std::string read_file(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

const lab::CheckLine* find_check(const lab::ExperimentResult& res,
                                 const std::string& name) {
    for (const auto& c : res.checks)
        if (c.name == name) return &c;
    return nullptr;
}

}  // namespace

TEST_CASE("config files parse with lifted globals and comments") {
    const auto dir = scratch("cfg");
    const auto path = dir / "demo.cfg";
    write_file(path,
               "# experiment description\n"
               "kind = ko-check   # trailing comment\n"
               "nl = power:p=2\n"
               "lower = 1\n"
               "tol_scale = 2\n"
               "rmax = 50\n"
               "out_dir = /tmp/somewhere\n");
    const auto cfg = lab::parse_config_file(path.string());
    CHECK(cfg.kind == "ko-check");
    CHECK(cfg.name == "demo");  // defaults to the file stem
    CHECK(cfg.out_dir == "/tmp/somewhere");
    CHECK(cfg.tol_scale == 2.0);
    CHECK(cfg.rmax == 50.0);
    CHECK(cfg.kv.at("nl") == "power:p=2");
    CHECK(cfg.kv.at("lower") == "1");
    CHECK(cfg.kv.count("tol_scale") == 0);

    write_file(dir / "bad.cfg", "nl = power:p=2\n");
    CHECK_THROWS(lab::parse_config_file((dir / "bad.cfg").string()));
    CHECK_THROWS(lab::parse_config_file((dir / "absent.cfg").string()));

    // Directory listing picks up .cfg files only, in ascending order.
    write_file(dir / "a.cfg", "kind = ko-check\n");
    write_file(dir / "notes.txt", "not a config\n");
    const auto files = lab::list_config_files(dir.string());
    REQUIRE(files.size() >= 3);
    CHECK(fs::path(files.front()).filename() == "a.cfg");
    for (std::size_t i = 1; i < files.size(); ++i)
        CHECK(files[i - 1] < files[i]);
    for (const auto& f : files) CHECK(fs::path(f).extension() == ".cfg");
}

TEST_CASE("experiments report checks, artifacts, and machine summaries") {
    lab::ExperimentConfig cfg;
    cfg.kind = "ko-check";
    cfg.kv["nl"] = "power:p=2";
    cfg.kv["lower"] = "1";
    cfg.out_dir = scratch("ko").string();

    const auto res = lab::run_experiment(cfg);
    CHECK(res.exit_code == 0);
    REQUIRE(res.checks.size() == 1);
    const auto* line = find_check(res, "superlinearity-integral");
    REQUIRE(line != nullptr);
    CHECK(line->pass);
    CHECK(close_abs(line->margin, 2.0 * std::sqrt(3.0), 1e-8));

    REQUIRE(!res.artifacts.empty());
    for (const auto& a : res.artifacts) CHECK(fs::exists(a));

    for (const char* key :
         {"\"experiment\"", "\"theorem_ref\"", "\"pass\"", "\"margin\"",
          "\"tolerance\""}) {
        CAPTURE(key);
        CHECK(res.summary_json.find(key) != std::string::npos);
    }
}

TEST_CASE("identical configurations produce byte-identical artifacts") {
    lab::ExperimentConfig cfg;
    cfg.kind = "shoot";
    cfg.kv["nl"] = "power:p=2";
    cfg.kv["pot"] = "model:alpha=4";
    cfg.kv["u0"] = "6";
    cfg.kv["du0"] = "12";
    cfg.rmax = 20.0;

    cfg.out_dir = scratch("det1").string();
    const auto r1 = lab::run_experiment(cfg);
    cfg.out_dir = scratch("det2").string();
    const auto r2 = lab::run_experiment(cfg);
    REQUIRE(r1.exit_code == 0);
    REQUIRE(r2.exit_code == 0);

    fs::path csv1, csv2;
    for (const auto& a : r1.artifacts)
        if (fs::path(a).extension() == ".csv") csv1 = a;
    for (const auto& a : r2.artifacts)
        if (fs::path(a).extension() == ".csv") csv2 = a;
    REQUIRE(!csv1.empty());
    REQUIRE(!csv2.empty());

    const auto text1 = read_file(csv1);
    CHECK(text1 == read_file(csv2));
    CHECK(text1.rfind("r,u,du", 0) == 0);  // header row comes first
}

TEST_CASE("stored trajectories resume through the CSV round trip") {
    lab::ExperimentConfig cfg;
    cfg.kind = "shoot";
    cfg.kv["nl"] = "power:p=2";
    cfg.kv["pot"] = "model:alpha=4";
    cfg.kv["u0"] = "6";
    cfg.kv["du0"] = "12";
    cfg.rmax = 20.0;
    cfg.out_dir = scratch("resume").string();
    const auto res = lab::run_experiment(cfg);
    REQUIRE(res.exit_code == 0);

    fs::path csv;
    for (const auto& a : res.artifacts)
        if (fs::path(a).extension() == ".csv") csv = a;
    REQUIRE(!csv.empty());

    const auto nl = nonlin::make_nonlinearity("power:p=2");
    const auto pot = pot::make_potential("model:alpha=4", 3);
    const auto sol = lab::load_solution_csv(csv.string(), 3, &nl, &pot);
    CHECK(sol.classification == shoot::Classification::EntireLarge);
    REQUIRE(sol.r_grid.size() > 10);
    CHECK(close_rel(shoot::eval_u(sol, 10.0), 600.0, 1e-6));
}

TEST_CASE("failure modes map to distinct exit codes") {
    // Validation failures: malformed parameters or unknown kinds.
    lab::ExperimentConfig bad;
    bad.kind = "els-find";
    bad.kv["nl"] = "power:p=2";
    bad.kv["pot"] = "model:alpha=2";
    bad.kv["u1"] = "6";
    bad.out_dir = scratch("codes").string();
    auto res = lab::run_experiment(bad);
    CHECK(res.exit_code == 2);
    CHECK(!res.error.empty());

    lab::ExperimentConfig unknown;
    unknown.kind = "no-such-kind";
    unknown.out_dir = scratch("codes").string();
    CHECK(lab::run_experiment(unknown).exit_code == 2);

    // Prepare a stored trajectory for the chained checks below.
    lab::ExperimentConfig mk;
    mk.kind = "shoot";
    mk.kv["nl"] = "power:p=2";
    mk.kv["pot"] = "model:alpha=4";
    mk.kv["u0"] = "6";
    mk.kv["du0"] = "12";
    mk.rmax = 50.0;
    mk.out_dir = scratch("codes").string();
    const auto made = lab::run_experiment(mk);
    REQUIRE(made.exit_code == 0);
    std::string csv;
    for (const auto& a : made.artifacts)
        if (fs::path(a).extension() == ".csv") csv = a;
    REQUIRE(!csv.empty());

    // Numerical/hypothesis failure: the energy gate rejects this tail.
    lab::ExperimentConfig gate;
    gate.kind = "bounds:energy";
    gate.kv["nl"] = "power:p=2";
    gate.kv["pot"] = "model:alpha=5";
    gate.kv["in"] = csv;
    gate.out_dir = scratch("codes").string();
    res = lab::run_experiment(gate);
    CHECK(res.exit_code == 3);
    CHECK(!res.error.empty());

    // A failed verdict: on the steep tail the admissible ceiling prefactor
    // tops out near 0.496, so 0.9 parses fine but loses pointwise.
    lab::ExperimentConfig mk10;
    mk10.kind = "shoot";
    mk10.kv["nl"] = "power:p=2";
    mk10.kv["pot"] = "model:alpha=10";
    mk10.kv["u0"] = "72";
    mk10.kv["du0"] = "576";
    mk10.rmax = 15.0;
    mk10.out_dir = scratch("codes10").string();
    const auto made10 = lab::run_experiment(mk10);
    REQUIRE(made10.exit_code == 0);
    std::string csv10;
    for (const auto& a : made10.artifacts)
        if (fs::path(a).extension() == ".csv") csv10 = a;
    REQUIRE(!csv10.empty());

    lab::ExperimentConfig fail;
    fail.kind = "bounds:gamma";
    fail.kv["nl"] = "power:p=2";
    fail.kv["pot"] = "model:alpha=10";
    fail.kv["in"] = csv10;
    fail.kv["c"] = "0.9";
    fail.out_dir = scratch("codes10").string();
    res = lab::run_experiment(fail);
    CHECK(res.exit_code == 4);
    REQUIRE(!res.checks.empty());
    CHECK_FALSE(res.checks.front().pass);
}

TEST_CASE("CSV serialization is stable through parse round trips") {
    const auto dir = scratch("csv");
    const auto path = (dir / "round.csv").string();
    const std::vector<double> xs = {1.0 / 3.0, 6.67531487798344,
                                    1.2345678901234567e-8};
    const std::vector<double> ys = {2.0, -1.0, 0.5};
    lab::write_csv(path, {"x", "y"}, {&xs, &ys});

    std::ifstream f(path);
    std::string line;
    std::getline(f, line);
    CHECK(line == "x,y");
    for (std::size_t i = 0; i < xs.size(); ++i) {
        REQUIRE(std::getline(f, line));
        const auto comma = line.find(',');
        REQUIRE(comma != std::string::npos);
        CHECK(std::stod(line.substr(0, comma)) == xs[i]);
        CHECK(std::stod(line.substr(comma + 1)) == ys[i]);
    }
}

TEST_CASE("curvature sweep experiment crosses the criterion boundary") {
    lab::ExperimentConfig cfg;
    cfg.kind = "ellipsoid-sweep";
    cfg.kv["a"] = "0.9";
    cfg.kv["alpha_lo"] = "2.5";
    cfg.kv["alpha_hi"] = "4.5";
    cfg.kv["steps"] = "20";
    cfg.kv["D"] = "4";
    cfg.out_dir = scratch("sweep").string();
    const auto res = lab::run_experiment(cfg);
    CHECK(res.exit_code == 0);
    const auto* line = find_check(res, "curvature-criterion");
    REQUIRE(line != nullptr);
    CHECK(line->pass);
}
