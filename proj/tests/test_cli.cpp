#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bucketops/exact.hpp"
#include "bucketops/io.hpp"
#include "bucketops/model.hpp"
#include "bucketops/montecarlo.hpp"

// End-to-end tests drive the installed binary through a shell, the same way a
// user would, and only inspect files and exit codes.

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = BUCKETOPS_CLI_PATH;
const std::string kModelDir = BUCKETOPS_MODEL_DIR;

fs::path scratch_dir() {
    const fs::path dir = fs::temp_directory_path() / "bucketops_cli_tests";
    fs::create_directories(dir);
    return dir;
}

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

RunResult run(const std::string& args) {
    static int call_id = 0;
    const fs::path dir = scratch_dir();
    const fs::path out = dir / ("stdout." + std::to_string(call_id));
    const fs::path err = dir / ("stderr." + std::to_string(call_id));
    ++call_id;
    const std::string cmd =
        "\"" + kCli + "\" " + args + " > \"" + out.string() + "\" 2> \"" + err.string() + "\"";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

std::string reference_model() { return kModelDir + std::string("/reference.json"); }

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

}  // namespace

TEST_CASE("constants subcommand emits the reference constants", "[cli]") {
    const auto r = run("constants --model " + reference_model());
    REQUIRE(r.exit_code == 0);
    const json doc = json::parse(r.out);
    CHECK(std::fabs(doc["pi0"].get<double>() - 4.0 / 7.0) < 1e-14);
    CHECK(std::fabs(doc["pi1"].get<double>() - 3.0 / 7.0) < 1e-14);
    CHECK(std::fabs(doc["H"].get<double>() - 0.637498887035334737) < 1e-12);
    CHECK(std::fabs(doc["sigma2"].get<double>() - 0.445667895785208182) < 1e-12);
    // With no --out, the manifest goes to stderr and still parses.
    const json manifest = json::parse(r.err);
    CHECK(manifest["command"] == "constants");
    CHECK(manifest.contains("tool_version"));
}

TEST_CASE("version and help exit zero, a bare invocation does not", "[cli]") {
    CHECK(run("--version").exit_code == 0);
    CHECK(run("--help").exit_code == 0);
    CHECK(run("").exit_code == 2);
    CHECK(run("no-such-command").exit_code == 2);
}

TEST_CASE("model validation failures exit 2 with the error name", "[cli]") {
    const fs::path dir = scratch_dir();

    const fs::path symmetric = dir / "symmetric.json";
    std::ofstream(symmetric) << R"({"transition": [[0.5, 0.5], [0.5, 0.5]],)"
                             << R"( "initial": [0.5, 0.5]})";
    auto r = run("constants --model " + symmetric.string());
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("SymmetricSource") != std::string::npos);

    r = run("constants --model " + (dir / "absent.json").string());
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("FileNotFound") != std::string::npos);

    const fs::path mangled = dir / "mangled.json";
    std::ofstream(mangled) << "{ not json";
    r = run("constants --model " + mangled.string());
    CHECK(r.exit_code == 2);
}

TEST_CASE("exact subcommand round-trips the moment table through CSV", "[cli]") {
    const fs::path dir = scratch_dir();
    const fs::path csv = dir / "exact.csv";
    const auto r = run("exact --model " + reference_model() + " --nmax 64 --out " + csv.string());
    REQUIRE(r.exit_code == 0);

    const auto rows = parse_csv(slurp(csv));
    REQUIRE(rows.size() == 66);  // header + n = 0..64
    CHECK(rows[0][0] == "n");
    CHECK(rows[1][0] == "0");
    CHECK(rows[65][0] == "64");

    auto m = bucketops::validate(bucketops::load_model(reference_model()));
    const auto table = bucketops::moment_table(m, bucketops::constants(m), 64);
    const std::size_t mean0_col = 1;
    CHECK(std::fabs(std::stod(rows[65][mean0_col]) - table.mean0[64]) <
          1e-12 * table.mean0[64]);

    const json manifest = json::parse(slurp(dir / "exact.csv.manifest.json"));
    CHECK(manifest["command"] == "exact");
    REQUIRE(manifest.contains("outputs"));
    bool lists_csv = false;
    for (const auto& o : manifest["outputs"]) {
        if (o.get<std::string>().find("exact.csv") != std::string::npos) lists_csv = true;
    }
    CHECK(lists_csv);
}

TEST_CASE("split subcommand writes one row per n", "[cli]") {
    const fs::path dir = scratch_dir();
    const fs::path csv = dir / "split.csv";
    const auto r = run("split --model " + reference_model() + " --nmax 32 --out " + csv.string());
    REQUIRE(r.exit_code == 0);
    const auto rows = parse_csv(slurp(csv));
    REQUIRE(rows.size() == 34);  // header + n = 0..32
    CHECK(rows[0][0] == "n");
    // eta1 + eta2 = n for n >= 2 (tolls vanish below), re-read from the
    // printed digits.
    const std::size_t eta1_col = 1, eta2_col = 2;
    for (std::size_t i = 3; i < rows.size(); ++i) {
        const double n = std::stod(rows[i][0]);
        const double sum = std::stod(rows[i][eta1_col]) + std::stod(rows[i][eta2_col]);
        CHECK(std::fabs(sum - n) < 1e-9 * n);
    }
}

TEST_CASE("simulate subcommand reproduces the library samples", "[cli]") {
    const fs::path dir = scratch_dir();
    const fs::path csv = dir / "sim.csv";
    const auto r = run("simulate --model " + reference_model() +
                       " --n 32 --reps 50 --seed 7 --out " + csv.string());
    REQUIRE(r.exit_code == 0);

    const auto rows = parse_csv(slurp(csv));
    REQUIRE(rows.size() == 51);  // header + one row per replicate

    bucketops::SimulationConfig cfg;
    cfg.model = bucketops::validate(bucketops::load_model(reference_model()));
    cfg.n = 32;
    cfg.reps = 50;
    cfg.master_seed = 7;
    const auto expected = bucketops::simulate(cfg);
    for (std::size_t i = 0; i < 50; ++i) {
        CHECK(std::stoull(rows[i + 1][1]) == expected.samples[i]);
    }

    const json summary = json::parse(slurp(dir / "sim.csv.summary.json"));
    CHECK(summary["reps"] == 50);
    CHECK(std::fabs(summary["mean"].get<double>() - expected.mean) < 1e-9);
}

TEST_CASE("quick verify passes on the reference model and is byte-stable", "[cli]") {
    const fs::path dir = scratch_dir();
    const fs::path a = dir / "verify_a.json";
    const fs::path b = dir / "verify_b.json";
    auto r = run("verify --model " + reference_model() + " --level quick --out " + a.string());
    REQUIRE(r.exit_code == 0);
    r = run("verify --model " + reference_model() + " --level quick --workers 3 --out " +
            b.string());
    REQUIRE(r.exit_code == 0);

    const json report = json::parse(slurp(a));
    CHECK(report["level"] == "quick");
    CHECK(report["all_pass"] == true);
    REQUIRE(report["checks"].is_array());
    CHECK(report["checks"].size() == 10);
    for (const auto& c : report["checks"]) {
        CHECK(c["pass"] == true);
        CHECK(c["name"].is_string());
        CHECK(c["detail"].is_string());
    }
    // Reports carry no timing or host state, so reruns are byte-identical.
    CHECK(slurp(a) == slurp(b));
}
