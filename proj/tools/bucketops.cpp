// Command-line front end: constants, exact, split, simulate, verify.
//
// Machine artifacts (CSV, JSON report) go to --out when given, else to
// stdout. Companion artifacts (run manifest, simulate summary) go to
// sibling files next to --out, or to stderr when writing to stdout, so the
// primary stream stays parseable. Exit codes: 0 success, 1 verification
// failure, 2 usage or validation error.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bucketops/error.hpp"
#include "bucketops/exact.hpp"
#include "bucketops/io.hpp"
#include "bucketops/model.hpp"
#include "bucketops/montecarlo.hpp"
#include "bucketops/splitting.hpp"
#include "bucketops/verify.hpp"
#include "bucketops/version.hpp"

namespace {

using nlohmann::json;

struct CommonArgs {
    std::string model_path;
    std::string out;  // empty means stdout
};

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw bucketops::Error("FileWriteError", "cannot open for writing: " + path);
    f << content;
    if (!f) throw bucketops::Error("FileWriteError", "short write: " + path);
}

// Emits the primary artifact and the manifest per the routing rule above.
void emit(const CommonArgs& args, const std::string& artifact, json manifest,
          std::vector<std::string> extra_outputs = {}) {
    if (args.out.empty()) {
        std::cout << artifact;
        manifest["outputs"] = json::array();
        std::cerr << manifest.dump() << "\n";
    } else {
        std::vector<std::string> outputs{args.out};
        for (auto& o : extra_outputs) outputs.push_back(o);
        write_text_file(args.out, artifact);
        manifest["outputs"] = outputs;
        write_text_file(args.out + ".manifest.json", manifest.dump(2) + "\n");
    }
}

json base_manifest(const std::string& command, const CommonArgs& args,
                   std::uint64_t master_seed, double seconds) {
    return json{
        {"command", command},
        {"model", args.model_path},
        {"master_seed", master_seed},
        {"tool_version", bucketops::kVersion},
        {"duration_seconds", seconds},
    };
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

bucketops::MarkovModel load_validated(const std::string& path) {
    return bucketops::validate(bucketops::load_model(path));
}

int cmd_constants(const CommonArgs& args) {
    Stopwatch sw;
    const auto model = load_validated(args.model_path);
    const auto c = bucketops::constants(model);
    const json out{
        {"pi0", c.pi0}, {"pi1", c.pi1},           {"h0", c.h0},
        {"h1", c.h1},   {"H", c.entropy_rate},    {"sigma2", c.sigma2},
    };
    auto manifest = base_manifest("constants", args, 0, sw.seconds());
    manifest["parameters"] = json::object();
    emit(args, out.dump(2) + "\n", std::move(manifest));
    return 0;
}

int cmd_exact(const CommonArgs& args, std::size_t nmax) {
    Stopwatch sw;
    const auto model = load_validated(args.model_path);
    const auto c = bucketops::constants(model);
    const auto table = bucketops::moment_table(model, c, nmax);
    std::ostringstream csv;
    bucketops::write_exact_csv(csv, table, c);
    auto manifest = base_manifest("exact", args, 0, sw.seconds());
    manifest["parameters"] = json{{"nmax", nmax}};
    emit(args, csv.str(), std::move(manifest));
    return 0;
}

int cmd_split(const CommonArgs& args, std::size_t nmax) {
    Stopwatch sw;
    const auto model = load_validated(args.model_path);
    const auto c = bucketops::constants(model);
    const auto tolls = bucketops::toll_terms(model, c, nmax);
    const auto split = bucketops::split_moment_table(model, c, nmax);
    const auto table = bucketops::moment_table(model, c, nmax);
    std::ostringstream csv;
    bucketops::write_split_csv(csv, tolls, split, table);
    auto manifest = base_manifest("split", args, 0, sw.seconds());
    manifest["parameters"] = json{{"nmax", nmax}};
    emit(args, csv.str(), std::move(manifest));
    return 0;
}

int cmd_simulate(const CommonArgs& args, std::size_t n, std::size_t reps,
                 std::uint64_t seed, unsigned workers) {
    Stopwatch sw;
    const auto model = load_validated(args.model_path);
    bucketops::SimulationConfig cfg;
    cfg.model = model;
    cfg.n = n;
    cfg.reps = reps;
    cfg.master_seed = seed;
    cfg.workers = workers;
    const auto summary = bucketops::simulate(cfg, std::nullopt);
    std::ostringstream csv;
    bucketops::write_simulate_csv(csv, summary.samples);
    const json report = bucketops::summary_json(summary, n, reps);
    auto manifest = base_manifest("simulate", args, seed, sw.seconds());
    manifest["parameters"] = json{{"n", n}, {"reps", reps}, {"workers", workers}};
    if (args.out.empty()) {
        std::cerr << report.dump() << "\n";
        emit(args, csv.str(), std::move(manifest));
    } else {
        write_text_file(args.out + ".summary.json", report.dump(2) + "\n");
        emit(args, csv.str(), std::move(manifest), {args.out + ".summary.json"});
    }
    return 0;
}

int cmd_verify(const CommonArgs& args, const std::string& level, std::uint64_t seed,
               unsigned workers) {
    Stopwatch sw;
    const auto model = load_validated(args.model_path);
    bucketops::VerifyOptions opts;
    opts.level = level == "quick" ? bucketops::VerifyLevel::quick : bucketops::VerifyLevel::full;
    opts.master_seed = seed;
    opts.workers = workers;
    const auto report = bucketops::run_verify(model, opts);
    const std::string report_text = bucketops::report_json(report).dump(2) + "\n";

    std::ostream& table = args.out.empty() ? std::cerr : std::cout;
    std::size_t passed = 0;
    for (std::size_t i = 0; i < report.checks.size(); ++i) {
        const auto& c = report.checks[i];
        if (c.pass) ++passed;
        char buf[32];
        std::snprintf(buf, sizeof buf, "%7.2fs", report.check_seconds[i]);
        table << (c.pass ? "PASS" : "FAIL") << "  " << c.name << buf << "\n";
        if (!c.detail.empty()) table << "      " << c.detail << "\n";
    }
    table << (report.all_pass ? "overall: PASS (" : "overall: FAIL (") << passed << "/"
          << report.checks.size() << " checks)\n";

    auto manifest = base_manifest("verify", args, seed, sw.seconds());
    manifest["parameters"] = json{{"level", report.level}, {"workers", workers}};
    emit(args, report_text, std::move(manifest));
    return report.all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Instrumented radix sort over a two-state Markov source: exact moment "
                 "tables, toll splitting, Monte Carlo checks"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(bucketops::kVersion));

    CommonArgs args;
    std::size_t nmax = 8192;
    std::size_t n = 1024;
    std::size_t reps = 1000;
    std::uint64_t seed = 0x5EED;
    unsigned workers = 0;
    std::string level = "full";

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--model", args.model_path, "model JSON path")->required();
        sub->add_option("--out", args.out, "output path (default: stdout)");
    };

    auto* c_constants = app.add_subcommand("constants", "print asymptotic constants as JSON");
    add_common(c_constants);

    auto* c_exact = app.add_subcommand("exact", "exact mean/variance tables as CSV");
    add_common(c_exact);
    c_exact->add_option("--nmax", nmax, "largest table size")->capture_default_str();

    auto* c_split = app.add_subcommand("split", "toll terms and X/Z moment tables as CSV");
    add_common(c_split);
    c_split->add_option("--nmax", nmax, "largest table size")->capture_default_str();

    auto* c_sim = app.add_subcommand("simulate", "Monte Carlo bucket-operation replicates");
    add_common(c_sim);
    c_sim->add_option("--n", n, "keys per replicate")->required();
    c_sim->add_option("--reps", reps, "number of replicates")->capture_default_str();
    c_sim->add_option("--seed", seed, "master seed")->capture_default_str();
    c_sim->add_option("--workers", workers, "worker threads (0 = all cores)")
        ->capture_default_str();

    auto* c_verify = app.add_subcommand("verify", "run the self-check suite");
    add_common(c_verify);
    c_verify->add_option("--level", level, "quick or full")
        ->check(CLI::IsMember({"quick", "full"}))
        ->capture_default_str();
    c_verify->add_option("--seed", seed, "master seed")->capture_default_str();
    c_verify->add_option("--workers", workers, "worker threads (0 = all cores)")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(c_constants)) return cmd_constants(args);
        if (app.got_subcommand(c_exact)) return cmd_exact(args, nmax);
        if (app.got_subcommand(c_split)) return cmd_split(args, nmax);
        if (app.got_subcommand(c_sim)) return cmd_simulate(args, n, reps, seed, workers);
        if (app.got_subcommand(c_verify)) return cmd_verify(args, level, seed, workers);
    } catch (const bucketops::Error& e) {
        std::cerr << "error: " << e.name() << ": " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
