#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "sobmor/benchmarks.hpp"
#include "sobmor/cli.hpp"

using namespace sobmor;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
    std::vector<const char*> argv{"sobmor"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("reduce smoke test produces the three artifacts") {
    TempDir dir("sobmor_cli_reduce");
    const int rc = run({"reduce", "--model", "msd", "--cells", "6", "--method", "sobmor",
                        "--r", "4", "--grid-lo", "1e-2", "--grid-hi", "10", "--grid-count",
                        "40", "--gamma-count", "40", "--gamma-min", "1e-8", "--out",
                        dir.path.string()});
    CHECK(rc == 0);
    CHECK(fs::exists(dir.path / "rom.manifest"));
    CHECK(fs::exists(dir.path / "error_curve.csv"));
    CHECK(fs::exists(dir.path / "report.txt"));
    // ROM passes the structural invariant suite after reload
    const AnyModel rom = load_model_manifest(dir.path / "rom.manifest");
    REQUIRE(std::holds_alternative<PHModel>(rom));
    CHECK_NOTHROW(std::get<PHModel>(rom).check_structure());
}

TEST_CASE("structure mismatch is a usage error") {
    TempDir dir("sobmor_cli_mismatch");
    const int rc = run({"reduce", "--model", "triple-chain", "--n0", "3", "--method",
                        "ph-bt", "--r", "2", "--out", dir.path.string()});
    CHECK(rc == 1);
}

TEST_CASE("unknown method and missing model source are usage errors") {
    TempDir dir("sobmor_cli_bad");
    CHECK(run({"reduce", "--model", "msd", "--cells", "4", "--method", "nope", "--r", "2",
               "--out", dir.path.string()}) == 1);
    CHECK(run({"reduce", "--method", "bt", "--r", "2", "--out", dir.path.string()}) == 1);
}

TEST_CASE("identical config and seed give byte-identical CSVs") {
    TempDir a("sobmor_cli_det_a");
    TempDir b("sobmor_cli_det_b");
    const std::vector<std::string> common{
        "reduce", "--model", "msd",     "--cells",      "5",    "--method", "sobmor",
        "--r",    "4",       "--init",  "random",       "--seed", "42",     "--grid-lo",
        "1e-2",   "--grid-hi", "10",    "--grid-count", "30",   "--gamma-count", "25",
        "--gamma-min", "1e-6"};
    auto run_in = [&](const fs::path& out) {
        auto args = common;
        args.push_back("--out");
        args.push_back(out.string());
        return run(args);
    };
    REQUIRE(run_in(a.path) == 0);
    REQUIRE(run_in(b.path) == 0);
    CHECK(slurp(a.path / "error_curve.csv") == slurp(b.path / "error_curve.csv"));
}

TEST_CASE("compare produces one row per (r, method)") {
    TempDir dir("sobmor_cli_compare");
    const int rc = run({"compare", "--model", "msd", "--cells", "5", "--methods",
                        "ph-bt,ph-irka", "--r-min", "2", "--r-max", "4", "--r-step", "2",
                        "--grid-lo", "1e-2", "--grid-hi", "10", "--grid-count", "30",
                        "--out", dir.path.string()});
    CHECK(rc == 0);
    const std::string csv = slurp(dir.path / "compare.csv");
    CHECK(csv.find("r,method,hinf_estimate,h2_error,runtime_seconds") == 0);
    int rows = 0;
    for (char c : csv) rows += (c == '\n');
    CHECK(rows == 1 + 2 * 2); // header + (r in {2,4}) x (2 methods)
}

TEST_CASE("sample writes a cache and reuses it with zero solves") {
    TempDir dir("sobmor_cli_sample");
    const fs::path file = dir.path / "samples.txt";
    const std::vector<std::string> args{"sample",      "--model",      "msd",
                                        "--cells",     "4",            "--grid-lo",
                                        "1e-2",        "--grid-hi",    "10",
                                        "--grid-count", "20",          "--samples-out",
                                        file.string()};
    REQUIRE(run(args) == 0);
    REQUIRE(fs::exists(file));
    const FrequencySampleSet cached = load_sample_set(file);
    CHECK(cached.size() == 21); // 20 log points + omega = 0

    reset_solve_count();
    REQUIRE(run(args) == 0); // second run reuses the file
    CHECK(solve_count() == 0);

    // malformed cache is regenerated, not fatal
    std::ofstream out(file);
    out << "garbage\n";
    out.close();
    REQUIRE(run(args) == 0);
    CHECK(load_sample_set(file).size() == 21);
}

TEST_CASE("config file values are overridden by flags") {
    TempDir dir("sobmor_cli_config");
    const fs::path cfg = dir.path / "run.cfg";
    {
        std::ofstream out(cfg);
        out << "model = msd\n";
        out << "cells = 4\n";
        out << "method = ph-bt\n";
        out << "r = 2\n";
        out << "grid-lo = 1e-2\n";
        out << "grid-hi = 10\n";
        out << "grid-count = 25\n";
        out << "out = " << dir.path.string() << "\n";
    }
    // config alone runs ph-bt
    CHECK(run({"reduce", "--config", cfg.string()}) == 0);
    // flag overrides the method in the config
    CHECK(run({"reduce", "--config", cfg.string(), "--method", "ph-irka"}) == 0);
    const std::string report = slurp(dir.path / "report.txt");
    CHECK(report.find("structure ph") != std::string::npos);
}

TEST_CASE("manifest input round-trips through reduce") {
    TempDir dir("sobmor_cli_manifest");
    save_model_manifest(dir.path / "fom.manifest", AnyModel(msd_ph_chain(4)));
    const int rc = run({"reduce", "--manifest", (dir.path / "fom.manifest").string(),
                        "--method", "ph-bt", "--r", "3", "--grid-lo", "1e-2", "--grid-hi",
                        "10", "--grid-count", "25", "--out", dir.path.string()});
    CHECK(rc == 0);
}
