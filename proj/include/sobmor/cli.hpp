#ifndef SOBMOR_CLI_HPP
#define SOBMOR_CLI_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "sobmor/benchmarks.hpp"
#include "sobmor/reduce.hpp"

namespace sobmor {

/// Parsed command-line run description shared by the subcommands.
struct RunConfig {
    std::string subcommand; // reduce | compare | sample

    // model source: exactly one of builtin or manifest
    std::string builtin;    // "msd" | "triple-chain" | empty
    Index cells = 50;       // msd size (n_x = 2*cells)
    Index n0 = 100;         // triple-chain size (n_x = 3*n0+1)
    MsdParams msd;
    TripleChainParams chain;
    std::filesystem::path manifest;

    std::string method = "sobmor";    // reduce
    std::vector<std::string> methods; // compare
    Index r = 8;
    Index r_min = 0, r_max = 0, r_step = 1; // compare sweep (0 = single r)
    std::string structure;            // ph | sso-full | sso-diagm; default from model
    bool has_grid = false;
    GridSpec grid;                    // filled from flags or per-structure default
    std::string gamma_mode = "fixed";
    double gamma_max = 1e-1, gamma_min = 1e-14;
    int gamma_count = 300;
    double epsilon = 1e-14;
    double gamma_upper = 1e-1, bisect_tol = 1e-3, term_tol = 1e-14;
    std::string init = "greedy";
    unsigned seed = 0;
    std::filesystem::path out_dir = ".";
    std::filesystem::path sample_out; // sample subcommand target file
};

int cmd_reduce(const RunConfig& config);
int cmd_compare(const RunConfig& config);
int cmd_sample(const RunConfig& config);

/// Parses argv and dispatches. Exit codes: 0 success, 1 usage error,
/// 2 numerical failure.
int run_cli(int argc, const char* const* argv);

} // namespace sobmor

#endif
