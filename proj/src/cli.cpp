#include "sobmor/cli.hpp"

#include <CLI11.hpp>
#include <memory>
#include <Eigen/SVD>
#include <chrono>
#include <fstream>
#include <iostream>

#include "sobmor/baselines.hpp"
#include "sobmor/benchmarks.hpp"

namespace sobmor {

namespace {

using Clock = std::chrono::steady_clock;

AnyModel build_model(const RunConfig& config) {
    const bool have_builtin = !config.builtin.empty();
    const bool have_manifest = !config.manifest.empty();
    if (have_builtin == have_manifest) {
        throw DimensionError("exactly one model source required (--model or --manifest)");
    }
    if (have_manifest) return load_model_manifest(config.manifest);
    if (config.builtin == "msd") return msd_ph_chain(config.cells, config.msd);
    if (config.builtin == "triple-chain") return triple_chain_sso(config.n0, config.chain);
    throw DimensionError("unknown builtin model '" + config.builtin + "'");
}

Structure default_structure(const AnyModel& model) {
    if (std::holds_alternative<PHModel>(model)) return Structure::ph;
    if (std::holds_alternative<SSOModel>(model)) return Structure::sso_full;
    throw DimensionError("--structure is required for state-space models");
}

GridSpec grid_for(const RunConfig& config, const AnyModel& model) {
    if (config.has_grid) return config.grid;
    if (std::holds_alternative<SSOModel>(model)) return GridSpec::sso_default();
    return GridSpec::ph_default();
}

GammaSchedule schedule_for(const RunConfig& config) {
    if (config.gamma_mode == "bisection") {
        return GammaSchedule::make_bisection(config.gamma_upper, config.bisect_tol,
                                             config.term_tol);
    }
    if (config.gamma_mode != "fixed") {
        throw DimensionError("gamma mode must be 'fixed' or 'bisection'");
    }
    GammaSchedule s;
    s.mode = GammaSchedule::Mode::fixed_sequence;
    if (!(config.gamma_max > config.gamma_min) || !(config.gamma_min > 0.0) ||
        config.gamma_count < 1) {
        throw DimensionError("fixed gamma sequence requires gamma_max > gamma_min > 0");
    }
    s.fixed.resize(static_cast<std::size_t>(config.gamma_count));
    const double lmax = std::log10(config.gamma_max);
    const double lmin = std::log10(config.gamma_min);
    for (int i = 0; i < config.gamma_count; ++i) {
        const double t = config.gamma_count == 1
                             ? 0.0
                             : static_cast<double>(i) / (config.gamma_count - 1);
        s.fixed[static_cast<std::size_t>(i)] = std::pow(10.0, lmax + t * (lmin - lmax));
    }
    s.epsilon = config.epsilon;
    return s;
}

double sigma_max(const ComplexMatrix& E) {
    return Eigen::JacobiSVD<ComplexMatrix>(E).singularValues()(0);
}

StateSpaceModel to_state_space(const AnyModel& model) {
    return std::visit(
        [](const auto& m) -> StateSpaceModel {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, PHModel>) return ph_to_state_space(m);
            else if constexpr (std::is_same_v<T, SSOModel>) return sso_to_first_order_explicit(m);
            else return m;
        },
        model);
}

struct MethodRun {
    AnyModel rom;
    double seconds = 0.0;
    ReductionReport report; // populated for sobmor runs
    bool has_report = false;
};

MethodRun run_method(const std::string& method, const AnyModel& fom, Index r,
                     const RunConfig& config, const AnyModel* fom_for_grid = nullptr) {
    const auto t0 = Clock::now();
    MethodRun run;
    if (method == "sobmor") {
        SobmorOptions opts;
        opts.structure = config.structure.empty()
                             ? default_structure(fom)
                             : structure_from_string(config.structure);
        opts.r = r;
        opts.grid = grid_for(config, fom);
        opts.schedule = schedule_for(config);
        opts.init = init_method_from_string(config.init);
        opts.seed = config.seed;
        opts.error_estimates = false; // computed by the caller on the shared grid
        run.report = sobmor_reduce(fom, opts);
        run.rom = report_model(run.report);
        run.has_report = true;
    } else if (method == "bt") {
        run.rom = balanced_truncation(to_state_space(fom), r).rom;
    } else if (method == "ph-bt") {
        if (!std::holds_alternative<PHModel>(fom)) {
            throw StructureError("ph-bt requires a pH model");
        }
        run.rom = ph_bt(std::get<PHModel>(fom), r);
    } else if (method == "ph-irka") {
        if (!std::holds_alternative<PHModel>(fom)) {
            throw StructureError("ph-irka requires a pH model");
        }
        run.rom = ph_irka(std::get<PHModel>(fom), r).rom;
    } else if (method == "so-bt") {
        if (!std::holds_alternative<SSOModel>(fom)) {
            throw StructureError("so-bt requires an SSO model");
        }
        run.rom = so_bt(std::get<SSOModel>(fom), r);
    } else {
        throw DimensionError("unknown method '" + method + "'");
    }
    (void)fom_for_grid;
    run.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return run;
}

void validate_rom_structure(const AnyModel& rom) {
    std::visit(
        [](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (!std::is_same_v<T, StateSpaceModel>) m.check_structure();
        },
        rom);
}

} // namespace

int cmd_reduce(const RunConfig& config) {
    const AnyModel fom = build_model(config);
    std::filesystem::create_directories(config.out_dir);

    MethodRun run = run_method(config.method, fom, config.r, config);

    // verification grid shared by the error curve and the estimates
    FrequencySampleSet vgrid = make_grid(grid_for(config, fom).denser(10));
    sample_fom(fom, vgrid);
    auto err = [&](double omega) {
        const Complex s(0.0, omega);
        for (Index i = 0; i < vgrid.size(); ++i) {
            if (vgrid.omega(i) == omega) {
                return sigma_max(vgrid.value(i) - eval_tf_any(run.rom, s));
            }
        }
        return sigma_max(eval_tf_any(fom, s) - eval_tf_any(run.rom, s));
    };
    const HinfEstimate est = hinf_estimate(err, vgrid);

    if (!run.has_report) {
        run.report.structure = std::holds_alternative<SSOModel>(run.rom)
                                   ? Structure::sso_full
                                   : Structure::ph;
        run.report.r = config.r;
        run.report.n_u = model_inputs(fom);
        run.report.init_method = "-";
        run.report.total_seconds = run.seconds;
    }
    run.report.hinf = est.value;
    run.report.hinf_omega = est.omega;
    try {
        run.report.h2 = h2_error(to_state_space(fom), to_state_space(run.rom));
    } catch (const std::exception& e) {
        run.report.warnings.push_back(std::string("H2 estimate unavailable: ") + e.what());
    }

    save_model_manifest(config.out_dir / "rom.manifest", run.rom);
    // post-write validation: reload and re-check the structural invariants
    validate_rom_structure(load_model_manifest(config.out_dir / "rom.manifest"));
    write_error_curve_csv(config.out_dir / "error_curve.csv", err, vgrid);
    write_report(config.out_dir / "report.txt", run.report);

    std::cout << "method " << config.method << " r " << config.r << " hinf_estimate "
              << est.value << " h2_error " << run.report.h2 << "\n";
    return 0;
}

int cmd_compare(const RunConfig& config) {
    if (config.methods.size() < 1) {
        throw DimensionError("compare requires at least one --methods entry");
    }
    const AnyModel fom = build_model(config);
    std::filesystem::create_directories(config.out_dir);

    const Index r_lo = config.r_min > 0 ? config.r_min : config.r;
    const Index r_hi = config.r_max > 0 ? config.r_max : r_lo;
    const Index r_step = std::max<Index>(config.r_step, 1);

    FrequencySampleSet vgrid = make_grid(grid_for(config, fom).denser(10));
    sample_fom(fom, vgrid);
    const StateSpaceModel fom_ss = to_state_space(fom);

    std::ofstream csv(config.out_dir / "compare.csv");
    if (!csv) throw NumericalError("cannot open compare.csv for writing");
    csv << "r,method,hinf_estimate,h2_error,runtime_seconds\n";
    csv.precision(17);

    for (Index r = r_lo; r <= r_hi; r += r_step) {
        for (const auto& method : config.methods) {
            MethodRun run = run_method(method, fom, r, config);
            validate_rom_structure(run.rom);
            auto err = [&](double omega) {
                const Complex s(0.0, omega);
                for (Index i = 0; i < vgrid.size(); ++i) {
                    if (vgrid.omega(i) == omega) {
                        return sigma_max(vgrid.value(i) - eval_tf_any(run.rom, s));
                    }
                }
                return sigma_max(eval_tf_any(fom, s) - eval_tf_any(run.rom, s));
            };
            const HinfEstimate est = hinf_estimate(err, vgrid);
            double h2 = std::numeric_limits<double>::quiet_NaN();
            try {
                h2 = h2_error(fom_ss, to_state_space(run.rom));
            } catch (const std::exception&) {
            }
            const double secs = run.has_report ? run.report.total_seconds : run.seconds;
            csv << r << "," << method << "," << est.value << "," << h2 << "," << secs << "\n";
            std::cout << "r " << r << " method " << method << " hinf " << est.value << " h2 "
                      << h2 << "\n";
        }
    }
    return 0;
}

int cmd_sample(const RunConfig& config) {
    const AnyModel fom = build_model(config);
    const std::filesystem::path target =
        config.sample_out.empty() ? config.out_dir / "samples.txt" : config.sample_out;

    FrequencySampleSet grid = make_grid(grid_for(config, fom));
    if (std::filesystem::exists(target)) {
        // reuse the cache when it matches the requested grid
        try {
            FrequencySampleSet cached = load_sample_set(target);
            if (cached.size() == grid.size()) {
                bool match = true;
                for (Index i = 0; i < grid.size(); ++i) {
                    if (cached.omega(i) != grid.omega(i)) {
                        match = false;
                        break;
                    }
                }
                if (match) {
                    std::cout << "samples up to date: " << target.string() << "\n";
                    return 0;
                }
            }
        } catch (const std::exception&) {
            // fall through and regenerate
        }
    }
    sample_fom(fom, grid);
    if (!target.parent_path().empty()) std::filesystem::create_directories(target.parent_path());
    save_sample_set(target, grid);
    std::cout << "wrote " << grid.size() << " samples to " << target.string() << "\n";
    return 0;
}

namespace {

// Parsed "key = value" lines turned into command-line tokens; flags given on
// the actual command line take precedence (options use a take-last policy and
// these tokens are injected before the user's).
std::vector<std::string> config_file_args(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DimensionError("cannot open config file " + path.string());
    std::vector<std::string> args;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || key == "config") continue;
        args.push_back("--" + key);
        if (!value.empty()) args.push_back(value);
    }
    return args;
}

struct CliApp {
    RunConfig config;
    std::filesystem::path config_path;
    CLI::App app{"Structured optimization-based model order reduction toolkit"};
    CLI::App* reduce = nullptr;
    CLI::App* compare = nullptr;
    CLI::App* sample = nullptr;

    CliApp();
};

int dispatch(const CliApp& cli) {
    if (cli.reduce->parsed()) return cmd_reduce(cli.config);
    if (cli.compare->parsed()) return cmd_compare(cli.config);
    if (cli.sample->parsed()) return cmd_sample(cli.config);
    std::cerr << "no subcommand given\n";
    return 1;
}

CliApp::CliApp() {
    app.require_subcommand(1);
    RunConfig& config = this->config;

    auto add_model_flags = [&](CLI::App* sub) {
        sub->add_option("--model", config.builtin, "builtin model: msd | triple-chain");
        sub->add_option("--manifest", config.manifest, "model manifest file");
        sub->add_option("--cells", config.cells, "msd chain cells (n_x = 2*cells)");
        sub->add_option("--n0", config.n0, "triple-chain masses per chain (n_x = 3*n0+1)");
        sub->add_option("--mass", config.msd.mass, "msd mass");
        sub->add_option("--stiffness", config.msd.stiffness, "msd stiffness");
        sub->add_option("--damping", config.msd.damping, "msd damping");
        sub->add_option("--alpha", config.chain.alpha, "triple-chain mass-proportional damping");
        sub->add_option("--beta", config.chain.beta,
                        "triple-chain stiffness-proportional damping");
        sub->add_option("--viscosity", config.chain.damper_viscosity,
                        "triple-chain damper viscosity (default sqrt(mass*stiffness))");
        sub->add_option("--coupling-mass", config.chain.coupling_mass,
                        "triple-chain coupling mass");
        sub->add_option("--seed", config.seed, "random seed");
        sub->add_option("--out", config.out_dir, "output directory");
        sub->add_option("--config", config_path, "key = value config file; flags override");
    };
    auto add_grid_flags = [&](CLI::App* sub) {
        auto* lo = sub->add_option("--grid-lo", config.grid.omega_lo, "grid lower frequency");
        auto* hi = sub->add_option("--grid-hi", config.grid.omega_hi, "grid upper frequency");
        auto* ct = sub->add_option("--grid-count", config.grid.count, "log grid point count");
        auto* ex = sub->add_option("--grid-extra", config.grid.extras,
                                   "extra frequencies (repeatable)");
        sub->parse_complete_callback([&config, lo, hi, ct, ex]() {
            if (lo->count() || hi->count() || ct->count() || ex->count()) {
                config.has_grid = true;
                if (!ex->count()) config.grid.extras = {0.0};
            }
        });
    };
    auto add_reduction_flags = [&](CLI::App* sub) {
        sub->add_option("--r", config.r, "reduced order");
        sub->add_option("--structure", config.structure, "ph | sso-full | sso-diagm");
        sub->add_option("--gamma-mode", config.gamma_mode, "fixed | bisection");
        sub->add_option("--gamma-max", config.gamma_max, "head of the fixed gamma sequence");
        sub->add_option("--gamma-min", config.gamma_min, "tail of the fixed gamma sequence");
        sub->add_option("--gamma-count", config.gamma_count, "fixed gamma level count");
        sub->add_option("--epsilon", config.epsilon, "fixed-mode termination tolerance");
        sub->add_option("--gamma-upper", config.gamma_upper, "bisection upper bound");
        sub->add_option("--bisect-tol", config.bisect_tol, "bisection relative-gap tolerance");
        sub->add_option("--term-tol", config.term_tol, "bisection termination tolerance");
        sub->add_option("--init", config.init, "greedy | random | lsq");
    };

    reduce = app.add_subcommand("reduce", "reduce one model with one method");
    reduce->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    add_model_flags(reduce);
    add_grid_flags(reduce);
    add_reduction_flags(reduce);
    reduce->add_option("--method", config.method, "sobmor | bt | ph-bt | ph-irka | so-bt");

    compare = app.add_subcommand("compare", "compare methods over a range of orders");
    compare->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    add_model_flags(compare);
    add_grid_flags(compare);
    add_reduction_flags(compare);
    compare->add_option("--methods", config.methods, "comma-separated method list")
        ->delimiter(',');
    compare->add_option("--r-min", config.r_min, "sweep start");
    compare->add_option("--r-max", config.r_max, "sweep end");
    compare->add_option("--r-step", config.r_step, "sweep step");

    sample = app.add_subcommand("sample", "cache FOM samples to a text file");
    sample->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    add_model_flags(sample);
    add_grid_flags(sample);
    sample->add_option("--samples-out", config.sample_out, "target sample file");
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    std::vector<std::string> user_args;
    for (int i = 1; i < argc; ++i) user_args.emplace_back(argv[i]);

    auto parse_tokens = [](CliApp& cli, const std::vector<std::string>& tokens) {
        std::vector<const char*> cargv{"sobmor"};
        for (const auto& t : tokens) cargv.push_back(t.c_str());
        cli.app.parse(static_cast<int>(cargv.size()), cargv.data());
    };

    auto cli = std::make_unique<CliApp>();
    try {
        try {
            parse_tokens(*cli, user_args);
        } catch (const CLI::ParseError& e) {
            const int code = cli->app.exit(e);
            return code == 0 ? 0 : 1;
        }
        if (!cli->config_path.empty()) {
            // re-parse with the config file's tokens injected right after the
            // subcommand so explicit flags win under the take-last policy
            const std::vector<std::string> from_file = config_file_args(cli->config_path);
            std::string subname;
            for (auto* sub : {cli->reduce, cli->compare, cli->sample}) {
                if (sub->parsed()) subname = sub->get_name();
            }
            std::vector<std::string> merged{subname};
            merged.insert(merged.end(), from_file.begin(), from_file.end());
            for (std::size_t i = 0; i < user_args.size(); ++i) {
                if (i == 0 && user_args[i] == subname) continue;
                merged.push_back(user_args[i]);
            }
            cli = std::make_unique<CliApp>();
            try {
                parse_tokens(*cli, merged);
            } catch (const CLI::ParseError& e) {
                const int code = cli->app.exit(e);
                return code == 0 ? 0 : 1;
            }
        }
        return dispatch(*cli);
    } catch (const DimensionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const StructureError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    }
}

} // namespace sobmor
