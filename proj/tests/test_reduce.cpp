#include <doctest.h>

#include <filesystem>

#include "oracles.hpp"
#include "sobmor/benchmarks.hpp"
#include "sobmor/reduce.hpp"

using namespace sobmor;

namespace {

GridSpec tiny_grid(int count = 60) {
    GridSpec spec;
    spec.omega_lo = 1e-2;
    spec.omega_hi = 1e1;
    spec.count = count;
    spec.extras = {0.0};
    return spec;
}

double sampled_err(const FrequencySampleSet& samples, const AnyModel& rom) {
    double e = 0.0;
    for (Index i = 0; i < samples.size(); ++i) {
        e = std::max(e, oracles::sigma_max(samples.value(i) -
                                           eval_tf_any(rom, samples.point(i))));
    }
    return e;
}

} // namespace

TEST_CASE("greedy init with full order reproduces the FOM on the grid") {
    const PHModel fom = msd_ph_chain(3); // n_x = 6
    FrequencySampleSet samples = make_grid(tiny_grid());
    sample_fom(AnyModel(fom), samples);
    const ParamVector theta = init_greedy(samples, fom, 6);
    CHECK(sampled_err(samples, assemble_ph(theta)) < 1e-8);
}

TEST_CASE("greedy init error is nonincreasing over enlargements on the MSD chain") {
    const PHModel fom = msd_ph_chain(10); // n_x = 20
    FrequencySampleSet samples = make_grid(tiny_grid(120));
    sample_fom(AnyModel(fom), samples);
    double prev = std::numeric_limits<double>::infinity();
    for (Index r : {4, 8}) {
        const ParamVector theta = init_greedy(samples, fom, r);
        const double err = sampled_err(samples, assemble_ph(theta));
        CHECK(err <= prev * (1.0 + 1e-9));
        prev = err;
    }
}

TEST_CASE("greedy init interpolates at its chosen points") {
    // n_u = 2 and complex omega* add 4 columns per step, so r = 8 lands exactly
    // on whole enlargement steps; the last chosen point is interpolated
    const PHModel fom = msd_ph_chain(10);
    FrequencySampleSet samples = make_grid(tiny_grid(120));
    sample_fom(AnyModel(fom), samples);
    const ParamVector theta4 = init_greedy(samples, fom, 4);
    const PHModel rom4 = assemble_ph(theta4);
    // the first chosen point is the grid argmax of the FOM magnitude
    Index at = 0;
    double best = -1.0;
    for (Index i = 0; i < samples.size(); ++i) {
        const double v = oracles::sigma_max(samples.value(i));
        if (v > best) {
            best = v;
            at = i;
        }
    }
    const ComplexMatrix Gf = samples.value(at);
    const ComplexMatrix Gr = eval_tf_ph(rom4, samples.point(at));
    CHECK((Gf - Gr).norm() <= 1e-6 * Gf.norm());
}

TEST_CASE("greedy init for SSO layouts, including diagonal M") {
    const SSOModel fom = triple_chain_sso(4); // n_x = 13
    FrequencySampleSet samples = make_grid(tiny_grid());
    sample_fom(AnyModel(fom), samples);
    const ParamVector full = init_greedy(samples, fom, 5, Structure::sso_full);
    CHECK_NOTHROW(assemble_sso(full).check_structure());
    const ParamVector diag = init_greedy(samples, fom, 5, Structure::sso_diag_m);
    const SSOModel rom = assemble_sso(diag);
    CHECK_NOTHROW(rom.check_structure());
    CHECK(rom.M.isDiagonal(1e-12));
    // both layouts describe the same projected model
    CHECK(sampled_err(samples, AnyModel(rom)) ==
          doctest::Approx(sampled_err(samples, AnyModel(assemble_sso(full)))).epsilon(1e-6));
}

TEST_CASE("init_random determinism, structure, and magnitude scaling") {
    const PHModel fom = msd_ph_chain(10);
    FrequencySampleSet samples = make_grid(tiny_grid());
    sample_fom(AnyModel(fom), samples);
    const ParamVector a = init_random(Structure::ph, 4, 2, 7, samples);
    const ParamVector b = init_random(Structure::ph, 4, 2, 7, samples);
    CHECK((a.data() - b.data()).cwiseAbs().maxCoeff() == 0.0);
    CHECK_NOTHROW(assemble_ph(a).check_structure());

    const Index med = samples.size() / 2;
    const double fom_mag = oracles::sigma_max(samples.value(med));
    const double rom_mag =
        oracles::sigma_max(eval_tf_ph(assemble_ph(a), samples.point(med)));
    CHECK(rom_mag / fom_mag >= 0.1);
    CHECK(rom_mag / fom_mag <= 10.0);
}

TEST_CASE("init_lsq improves on its random start") {
    const PHModel fom = msd_ph_chain(10);
    FrequencySampleSet samples = make_grid(tiny_grid());
    sample_fom(AnyModel(fom), samples);
    OptimOptions opts;
    opts.max_iters = 150;
    const ParamVector start = init_random(Structure::ph, 4, 2, 3, samples);
    const ParamVector fitted = init_lsq(samples, Structure::ph, 4, 2, 3, opts);
    CHECK(lsq(samples, fitted) < lsq(samples, start));
    // determinism under a fixed seed
    const ParamVector fitted2 = init_lsq(samples, Structure::ph, 4, 2, 3, opts);
    CHECK((fitted.data() - fitted2.data()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("run_fixed_sequence: cut-off single level and bad inputs") {
    const PHModel fom = msd_ph_chain(5);
    FrequencySampleSet samples = make_grid(tiny_grid());
    sample_fom(AnyModel(fom), samples);
    const ParamVector theta0 = init_greedy(samples, fom, 4);
    const double e0 = sampled_err(samples, assemble_ph(theta0));

    // one gamma far above the error: level terminates at zero immediately,
    // the schedule is exhausted, and the start is returned unchanged
    GammaSchedule one;
    one.mode = GammaSchedule::Mode::fixed_sequence;
    one.fixed = {10.0 * e0 + 1.0};
    ReductionReport rep = run_fixed_sequence(samples, theta0, one);
    CHECK(rep.schedule_exhausted);
    REQUIRE(rep.levels.size() == 1);
    CHECK(rep.levels[0].final_loss == 0.0);
    CHECK(rep.levels[0].iterations == 0);
    CHECK((rep.theta_fin->data() - theta0.data()).cwiseAbs().maxCoeff() == 0.0);

    GammaSchedule empty;
    empty.mode = GammaSchedule::Mode::fixed_sequence;
    CHECK_THROWS_AS(run_fixed_sequence(samples, theta0, empty), DimensionError);
    GammaSchedule increasing;
    increasing.fixed = {0.1, 0.2};
    CHECK_THROWS_AS(run_fixed_sequence(samples, theta0, increasing), DimensionError);
}

TEST_CASE("run_fixed_sequence terminates with the previous level's minimizer") {
    const PHModel fom = msd_ph_chain(10); // n_x = 20
    FrequencySampleSet samples = make_grid(tiny_grid(80));
    sample_fom(AnyModel(fom), samples);
    const ParamVector theta0 = init_greedy(samples, fom, 4);
    const double e0 = sampled_err(samples, assemble_ph(theta0));

    GammaSchedule sched;
    sched.mode = GammaSchedule::Mode::fixed_sequence;
    // a few levels below e0 and a final unreachable one
    sched.fixed = {0.8 * e0, 0.5 * e0, 1e-13};
    OptimOptions opts;
    opts.max_iters = 400;
    const ReductionReport rep = run_fixed_sequence(samples, theta0, sched, opts);
    REQUIRE(!rep.levels.empty());
    CHECK(rep.levels.back().final_loss > sched.epsilon);
    REQUIRE(rep.theta_fin.has_value());
    // Alg. 1 invariant: every level before the last ended at or below epsilon
    for (std::size_t i = 0; i + 1 < rep.levels.size(); ++i) {
        CHECK(rep.levels[i].final_loss <= sched.epsilon);
    }
    // final sampled error is at or below the last successful gamma (plus slack)
    if (rep.levels.size() >= 2) {
        const double gamma_ok = rep.levels[rep.levels.size() - 2].gamma;
        CHECK(sampled_err(samples, assemble_ph(*rep.theta_fin)) <= gamma_ok + 1e-8);
    }
}

TEST_CASE("first failing level returns the initializer literally") {
    const PHModel fom = msd_ph_chain(10);
    FrequencySampleSet samples = make_grid(tiny_grid(80));
    sample_fom(AnyModel(fom), samples);
    const ParamVector theta0 = init_greedy(samples, fom, 2);
    GammaSchedule sched;
    sched.fixed = {1e-13}; // unreachable for r=2
    OptimOptions opts;
    opts.max_iters = 60;
    const ReductionReport rep = run_fixed_sequence(samples, theta0, sched, opts);
    CHECK(rep.first_level_failed);
    CHECK((rep.theta_fin->data() - theta0.data()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("warm start is bit-identical across levels") {
    // instrument by running two schedules: the two-level run's first level must
    // match the one-level run exactly, and its second level starts there
    const PHModel fom = msd_ph_chain(6);
    FrequencySampleSet samples = make_grid(tiny_grid());
    sample_fom(AnyModel(fom), samples);
    const ParamVector theta0 = init_greedy(samples, fom, 3);
    const double e0 = sampled_err(samples, assemble_ph(theta0));
    GammaSchedule two;
    two.fixed = {0.8 * e0, 1e-13};
    GammaSchedule onel;
    onel.fixed = {0.8 * e0};
    OptimOptions opts;
    opts.max_iters = 200;
    const ReductionReport rep_two = run_fixed_sequence(samples, theta0, two, opts);
    const ReductionReport rep_one = run_fixed_sequence(samples, theta0, onel, opts);
    REQUIRE(rep_two.levels.size() == 2);
    // failing level 2 returns level 1's minimizer, which the one-level run
    // reports as its exhausted-schedule result
    CHECK((rep_two.theta_fin->data() - rep_one.theta_fin->data()).cwiseAbs().maxCoeff() ==
          0.0);
}

TEST_CASE("run_bisection brackets the achievable error") {
    // two incompatible scalar samples: no scalar model matches both exactly,
    // the best max-error is half the spread of the two values
    FrequencySampleSet samples{{1.0, 2.0}};
    samples.set_values({ComplexMatrix::Constant(1, 1, 1.0),
                        ComplexMatrix::Constant(1, 1, 2.0)});
    // ROM class: a single feedthrough-free pH scalar; cannot fit both values,
    // so bisection settles near the best achievable level
    const ParamLayout layout{Structure::ph, 1, 1};
    ParamVector theta0(layout, Vector::Zero(3));
    theta0.data() << 0.2, 1.0, 1.2;
    GammaSchedule sched = GammaSchedule::make_bisection(4.0, 1e-3, 1e-12);
    OptimOptions opts;
    opts.max_iters = 300;
    const ReductionReport rep = run_bisection(samples, theta0, sched, opts);
    REQUIRE(rep.theta_fin.has_value());
    REQUIRE(!rep.levels.empty());
    // the bracket midpoint sequence must converge: successive gammas shrink
    CHECK(rep.levels.size() >= 10);
    // achieved error is consistent with the final bracket
    const double err = sampled_err(samples, assemble_ph(*rep.theta_fin));
    CHECK(err < 4.0);
    CHECK_THROWS_AS(run_bisection(samples, theta0, GammaSchedule::make_bisection(-1.0)),
                    DimensionError);
}

TEST_CASE("bisection halves gamma_u while the tolerance is achievable") {
    // FOM itself as candidate: levels succeed and gamma_u halves until the
    // numerical loss floor makes one level fail and sets gamma_l > 0; from
    // there the bracket needs about log2(1/eps1) more halvings. The loop
    // invariant is checked level by level.
    const PHModel fom = msd_ph_chain(3);
    FrequencySampleSet samples = make_grid(tiny_grid());
    sample_fom(AnyModel(fom), samples);
    const ParamVector theta0 = extract_theta_ph(fom);
    GammaSchedule sched = GammaSchedule::make_bisection(1.0, 1e-3, 1e-10);
    const ReductionReport rep = run_bisection(samples, theta0, sched);
    REQUIRE(!rep.levels.empty());
    double gamma_l = 0.0, gamma_u = sched.gamma_upper;
    for (const auto& lvl : rep.levels) {
        CHECK(lvl.gamma == doctest::Approx(0.5 * (gamma_l + gamma_u)));
        if (lvl.final_loss > sched.eps2) gamma_l = lvl.gamma;
        else gamma_u = lvl.gamma;
    }
    CHECK((gamma_u - gamma_l) / (gamma_u + gamma_l) <= sched.eps1);
    // the leading run of successful levels halves gamma_u each time
    CHECK(rep.levels.front().final_loss <= sched.eps2);
    CHECK(rep.levels[1].gamma == doctest::Approx(0.25 * sched.gamma_upper));
}

TEST_CASE("sobmor_reduce recovers a small pH realization") {
    const PHModel fom = assemble_ph(oracles::random_theta(Structure::ph, 2, 2, 55));
    SobmorOptions opts;
    opts.structure = Structure::ph;
    opts.r = 2;
    opts.grid = tiny_grid();
    opts.init = InitMethod::greedy;
    opts.optim.max_iters = 300;
    const ReductionReport rep = sobmor_reduce(AnyModel(fom), opts);
    REQUIRE(rep.theta_fin.has_value());
    CHECK(rep.hinf < 1e-6);
    // determinism
    const ReductionReport rep2 = sobmor_reduce(AnyModel(fom), opts);
    CHECK((rep.theta_fin->data() - rep2.theta_fin->data()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(rep.hinf == rep2.hinf);
}

TEST_CASE("every intermediate level assembles to a structurally valid model") {
    const PHModel fom = msd_ph_chain(8);
    FrequencySampleSet samples = make_grid(tiny_grid());
    sample_fom(AnyModel(fom), samples);
    const ParamVector theta0 = init_greedy(samples, fom, 4);
    const double e0 = sampled_err(samples, assemble_ph(theta0));
    GammaSchedule sched;
    sched.fixed = {0.9 * e0, 0.6 * e0, 0.3 * e0, 1e-13};
    OptimOptions opts;
    opts.max_iters = 250;
    const ReductionReport rep = run_fixed_sequence(samples, theta0, sched, opts);
    REQUIRE(rep.theta_fin.has_value());
    CHECK_NOTHROW(assemble_ph(*rep.theta_fin).check_structure());
}

TEST_CASE("report writes and reads back") {
    namespace fs = std::filesystem;
    ReductionReport rep;
    rep.structure = Structure::sso_diag_m;
    rep.r = 3;
    rep.n_u = 2;
    rep.init_method = "random";
    rep.seed = 9;
    rep.levels.push_back({0.1, 0.0, 12, 0.5, Termination::gradient});
    rep.levels.push_back({0.05, 2e-3, 40, 1.25, Termination::max_iters});
    rep.hinf = 0.125;
    rep.h2 = 0.01;
    rep.theta_fin = oracles::random_theta(Structure::sso_diag_m, 3, 2, 77);
    rep.warnings.push_back("sample warning");

    const fs::path path = fs::temp_directory_path() / "sobmor_report_test.txt";
    write_report(path, rep);
    const ReductionReport back = read_report(path);
    CHECK(back.structure == rep.structure);
    CHECK(back.r == rep.r);
    CHECK(back.init_method == rep.init_method);
    REQUIRE(back.levels.size() == 2);
    CHECK(back.levels[1].gamma == doctest::Approx(0.05));
    CHECK(back.levels[1].iterations == 40);
    CHECK(back.hinf == doctest::Approx(0.125));
    REQUIRE(back.theta_fin.has_value());
    CHECK((back.theta_fin->data() - rep.theta_fin->data()).cwiseAbs().maxCoeff() < 1e-15);
    REQUIRE(back.warnings.size() == 1);
    CHECK(back.warnings[0] == "sample warning");
    fs::remove(path);
}

TEST_CASE("sobmor_reduce rejects greedy init on unstructured FOMs") {
    const auto ss = oracles::random_stable_ss(4, 2, 2, 31);
    SobmorOptions opts;
    opts.structure = Structure::ph;
    opts.r = 2;
    opts.grid = tiny_grid();
    opts.init = InitMethod::greedy;
    CHECK_THROWS_AS(sobmor_reduce(AnyModel(ss), opts), StructureError);
    // random init works on pure data
    opts.init = InitMethod::random;
    opts.optim.max_iters = 40;
    opts.schedule.fixed = {1e3};
    opts.error_estimates = false;
    CHECK_NOTHROW(sobmor_reduce(AnyModel(ss), opts));
}
