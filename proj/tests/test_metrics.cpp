#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "sobmor/baselines.hpp"
#include "sobmor/metrics.hpp"

using namespace sobmor;

TEST_CASE("make_grid endpoints, defaults, deduplication") {
    GridSpec two;
    two.omega_lo = 1.0;
    two.omega_hi = 10.0;
    two.count = 2;
    const FrequencySampleSet g = make_grid(two);
    REQUIRE(g.size() == 2);
    CHECK(g.omega(0) == doctest::Approx(1.0));
    CHECK(g.omega(1) == doctest::Approx(10.0));

    CHECK(make_grid(GridSpec::ph_default()).size() == 807);

    GridSpec dup;
    dup.omega_lo = 0.1;
    dup.omega_hi = 10.0;
    dup.count = 3; // log grid {0.1, 1, 10}
    dup.extras = {1.0};
    CHECK(make_grid(dup).size() == 3);

    GridSpec bad;
    bad.omega_lo = -1.0;
    CHECK_THROWS_AS(make_grid(bad), DimensionError);
}

TEST_CASE("sso default grid deduplicates the repeated 1e-4 extra") {
    CHECK(make_grid(GridSpec::sso_default()).size() == 307);
}

TEST_CASE("sample_fom caches and reuses values") {
    StateSpaceModel fom(Matrix::Constant(1, 1, -1.0), Matrix::Constant(1, 1, 1.0),
                        Matrix::Constant(1, 1, 1.0), Matrix::Zero(1, 1));
    FrequencySampleSet grid({0.0, 1.0});
    sample_fom(AnyModel(fom), grid);
    REQUIRE(grid.has_values());
    CHECK(std::abs(grid.value(0)(0, 0) - 1.0) < 1e-15);
    CHECK(std::abs(grid.value(1)(0, 0) - 1.0 / Complex(1, 1)) < 1e-15);

    reset_solve_count();
    sample_fom(AnyModel(fom), grid); // cache hit
    CHECK(solve_count() == 0);
}

TEST_CASE("sample_fom dispatches through the structured evaluations") {
    const PHModel ph = assemble_ph(oracles::random_theta(Structure::ph, 3, 2, 12));
    FrequencySampleSet grid({0.5, 1.5});
    sample_fom(AnyModel(ph), grid);
    CHECK((grid.value(0) - eval_tf_ph(ph, Complex(0, 0.5))).norm() == 0.0);
}

TEST_CASE("hinf_estimate on monotone, resonant, constant shapes") {
    // |1/(iw+1)| decreases; max at the grid's lower end
    auto dec = [](double w) { return 1.0 / std::hypot(1.0, w); };
    GridSpec spec;
    spec.omega_lo = 1e-2;
    spec.omega_hi = 1e2;
    spec.count = 30;
    const FrequencySampleSet grid = make_grid(spec);
    const HinfEstimate e1 = hinf_estimate(dec, grid);
    CHECK(e1.value == doctest::Approx(dec(1e-2)).epsilon(1e-9));

    // resonance b^2/|k - w^2 + i w d| peaks near sqrt(k - d^2/2)
    const double k = 4.0, d = 0.05, b = 1.0;
    auto res = [&](double w) {
        return b * b / std::abs(Complex(k - w * w, w * d));
    };
    const HinfEstimate e2 = hinf_estimate(res, grid);
    // dense-grid oracle
    double ref = 0.0;
    for (int i = 0; i < 1000000; ++i) {
        const double w = 1e-2 * std::pow(1e4, i / 999999.0);
        ref = std::max(ref, res(w));
    }
    CHECK(e2.value >= ref * (1.0 - 1e-6));
    // refinement strictly improves the coarse grid max
    double coarse = 0.0;
    for (Index i = 0; i < grid.size(); ++i) coarse = std::max(coarse, res(grid.omega(i)));
    CHECK(e2.value >= coarse);

    const HinfEstimate e3 = hinf_estimate([](double) { return 2.5; }, grid);
    CHECK(e3.value == 2.5);
}

TEST_CASE("hinf_estimate handles a maximum at omega = 0") {
    GridSpec spec;
    spec.omega_lo = 0.5;
    spec.omega_hi = 10.0;
    spec.count = 5;
    spec.extras = {0.0};
    auto dec = [](double w) { return 1.0 / (1.0 + w * w); };
    const HinfEstimate e = hinf_estimate(dec, make_grid(spec));
    CHECK(e.value == doctest::Approx(1.0));
    CHECK(e.omega == doctest::Approx(0.0));
}

TEST_CASE("h2_error exact values and oracles") {
    // ||1/(s+a)||_H2^2 = 1/(2a); error between 1/(s+a) and 1/(s+b)
    const double a = 1.0, b = 2.0;
    StateSpaceModel fa(Matrix::Constant(1, 1, -a), Matrix::Constant(1, 1, 1.0),
                       Matrix::Constant(1, 1, 1.0), Matrix::Zero(1, 1));
    StateSpaceModel fb(Matrix::Constant(1, 1, -b), Matrix::Constant(1, 1, 1.0),
                       Matrix::Constant(1, 1, 1.0), Matrix::Zero(1, 1));
    CHECK(h2_error(fa, fa) == doctest::Approx(0.0));
    // closed form: 1/(2a) + 1/(2b) - 2/(a+b)
    const double expect = std::sqrt(1.0 / (2 * a) + 1.0 / (2 * b) - 2.0 / (a + b));
    CHECK(h2_error(fa, fb) == doctest::Approx(expect).epsilon(1e-10));

    // Gramian value matches trapezoidal quadrature within 1%
    const auto fom = oracles::random_stable_ss(6, 2, 2, 77);
    const auto rom = oracles::random_stable_ss(3, 2, 2, 78);
    const double gram = h2_error(fom, rom);
    auto Ge = [&](Complex s) {
        return ComplexMatrix(eval_tf(fom, s) - eval_tf(rom, s));
    };
    const double quad = oracles::quad_h2(Ge, 2000.0, 400000);
    CHECK(gram == doctest::Approx(quad).epsilon(0.01));
}

TEST_CASE("h2_error error conditions") {
    StateSpaceModel stable(Matrix::Constant(1, 1, -1.0), Matrix::Constant(1, 1, 1.0),
                           Matrix::Constant(1, 1, 1.0), Matrix::Zero(1, 1));
    StateSpaceModel unstable(Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0),
                             Matrix::Constant(1, 1, 1.0), Matrix::Zero(1, 1));
    CHECK_THROWS_AS(h2_error(stable, unstable), NumericalError);
    StateSpaceModel dterm(Matrix::Constant(1, 1, -1.0), Matrix::Constant(1, 1, 1.0),
                          Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 0.5));
    CHECK_THROWS_AS(h2_error(stable, dterm), NumericalError);
}

TEST_CASE("h2_error symmetry and triangle inequality on small random systems") {
    const auto a = oracles::random_stable_ss(4, 1, 1, 81);
    const auto b = oracles::random_stable_ss(3, 1, 1, 82);
    const auto c = oracles::random_stable_ss(5, 1, 1, 83);
    const double ab = h2_error(a, b);
    const double ba = h2_error(b, a);
    CHECK(ab == doctest::Approx(ba).epsilon(1e-8));
    CHECK(h2_error(a, c) <= ab + h2_error(b, c) + 1e-8);
}

TEST_CASE("structured metrics route through consistent embeddings") {
    const PHModel ph = assemble_ph(oracles::random_theta(Structure::ph, 4, 2, 84));
    const SSOModel sso = assemble_sso(oracles::random_theta(Structure::sso_full, 4, 2, 85));
    for (double w : {0.0, 0.7, 3.0}) {
        const Complex s(0, w);
        CHECK((eval_tf(ph_to_state_space(ph), s) - eval_tf_ph(ph, s)).norm() <= 1e-10);
        CHECK((eval_tf(sso_to_first_order_explicit(sso), s) - eval_tf_sso(sso, s)).norm() <=
              1e-10 * std::max(1.0, eval_tf_sso(sso, s).norm()));
    }
}

TEST_CASE("error curve CSV format") {
    namespace fs = std::filesystem;
    const fs::path path = fs::temp_directory_path() / "sobmor_curve.csv";
    FrequencySampleSet grid({0.5, 1.0});
    write_error_curve_csv(path, [](double w) { return 2.0 * w; }, grid);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "omega,sigma_max_error");
    std::string row;
    std::getline(in, row);
    CHECK(row.find("0.5") != std::string::npos);
    fs::remove(path);
}

TEST_CASE("sample set text format round-trips") {
    namespace fs = std::filesystem;
    const fs::path path = fs::temp_directory_path() / "sobmor_samples.txt";
    const PHModel ph = assemble_ph(oracles::random_theta(Structure::ph, 3, 2, 86));
    FrequencySampleSet grid({0.0, 1.0, 4.0});
    sample_fom(AnyModel(ph), grid);
    save_sample_set(path, grid);
    const FrequencySampleSet back = load_sample_set(path);
    REQUIRE(back.size() == grid.size());
    for (Index i = 0; i < grid.size(); ++i) {
        CHECK(back.omega(i) == grid.omega(i));
        CHECK((back.value(i) - grid.value(i)).norm() < 1e-15);
    }
    // malformed file -> error naming the line
    std::ofstream out(path);
    out << "samples 1 1 1\nomega 1.0\n0.5\n"; // missing imaginary part
    out.close();
    try {
        load_sample_set(path);
        FAIL("expected parse error");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }
    fs::remove(path);
}
