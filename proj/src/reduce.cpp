#include "sobmor/reduce.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "sobmor/baselines.hpp"

namespace sobmor {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double sigma_max(const ComplexMatrix& E) {
    return Eigen::JacobiSVD<ComplexMatrix>(E).singularValues()(0);
}

// Largest sampled sigma_1 of G - G_r(theta) over the cached grid.
double sampled_max_error(const FrequencySampleSet& samples, const ParamVector& theta,
                         const ObjectiveOptions& objective) {
    const AnyModel rom = theta.layout().structure == Structure::ph
                             ? AnyModel(assemble_ph(theta, {objective.ridge}))
                             : AnyModel(assemble_sso(theta, {objective.ridge}));
    double emax = 0.0;
    for (Index i = 0; i < samples.size(); ++i) {
        emax = std::max(emax, sigma_max(samples.value(i) - eval_tf_any(rom, samples.point(i))));
    }
    return emax;
}

} // namespace

GammaSchedule GammaSchedule::default_fixed() {
    GammaSchedule s;
    s.mode = Mode::fixed_sequence;
    s.fixed.resize(300);
    for (int i = 0; i < 300; ++i) {
        s.fixed[static_cast<std::size_t>(i)] = std::pow(10.0, -1.0 - 13.0 * i / 299.0);
    }
    s.epsilon = 1e-14;
    return s;
}

GammaSchedule GammaSchedule::make_bisection(double gamma_upper, double eps1, double eps2) {
    GammaSchedule s;
    s.mode = Mode::bisection;
    s.gamma_upper = gamma_upper;
    s.eps1 = eps1;
    s.eps2 = eps2;
    return s;
}

void GammaSchedule::validate() const {
    if (mode == Mode::fixed_sequence) {
        if (fixed.empty()) throw DimensionError("fixed gamma sequence is empty");
        for (std::size_t i = 0; i < fixed.size(); ++i) {
            if (!(fixed[i] > 0.0)) throw DimensionError("gamma levels must be positive");
            if (i > 0 && !(fixed[i] < fixed[i - 1])) {
                throw DimensionError("gamma sequence must be strictly decreasing");
            }
        }
        if (!(epsilon > 0.0)) throw DimensionError("termination tolerance must be positive");
    } else {
        if (!(gamma_upper > 0.0)) throw DimensionError("bisection requires gamma_upper > 0");
        if (!(eps1 > 0.0) || !(eps2 > 0.0)) {
            throw DimensionError("bisection tolerances must be positive");
        }
    }
}

std::string to_string(InitMethod m) {
    switch (m) {
        case InitMethod::greedy: return "greedy";
        case InitMethod::random: return "random";
        case InitMethod::lsq: return "lsq";
    }
    return "?";
}

InitMethod init_method_from_string(const std::string& s) {
    if (s == "greedy") return InitMethod::greedy;
    if (s == "random") return InitMethod::random;
    if (s == "lsq") return InitMethod::lsq;
    throw DimensionError("unknown init method '" + s + "'");
}

namespace {

// Orthonormalizes cols against basis (twice) and appends the survivors,
// stopping at r columns. Returns how many were appended.
Index append_orthonormal(Matrix& basis, Index& filled, const Matrix& cols, Index r) {
    Index added = 0;
    for (Index c = 0; c < cols.cols(); ++c) {
        if (filled >= r) break;
        Vector v = cols.col(c);
        const double scale = std::max(v.norm(), 1e-300);
        for (int pass = 0; pass < 2; ++pass) {
            if (filled > 0) {
                v -= basis.leftCols(filled) * (basis.leftCols(filled).transpose() * v);
            }
        }
        if (v.norm() > 1e-10 * scale) {
            basis.col(filled++) = v / v.norm();
            ++added;
        }
    }
    return added;
}

// One structure-preserving projection of a pH FOM onto span(T).
PHModel ph_project_basis(const PHModel& fom, const Eigen::Ref<const Matrix>& T) {
    Matrix QT = T.transpose() * fom.Q * T;
    QT = 0.5 * (QT + QT.transpose());
    Eigen::FullPivLU<Matrix> lu(QT);
    if (!lu.isInvertible() || lu.rcond() < 1e-14) {
        QT.diagonal().array() += 1e-12 * std::max(1.0, QT.cwiseAbs().maxCoeff());
        lu.compute(QT);
    }
    const Matrix W = (lu.solve((fom.Q * T).transpose())).transpose();
    Matrix Jr = W.transpose() * fom.J * W;
    Jr = 0.5 * (Jr - Jr.transpose());
    Matrix Rr = W.transpose() * fom.R * W;
    Rr = 0.5 * (Rr + Rr.transpose());
    return PHModel(std::move(Jr), std::move(Rr), std::move(QT), W.transpose() * fom.B);
}

SSOModel sso_project_basis(const SSOModel& fom, const Eigen::Ref<const Matrix>& T) {
    Matrix Mr = T.transpose() * fom.M * T;
    Matrix Dr = T.transpose() * fom.D * T;
    Matrix Kr = T.transpose() * fom.K * T;
    Mr = 0.5 * (Mr + Mr.transpose());
    Dr = 0.5 * (Dr + Dr.transpose());
    Kr = 0.5 * (Kr + Kr.transpose());
    return SSOModel(std::move(Mr), std::move(Dr), std::move(Kr), T.transpose() * fom.B);
}

// Grid argmax of sigma_1(G(s_i) - G_r(s_i)); rom may be empty (treated as 0).
template <typename RomEval>
Index greedy_argmax(const FrequencySampleSet& samples, bool have_rom, RomEval&& rom_eval) {
    Index best = 0;
    double fbest = -1.0;
    for (Index i = 0; i < samples.size(); ++i) {
        ComplexMatrix E = samples.value(i);
        if (have_rom) E -= rom_eval(samples.point(i));
        const double v = sigma_max(E);
        if (v > fbest) {
            fbest = v;
            best = i;
        }
    }
    return best;
}

} // namespace

ParamVector init_greedy(const FrequencySampleSet& fom_samples, const PHModel& fom, Index r) {
    if (r < 1 || r > fom.order()) throw DimensionError("init_greedy: invalid r");
    if (!fom_samples.has_values()) throw NumericalError("init_greedy needs cached samples");
    const Index n = fom.order();
    const Matrix A = (fom.J - fom.R) * fom.Q;
    Matrix basis(n, r);
    Index filled = 0;
    PHModel rom;
    int stall = 0;
    while (filled < r) {
        const bool have_rom = filled > 0;
        const Index at = greedy_argmax(fom_samples, have_rom,
                                       [&](Complex s) { return eval_tf_ph(rom, s); });
        const Complex s = fom_samples.point(at);
        ComplexMatrix F = (-A).cast<Complex>();
        F.diagonal().array() += s;
        const ComplexMatrix X = F.partialPivLu().solve(fom.B.cast<Complex>());
        Matrix cand(n, 2 * fom.inputs());
        cand.leftCols(fom.inputs()) = X.real();
        cand.rightCols(fom.inputs()) = X.imag();
        const Index added = append_orthonormal(basis, filled, cand, r);
        if (added == 0) {
            // direction already captured; perturb with a random column to escape
            if (++stall > 2 * r) {
                throw NumericalError("init_greedy: basis construction stalled");
            }
            std::mt19937_64 rng(static_cast<std::uint64_t>(filled) + 17u);
            Matrix rnd(n, 1);
            for (Index i = 0; i < n; ++i) {
                rnd(i, 0) = std::uniform_real_distribution<double>(-1, 1)(rng);
            }
            append_orthonormal(basis, filled, rnd, r);
        }
        rom = ph_project_basis(fom, basis.leftCols(filled));
    }
    return extract_theta_ph(rom);
}

ParamVector init_greedy(const FrequencySampleSet& fom_samples, const SSOModel& fom, Index r,
                        Structure layout) {
    if (r < 1 || r > fom.order()) throw DimensionError("init_greedy: invalid r");
    if (!fom_samples.has_values()) throw NumericalError("init_greedy needs cached samples");
    const Index n = fom.order();
    Matrix basis(n, r);
    Index filled = 0;
    SSOModel rom;
    int stall = 0;
    while (filled < r) {
        const bool have_rom = filled > 0;
        const Index at = greedy_argmax(fom_samples, have_rom,
                                       [&](Complex s) { return eval_tf_sso(rom, s); });
        const Complex s = fom_samples.point(at);
        const ComplexMatrix F = (s * s) * fom.M.cast<Complex>() + s * fom.D.cast<Complex>() +
                                fom.K.cast<Complex>();
        const ComplexMatrix X = F.partialPivLu().solve(fom.B.cast<Complex>());
        Matrix cand(n, 2 * fom.inputs());
        cand.leftCols(fom.inputs()) = X.real();
        cand.rightCols(fom.inputs()) = X.imag();
        const Index added = append_orthonormal(basis, filled, cand, r);
        if (added == 0) {
            if (++stall > 2 * r) {
                throw NumericalError("init_greedy: basis construction stalled");
            }
            std::mt19937_64 rng(static_cast<std::uint64_t>(filled) + 31u);
            Matrix rnd(n, 1);
            for (Index i = 0; i < n; ++i) {
                rnd(i, 0) = std::uniform_real_distribution<double>(-1, 1)(rng);
            }
            append_orthonormal(basis, filled, rnd, r);
        }
        rom = sso_project_basis(fom, basis.leftCols(filled));
    }
    if (layout == Structure::sso_diag_m) {
        // rotate the ROM so M becomes diagonal; congruence keeps the structure
        Eigen::SelfAdjointEigenSolver<Matrix> es(rom.M);
        const Matrix& V = es.eigenvectors();
        rom = SSOModel(Matrix(es.eigenvalues().asDiagonal()),
                       V.transpose() * rom.D * V, V.transpose() * rom.K * V,
                       V.transpose() * rom.B);
    }
    return extract_theta_sso(rom, layout);
}

namespace {

// Deterministic standard normals (Box-Muller over mt19937_64).
class NormalDraw {
public:
    explicit NormalDraw(unsigned seed) : rng_(seed) {}
    double operator()() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
        } while (u1 <= 1e-300);
        const double u2 = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
        const double mag = std::sqrt(-2.0 * std::log(u1));
        spare_ = mag * std::sin(2.0 * M_PI * u2);
        have_spare_ = true;
        return mag * std::cos(2.0 * M_PI * u2);
    }

private:
    std::mt19937_64 rng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace

ParamVector init_random(Structure structure, Index r, Index n_u, unsigned seed,
                        const FrequencySampleSet& fom_samples) {
    if (!fom_samples.has_values()) throw NumericalError("init_random needs cached samples");
    const ParamLayout layout{structure, r, n_u};
    NormalDraw draw(seed);
    Vector data(layout.size());
    for (Index i = 0; i < data.size(); ++i) data(i) = draw();
    ParamVector theta(layout, std::move(data));

    // scale theta_B so the ROM magnitude at the median grid frequency matches
    // the FOM's within a factor 10 (G_r is quadratic in theta_B)
    Index med = fom_samples.size() / 2;
    double fom_mag = sigma_max(fom_samples.value(med));
    for (Index k = 0; fom_mag <= 0.0 && k < fom_samples.size(); ++k) {
        fom_mag = sigma_max(fom_samples.value(k));
        med = k;
    }
    const AnyModel rom = structure == Structure::ph ? AnyModel(assemble_ph(theta))
                                                    : AnyModel(assemble_sso(theta));
    const double rom_mag = sigma_max(eval_tf_any(rom, fom_samples.point(med)));
    if (fom_mag > 0.0 && rom_mag > 0.0 && std::isfinite(rom_mag)) {
        theta.block(3) *= std::sqrt(fom_mag / rom_mag);
    }
    return theta;
}

ParamVector init_lsq(const FrequencySampleSet& fom_samples, Structure structure, Index r,
                     Index n_u, unsigned seed, const OptimOptions& opts,
                     const ObjectiveOptions& objective) {
    const ParamVector theta0 = init_random(structure, r, n_u, seed, fom_samples);
    const ParamLayout layout = theta0.layout();
    auto f = [&](const Vector& x) {
        try {
            return lsq(fom_samples, ParamVector(layout, x), objective);
        } catch (const SingularPencilError&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    auto g = [&](const Vector& x) {
        try {
            return Vector(grad_lsq(fom_samples, ParamVector(layout, x), objective));
        } catch (const SingularPencilError&) {
            return Vector(
                Vector::Constant(x.size(), std::numeric_limits<double>::quiet_NaN()));
        }
    };
    const OptimResult res = minimize(f, g, theta0.data(), opts);
    return ParamVector(layout, res.theta_min);
}

namespace {

struct LevelSolve {
    Vector theta;
    double alpha = 0.0;
    int iterations = 0;
    double seconds = 0.0;
    Termination termination = Termination::gradient;
};

LevelSolve solve_level(double gamma, const FrequencySampleSet& samples,
                       const ParamLayout& layout, const Vector& start,
                       const OptimOptions& opts, const ObjectiveOptions& objective) {
    const auto t0 = Clock::now();
    // f and g share one fused evaluation per point via a single-entry cache
    struct Cache {
        Vector theta, grad;
        double value = 0.0;
        bool valid = false;
    };
    auto cache = std::make_shared<Cache>();
    auto eval = [=, &samples](const Vector& x) {
        if (!cache->valid || cache->theta.size() != x.size() || cache->theta != x) {
            cache->theta = x;
            try {
                cache->value = loss_and_grad(gamma, samples, ParamVector(layout, x),
                                             cache->grad, objective)
                                   .value;
            } catch (const SingularPencilError&) {
                // out of the evaluable domain; the line search backs off
                cache->value = std::numeric_limits<double>::infinity();
                cache->grad = Vector::Constant(x.size(),
                                               std::numeric_limits<double>::quiet_NaN());
            }
            cache->valid = true;
        }
    };
    auto f = [=](const Vector& x) {
        eval(x);
        return cache->value;
    };
    auto g = [=](const Vector& x) {
        eval(x);
        return cache->grad;
    };
    const OptimResult res = minimize(f, g, start, opts);
    return {res.theta_min, res.f_min, res.iterations, seconds_since(t0), res.termination};
}

} // namespace

ReductionReport run_fixed_sequence(const FrequencySampleSet& fom_samples,
                                   const ParamVector& theta0, const GammaSchedule& schedule,
                                   const OptimOptions& opts, const ObjectiveOptions& objective) {
    if (schedule.mode != GammaSchedule::Mode::fixed_sequence) {
        throw DimensionError("run_fixed_sequence requires a fixed-sequence schedule");
    }
    schedule.validate();
    const auto t0 = Clock::now();
    const ParamLayout layout = theta0.layout();

    ReductionReport report;
    report.structure = layout.structure;
    report.r = layout.n_x;
    report.n_u = layout.n_u;

    // Algorithm: j := 0, alpha_0 := 0; while alpha_j <= eps solve level j+1
    // warm-started at theta_j; on exit the result is theta_{j-1}.
    std::size_t j = 0;
    double alpha = 0.0;
    Vector theta_j = theta0.data();
    Vector theta_prev = theta0.data();
    while (alpha <= schedule.epsilon) {
        if (j >= schedule.fixed.size()) {
            report.schedule_exhausted = true;
            report.theta_fin = ParamVector(layout, theta_j);
            report.total_seconds = seconds_since(t0);
            return report;
        }
        const double gamma = schedule.fixed[j];
        LevelSolve lvl = solve_level(gamma, fom_samples, layout, theta_j, opts, objective);
        report.levels.push_back({gamma, lvl.alpha, lvl.iterations, lvl.seconds, lvl.termination});
        theta_prev = theta_j;
        theta_j = lvl.theta;
        alpha = lvl.alpha;
        ++j;
    }
    // level j failed; final parameters are the minimizer of level j-1
    report.first_level_failed = (j == 1);
    report.theta_fin = ParamVector(layout, theta_prev);
    report.total_seconds = seconds_since(t0);
    return report;
}

ReductionReport run_bisection(const FrequencySampleSet& fom_samples, const ParamVector& theta0,
                              const GammaSchedule& schedule, const OptimOptions& opts,
                              const ObjectiveOptions& objective) {
    if (schedule.mode != GammaSchedule::Mode::bisection) {
        throw DimensionError("run_bisection requires a bisection schedule");
    }
    schedule.validate();
    const auto t0 = Clock::now();
    const ParamLayout layout = theta0.layout();

    ReductionReport report;
    report.structure = layout.structure;
    report.r = layout.n_x;
    report.n_u = layout.n_u;

    double gamma_l = 0.0;
    double gamma_u = schedule.gamma_upper;
    Vector theta_j = theta0.data();
    while ((gamma_u - gamma_l) / (gamma_u + gamma_l) > schedule.eps1) {
        const double gamma = 0.5 * (gamma_u + gamma_l);
        LevelSolve lvl = solve_level(gamma, fom_samples, layout, theta_j, opts, objective);
        report.levels.push_back({gamma, lvl.alpha, lvl.iterations, lvl.seconds, lvl.termination});
        theta_j = lvl.theta;
        if (lvl.alpha > schedule.eps2) gamma_l = gamma;
        else gamma_u = gamma;
    }
    report.theta_fin = ParamVector(layout, theta_j);
    report.total_seconds = seconds_since(t0);
    return report;
}

AnyModel report_model(const ReductionReport& report) {
    if (!report.theta_fin) throw NumericalError("report has no final parameters");
    if (report.structure == Structure::ph) return assemble_ph(*report.theta_fin);
    return assemble_sso(*report.theta_fin);
}

ReductionReport sobmor_reduce(const AnyModel& fom, const SobmorOptions& opts) {
    const auto t0 = Clock::now();
    ReductionReport report;
    report.seed = opts.seed;
    report.init_method = to_string(opts.init);

    // stability advisory (desk-scale eigenvalue check)
    const Matrix A_fom = std::visit(
        [](const auto& m) -> Matrix {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, PHModel>) return (m.J - m.R) * m.Q;
            else if constexpr (std::is_same_v<T, SSOModel>)
                return sso_to_first_order_explicit(m).A;
            else return m.A;
        },
        fom);
    if (!(A_fom.eigenvalues().real().maxCoeff() < 0.0)) {
        report.warnings.push_back("FOM appears unstable; transfer function may be unbounded");
    }

    FrequencySampleSet samples = make_grid(opts.grid);
    sample_fom(fom, samples);

    const Index n_u = model_inputs(fom);
    ParamVector theta0 = [&]() -> ParamVector {
        switch (opts.init) {
            case InitMethod::random:
                return init_random(opts.structure, opts.r, n_u, opts.seed, samples);
            case InitMethod::lsq:
                return init_lsq(samples, opts.structure, opts.r, n_u, opts.seed, opts.optim,
                                opts.objective);
            case InitMethod::greedy:
            default:
                if (opts.structure == Structure::ph) {
                    if (!std::holds_alternative<PHModel>(fom)) {
                        throw StructureError(
                            "greedy init for a ph ROM requires a pH FOM; use random or lsq");
                    }
                    return init_greedy(samples, std::get<PHModel>(fom), opts.r);
                }
                if (!std::holds_alternative<SSOModel>(fom)) {
                    throw StructureError(
                        "greedy init for an SSO ROM requires an SSO FOM; use random or lsq");
                }
                return init_greedy(samples, std::get<SSOModel>(fom), opts.r, opts.structure);
        }
    }();

    GammaSchedule schedule = opts.schedule;
    if (schedule.mode == GammaSchedule::Mode::fixed_sequence && opts.rescale_gamma) {
        const double e0 = sampled_max_error(samples, theta0, opts.objective);
        if (!schedule.fixed.empty() && e0 > schedule.fixed.front()) {
            const double factor = e0 / schedule.fixed.front();
            for (double& gamma : schedule.fixed) gamma *= factor;
        }
    }

    ReductionReport inner =
        schedule.mode == GammaSchedule::Mode::fixed_sequence
            ? run_fixed_sequence(samples, theta0, schedule, opts.optim, opts.objective)
            : run_bisection(samples, theta0, schedule, opts.optim, opts.objective);
    inner.seed = report.seed;
    inner.init_method = report.init_method;
    inner.warnings.insert(inner.warnings.begin(), report.warnings.begin(),
                          report.warnings.end());
    report = std::move(inner);

    if (opts.error_estimates && report.theta_fin) {
        const AnyModel rom = report_model(report);
        FrequencySampleSet vgrid = make_grid(opts.grid.denser(opts.verification_grid_factor));
        sample_fom(fom, vgrid);
        // interpolate cached values where possible, evaluate directly otherwise
        auto err = [&](double omega) {
            const Complex s(0.0, omega);
            for (Index i = 0; i < vgrid.size(); ++i) {
                if (vgrid.omega(i) == omega) {
                    return sigma_max(vgrid.value(i) - eval_tf_any(rom, s));
                }
            }
            return sigma_max(eval_tf_any(fom, s) - eval_tf_any(rom, s));
        };
        const HinfEstimate est = hinf_estimate(err, vgrid);
        report.hinf = est.value;
        report.hinf_omega = est.omega;
        try {
            const StateSpaceModel fom_ss = std::visit(
                [](const auto& m) -> StateSpaceModel {
                    using T = std::decay_t<decltype(m)>;
                    if constexpr (std::is_same_v<T, PHModel>) return ph_to_state_space(m);
                    else if constexpr (std::is_same_v<T, SSOModel>)
                        return sso_to_first_order_explicit(m);
                    else return m;
                },
                fom);
            const StateSpaceModel rom_ss =
                std::holds_alternative<PHModel>(rom)
                    ? ph_to_state_space(std::get<PHModel>(rom))
                    : sso_to_first_order_explicit(std::get<SSOModel>(rom));
            report.h2 = h2_error(fom_ss, rom_ss);
        } catch (const std::exception& e) {
            report.warnings.push_back(std::string("H2 estimate unavailable: ") + e.what());
        }
    }
    report.total_seconds = seconds_since(t0);
    return report;
}

void write_report(const std::filesystem::path& path, const ReductionReport& report) {
    std::ofstream out(path);
    if (!out) throw NumericalError("cannot open " + path.string() + " for writing");
    out.precision(17);
    out << "structure " << to_string(report.structure) << "\n";
    out << "r " << report.r << "\n";
    out << "n_u " << report.n_u << "\n";
    out << "init_method " << report.init_method << "\n";
    out << "seed " << report.seed << "\n";
    out << "schedule_exhausted " << (report.schedule_exhausted ? 1 : 0) << "\n";
    out << "first_level_failed " << (report.first_level_failed ? 1 : 0) << "\n";
    out << "hinf_estimate " << report.hinf << "\n";
    out << "hinf_omega " << report.hinf_omega << "\n";
    out << "h2_error " << report.h2 << "\n";
    out << "total_seconds " << report.total_seconds << "\n";
    for (const auto& w : report.warnings) out << "warning " << w << "\n";
    for (std::size_t i = 0; i < report.levels.size(); ++i) {
        const auto& lvl = report.levels[i];
        out << "level " << i + 1 << "\n";
        out << "  gamma " << lvl.gamma << "\n";
        out << "  loss " << lvl.final_loss << "\n";
        out << "  iterations " << lvl.iterations << "\n";
        out << "  seconds " << lvl.seconds << "\n";
        out << "  termination " << to_string(lvl.termination) << "\n";
    }
    if (report.theta_fin) {
        out << "theta " << to_string(report.theta_fin->layout().structure) << " "
            << report.theta_fin->layout().n_x << " " << report.theta_fin->layout().n_u << "\n";
        for (Index i = 0; i < report.theta_fin->size(); ++i) {
            out << report.theta_fin->data()(i) << "\n";
        }
    }
    if (!out) throw NumericalError("failed writing " + path.string());
}

ReductionReport read_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NumericalError("cannot open " + path.string());
    ReductionReport report;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        if (key == "structure") {
            std::string v;
            ls >> v;
            report.structure = structure_from_string(v);
        } else if (key == "r") ls >> report.r;
        else if (key == "n_u") ls >> report.n_u;
        else if (key == "init_method") ls >> report.init_method;
        else if (key == "seed") ls >> report.seed;
        else if (key == "schedule_exhausted") {
            int v = 0;
            ls >> v;
            report.schedule_exhausted = v != 0;
        } else if (key == "first_level_failed") {
            int v = 0;
            ls >> v;
            report.first_level_failed = v != 0;
        } else if (key == "hinf_estimate") ls >> report.hinf;
        else if (key == "hinf_omega") ls >> report.hinf_omega;
        else if (key == "h2_error") ls >> report.h2;
        else if (key == "total_seconds") ls >> report.total_seconds;
        else if (key == "warning") {
            std::string rest;
            std::getline(ls, rest);
            report.warnings.push_back(rest.empty() ? "" : rest.substr(1));
        } else if (key == "level") {
            report.levels.push_back({});
        } else if (key == "gamma" && !report.levels.empty()) ls >> report.levels.back().gamma;
        else if (key == "loss" && !report.levels.empty()) ls >> report.levels.back().final_loss;
        else if (key == "iterations" && !report.levels.empty()) {
            ls >> report.levels.back().iterations;
        } else if (key == "seconds" && !report.levels.empty()) {
            ls >> report.levels.back().seconds;
        } else if (key == "theta") {
            std::string tag;
            Index nx = 0, nu = 0;
            ls >> tag >> nx >> nu;
            const ParamLayout layout{structure_from_string(tag), nx, nu};
            Vector data(layout.size());
            for (Index i = 0; i < data.size(); ++i) {
                if (!(in >> data(i))) throw NumericalError("truncated theta in report");
            }
            report.theta_fin = ParamVector(layout, std::move(data));
        }
    }
    return report;
}

} // namespace sobmor
