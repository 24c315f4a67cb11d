#include "sobmor/metrics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sobmor/baselines.hpp"

namespace sobmor {

GridSpec GridSpec::ph_default() {
    GridSpec spec;
    spec.omega_lo = 1e-4;
    spec.omega_hi = 1e3;
    spec.count = 800;
    spec.extras = {0.0, 1e-8, 1e-7, 1e-6, 1e4, 1e5, 1e6};
    return spec;
}

GridSpec GridSpec::sso_default() {
    GridSpec spec;
    spec.omega_lo = 1e-4;
    spec.omega_hi = 1e3;
    spec.count = 300;
    spec.extras = {0.0, 1e-8, 1e-7, 1e-6, 1e-4, 1e4, 1e5, 1e6};
    return spec;
}

GridSpec GridSpec::denser(int factor) const {
    GridSpec spec = *this;
    spec.count *= factor;
    return spec;
}

FrequencySampleSet make_grid(const GridSpec& spec) {
    if (!(spec.omega_lo > 0.0) || !(spec.omega_hi > spec.omega_lo) || spec.count < 2) {
        throw DimensionError("grid spec requires 0 < omega_lo < omega_hi and count >= 2");
    }
    std::vector<double> omegas;
    omegas.reserve(static_cast<std::size_t>(spec.count) + spec.extras.size());
    const double llo = std::log10(spec.omega_lo);
    const double lhi = std::log10(spec.omega_hi);
    for (int i = 0; i < spec.count; ++i) {
        omegas.push_back(std::pow(10.0, llo + (lhi - llo) * i / (spec.count - 1)));
    }
    for (double w : spec.extras) {
        if (w < 0.0) throw DimensionError("grid extras must be nonnegative");
        omegas.push_back(w);
    }
    std::sort(omegas.begin(), omegas.end());
    std::vector<double> unique;
    for (double w : omegas) {
        if (unique.empty() || w - unique.back() > 1e-12 * std::max(1.0, w)) {
            unique.push_back(w);
        }
    }
    return FrequencySampleSet(std::move(unique));
}

void sample_fom(const AnyModel& fom, FrequencySampleSet& grid) {
    sample_fom([&fom](Complex s) { return eval_tf_any(fom, s); }, grid);
}

void sample_fom(const FomEvaluator& fom, FrequencySampleSet& grid) {
    if (grid.has_values()) return; // cache hit
    std::vector<ComplexMatrix> values;
    values.reserve(static_cast<std::size_t>(grid.size()));
    for (Index i = 0; i < grid.size(); ++i) {
        try {
            values.push_back(fom(grid.point(i)));
        } catch (const SingularPencilError&) {
            std::ostringstream os;
            os << "FOM evaluation failed at omega = " << grid.omega(i);
            throw SingularPencilError(os.str(), grid.point(i));
        }
    }
    grid.set_values(std::move(values));
}

namespace {

// Golden-section maximization of fn over [lo, hi] (plain coordinates).
std::pair<double, double> golden_max(const std::function<double(double)>& fn, double lo,
                                     double hi, double rel_width) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = fn(x1), f2 = fn(x2);
    const double scale = std::max({std::abs(lo), std::abs(hi), 1e-300});
    for (int it = 0; it < 200 && (b - a) > rel_width * scale; ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = fn(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = fn(x1);
        }
    }
    return f1 > f2 ? std::make_pair(x1, f1) : std::make_pair(x2, f2);
}

} // namespace

HinfEstimate hinf_estimate(const std::function<double(double)>& err,
                           const FrequencySampleSet& grid) {
    if (grid.size() < 1) throw DimensionError("empty grid");
    Index kmax = 0;
    double fmax = -1.0;
    std::vector<double> vals(static_cast<std::size_t>(grid.size()));
    for (Index i = 0; i < grid.size(); ++i) {
        vals[static_cast<std::size_t>(i)] = err(grid.omega(i));
        if (vals[static_cast<std::size_t>(i)] > fmax) {
            fmax = vals[static_cast<std::size_t>(i)];
            kmax = i;
        }
    }
    HinfEstimate est{fmax, grid.omega(kmax)};
    const double lo = grid.omega(std::max<Index>(kmax - 1, 0));
    const double hi = grid.omega(std::min<Index>(kmax + 1, grid.size() - 1));
    if (hi <= lo) return est;

    std::pair<double, double> refined;
    if (lo > 0.0) {
        // refine in log coordinates
        auto fn = [&](double t) { return err(std::pow(10.0, t)); };
        auto [t, v] = golden_max(fn, std::log10(lo), std::log10(hi), 1e-6 / std::log(10.0));
        refined = {std::pow(10.0, t), v};
    } else {
        refined = golden_max(err, lo, hi, 1e-6);
    }
    if (refined.second > est.value) {
        est.value = refined.second;
        est.omega = refined.first;
    }
    return est;
}

double h2_error(const StateSpaceModel& fom, const StateSpaceModel& rom) {
    if (fom.inputs() != rom.inputs() || fom.outputs() != rom.outputs()) {
        throw DimensionError("h2_error: dimension mismatch");
    }
    const double dscale = std::max({1.0, fom.D.cwiseAbs().maxCoeff(), rom.D.cwiseAbs().maxCoeff()});
    if ((fom.D - rom.D).cwiseAbs().maxCoeff() > 1e-12 * dscale) {
        throw NumericalError("h2_error: feedthrough terms differ, H2 error is infinite");
    }
    for (const auto* m : {&fom, &rom}) {
        const double abscissa = m->A.eigenvalues().real().maxCoeff();
        if (!(abscissa < 0.0)) {
            throw NumericalError("h2_error requires asymptotically stable systems");
        }
    }
    const Index n1 = fom.order(), n2 = rom.order();
    Matrix Ae = Matrix::Zero(n1 + n2, n1 + n2);
    Ae.topLeftCorner(n1, n1) = fom.A;
    Ae.bottomRightCorner(n2, n2) = rom.A;
    Matrix Be(n1 + n2, fom.inputs());
    Be.topRows(n1) = fom.B;
    Be.bottomRows(n2) = rom.B;
    Matrix Ce(fom.outputs(), n1 + n2);
    Ce.leftCols(n1) = fom.C;
    Ce.rightCols(n2) = -rom.C;
    const Matrix Pe = lyap_solve(Ae, Be * Be.transpose());
    return std::sqrt(std::max(0.0, (Ce * Pe * Ce.transpose()).trace()));
}

void write_error_curve_csv(const std::filesystem::path& path,
                           const std::function<double(double)>& err,
                           const FrequencySampleSet& grid) {
    std::ofstream out(path);
    if (!out) throw NumericalError("cannot open " + path.string() + " for writing");
    out << "omega,sigma_max_error\n";
    out.precision(17);
    for (Index i = 0; i < grid.size(); ++i) {
        out << grid.omega(i) << "," << err(grid.omega(i)) << "\n";
    }
    if (!out) throw NumericalError("failed writing " + path.string());
}

void save_sample_set(const std::filesystem::path& path, const FrequencySampleSet& samples) {
    if (!samples.has_values()) throw NumericalError("sample set has no cached values");
    std::ofstream out(path);
    if (!out) throw NumericalError("cannot open " + path.string() + " for writing");
    const Index ny = samples.value(0).rows();
    const Index nu = samples.value(0).cols();
    out << "samples " << samples.size() << " " << ny << " " << nu << "\n";
    out.precision(17);
    for (Index i = 0; i < samples.size(); ++i) {
        out << "omega " << samples.omega(i) << "\n";
        const ComplexMatrix& G = samples.value(i);
        for (Index r = 0; r < ny; ++r) {
            for (Index c = 0; c < nu; ++c) {
                out << G(r, c).real() << " " << G(r, c).imag() << (c + 1 == nu ? "" : " ");
            }
            out << "\n";
        }
    }
    if (!out) throw NumericalError("failed writing " + path.string());
}

FrequencySampleSet load_sample_set(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NumericalError("cannot open " + path.string());
    auto fail = [&](long line, const std::string& what) -> NumericalError {
        return NumericalError(path.string() + ":" + std::to_string(line) + ": " + what);
    };
    std::string tag;
    Index k = 0, ny = 0, nu = 0;
    long line = 1;
    if (!(in >> tag >> k >> ny >> nu) || tag != "samples" || k < 1 || ny < 1 || nu < 1) {
        throw fail(line, "malformed sample file header");
    }
    std::vector<double> omegas(static_cast<std::size_t>(k));
    std::vector<ComplexMatrix> values;
    values.reserve(static_cast<std::size_t>(k));
    for (Index i = 0; i < k; ++i) {
        ++line;
        if (!(in >> tag >> omegas[static_cast<std::size_t>(i)]) || tag != "omega") {
            throw fail(line, "expected 'omega <value>'");
        }
        ComplexMatrix G(ny, nu);
        for (Index r = 0; r < ny; ++r) {
            ++line;
            for (Index c = 0; c < nu; ++c) {
                double re = 0.0, im = 0.0;
                if (!(in >> re >> im)) throw fail(line, "expected re/im pair");
                G(r, c) = Complex(re, im);
            }
        }
        values.push_back(std::move(G));
    }
    FrequencySampleSet out(std::move(omegas));
    out.set_values(std::move(values));
    return out;
}

} // namespace sobmor
