#ifndef SOBMOR_METRICS_HPP
#define SOBMOR_METRICS_HPP

#include <filesystem>
#include <functional>

#include "sobmor/models.hpp"

namespace sobmor {

/// Logarithmic frequency grid plus extra points (0 allowed among the extras).
struct GridSpec {
    double omega_lo = 1e-4;
    double omega_hi = 1e3;
    int count = 800;
    std::vector<double> extras;

    static GridSpec ph_default();  // 800 points in [1e-4, 1e3] + {0,1e-8,...,1e6}
    static GridSpec sso_default(); // 300 points in [1e-4, 1e3] + {0,1e-8,...,1e-4,1e4..1e6}

    GridSpec denser(int factor) const;
};

/// Sorted union of the log grid and the extras, duplicates removed.
FrequencySampleSet make_grid(const GridSpec& spec);

/// Hook for user-supplied (e.g. sparse) FOM evaluation.
using FomEvaluator = std::function<ComplexMatrix(Complex)>;

/// Caches G(s_i) for every grid point; a set that already has values is left
/// untouched, so repeated calls perform no further solves.
void sample_fom(const AnyModel& fom, FrequencySampleSet& grid);
void sample_fom(const FomEvaluator& fom, FrequencySampleSet& grid);

struct HinfEstimate {
    double value = 0.0;
    double omega = 0.0;
};

/// Grid max of err followed by golden-section refinement on the bracketing
/// interval (log scale where possible) to relative width 1e-6. Never below
/// the grid max.
HinfEstimate hinf_estimate(const std::function<double(double)>& err,
                           const FrequencySampleSet& grid);

/// Exact H2 error via the controllability Gramian of the stacked error system.
/// Both systems must be asymptotically stable with equal feedthrough.
double h2_error(const StateSpaceModel& fom, const StateSpaceModel& rom);

/// CSV export "omega,sigma_max_error" with one row per grid point.
void write_error_curve_csv(const std::filesystem::path& path,
                           const std::function<double(double)>& err,
                           const FrequencySampleSet& grid);

// Text cache of FOM samples: header "samples k n_y n_u", then per point an
// "omega <value>" line followed by n_y rows of re/im pairs.
void save_sample_set(const std::filesystem::path& path, const FrequencySampleSet& samples);
FrequencySampleSet load_sample_set(const std::filesystem::path& path);

} // namespace sobmor

#endif
