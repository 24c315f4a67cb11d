#ifndef SOBMOR_REDUCE_HPP
#define SOBMOR_REDUCE_HPP

#include <optional>

#include "sobmor/metrics.hpp"
#include "sobmor/objective.hpp"
#include "sobmor/optimizer.hpp"

namespace sobmor {

/// Gamma-level selection driving the successive leveled least-squares solves.
struct GammaSchedule {
    enum class Mode { fixed_sequence, bisection };

    Mode mode = Mode::fixed_sequence;
    std::vector<double> fixed; // strictly decreasing, positive
    double epsilon = 1e-14;    // fixed-mode termination tolerance
    double gamma_upper = 0.0;  // bisection upper bound
    double eps1 = 1e-3;        // bisection relative-gap tolerance
    double eps2 = 1e-14;       // bisection termination tolerance

    /// 300 logarithmically spaced levels from 1e-1 down to 1e-14.
    static GammaSchedule default_fixed();
    static GammaSchedule make_bisection(double gamma_upper, double eps1 = 1e-3,
                                        double eps2 = 1e-14);

    void validate() const;
};

struct LevelRecord {
    double gamma = 0.0;
    double final_loss = 0.0;
    int iterations = 0;
    double seconds = 0.0;
    Termination termination = Termination::gradient;
};

enum class InitMethod { greedy, random, lsq };
std::string to_string(InitMethod m);
InitMethod init_method_from_string(const std::string& s);

struct ReductionReport {
    Structure structure = Structure::ph;
    Index r = 0;
    Index n_u = 0;
    std::string init_method;
    unsigned seed = 0;
    std::vector<LevelRecord> levels;
    std::optional<ParamVector> theta_fin;
    bool schedule_exhausted = false;
    bool first_level_failed = false;
    double hinf = std::numeric_limits<double>::quiet_NaN();
    double hinf_omega = std::numeric_limits<double>::quiet_NaN();
    double h2 = std::numeric_limits<double>::quiet_NaN();
    double total_seconds = 0.0;
    std::vector<std::string> warnings;
};

// Initialization strategies. All return a parameter vector whose assembled
// model satisfies the structural constraints by construction.
ParamVector init_greedy(const FrequencySampleSet& fom_samples, const PHModel& fom, Index r);
ParamVector init_greedy(const FrequencySampleSet& fom_samples, const SSOModel& fom, Index r,
                        Structure layout);
ParamVector init_random(Structure structure, Index r, Index n_u, unsigned seed,
                        const FrequencySampleSet& fom_samples);
ParamVector init_lsq(const FrequencySampleSet& fom_samples, Structure structure, Index r,
                     Index n_u, unsigned seed, const OptimOptions& opts = {},
                     const ObjectiveOptions& objective = {});

/// Fixed gamma-sequence loop: optimize L(gamma_{j+1}) warm-started at theta_j
/// while the previous level's minimum stayed at or below epsilon; returns the
/// minimizer of the last successful level.
ReductionReport run_fixed_sequence(const FrequencySampleSet& fom_samples,
                                   const ParamVector& theta0, const GammaSchedule& schedule,
                                   const OptimOptions& opts = {},
                                   const ObjectiveOptions& objective = {});

/// Gamma bisection on [0, gamma_upper] with relative-gap stopping rule.
ReductionReport run_bisection(const FrequencySampleSet& fom_samples, const ParamVector& theta0,
                              const GammaSchedule& schedule, const OptimOptions& opts = {},
                              const ObjectiveOptions& objective = {});

struct SobmorOptions {
    Structure structure = Structure::ph;
    Index r = 1;
    GridSpec grid;
    GammaSchedule schedule = GammaSchedule::default_fixed();
    InitMethod init = InitMethod::greedy;
    unsigned seed = 0;
    OptimOptions optim;
    ObjectiveOptions objective;
    /// Rescale the fixed gamma sequence so its head matches the initial grid
    /// max error when that error exceeds the head.
    bool rescale_gamma = true;
    /// Attach verification-grid H-infinity and exact H2 error estimates.
    bool error_estimates = true;
    int verification_grid_factor = 10;
};

/// Full pipeline: sample the FOM once, initialize, run the selected
/// gamma-selection loop, attach error estimates.
ReductionReport sobmor_reduce(const AnyModel& fom, const SobmorOptions& opts);

/// Assembled final model of a report (throws if the report has no theta).
AnyModel report_model(const ReductionReport& report);

// Structured text document with one key-value pair per line and one "level"
// record per gamma level; the final theta is embedded at the end.
void write_report(const std::filesystem::path& path, const ReductionReport& report);
ReductionReport read_report(const std::filesystem::path& path);

} // namespace sobmor

#endif
