#pragma once

#include <string>
#include <vector>

#include "aam/fitting.hpp"
#include "aam/transfer.hpp"

namespace aam {

/// Normalized RMS below this counts as converged in reports and sweeps.
inline constexpr double kConvergenceRmsThreshold = 0.05;

/// sqrt(mean squared point distance) / face_size(truth).
double normalized_rms(const Shape& fitted, const Shape& truth);

struct CurvePoint {
    double tolerance;
    double fraction;
};

/// For each tolerance, the fraction of errors at or below it. Tolerances
/// must be sorted ascending; errors must be non-empty.
std::vector<CurvePoint> convergence_curve(const std::vector<double>& errors,
                                          const std::vector<double>& tolerances);

/// 64 log-spaced tolerances in [0.005, 0.2].
std::vector<double> default_tolerance_grid();

struct EvalExample {
    std::string id;
    double normalized_rms = 0.0;
    int converged_iterations = 0;
    bool fitter_converged = false;
    bool failed = false; // fit raised an error; rms is +inf
};

struct EvalReport {
    std::string model_name;
    std::vector<EvalExample> per_example;
    std::vector<CurvePoint> curve;
    double mean_rms_over_converged = 0.0; // over examples with rms < 0.05
    std::vector<double> mean_cost_trace;  // averaged over the same examples

    double fraction_at(double tolerance) const;
};

struct EvalOptions {
    std::vector<double> tolerances = default_tolerance_grid();
    int workers = 1;
};

/// Fits one model to every test example (bounding boxes from the ground
/// truth) and assembles the report. Per-example failures are recorded, not
/// fatal. Deterministic: example i uses rng seed fork(config.rng_seed, i).
EvalReport evaluate_model(const AamModel& model, const std::string& model_name,
                          const std::vector<Example>& test_set, const FitConfig& fit_config,
                          const EvalOptions& options = {});

/// One report per model, same test set and protocol for each.
std::vector<EvalReport> run_comparison(const std::vector<const AamModel*>& models,
                                       const std::vector<std::string>& names,
                                       const std::vector<Example>& test_set,
                                       const FitConfig& fit_config,
                                       const EvalOptions& options = {});

struct CrossValidationCell {
    Index d;
    double mean_rms;
};

struct CrossValidationResult {
    Index d_shape = 0;
    Index d_appearance = 0;
    std::vector<CrossValidationCell> shape_scores;
    std::vector<CrossValidationCell> appearance_scores;
};

/// Leave-one-out selection of D over the grid: shape first with the
/// appearance d fixed at the grid median, then appearance with the chosen
/// shape d. Ties resolve to the smaller d.
CrossValidationResult cross_validate_d(const std::vector<Example>& target_train,
                                       const AamModel& source_model,
                                       const std::vector<Index>& d_grid,
                                       const FitConfig& fit_config,
                                       const TrainOptions& train_options,
                                       Ordering ordering = Ordering::TargetVariance,
                                       int workers = 1);

struct SweepRow {
    Index d;
    Ordering ordering;
    double fraction_converged; // at kConvergenceRmsThreshold
};

/// For each d, builds the transferred model under both orderings (d applied
/// to shape and appearance, capped at each part's component count) and
/// records the fraction of test examples converged at 0.05.
std::vector<SweepRow> ordering_sweep(const TrainedAam& target, const AamModel& source,
                                     const std::vector<Example>& test_set,
                                     const std::vector<Index>& d_values,
                                     const FitConfig& fit_config,
                                     const EvalOptions& options = {});

} // namespace aam
