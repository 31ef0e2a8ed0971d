#include "aam/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "aam/rng.hpp"

namespace aam {

double normalized_rms(const Shape& fitted, const Shape& truth) {
    if (fitted.num_points() != truth.num_points())
        throw DimensionError("normalized_rms: landmark count mismatch");
    const Index v = truth.num_points();
    double ss = 0.0;
    for (Index i = 0; i < v; ++i) ss += (fitted.point(i) - truth.point(i)).squaredNorm();
    return std::sqrt(ss / static_cast<double>(v)) / face_size(truth);
}

std::vector<CurvePoint> convergence_curve(const std::vector<double>& errors,
                                          const std::vector<double>& tolerances) {
    if (errors.empty()) throw DegenerateInputError("convergence_curve: no errors");
    if (!std::is_sorted(tolerances.begin(), tolerances.end()))
        throw ConfigError("convergence_curve: tolerances must be sorted ascending");
    std::vector<CurvePoint> curve;
    curve.reserve(tolerances.size());
    for (double t : tolerances) {
        Index count = 0;
        for (double e : errors)
            if (e <= t) ++count;
        curve.push_back({t, static_cast<double>(count) / static_cast<double>(errors.size())});
    }
    return curve;
}

std::vector<double> default_tolerance_grid() {
    constexpr int kPoints = 64;
    constexpr double lo = 0.005, hi = 0.2;
    std::vector<double> grid(kPoints);
    for (int i = 0; i < kPoints; ++i)
        grid[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (kPoints - 1));
    return grid;
}

double EvalReport::fraction_at(double tolerance) const {
    Index count = 0;
    for (const EvalExample& e : per_example)
        if (!e.failed && e.normalized_rms <= tolerance) ++count;
    return per_example.empty()
               ? 0.0
               : static_cast<double>(count) / static_cast<double>(per_example.size());
}

namespace {

void parallel_for(Index n, int workers, const std::function<void(Index)>& body) {
    if (workers <= 1 || n <= 1) {
        for (Index i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<Index> next{0};
    auto run = [&] {
        for (Index i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
    };
    std::vector<std::thread> pool;
    const int count = std::min<int>(workers, static_cast<int>(n));
    pool.reserve(count);
    for (int t = 0; t < count; ++t) pool.emplace_back(run);
    for (auto& t : pool) t.join();
}

struct FitOutcome {
    FitResult result;
    double rms = std::numeric_limits<double>::infinity();
    bool failed = false;
};

std::vector<FitOutcome> fit_test_set(const Fitter& fitter, const std::vector<Example>& test_set,
                                     const FitConfig& fit_config, int workers) {
    std::vector<FitOutcome> outcomes(test_set.size());
    Rng base(fit_config.rng_seed);
    parallel_for(static_cast<Index>(test_set.size()), workers, [&](Index i) {
        const Example& ex = test_set[static_cast<size_t>(i)];
        FitOutcome& out = outcomes[static_cast<size_t>(i)];
        try {
            FitConfig cfg = fit_config;
            // Independent, scheduling-invariant stream per example.
            Rng fork = base.fork(static_cast<std::uint64_t>(i) + 1);
            cfg.rng_seed = static_cast<std::uint64_t>(fork.below(UINT64_MAX));
            out.result =
                fitter.fit_with_restarts(ex.image, bounding_rect(ex.shape), cfg);
            out.rms = normalized_rms(out.result.shape, ex.shape);
            if (!std::isfinite(out.rms)) {
                out.failed = true;
                out.rms = std::numeric_limits<double>::infinity();
            }
        } catch (const Error&) {
            out.failed = true;
        }
    });
    return outcomes;
}

} // namespace

EvalReport evaluate_model(const AamModel& model, const std::string& model_name,
                          const std::vector<Example>& test_set, const FitConfig& fit_config,
                          const EvalOptions& options) {
    if (test_set.empty()) throw DegenerateInputError("evaluate_model: empty test set");
    const Fitter fitter(model);
    const std::vector<FitOutcome> outcomes =
        fit_test_set(fitter, test_set, fit_config, options.workers);

    EvalReport report;
    report.model_name = model_name;
    std::vector<double> errors;
    errors.reserve(outcomes.size());
    for (size_t i = 0; i < outcomes.size(); ++i) {
        const FitOutcome& out = outcomes[i];
        EvalExample e;
        e.id = test_set[i].id;
        e.normalized_rms = out.rms;
        e.converged_iterations = out.failed ? 0 : out.result.iterations();
        e.fitter_converged = !out.failed && out.result.converged;
        e.failed = out.failed;
        report.per_example.push_back(std::move(e));
        errors.push_back(out.rms);
    }
    report.curve = convergence_curve(errors, options.tolerances);

    // Accuracy and cost statistics over the converged subset, mirroring the
    // usual per-iteration accuracy curves.
    double rms_sum = 0.0;
    Index rms_count = 0;
    size_t max_trace = 0;
    for (size_t i = 0; i < outcomes.size(); ++i) {
        if (outcomes[i].failed || outcomes[i].rms >= kConvergenceRmsThreshold) continue;
        rms_sum += outcomes[i].rms;
        ++rms_count;
        max_trace = std::max(max_trace, outcomes[i].result.cost_trace.size());
    }
    report.mean_rms_over_converged = rms_count ? rms_sum / rms_count : 0.0;
    if (rms_count > 0) {
        report.mean_cost_trace.assign(max_trace, 0.0);
        for (size_t i = 0; i < outcomes.size(); ++i) {
            if (outcomes[i].failed || outcomes[i].rms >= kConvergenceRmsThreshold) continue;
            const auto& trace = outcomes[i].result.cost_trace;
            for (size_t k = 0; k < max_trace; ++k)
                report.mean_cost_trace[k] +=
                    (k < trace.size() ? trace[k] : trace.back()) / rms_count;
        }
    }
    return report;
}

std::vector<EvalReport> run_comparison(const std::vector<const AamModel*>& models,
                                       const std::vector<std::string>& names,
                                       const std::vector<Example>& test_set,
                                       const FitConfig& fit_config, const EvalOptions& options) {
    if (models.size() != names.size())
        throw ConfigError("run_comparison: model/name count mismatch");
    const Index v = test_set.empty() ? 0 : test_set.front().shape.num_points();
    for (const AamModel* m : models)
        if (m->num_points() != v)
            throw DimensionError("run_comparison: models do not share the landmark scheme");

    std::vector<EvalReport> reports;
    reports.reserve(models.size());
    for (size_t i = 0; i < models.size(); ++i)
        reports.push_back(evaluate_model(*models[i], names[i], test_set, fit_config, options));
    return reports;
}

CrossValidationResult cross_validate_d(const std::vector<Example>& target_train,
                                       const AamModel& source_model,
                                       const std::vector<Index>& d_grid,
                                       const FitConfig& fit_config,
                                       const TrainOptions& train_options, Ordering ordering,
                                       int workers) {
    if (d_grid.empty()) throw ConfigError("cross_validate_d: empty d grid");
    if (target_train.size() < 3)
        throw DegenerateInputError(
            "cross_validate_d: need at least 3 target examples for leave-one-out");

    std::vector<Index> grid = d_grid;
    std::sort(grid.begin(), grid.end());
    const Index k_source = source_model.shape.num_local();
    const Index m_source = source_model.appearance.basis.size();
    for (Index d : grid) {
        if (d < 0 || d > k_source || d > m_source)
            throw ConfigError("cross_validate_d: d exceeds available source components");
    }
    const Index d_median = grid[grid.size() / 2];

    const size_t n = target_train.size();
    struct Fold {
        TrainedAam trained;
        const Example* held_out;
    };
    std::vector<Fold> folds;
    folds.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        std::vector<Example> rest;
        rest.reserve(n - 1);
        for (size_t j = 0; j < n; ++j)
            if (j != i) rest.push_back(target_train[j]);
        folds.push_back({train_aam(rest, train_options), &target_train[i]});
    }

    auto mean_rms_for = [&](Index d_shape_val, Index d_app_val) {
        std::vector<double> rms(n, std::numeric_limits<double>::infinity());
        parallel_for(static_cast<Index>(n), workers, [&](Index i) {
            const Fold& fold = folds[static_cast<size_t>(i)];
            TransferConfig cfg;
            cfg.d_shape = d_shape_val;
            cfg.d_appearance = d_app_val;
            cfg.ordering = ordering;
            const AamModel transferred = transfer_model(fold.trained, source_model, cfg);
            const Fitter fitter(transferred);
            FitConfig fit_cfg = fit_config;
            fit_cfg.rng_seed = Rng(fit_config.rng_seed).fork(static_cast<std::uint64_t>(i)).below(UINT64_MAX);
            const FitResult res = fitter.fit_with_restarts(
                fold.held_out->image, bounding_rect(fold.held_out->shape), fit_cfg);
            rms[static_cast<size_t>(i)] = normalized_rms(res.shape, fold.held_out->shape);
        });
        double sum = 0.0;
        for (double r : rms) sum += r;
        return sum / static_cast<double>(n);
    };

    CrossValidationResult result;
    double best = std::numeric_limits<double>::infinity();
    for (Index d : grid) {
        const double score = mean_rms_for(d, d_median);
        result.shape_scores.push_back({d, score});
        if (score < best) { // strict: ties keep the smaller d
            best = score;
            result.d_shape = d;
        }
    }
    best = std::numeric_limits<double>::infinity();
    for (Index d : grid) {
        const double score = mean_rms_for(result.d_shape, d);
        result.appearance_scores.push_back({d, score});
        if (score < best) {
            best = score;
            result.d_appearance = d;
        }
    }
    return result;
}

std::vector<SweepRow> ordering_sweep(const TrainedAam& target, const AamModel& source,
                                     const std::vector<Example>& test_set,
                                     const std::vector<Index>& d_values,
                                     const FitConfig& fit_config, const EvalOptions& options) {
    const Index k_source = source.shape.num_local();
    const Index m_source = source.appearance.basis.size();
    std::vector<SweepRow> rows;
    for (Index d : d_values) {
        if (d < 0 || d > std::max(k_source, m_source))
            throw ConfigError("ordering_sweep: d out of range");
        for (Ordering ordering : {Ordering::TargetVariance, Ordering::SourceEigenvalue}) {
            TransferConfig cfg;
            cfg.d_shape = std::min(d, k_source);
            cfg.d_appearance = std::min(d, m_source);
            cfg.ordering = ordering;
            const AamModel model = transfer_model(target, source, cfg);
            const EvalReport report =
                evaluate_model(model, to_string(ordering), test_set, fit_config, options);
            rows.push_back({d, ordering, report.fraction_at(kConvergenceRmsThreshold)});
        }
    }
    return rows;
}

} // namespace aam
