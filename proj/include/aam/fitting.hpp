#pragma once

#include <cstdint>
#include <vector>

#include "aam/model.hpp"

namespace aam {

struct FitConfig {
    int max_iterations = 300;
    double rel_cost_tolerance = 1e-5;
    int n_restarts = 10;
    double noise_scale = 0.05;       // multiplicative, relative
    double noise_translation = 0.02; // times face size
    double noise_rotation = 0.0524;  // radians, ~3 degrees
    std::uint64_t rng_seed = 0;
};

struct FitResult {
    Shape shape; // image frame
    ShapeParams shape_params;
    AppearanceParams appearance_params;
    std::vector<double> cost_trace; // per accepted iterate, nonincreasing
    bool converged = false;
    bool diverged = false;
    int restart_index = 0; // 0 = base initialization

    double final_cost() const { return cost_trace.back(); }
    int iterations() const { return static_cast<int>(cost_trace.size()) - 1; }
};

struct Rect {
    double x = 0, y = 0, width = 0, height = 0;
    Eigen::Vector2d center() const { return {x + width / 2, y + height / 2}; }
};

Rect bounding_rect(const Shape& s);

/// Project-out inverse-compositional Gauss-Newton fitter. Precomputes the
/// steepest-descent images and Hessian for one model; instances are
/// immutable after construction and safe to share across threads.
class Fitter {
  public:
    explicit Fitter(const AamModel& model);

    /// Scale + translation placing the model mean into the bounding box;
    /// rotation zero, local components zero.
    ShapeParams base_initialization(const Rect& bbox) const;

    FitResult fit(const Image& image, const ShapeParams& init, const FitConfig& config) const;

    /// Base initialization plus n_restarts Gaussian-perturbed starts;
    /// returns the lowest-cost result. Deterministic given config.rng_seed.
    FitResult fit_with_restarts(const Image& image, const Rect& bbox,
                                const FitConfig& config) const;

    const AamModel& model() const { return *model_; }
    const Shape& reference_shape() const { return model_->appearance.frame.mesh.vertices; }

    /// Per-pixel mean squared residual orthogonal to the appearance basis.
    double projected_cost(const Vector& residual) const;

    /// Appearance of the template warped within the reference frame by the
    /// incremental parameters dp; used to validate the analytic gradient.
    Vector warp_template(const Vector& dp) const;

    /// Analytic gradient of the projected cost of warp_template residuals
    /// with respect to dp, at dp = 0: -(2/L) SD^T r.
    Vector cost_gradient(const Vector& residual) const;

    Index num_params() const { return model_->shape.basis.size(); }

  private:
    Shape shape_at(const Vector& p) const;
    Vector compose_inverse(const Vector& p, const Vector& delta) const;
    ShapeParams params_for_similarity_placement(const Shape& placed) const;

    const AamModel* model_;
    Matrix sd_;           // L x P steepest descent images, appearance projected out
    Matrix sd_t_;         // P x L, cached transpose
    Eigen::LDLT<Matrix> hessian_;
    Image template_raster_; // mean appearance on the frame, zero outside mask
};

ShapeParams base_initialization(const AamModel& model, const Rect& bbox);
FitResult fit_single(const AamModel& model, const Image& image, const ShapeParams& init,
                     const FitConfig& config);
FitResult fit_with_restarts(const AamModel& model, const Image& image, const Rect& bbox,
                            const FitConfig& config);

} // namespace aam
