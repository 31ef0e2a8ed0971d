#include "aam/fitting.hpp"

#include <cmath>
#include <limits>

#include "aam/rng.hpp"

namespace aam {

Rect bounding_rect(const Shape& s) {
    const AxisAlignedBox b = bounding_box(s);
    return Rect{b.min_x, b.min_y, b.width(), b.height()};
}

namespace {

/// Clamped central differences; consistent with how bilinear sampling of the
/// same raster behaves, so analytic and numeric gradients of the warped
/// template agree.
void raster_gradient(const Image& img, Image& gx, Image& gy) {
    const int w = img.width(), h = img.height();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int xm = std::max(x - 1, 0), xp = std::min(x + 1, w - 1);
            const int ym = std::max(y - 1, 0), yp = std::min(y + 1, h - 1);
            gx.at(x, y) = (img.at(xp, y) - img.at(xm, y)) / 2.0;
            gy.at(x, y) = (img.at(x, yp) - img.at(x, ym)) / 2.0;
        }
    }
}

} // namespace

Fitter::Fitter(const AamModel& model) : model_(&model) {
    const ReferenceFrame& frame = model.appearance.frame;
    if (model.shape.num_points() != frame.num_points())
        throw DimensionError("Fitter: shape model and reference frame disagree");

    template_raster_ = frame.unvectorize(model.appearance.mean);
    Image gx(frame.width, frame.height), gy(frame.width, frame.height);
    raster_gradient(template_raster_, gx, gy);

    // dW/dp is exactly linear in p: each masked pixel is a fixed barycentric
    // combination of mesh vertices, and vertices move as mu + Phi p.
    const Matrix& basis = model.shape.basis.columns;
    const Index P = basis.cols();
    const Index L = frame.L;
    sd_.resize(L, P);
    for (Index k = 0; k < L; ++k) {
        const int x = frame.masked_xy[2 * k];
        const int y = frame.masked_xy[2 * k + 1];
        const size_t idx = static_cast<size_t>(y) * frame.width + x;
        const auto& tri = frame.mesh.triangles[frame.table.triangle[idx]];
        const auto& [alpha, beta, gamma] = frame.table.barycentric[idx];
        const double gxv = gx.at(x, y), gyv = gy.at(x, y);
        for (Index m = 0; m < P; ++m) {
            const double jx = alpha * basis(2 * tri[0], m) + beta * basis(2 * tri[1], m) +
                              gamma * basis(2 * tri[2], m);
            const double jy = alpha * basis(2 * tri[0] + 1, m) + beta * basis(2 * tri[1] + 1, m) +
                              gamma * basis(2 * tri[2] + 1, m);
            sd_(k, m) = gxv * jx + gyv * jy;
        }
    }
    // Project out the appearance subspace.
    const Matrix& psi = model.appearance.basis.columns;
    if (psi.cols() > 0) sd_ -= psi * (psi.transpose() * sd_);
    sd_t_ = sd_.transpose();
    hessian_ = Eigen::LDLT<Matrix>(sd_t_ * sd_);
}

double Fitter::projected_cost(const Vector& residual) const {
    const Matrix& psi = model_->appearance.basis.columns;
    double ss = residual.squaredNorm();
    if (psi.cols() > 0) ss -= (psi.transpose() * residual).squaredNorm();
    return std::max(ss, 0.0) / static_cast<double>(model_->appearance.frame.L);
}

Vector Fitter::warp_template(const Vector& dp) const {
    const ReferenceFrame& frame = model_->appearance.frame;
    Shape moved(frame.mesh.vertices.points + model_->shape.basis.columns * dp);
    return sample_appearance(frame, template_raster_, moved);
}

Vector Fitter::cost_gradient(const Vector& residual) const {
    return -2.0 / static_cast<double>(model_->appearance.frame.L) * (sd_t_ * residual);
}

Shape Fitter::shape_at(const Vector& p) const {
    return Shape(reference_shape().points + model_->shape.basis.columns * p);
}

ShapeParams Fitter::params_for_similarity_placement(const Shape& placed) const {
    // placed must be a similarity transform of the reference shape, which the
    // global columns represent exactly; the projection is then lossless.
    return ShapeParams{model_->shape.basis.columns.transpose() *
                       (placed.points - reference_shape().points)};
}

ShapeParams Fitter::base_initialization(const Rect& bbox) const {
    if (bbox.width <= 0 || bbox.height <= 0)
        throw GeometryError("base_initialization: bounding box has no area");
    const Shape& mu = reference_shape();
    const AxisAlignedBox mu_box = bounding_box(mu);
    const double scale = (bbox.width / mu_box.width() + bbox.height / mu_box.height()) / 2.0;

    SimilarityTransform t;
    t.scale = scale;
    t.translation = bbox.center() - scale * mu_box.center();
    return params_for_similarity_placement(t.apply(mu));
}

Vector Fitter::compose_inverse(const Vector& p, const Vector& delta) const {
    // W(p) composed with W(delta)^{-1}, to first order: reference points move
    // by -Phi delta, and the increment is carried into the image frame by the
    // linear part of the current global similarity, which the global
    // parameters encode exactly.
    const Index n_global = model_->shape.n_global;
    const Shape& mu = reference_shape();
    Shape placed(mu.points +
                 model_->shape.basis.columns.leftCols(n_global) * p.head(n_global));
    const SimilarityTransform pose = optimal_similarity(mu, placed);
    const Eigen::Matrix2d m = pose.linear();

    Vector ds = model_->shape.basis.columns * delta;
    for (Index i = 0; i < mu.num_points(); ++i)
        ds.segment<2>(2 * i) = m * ds.segment<2>(2 * i);

    const Vector s_new = shape_at(p).points - ds;
    return model_->shape.basis.columns.transpose() * (s_new - mu.points);
}

FitResult Fitter::fit(const Image& image, const ShapeParams& init,
                      const FitConfig& config) const {
    if (init.p.size() != num_params())
        throw DimensionError("fit: parameter count does not match model");

    const ReferenceFrame& frame = model_->appearance.frame;
    const Vector& nu = model_->appearance.mean;

    FitResult result;
    Vector p = init.p;

    auto evaluate = [&](const Vector& params, Vector& a, Vector& r, double& cost) -> bool {
        Shape s = shape_at(params);
        if (!s.points.allFinite()) return false;
        // A shape entirely outside the image samples nothing but border
        // clamp; treat it as having left the image.
        const AxisAlignedBox box = bounding_box(s);
        if (box.max_x < 0 || box.min_x > image.width() - 1 || box.max_y < 0 ||
            box.min_y > image.height() - 1)
            return false;
        a = sample_appearance(frame, image, s);
        r = a - nu;
        cost = projected_cost(r);
        return std::isfinite(cost);
    };

    Vector a, r;
    double cost = 0.0;
    if (!evaluate(p, a, r, cost)) {
        result.shape = Shape(Vector::Zero(reference_shape().points.size()));
        result.shape_params = ShapeParams{p};
        result.appearance_params = AppearanceParams{Vector::Zero(model_->appearance.basis.size())};
        result.cost_trace = {std::numeric_limits<double>::infinity()};
        result.diverged = true;
        return result;
    }
    result.cost_trace.push_back(cost);

    constexpr int kMaxHalvings = 8;
    for (int iter = 0; iter < config.max_iterations; ++iter) {
        const Vector delta = hessian_.solve(sd_t_ * r);

        bool accepted = false;
        double step = 1.0;
        Vector p_new, a_new, r_new;
        double cost_new = 0.0;
        for (int h = 0; h <= kMaxHalvings; ++h) {
            Vector candidate;
            try {
                candidate = compose_inverse(p, step * delta);
            } catch (const DegenerateInputError&) {
                result.diverged = true;
                break;
            }
            if (evaluate(candidate, a_new, r_new, cost_new) && cost_new <= cost) {
                p_new = std::move(candidate);
                accepted = true;
                break;
            }
            step /= 2.0;
        }
        if (!accepted) break; // cost cannot decrease along the step

        const double rel = std::abs(cost - cost_new) / std::max(cost, 1e-12);
        p = std::move(p_new);
        a = std::move(a_new);
        r = std::move(r_new);
        cost = cost_new;
        result.cost_trace.push_back(cost);
        if (rel < config.rel_cost_tolerance) {
            result.converged = true;
            break;
        }
    }

    result.shape = shape_at(p);
    result.shape_params = ShapeParams{std::move(p)};
    result.appearance_params =
        AppearanceParams{model_->appearance.basis.columns.transpose() * (a - nu)};
    return result;
}

FitResult Fitter::fit_with_restarts(const Image& image, const Rect& bbox,
                                    const FitConfig& config) const {
    const ShapeParams base = base_initialization(bbox);
    const Shape& mu = reference_shape();
    const Shape base_shape(mu.points +
                           model_->shape.basis.columns * base.p);
    const double bbox_face = (bbox.width + bbox.height) / 2.0;

    FitResult best = fit(image, base, config);
    best.restart_index = 0;

    Rng rng(config.rng_seed);
    for (int j = 1; j <= config.n_restarts; ++j) {
        Rng stream = rng.fork(static_cast<std::uint64_t>(j));
        SimilarityTransform perturb;
        perturb.scale = std::max(0.1, 1.0 + stream.normal(0.0, config.noise_scale));
        perturb.rotation = stream.normal(0.0, config.noise_rotation);
        // Perturb about the bbox center so rotation/scale do not double as
        // large translations.
        const Eigen::Vector2d c = bbox.center();
        perturb.translation =
            c - perturb.linear() * c +
            Eigen::Vector2d(stream.normal(0.0, config.noise_translation * bbox_face),
                            stream.normal(0.0, config.noise_translation * bbox_face));

        const Shape init_shape = perturb.apply(base_shape);
        FitResult candidate = fit(image, params_for_similarity_placement(init_shape), config);
        candidate.restart_index = j;
        if (best.diverged ||
            (!candidate.diverged && candidate.final_cost() < best.final_cost()))
            best = std::move(candidate);
    }
    return best;
}

ShapeParams base_initialization(const AamModel& model, const Rect& bbox) {
    return Fitter(model).base_initialization(bbox);
}

FitResult fit_single(const AamModel& model, const Image& image, const ShapeParams& init,
                     const FitConfig& config) {
    return Fitter(model).fit(image, init, config);
}

FitResult fit_with_restarts(const AamModel& model, const Image& image, const Rect& bbox,
                            const FitConfig& config) {
    return Fitter(model).fit_with_restarts(image, bbox, config);
}

} // namespace aam
