#include "aam/transfer.hpp"

#include <algorithm>
#include <numeric>

namespace aam {

std::string to_string(Ordering ordering) {
    return ordering == Ordering::TargetVariance ? "target_variance" : "source_eigenvalue";
}

Ordering ordering_from_string(const std::string& s) {
    if (s == "target_variance") return Ordering::TargetVariance;
    if (s == "source_eigenvalue") return Ordering::SourceEigenvalue;
    throw ConfigError("unknown ordering: " + s);
}

ProjectedVariance projected_variance(const Basis& source_basis, const Matrix& target_samples,
                                     const Vector& target_mean) {
    const Index n = target_samples.cols();
    if (n < 2) throw DegenerateInputError("projected_variance: need at least 2 target samples");
    if (target_samples.rows() != target_mean.size() ||
        (source_basis.size() > 0 && source_basis.dim() != target_mean.size()))
        throw DimensionError("projected_variance: dimensions disagree");

    const Matrix centered = target_samples.colwise() - target_mean;
    ProjectedVariance pv;
    pv.sigma2.resize(source_basis.size());
    for (Index i = 0; i < source_basis.size(); ++i) {
        pv.sigma2(i) =
            (centered.transpose() * source_basis.columns.col(i)).squaredNorm() /
            static_cast<double>(n - 1);
    }
    pv.sigma2 = pv.sigma2.cwiseMax(0.0);

    pv.order.resize(source_basis.size());
    std::iota(pv.order.begin(), pv.order.end(), Index(0));
    std::stable_sort(pv.order.begin(), pv.order.end(),
                     [&pv](Index a, Index b) { return pv.sigma2(a) > pv.sigma2(b); });
    return pv;
}

namespace {

std::vector<Index> pick_top_d(const Basis& source_basis, const Matrix& target_samples,
                              const Vector& target_mean, Index d, Ordering ordering,
                              ProjectedVariance* pv_out) {
    if (d < 0 || d > source_basis.size())
        throw ConfigError("subspace selection: d out of range");
    std::vector<Index> picked;
    if (ordering == Ordering::TargetVariance) {
        ProjectedVariance pv = projected_variance(source_basis, target_samples, target_mean);
        picked.assign(pv.order.begin(), pv.order.begin() + d);
        if (pv_out) *pv_out = std::move(pv);
    } else {
        picked.resize(d);
        std::iota(picked.begin(), picked.end(), Index(0));
        if (pv_out) *pv_out = projected_variance(source_basis, target_samples, target_mean);
    }
    return picked;
}

Basis augment(const Basis& target_basis, const Basis& source_basis,
              const std::vector<Index>& picked) {
    Matrix stacked(target_basis.dim(), target_basis.size() + static_cast<Index>(picked.size()));
    stacked.leftCols(target_basis.size()) = target_basis.columns;
    for (size_t i = 0; i < picked.size(); ++i)
        stacked.col(target_basis.size() + static_cast<Index>(i)) =
            source_basis.columns.col(picked[i]);
    return orthonormalize<double>(stacked);
}

/// Variance of the centered samples along each basis column, floored at
/// 1e-8 times the largest.
Vector variances_along(const Matrix& columns, const Matrix& samples, const Vector& mean) {
    const Index n = samples.cols();
    const Matrix centered = samples.colwise() - mean;
    Vector var(columns.cols());
    for (Index j = 0; j < columns.cols(); ++j)
        var(j) = (centered.transpose() * columns.col(j)).squaredNorm() /
                 static_cast<double>(std::max<Index>(n - 1, 1));
    if (var.size() > 0) {
        const double floor = 1e-8 * var.maxCoeff();
        var = var.cwiseMax(floor);
    }
    return var;
}

} // namespace

Basis select_subspace(const Basis& target_basis, const Basis& source_basis,
                      const Matrix& target_samples, const Vector& target_mean, Index d,
                      Ordering ordering, std::vector<Index>* selected_out) {
    std::vector<Index> picked =
        pick_top_d(source_basis, target_samples, target_mean, d, ordering, nullptr);
    Basis out = augment(target_basis, source_basis, picked);
    if (selected_out) *selected_out = std::move(picked);
    return out;
}

ShapeModel transfer_shape(const ShapeModel& target, const ShapeModel& source,
                          const AlignedShapeSet& target_aligned, Index d, Ordering ordering,
                          ProjectedVariance* pv_out, std::vector<Index>* selected_out) {
    if (target.num_points() != source.num_points())
        throw DimensionError("transfer_shape: landmark count mismatch");
    if (target_aligned.shapes.rows() != target.mean.points.size())
        throw DimensionError("transfer_shape: aligned set does not match target model");

    const Basis source_local = source.local_basis();
    ProjectedVariance pv;
    std::vector<Index> picked = pick_top_d(source_local, target_aligned.shapes,
                                           target.mean.points, d, ordering, &pv);

    ShapeModel out;
    out.mean = target.mean;
    out.n_global = target.n_global;
    out.basis = augment(target.basis, source_local, picked);
    out.eigenvalues = variances_along(out.basis.columns.rightCols(out.num_local()),
                                      target_aligned.shapes, target.mean.points);
    if (pv_out) *pv_out = std::move(pv);
    if (selected_out) *selected_out = std::move(picked);
    return out;
}

Vector warp_appearance_between_frames(const ReferenceFrame& source_frame,
                                      const ReferenceFrame& target_frame,
                                      const Vector& source_appearance) {
    if (source_frame.num_points() != target_frame.num_points())
        throw DimensionError("warp_appearance_between_frames: landmark count mismatch");
    const Image raster = source_frame.unvectorize(source_appearance);
    Vector out(target_frame.L);
    for (Index k = 0; k < target_frame.L; ++k) {
        const int x = target_frame.masked_xy[2 * k];
        const int y = target_frame.masked_xy[2 * k + 1];
        const size_t idx = static_cast<size_t>(y) * target_frame.width + x;
        const auto& tri = target_frame.mesh.triangles[target_frame.table.triangle[idx]];
        const auto& [alpha, beta, gamma] = target_frame.table.barycentric[idx];
        const Eigen::Vector2d p = alpha * source_frame.mesh.vertices.point(tri[0]) +
                                  beta * source_frame.mesh.vertices.point(tri[1]) +
                                  gamma * source_frame.mesh.vertices.point(tri[2]);
        out(k) = raster.sample_bilinear(p.x(), p.y());
    }
    return out;
}

AppearanceModel transfer_appearance(const AppearanceModel& target, const AppearanceModel& source,
                                    const Matrix& target_appearances, Index d, Ordering ordering,
                                    bool renormalize_warped, ProjectedVariance* pv_out,
                                    std::vector<Index>* selected_out) {
    if (target.frame.num_points() != source.frame.num_points())
        throw DimensionError("transfer_appearance: landmark count mismatch");
    if (target_appearances.rows() != target.frame.L)
        throw DimensionError("transfer_appearance: samples do not match target frame");

    Basis warped;
    warped.columns.resize(target.frame.L, source.basis.size());
    for (Index i = 0; i < source.basis.size(); ++i) {
        Vector w = warp_appearance_between_frames(source.frame, target.frame,
                                                  source.basis.columns.col(i));
        if (renormalize_warped) {
            const double norm = w.norm();
            if (norm > 1e-12) w /= norm;
        }
        warped.columns.col(i) = w;
    }

    ProjectedVariance pv;
    std::vector<Index> picked =
        pick_top_d(warped, target_appearances, target.mean, d, ordering, &pv);

    AppearanceModel out;
    out.frame = target.frame;
    out.mean = target.mean;
    out.basis = augment(target.basis, warped, picked);
    out.eigenvalues = variances_along(out.basis.columns, target_appearances, target.mean);
    if (pv_out) *pv_out = std::move(pv);
    if (selected_out) *selected_out = std::move(picked);
    return out;
}

AamModel baseline_sut(const std::vector<Example>& source_data,
                      const std::vector<Example>& target_data, const TrainOptions& options) {
    if (source_data.empty() || target_data.empty())
        throw DegenerateInputError("baseline_sut: both datasets must be non-empty");
    std::vector<Example> all = source_data;
    all.insert(all.end(), target_data.begin(), target_data.end());
    TrainOptions opts = options;
    opts.label = ModelLabel::SUT;
    return train_aam(all, opts).model;
}

namespace {

/// Variance along each column under the model's own eigen-decomposition,
/// used when raw samples are not available: u^T (B Lambda B^T) u.
Vector variances_from_model(const Matrix& columns, const Basis& basis,
                            const Vector& eigenvalues) {
    Vector var(columns.cols());
    for (Index j = 0; j < columns.cols(); ++j) {
        const Vector coeffs = basis.columns.transpose() * columns.col(j);
        var(j) = (eigenvalues.array() * coeffs.array().square()).sum();
    }
    if (var.size() > 0) var = var.cwiseMax(1e-8 * std::max(var.maxCoeff(), 0.0));
    return var;
}

} // namespace

AamModel baseline_st(const AamModel& target, const AamModel& source) {
    if (target.num_points() != source.num_points())
        throw DimensionError("baseline_st: landmark count mismatch");

    AamModel out;
    out.label = ModelLabel::ST;

    // Shape: full target basis plus every local source component.
    const Basis source_local = source.shape.local_basis();
    std::vector<Index> all(source_local.size());
    std::iota(all.begin(), all.end(), Index(0));
    out.shape.mean = target.shape.mean;
    out.shape.n_global = target.shape.n_global;
    out.shape.basis = augment(target.shape.basis, source_local, all);
    out.shape.eigenvalues =
        variances_from_model(out.shape.basis.columns.rightCols(out.shape.num_local()),
                             target.shape.local_basis(), target.shape.eigenvalues);

    // Appearance: source eigenvectors warped onto the target frame first.
    Basis warped;
    warped.columns.resize(target.appearance.frame.L, source.appearance.basis.size());
    for (Index i = 0; i < source.appearance.basis.size(); ++i) {
        Vector w = warp_appearance_between_frames(source.appearance.frame,
                                                  target.appearance.frame,
                                                  source.appearance.basis.columns.col(i));
        const double norm = w.norm();
        if (norm > 1e-12) w /= norm;
        warped.columns.col(i) = w;
    }
    std::vector<Index> all_app(warped.size());
    std::iota(all_app.begin(), all_app.end(), Index(0));
    out.appearance.frame = target.appearance.frame;
    out.appearance.mean = target.appearance.mean;
    out.appearance.basis = augment(target.appearance.basis, warped, all_app);
    out.appearance.eigenvalues =
        variances_from_model(out.appearance.basis.columns, target.appearance.basis,
                             target.appearance.eigenvalues);
    return out;
}

AamModel transfer_model(const TrainedAam& target, const AamModel& source,
                        const TransferConfig& config, TransferReport* report) {
    AamModel out;
    out.label = ModelLabel::Selected;
    TransferReport local_report;
    out.shape = transfer_shape(target.model.shape, source.shape, target.aligned, config.d_shape,
                               config.ordering, &local_report.shape_sigma2,
                               &local_report.shape_selected);
    out.appearance = transfer_appearance(
        target.model.appearance, source.appearance, target.appearances, config.d_appearance,
        config.ordering, config.renormalize_warped, &local_report.appearance_sigma2,
        &local_report.appearance_selected);
    if (report) *report = std::move(local_report);
    return out;
}

} // namespace aam
