#include "aam/shape_model.hpp"

namespace aam {

ShapeModel train_shape_model(const std::vector<Shape>& shapes, double variance_fraction,
                             AlignedShapeSet* aligned_out) {
    if (shapes.size() < 2)
        throw DegenerateInputError("train_shape_model: need at least 2 shapes");

    AlignedShapeSet aligned = procrustes_align(shapes);
    const Basis global = global_similarity_basis(aligned.mean);

    ShapeModel model;
    model.mean = aligned.mean;
    model.n_global = global.size();

    PcaResult local = pca<double>(aligned.shapes, variance_fraction);

    // Aligned shapes have unit Frobenius norm, so alignment artifacts have a
    // known scale: fp noise sits near 1e-30 and the quadratic terms of the
    // per-sample norm normalization near (deviation^2/2)^2. The floor keeps a
    // pure-similarity family at K = 0 and drops curvature directions for
    // deviations under about 1% of the shape norm.
    constexpr double kMinLocalVariance = 1e-8;
    Index meaningful = 0;
    while (meaningful < local.eigenvalues.size() &&
           local.eigenvalues(meaningful) >= kMinLocalVariance)
        ++meaningful;
    local.basis.columns.conservativeResize(Eigen::NoChange, meaningful);
    local.eigenvalues.conservativeResize(meaningful);

    Matrix stacked(aligned.shapes.rows(), global.size() + local.basis.size());
    stacked.leftCols(global.size()) = global.columns;
    stacked.rightCols(local.basis.size()) = local.basis.columns;

    std::vector<Index> kept;
    model.basis = orthonormalize<double>(stacked, &kept);

    // Eigenvalues follow the local PCA columns that survived the
    // re-orthogonalization against the global columns.
    std::vector<double> eigs;
    for (Index idx : kept) {
        if (idx >= global.size()) eigs.push_back(local.eigenvalues(idx - global.size()));
    }
    model.eigenvalues = Eigen::Map<const Vector>(eigs.data(), static_cast<Index>(eigs.size()));

    if (aligned_out) *aligned_out = std::move(aligned);
    return model;
}

ShapeParams shape_to_params(const ShapeModel& model, const Shape& s) {
    if (s.points.size() != model.mean.points.size())
        throw DimensionError("shape_to_params: landmark count mismatch");
    return ShapeParams{project(model.basis, model.mean.points, s.points)};
}

Shape params_to_shape(const ShapeModel& model, const ShapeParams& p) {
    return Shape(reconstruct(model.basis, model.mean.points, p.p));
}

} // namespace aam
