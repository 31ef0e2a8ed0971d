#pragma once

#include <vector>

#include "aam/geometry.hpp"
#include "aam/numeric.hpp"

namespace aam {

/// Statistical shape model: mean, orthonormal basis [global | local],
/// eigenvalues of the local components. The first `n_global` columns span
/// the similarity tangent space at the mean, so any similarity placement
/// of the mean is exactly representable.
struct ShapeModel {
    Shape mean;          // Procrustes frame
    Basis basis;         // 2V x (n_global + K)
    Vector eigenvalues;  // K, local components only
    Index n_global = 4;

    Index num_points() const { return mean.num_points(); }
    Index num_local() const { return basis.size() - n_global; }

    Basis global_basis() const { return Basis{basis.columns.leftCols(n_global)}; }
    Basis local_basis() const {
        return Basis{basis.columns.rightCols(basis.size() - n_global)};
    }
};

struct ShapeParams {
    Vector p; // n_global + K
};

/// Trains the shape model: Procrustes alignment, similarity basis at the
/// mean, PCA of the aligned samples for the local components, and a final
/// orthonormalization of [global | local] with the global columns first.
/// `aligned_out`, when non-null, receives the aligned training set.
ShapeModel train_shape_model(const std::vector<Shape>& shapes, double variance_fraction,
                             AlignedShapeSet* aligned_out = nullptr);

/// p = basis^T (s - mean). The shape must live in the model's aligned frame
/// (or any similarity re-scaling of it, for the pose columns).
ShapeParams shape_to_params(const ShapeModel& model, const Shape& s);

/// mean + basis p.
Shape params_to_shape(const ShapeModel& model, const ShapeParams& p);

} // namespace aam
