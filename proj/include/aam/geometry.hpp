#pragma once

#include <array>
#include <optional>
#include <vector>

#include "aam/image.hpp"
#include "aam/numeric.hpp"
#include "aam/types.hpp"

namespace aam {

/// 2D landmark configuration, vectorized as (x1, y1, x2, y2, ..., xV, yV),
/// coordinates in pixels.
struct Shape {
    Vector points;

    Shape() = default;
    explicit Shape(Vector p) : points(std::move(p)) {}

    Index num_points() const { return points.size() / 2; }
    double x(Index i) const { return points(2 * i); }
    double y(Index i) const { return points(2 * i + 1); }
    Eigen::Vector2d point(Index i) const { return {points(2 * i), points(2 * i + 1)}; }
    void set_point(Index i, double px, double py) {
        points(2 * i) = px;
        points(2 * i + 1) = py;
    }

    Eigen::Vector2d centroid() const;
    bool valid() const; // even length, V >= 3, all finite
};

/// Scale + rotation + translation, applied as scale * R(rotation) * p + translation.
struct SimilarityTransform {
    double scale = 1.0;
    double rotation = 0.0; // radians
    Eigen::Vector2d translation = Eigen::Vector2d::Zero();

    Eigen::Matrix2d linear() const;
    Eigen::Vector2d apply(const Eigen::Vector2d& p) const;
    Shape apply(const Shape& s) const;
    SimilarityTransform inverse() const;
};

struct AxisAlignedBox {
    double min_x = 0, min_y = 0, max_x = 0, max_y = 0;
    double width() const { return max_x - min_x; }
    double height() const { return max_y - min_y; }
    Eigen::Vector2d center() const { return {(min_x + max_x) / 2, (min_y + max_y) / 2}; }
};

AxisAlignedBox bounding_box(const Shape& s);

/// (bounding-box width + bounding-box height) / 2.
double face_size(const Shape& s);

/// Triangulated shape; triangle indices reference vertex order.
struct TriMesh {
    Shape vertices;
    std::vector<std::array<int, 3>> triangles;
};

/// Procrustes-aligned sample set. `shapes` holds one aligned shape per
/// column; `mean` is exactly the column average.
struct AlignedShapeSet {
    Matrix shapes; // 2V x N
    Shape mean;

    Index num_samples() const { return shapes.cols(); }
    Shape shape(Index i) const { return Shape(shapes.col(i)); }
};

/// Least-squares similarity transform minimizing ||T(src) - dst||^2,
/// closed form via centroids and complex moment sums.
SimilarityTransform optimal_similarity(const Shape& src, const Shape& dst);

/// Generalized Procrustes Analysis. Iteratively aligns every shape to the
/// running mean and renormalizes the mean (centroid at origin, unit Frobenius
/// norm, first landmark anchored to the positive x-axis) until the mean moves
/// less than 1e-8 or 100 iterations pass.
AlignedShapeSet procrustes_align(const std::vector<Shape>& shapes);

/// The four raw (unorthonormalized) similarity-tangent columns at `mean`:
/// the mean itself, its 90-degree rotation, and the two unit translations.
Matrix global_similarity_raw(const Shape& mean);

/// Orthonormalized 4-column basis spanning the similarity tangent space at `mean`.
Basis global_similarity_basis(const Shape& mean);

/// Delaunay triangulation (Bowyer-Watson, vertices inserted in index order,
/// ties broken toward lower indices). Deterministic given input order.
TriMesh delaunay(const Shape& vertices);

/// Pixel-to-triangle lookup for a raster over a mesh: for each pixel center
/// inside some triangle, the lowest-index containing triangle and the
/// barycentric coordinates within it.
struct BarycentricTable {
    int width = 0, height = 0;
    std::vector<int> triangle;                       // w*h, -1 outside
    std::vector<std::array<double, 3>> barycentric;  // w*h
};

BarycentricTable build_barycentric_table(const TriMesh& mesh, int width, int height);

/// Piecewise-affine warp. The output raster lives on src_mesh's frame
/// (width x height); each pixel inside the mesh maps through its triangle's
/// barycentric coordinates to the corresponding dst triangle and bilinearly
/// samples `image` there (border clamp). Pixels outside all triangles are 0.
Image piecewise_affine_warp(const TriMesh& src_mesh, const Shape& dst_vertices,
                            const Image& image, int width, int height);

/// Same warp driven by a precomputed table, written into `out` (sized by the table).
void piecewise_affine_warp(const BarycentricTable& table, const TriMesh& src_mesh,
                           const Shape& dst_vertices, const Image& image, Image& out);

} // namespace aam
