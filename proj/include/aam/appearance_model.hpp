#pragma once

#include <cstdint>
#include <vector>

#include "aam/geometry.hpp"
#include "aam/numeric.hpp"

namespace aam {

/// Canonical raster frame defined on the (scaled) mean shape: triangulated
/// mesh, boolean mask of pixels whose centers fall inside the mesh, and a
/// dense mapping from masked pixels to appearance-vector indices.
struct ReferenceFrame {
    TriMesh mesh;            // vertices = mean shape scaled into this raster
    int width = 0, height = 0;
    std::vector<std::uint8_t> mask; // w*h row-major, 1 iff inside the mesh
    std::vector<int> pixel_index;   // w*h, dense 0..L-1 on masked pixels, -1 outside
    Index L = 0;

    // Derived lookup tables, rebuilt deterministically from the mesh.
    BarycentricTable table;
    std::vector<int> masked_xy; // 2L, pixel coordinates per vector index

    Index num_points() const { return mesh.vertices.num_points(); }

    /// Scatters an appearance vector back onto the raster (zeros outside the mask).
    Image unvectorize(const Vector& appearance) const;

    /// Reads the masked pixels of a frame-sized raster into a vector.
    Vector vectorize(const Image& raster) const;

    /// Recomputes table, pixel_index, masked_xy and L from mesh + mask.
    void rebuild_lookup();
};

/// builds the frame for `mean`: the shape is rescaled so its face size
/// equals target_face_size, placed with a 2-px margin at the origin,
/// triangulated and rasterized.
ReferenceFrame build_reference_frame(const Shape& mean, double target_face_size);

/// Warps the image region under `shape` into the reference frame and reads
/// the masked pixels: appearance vector a in R^L.
Vector sample_appearance(const ReferenceFrame& frame, const Image& image, const Shape& shape);

struct AppearanceModel {
    ReferenceFrame frame;
    Vector mean;        // nu, length L
    Basis basis;        // Psi, L x M
    Vector eigenvalues; // kappa, length M
};

struct AppearanceParams {
    Vector q; // M
};

/// One annotated example: an image and its landmark shape (image coordinates).
struct Example {
    Image image;
    Shape shape;
    std::string id;
};

/// Samples every example into the frame and runs PCA at the given fraction.
/// `appearances_out`, when non-null, receives the L x N sample matrix.
AppearanceModel train_appearance_model(const std::vector<Example>& examples,
                                       const ReferenceFrame& frame, double variance_fraction,
                                       Matrix* appearances_out = nullptr);

} // namespace aam
