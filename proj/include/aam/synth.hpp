#pragma once

#include <cstdint>
#include <vector>

#include "aam/model.hpp"
#include "aam/rng.hpp"

namespace aam {

/// Gaussian intensity blob in base-shape coordinates; patterns composed of
/// blobs stay consistent across reference frames built from different means.
struct GaussianBlob {
    Eigen::Vector2d center; // base-shape coordinate system
    double sigma = 1.0;     // px, in base-shape units
    double amplitude = 1.0;
};

using BlobPattern = std::vector<GaussianBlob>;

struct ShapeFactor {
    Vector direction; // 2V, unit norm, orthogonal to the similarity tangent
    double stddev = 0.0;
};

struct AppearanceFactor {
    BlobPattern pattern;
    double stddev = 0.0;
};

struct PoseJitter {
    double scale = 0.0;       // relative
    double rotation = 0.0;    // radians
    double translation = 0.0; // px
};

struct SynthSpec {
    Shape base_shape;
    std::vector<ShapeFactor> shape_factors;
    BlobPattern appearance_mean;
    std::vector<AppearanceFactor> appearance_factors;
    PoseJitter pose_jitter;
    double landmark_noise = 0.0; // px, annotation noise on recorded landmarks
    double noise_stddev = 0.0;   // pixel intensity noise
    int n_samples = 0;
    std::uint64_t rng_seed = 0;
    int image_width = 160, image_height = 160;
    double render_face_size = 95.0;  // face size of the rendered sample
    double pattern_face_size = 60.0; // raster resolution for appearance
};

struct SynthDataset {
    std::vector<Example> examples; // recorded (noisy) landmarks + images
    std::vector<Shape> true_shapes;
    Matrix shape_coeffs;       // n_factors x N
    Matrix appearance_coeffs;  // n_factors x N
    ReferenceFrame frame;      // base-shape frame the appearances live on
    Matrix appearance_latents; // L x N, noise-free appearance vectors
};

/// Renders n_samples images: shape = similarity(base + sum c_i d_i), image =
/// appearance raster warped onto the shape plus pixel noise. Deterministic
/// per rng_seed, samples drawn from independent substreams.
SynthDataset generate(const SynthSpec& spec);

/// Rasterizes a blob pattern onto a frame whose mesh corresponds
/// vertex-by-vertex with base_shape.
Vector rasterize_pattern(const BlobPattern& pattern, const ReferenceFrame& frame,
                         const Shape& base_shape);

/// 20-vertex stylized face polygon, face size about 100 px, centroid at origin.
Shape stylized_face_shape();

/// Unit direction orthogonal to the similarity tangent at `base` and to the
/// columns of `existing` (pass a 2V x 0 matrix for none).
Vector random_deformation_direction(const Shape& base, const Matrix& existing, Rng& rng);

/// Desk-scale transfer scenario: the source domain is dominated by two
/// confounding factors and carries the planted factor weakly; the target
/// domain (5 training samples) varies mainly along the planted factor and its
/// appearance spreads over more factors than 5 samples can span. Source and
/// target means differ by a fixed deformation.
struct PlantedScenario {
    SynthDataset source;
    SynthDataset target_train;
    SynthDataset test;
    Shape base_shape;        // target-domain base
    Shape source_base_shape; // base plus the mean-offset deformation
    Vector planted_factor;   // f3: weak in source, dominant in target
    Vector confounder1;      // f1: dominant in source, absent in target
    Vector confounder2;      // f2
    Vector mean_offset;      // u: source/target mean gap direction
};

PlantedScenario planted_transfer_scenario(std::uint64_t seed);

} // namespace aam
