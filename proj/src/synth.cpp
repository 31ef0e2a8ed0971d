#include "aam/synth.hpp"

#include <cmath>

namespace aam {

Shape stylized_face_shape() {
    // 12 outline points on an ellipse plus 8 interior features (eyes, brows,
    // nose, mouth). Proportions give a face size near 100 px.
    constexpr double rx = 45.0, ry = 55.0;
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i < 12; ++i) {
        const double a = 2.0 * std::numbers::pi * i / 12.0;
        pts.emplace_back(rx * std::sin(a), -ry * std::cos(a));
    }
    pts.emplace_back(-18.0, -14.0); // left eye
    pts.emplace_back(18.0, -14.0);  // right eye
    pts.emplace_back(-18.0, -28.0); // left brow
    pts.emplace_back(18.0, -28.0);  // right brow
    pts.emplace_back(0.0, 2.0);     // nose tip
    pts.emplace_back(0.0, -12.0);   // nose bridge
    pts.emplace_back(-14.0, 24.0);  // mouth left
    pts.emplace_back(14.0, 24.0);   // mouth right

    Shape s;
    s.points.resize(2 * static_cast<Index>(pts.size()));
    for (size_t i = 0; i < pts.size(); ++i) {
        s.points(2 * static_cast<Index>(i)) = pts[i].first;
        s.points(2 * static_cast<Index>(i) + 1) = pts[i].second;
    }
    return s;
}

Vector random_deformation_direction(const Shape& base, const Matrix& existing, Rng& rng) {
    const Basis tangent = global_similarity_basis(base);
    const Index dim = base.points.size();
    for (int attempt = 0; attempt < 64; ++attempt) {
        Vector v(dim);
        for (Index i = 0; i < dim; ++i) v(i) = rng.normal();
        v -= tangent.columns * (tangent.columns.transpose() * v);
        if (existing.cols() > 0) v -= existing * (existing.transpose() * v);
        const double n = v.norm();
        if (n > 1e-6) return v / n;
    }
    throw DegenerateInputError("random_deformation_direction: cannot find a direction");
}

Vector rasterize_pattern(const BlobPattern& pattern, const ReferenceFrame& frame,
                         const Shape& base_shape) {
    if (frame.num_points() != base_shape.num_points())
        throw DimensionError("rasterize_pattern: frame and base shape disagree");
    Vector out = Vector::Zero(frame.L);
    for (Index k = 0; k < frame.L; ++k) {
        const int x = frame.masked_xy[2 * k];
        const int y = frame.masked_xy[2 * k + 1];
        const size_t idx = static_cast<size_t>(y) * frame.width + x;
        const auto& tri = frame.mesh.triangles[frame.table.triangle[idx]];
        const auto& [alpha, beta, gamma] = frame.table.barycentric[idx];
        const Eigen::Vector2d p = alpha * base_shape.point(tri[0]) +
                                  beta * base_shape.point(tri[1]) +
                                  gamma * base_shape.point(tri[2]);
        double v = 0.0;
        for (const GaussianBlob& b : pattern)
            v += b.amplitude *
                 std::exp(-(p - b.center).squaredNorm() / (2.0 * b.sigma * b.sigma));
        out(k) = v;
    }
    return out;
}

namespace {

BlobPattern default_mean_pattern() {
    // Smooth, landmark-anchored intensity structure; Gauss-Newton needs
    // usable gradients everywhere inside the face.
    return {
        {{0.0, 0.0}, 55.0, 0.55},    // broad base tone
        {{-18.0, -14.0}, 7.0, -0.30}, // eyes dark
        {{18.0, -14.0}, 7.0, -0.30},
        {{0.0, 2.0}, 9.0, 0.25},      // nose bright
        {{0.0, 24.0}, 10.0, -0.28},   // mouth dark
        {{-26.0, 8.0}, 13.0, 0.18},   // cheeks
        {{26.0, 8.0}, 13.0, 0.18},
        {{0.0, -34.0}, 16.0, 0.15},   // forehead
    };
}

} // namespace

SynthDataset generate(const SynthSpec& spec) {
    if (!spec.base_shape.valid()) throw DegenerateInputError("generate: invalid base shape");
    if (spec.n_samples < 1) throw ConfigError("generate: n_samples must be positive");
    for (const ShapeFactor& f : spec.shape_factors) {
        if (f.direction.size() != spec.base_shape.points.size())
            throw DimensionError("generate: factor dimension mismatch");
        if (f.stddev < 0) throw ConfigError("generate: negative stddev");
    }

    SynthDataset out;
    out.frame = build_reference_frame(spec.base_shape, spec.pattern_face_size);

    const BlobPattern mean_pattern =
        spec.appearance_mean.empty() ? default_mean_pattern() : spec.appearance_mean;
    const Vector mean_raster = rasterize_pattern(mean_pattern, out.frame, spec.base_shape);
    Matrix factor_rasters(out.frame.L, static_cast<Index>(spec.appearance_factors.size()));
    for (size_t i = 0; i < spec.appearance_factors.size(); ++i)
        factor_rasters.col(static_cast<Index>(i)) =
            rasterize_pattern(spec.appearance_factors[i].pattern, out.frame, spec.base_shape);

    const Index n_shape = static_cast<Index>(spec.shape_factors.size());
    const Index n_app = static_cast<Index>(spec.appearance_factors.size());
    out.shape_coeffs.resize(n_shape, spec.n_samples);
    out.appearance_coeffs.resize(n_app, spec.n_samples);
    out.appearance_latents.resize(out.frame.L, spec.n_samples);

    const double base_scale = spec.render_face_size / face_size(spec.base_shape);
    const Eigen::Vector2d canvas_center(spec.image_width / 2.0, spec.image_height / 2.0);
    const Eigen::Vector2d base_centroid = spec.base_shape.centroid();

    Rng root(spec.rng_seed);
    for (int s = 0; s < spec.n_samples; ++s) {
        Rng rng = root.fork(static_cast<std::uint64_t>(s));

        Vector deformed = spec.base_shape.points;
        for (Index j = 0; j < n_shape; ++j) {
            const double c = rng.normal(0.0, spec.shape_factors[static_cast<size_t>(j)].stddev);
            out.shape_coeffs(j, s) = c;
            deformed += c * spec.shape_factors[static_cast<size_t>(j)].direction;
        }

        SimilarityTransform pose;
        pose.scale = base_scale * std::max(0.2, 1.0 + rng.normal(0.0, spec.pose_jitter.scale));
        pose.rotation = rng.normal(0.0, spec.pose_jitter.rotation);
        const Eigen::Vector2d jitter_t(rng.normal(0.0, spec.pose_jitter.translation),
                                       rng.normal(0.0, spec.pose_jitter.translation));
        pose.translation = canvas_center + jitter_t - pose.linear() * base_centroid;

        const Shape true_shape = pose.apply(Shape(deformed));

        Vector appearance = mean_raster;
        for (Index j = 0; j < n_app; ++j) {
            const double a =
                rng.normal(0.0, spec.appearance_factors[static_cast<size_t>(j)].stddev);
            out.appearance_coeffs(j, s) = a;
            appearance += a * factor_rasters.col(j);
        }
        out.appearance_latents.col(s) = appearance;

        TriMesh image_mesh;
        image_mesh.vertices = true_shape;
        image_mesh.triangles = out.frame.mesh.triangles;
        Image img = piecewise_affine_warp(image_mesh, out.frame.mesh.vertices,
                                          out.frame.unvectorize(appearance), spec.image_width,
                                          spec.image_height);
        if (spec.noise_stddev > 0) {
            for (double& v : img.data()) v += rng.normal(0.0, spec.noise_stddev);
        }

        Shape recorded = true_shape;
        if (spec.landmark_noise > 0) {
            for (Index i = 0; i < recorded.points.size(); ++i)
                recorded.points(i) += rng.normal(0.0, spec.landmark_noise);
        }

        Example ex;
        ex.image = std::move(img);
        ex.shape = std::move(recorded);
        char id[16];
        std::snprintf(id, sizeof(id), "s%03d", s);
        ex.id = id;
        out.examples.push_back(std::move(ex));
        out.true_shapes.push_back(true_shape);
    }
    return out;
}

PlantedScenario planted_transfer_scenario(std::uint64_t seed) {
    PlantedScenario sc;
    sc.base_shape = stylized_face_shape();
    Rng rng(seed);

    const Index dim = sc.base_shape.points.size();
    Matrix dirs(dim, 0);
    auto add_dir = [&](Vector& slot) {
        slot = random_deformation_direction(sc.base_shape, dirs, rng);
        dirs.conservativeResize(Eigen::NoChange, dirs.cols() + 1);
        dirs.col(dirs.cols() - 1) = slot;
    };
    add_dir(sc.mean_offset);
    add_dir(sc.confounder1);
    add_dir(sc.confounder2);
    add_dir(sc.planted_factor);
    Vector extra1, extra2;
    add_dir(extra1);
    add_dir(extra2);

    constexpr double kMeanOffset = 31.0; // ~0.07 normalized RMS at face size 100
    sc.source_base_shape = Shape(sc.base_shape.points + kMeanOffset * sc.mean_offset);

    // Appearance factors shared between the domains (defined on base-shape
    // coordinates): the target domain spreads over six of them, more than
    // five samples can span. The source adds two dominant confounder
    // patterns of its own.
    std::vector<AppearanceFactor> g(6);
    g[0].pattern = {{{-18.0, -14.0}, 6.0, 1.0}, {{18.0, -14.0}, 6.0, -0.6}};
    g[1].pattern = {{{0.0, 24.0}, 7.0, 1.0}, {{0.0, 2.0}, 6.0, -0.5}};
    g[2].pattern = {{{-26.0, 8.0}, 9.0, 1.0}, {{26.0, 8.0}, 9.0, -0.8}};
    g[3].pattern = {{{0.0, -34.0}, 10.0, 1.0}, {{-14.0, 24.0}, 6.0, 0.7}};
    g[4].pattern = {{{14.0, 24.0}, 6.0, 1.0}, {{-18.0, -28.0}, 6.0, -0.7}};
    g[5].pattern = {{{18.0, -28.0}, 6.0, 1.0}, {{0.0, -12.0}, 6.0, 0.6}};

    AppearanceFactor big1, big2;
    big1.pattern = {{{-30.0, -20.0}, 22.0, 1.0}};  // broad shading confounder
    big2.pattern = {{{20.0, 30.0}, 26.0, 1.0}};

    SynthSpec source;
    source.base_shape = sc.source_base_shape;
    source.shape_factors = {{sc.confounder1, 45.0}, {sc.confounder2, 38.0},
                            {sc.planted_factor, 10.0}, {extra1, 6.0}, {extra2, 5.0}};
    source.appearance_factors = {big1, big2, g[0], g[1], g[2], g[3], g[4], g[5]};
    source.appearance_factors[0].stddev = 0.13;
    source.appearance_factors[1].stddev = 0.11;
    for (size_t i = 2; i < source.appearance_factors.size(); ++i)
        source.appearance_factors[i].stddev = 0.05;
    source.pose_jitter = {0.03, 0.05, 2.5};
    source.landmark_noise = 0.5;
    source.noise_stddev = 0.0015;
    source.n_samples = 80;
    source.rng_seed = Rng(seed).fork(101).below(UINT64_MAX);

    SynthSpec target;
    target.base_shape = sc.base_shape;
    target.shape_factors = {{sc.planted_factor, 30.0}};
    target.appearance_factors = {g[0], g[1], g[2], g[3], g[4], g[5]};
    const double g_stddevs[6] = {0.10, 0.09, 0.08, 0.075, 0.07, 0.065};
    for (size_t i = 0; i < 6; ++i) target.appearance_factors[i].stddev = g_stddevs[i];
    target.pose_jitter = {0.03, 0.05, 2.5};
    target.landmark_noise = 2.0;
    target.noise_stddev = 0.0015;
    target.n_samples = 5;
    target.rng_seed = Rng(seed).fork(202).below(UINT64_MAX);

    SynthSpec test = target;
    test.landmark_noise = 0.5;
    test.n_samples = 40;
    test.rng_seed = Rng(seed).fork(303).below(UINT64_MAX);

    sc.source = generate(source);
    sc.target_train = generate(target);
    sc.test = generate(test);

    // Distinct ids per dataset so manifests stay unambiguous.
    for (auto& e : sc.source.examples) e.id = "src/" + e.id;
    for (auto& e : sc.target_train.examples) e.id = "tgt/" + e.id;
    for (auto& e : sc.test.examples) e.id = "tst/" + e.id;
    return sc;
}

} // namespace aam
