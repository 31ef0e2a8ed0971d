#include "aam/appearance_model.hpp"

#include <cmath>

namespace aam {

Image ReferenceFrame::unvectorize(const Vector& appearance) const {
    if (appearance.size() != L)
        throw DimensionError("unvectorize: appearance length does not match frame L");
    Image raster(width, height, 0.0);
    for (Index k = 0; k < L; ++k)
        raster.at(masked_xy[2 * k], masked_xy[2 * k + 1]) = appearance(k);
    return raster;
}

Vector ReferenceFrame::vectorize(const Image& raster) const {
    if (raster.width() != width || raster.height() != height)
        throw DimensionError("vectorize: raster does not match frame dimensions");
    Vector v(L);
    for (Index k = 0; k < L; ++k)
        v(k) = raster.at(masked_xy[2 * k], masked_xy[2 * k + 1]);
    return v;
}

void ReferenceFrame::rebuild_lookup() {
    table = build_barycentric_table(mesh, width, height);
    pixel_index.assign(static_cast<size_t>(width) * height, -1);
    masked_xy.clear();
    int next = 0;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const size_t idx = static_cast<size_t>(y) * width + x;
            if (!mask[idx]) continue;
            pixel_index[idx] = next++;
            masked_xy.push_back(x);
            masked_xy.push_back(y);
        }
    }
    L = next;
}

ReferenceFrame build_reference_frame(const Shape& mean, double target_face_size) {
    if (!mean.valid()) throw GeometryError("build_reference_frame: invalid mean shape");
    const double fs = face_size(mean);
    if (fs <= 0.0) throw GeometryError("build_reference_frame: mean shape has zero extent");

    constexpr double kMargin = 2.0;
    const double scale = target_face_size / fs;
    const AxisAlignedBox box = bounding_box(mean);

    ReferenceFrame frame;
    Shape scaled;
    scaled.points.resize(mean.points.size());
    for (Index i = 0; i < mean.num_points(); ++i) {
        scaled.points(2 * i) = (mean.x(i) - box.min_x) * scale + kMargin;
        scaled.points(2 * i + 1) = (mean.y(i) - box.min_y) * scale + kMargin;
    }
    frame.width = static_cast<int>(std::ceil(box.width() * scale + 2 * kMargin)) + 1;
    frame.height = static_cast<int>(std::ceil(box.height() * scale + 2 * kMargin)) + 1;
    frame.mesh = delaunay(scaled);

    const BarycentricTable table = build_barycentric_table(frame.mesh, frame.width, frame.height);
    frame.mask.assign(static_cast<size_t>(frame.width) * frame.height, 0);
    for (size_t i = 0; i < frame.mask.size(); ++i)
        frame.mask[i] = table.triangle[i] >= 0 ? 1 : 0;
    frame.rebuild_lookup();
    return frame;
}

Vector sample_appearance(const ReferenceFrame& frame, const Image& image, const Shape& shape) {
    if (shape.num_points() != frame.num_points())
        throw DimensionError("sample_appearance: landmark count mismatch");
    Vector a(frame.L);
    for (Index k = 0; k < frame.L; ++k) {
        const int x = frame.masked_xy[2 * k];
        const int y = frame.masked_xy[2 * k + 1];
        const size_t idx = static_cast<size_t>(y) * frame.width + x;
        const auto& tri = frame.mesh.triangles[frame.table.triangle[idx]];
        const auto& [alpha, beta, gamma] = frame.table.barycentric[idx];
        const Eigen::Vector2d p = alpha * shape.point(tri[0]) + beta * shape.point(tri[1]) +
                                  gamma * shape.point(tri[2]);
        a(k) = image.sample_bilinear(p.x(), p.y());
    }
    return a;
}

AppearanceModel train_appearance_model(const std::vector<Example>& examples,
                                       const ReferenceFrame& frame, double variance_fraction,
                                       Matrix* appearances_out) {
    if (examples.size() < 2)
        throw DegenerateInputError("train_appearance_model: need at least 2 examples");

    Matrix appearances(frame.L, static_cast<Index>(examples.size()));
    for (size_t i = 0; i < examples.size(); ++i)
        appearances.col(static_cast<Index>(i)) =
            sample_appearance(frame, examples[i].image, examples[i].shape);

    PcaResult p = pca<double>(appearances, variance_fraction);
    AppearanceModel model;
    model.frame = frame;
    model.mean = std::move(p.mean);
    model.basis = std::move(p.basis);
    model.eigenvalues = std::move(p.eigenvalues);
    if (appearances_out) *appearances_out = std::move(appearances);
    return model;
}

} // namespace aam
