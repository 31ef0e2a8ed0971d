#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "aam/error.hpp"

namespace aam {

/// Grayscale raster, intensities as doubles (nominally in [0, 1]),
/// row-major, pixel (x, y) centered at continuous coordinate (x, y).
class Image {
  public:
    Image() = default;
    Image(int width, int height, double fill = 0.0)
        : width_(width), height_(height), data_(static_cast<size_t>(width) * height, fill) {
        if (width < 1 || height < 1) throw GeometryError("Image: non-positive dimensions");
    }

    int width() const { return width_; }
    int height() const { return height_; }

    double& at(int x, int y) { return data_[static_cast<size_t>(y) * width_ + x]; }
    double at(int x, int y) const { return data_[static_cast<size_t>(y) * width_ + x]; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    /// Bilinear sample with border clamp. Coordinates within 1e-9 of a pixel
    /// center snap to it, so identity warps reproduce stored values exactly.
    double sample_bilinear(double x, double y) const {
        x = std::clamp(x, 0.0, static_cast<double>(width_ - 1));
        y = std::clamp(y, 0.0, static_cast<double>(height_ - 1));
        double rx = std::round(x), ry = std::round(y);
        if (std::abs(x - rx) < 1e-9) x = rx;
        if (std::abs(y - ry) < 1e-9) y = ry;
        int x0 = static_cast<int>(std::floor(x));
        int y0 = static_cast<int>(std::floor(y));
        int x1 = std::min(x0 + 1, width_ - 1);
        int y1 = std::min(y0 + 1, height_ - 1);
        double fx = x - x0, fy = y - y0;
        double top = at(x0, y0) * (1.0 - fx) + at(x1, y0) * fx;
        double bot = at(x0, y1) * (1.0 - fx) + at(x1, y1) * fx;
        return top * (1.0 - fy) + bot * fy;
    }

  private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

} // namespace aam
