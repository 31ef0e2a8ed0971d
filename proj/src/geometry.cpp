#include "aam/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

namespace aam {

Eigen::Vector2d Shape::centroid() const {
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    const Index v = num_points();
    for (Index i = 0; i < v; ++i) c += point(i);
    return c / static_cast<double>(v);
}

bool Shape::valid() const {
    if (points.size() % 2 != 0 || num_points() < 3) return false;
    return points.allFinite();
}

Eigen::Matrix2d SimilarityTransform::linear() const {
    const double c = scale * std::cos(rotation);
    const double s = scale * std::sin(rotation);
    Eigen::Matrix2d m;
    m << c, -s, s, c;
    return m;
}

Eigen::Vector2d SimilarityTransform::apply(const Eigen::Vector2d& p) const {
    return linear() * p + translation;
}

Shape SimilarityTransform::apply(const Shape& s) const {
    const Eigen::Matrix2d m = linear();
    Shape out;
    out.points.resize(s.points.size());
    for (Index i = 0; i < s.num_points(); ++i) {
        Eigen::Vector2d p = m * s.point(i) + translation;
        out.points(2 * i) = p.x();
        out.points(2 * i + 1) = p.y();
    }
    return out;
}

SimilarityTransform SimilarityTransform::inverse() const {
    SimilarityTransform inv;
    inv.scale = 1.0 / scale;
    inv.rotation = -rotation;
    inv.translation = -(inv.linear() * translation);
    return inv;
}

AxisAlignedBox bounding_box(const Shape& s) {
    AxisAlignedBox b;
    b.min_x = b.max_x = s.x(0);
    b.min_y = b.max_y = s.y(0);
    for (Index i = 1; i < s.num_points(); ++i) {
        b.min_x = std::min(b.min_x, s.x(i));
        b.max_x = std::max(b.max_x, s.x(i));
        b.min_y = std::min(b.min_y, s.y(i));
        b.max_y = std::max(b.max_y, s.y(i));
    }
    return b;
}

double face_size(const Shape& s) {
    const AxisAlignedBox b = bounding_box(s);
    return (b.width() + b.height()) / 2.0;
}

SimilarityTransform optimal_similarity(const Shape& src, const Shape& dst) {
    if (src.num_points() != dst.num_points())
        throw DimensionError("optimal_similarity: shapes have different landmark counts");
    const Index v = src.num_points();
    const Eigen::Vector2d cs = src.centroid();
    const Eigen::Vector2d cd = dst.centroid();

    std::complex<double> num(0.0, 0.0);
    double den = 0.0;
    for (Index i = 0; i < v; ++i) {
        const std::complex<double> zs(src.x(i) - cs.x(), src.y(i) - cs.y());
        const std::complex<double> zd(dst.x(i) - cd.x(), dst.y(i) - cd.y());
        num += std::conj(zs) * zd;
        den += std::norm(zs);
    }
    if (!std::isfinite(den) || den <= 0.0)
        throw DegenerateInputError("optimal_similarity: source points are coincident or non-finite");

    const std::complex<double> a = num / den;
    SimilarityTransform t;
    t.scale = std::abs(a);
    t.rotation = std::arg(a);
    t.translation = cd - t.linear() * cs;
    if (!std::isfinite(t.scale) || !std::isfinite(t.rotation) || !t.translation.allFinite())
        throw DegenerateInputError("optimal_similarity: non-finite transform");
    return t;
}

namespace {

/// Centroid to origin, Frobenius norm to 1, first off-centroid landmark
/// rotated onto the positive x-axis. Intrinsic to the landmark configuration,
/// so the canonical frame is unchanged when all inputs share one similarity
/// transform.
Shape canonicalize(const Shape& s) {
    Shape out = s;
    const Eigen::Vector2d c = s.centroid();
    for (Index i = 0; i < s.num_points(); ++i)
        out.set_point(i, s.x(i) - c.x(), s.y(i) - c.y());
    const double norm = out.points.norm();
    if (norm <= 0.0) throw DegenerateInputError("procrustes: shape has zero spread");
    out.points /= norm;

    Index anchor = 0;
    while (anchor < out.num_points() && out.point(anchor).norm() < 1e-9) ++anchor;
    if (anchor == out.num_points()) return out;
    const double theta = std::atan2(out.y(anchor), out.x(anchor));
    SimilarityTransform derotate;
    derotate.rotation = -theta;
    return derotate.apply(out);
}

} // namespace

AlignedShapeSet procrustes_align(const std::vector<Shape>& shapes) {
    if (shapes.empty()) throw DegenerateInputError("procrustes_align: no shapes");
    const Index v = shapes[0].num_points();
    for (const Shape& s : shapes) {
        if (!s.valid()) throw GeometryError("procrustes_align: invalid shape");
        if (s.num_points() != v)
            throw DimensionError("procrustes_align: shapes have different landmark counts");
    }

    const Index n = static_cast<Index>(shapes.size());
    Shape reference = canonicalize(shapes[0]);
    Matrix aligned(2 * v, n);

    constexpr int kMaxIterations = 100;
    constexpr double kTolerance = 1e-8;
    for (int iter = 0; iter < kMaxIterations; ++iter) {
        for (Index i = 0; i < n; ++i) {
            const SimilarityTransform t = optimal_similarity(shapes[i], reference);
            aligned.col(i) = t.apply(shapes[i]).points;
        }
        Shape new_reference = canonicalize(Shape(aligned.rowwise().mean()));
        const double movement = (new_reference.points - reference.points).norm();
        reference = std::move(new_reference);
        if (movement < kTolerance) break;
    }

    AlignedShapeSet out;
    out.shapes.resize(2 * v, n);
    for (Index i = 0; i < n; ++i) {
        const SimilarityTransform t = optimal_similarity(shapes[i], reference);
        out.shapes.col(i) = t.apply(shapes[i]).points;
    }
    out.mean = Shape(out.shapes.rowwise().mean());
    return out;
}

Matrix global_similarity_raw(const Shape& mean) {
    const Index v = mean.num_points();
    Matrix raw(2 * v, 4);
    for (Index i = 0; i < v; ++i) {
        raw(2 * i, 0) = mean.x(i);
        raw(2 * i + 1, 0) = mean.y(i);
        raw(2 * i, 1) = -mean.y(i);
        raw(2 * i + 1, 1) = mean.x(i);
        raw(2 * i, 2) = 1.0;
        raw(2 * i + 1, 2) = 0.0;
        raw(2 * i, 3) = 0.0;
        raw(2 * i + 1, 3) = 1.0;
    }
    return raw;
}

Basis global_similarity_basis(const Shape& mean) {
    return orthonormalize<double>(global_similarity_raw(mean));
}

namespace {

struct Tri {
    int a, b, c;
    bool alive = true;
};

double cross2(const Eigen::Vector2d& o, const Eigen::Vector2d& p, const Eigen::Vector2d& q) {
    return (p.x() - o.x()) * (q.y() - o.y()) - (p.y() - o.y()) * (q.x() - o.x());
}

/// Positive when d is strictly inside the circumcircle of CCW triangle (a,b,c).
double incircle(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c,
                const Eigen::Vector2d& d) {
    const double adx = a.x() - d.x(), ady = a.y() - d.y();
    const double bdx = b.x() - d.x(), bdy = b.y() - d.y();
    const double cdx = c.x() - d.x(), cdy = c.y() - d.y();
    const double ad = adx * adx + ady * ady;
    const double bd = bdx * bdx + bdy * bdy;
    const double cd = cdx * cdx + cdy * cdy;
    return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) +
           ad * (bdx * cdy - bdy * cdx);
}

} // namespace

TriMesh delaunay(const Shape& vertices) {
    if (!vertices.valid()) throw GeometryError("delaunay: invalid vertex shape");
    const Index v = vertices.num_points();

    // Uniform scaling and translation preserve Delaunay triangulations;
    // working in a unit frame keeps the incircle determinant well scaled.
    const AxisAlignedBox box = bounding_box(vertices);
    const double span = std::max({box.width(), box.height(), 1e-12});
    std::vector<Eigen::Vector2d> pts(v + 3);
    for (Index i = 0; i < v; ++i)
        pts[i] = (vertices.point(i) - Eigen::Vector2d(box.min_x, box.min_y)) / span;

    if (v >= 3) {
        bool collinear = true;
        for (Index i = 0; i < v && collinear; ++i)
            for (Index j = i + 1; j < v && collinear; ++j)
                for (Index k = j + 1; k < v && collinear; ++k)
                    if (std::abs(cross2(pts[i], pts[j], pts[k])) > 1e-12) collinear = false;
        if (collinear) throw GeometryError("delaunay: vertices are collinear");
    }

    const int sa = static_cast<int>(v), sb = static_cast<int>(v) + 1, sc = static_cast<int>(v) + 2;
    pts[sa] = {-30.0, -30.0};
    pts[sb] = {33.0, -30.0};
    pts[sc] = {0.5, 33.0};

    std::vector<Tri> tris;
    tris.push_back({sa, sb, sc});

    constexpr double kInCircleTol = 1e-12;
    for (int p = 0; p < static_cast<int>(v); ++p) {
        std::vector<int> bad;
        for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
            if (!tris[t].alive) continue;
            if (incircle(pts[tris[t].a], pts[tris[t].b], pts[tris[t].c], pts[p]) > kInCircleTol)
                bad.push_back(t);
        }
        // Cavity boundary: edges of bad triangles not shared by two bad triangles.
        std::vector<std::pair<int, int>> boundary;
        auto add_edge = [&boundary](int u, int w) {
            for (auto it = boundary.begin(); it != boundary.end(); ++it) {
                if (it->first == w && it->second == u) {
                    boundary.erase(it);
                    return;
                }
            }
            boundary.emplace_back(u, w);
        };
        for (int t : bad) {
            add_edge(tris[t].a, tris[t].b);
            add_edge(tris[t].b, tris[t].c);
            add_edge(tris[t].c, tris[t].a);
            tris[t].alive = false;
        }
        for (const auto& [u, w] : boundary) tris.push_back({u, w, p});
    }

    TriMesh mesh;
    mesh.vertices = vertices;
    for (const Tri& t : tris) {
        if (!t.alive) continue;
        if (t.a >= v || t.b >= v || t.c >= v) continue; // touches super-triangle
        std::array<int, 3> tri = {t.a, t.b, t.c};
        // Orient CCW, then rotate the lowest index first for a canonical form.
        if (cross2(pts[tri[0]], pts[tri[1]], pts[tri[2]]) < 0.0) std::swap(tri[1], tri[2]);
        while (tri[0] != *std::min_element(tri.begin(), tri.end()))
            tri = {tri[1], tri[2], tri[0]};
        mesh.triangles.push_back(tri);
    }
    std::sort(mesh.triangles.begin(), mesh.triangles.end());
    if (mesh.triangles.empty()) throw GeometryError("delaunay: triangulation is empty");
    return mesh;
}

BarycentricTable build_barycentric_table(const TriMesh& mesh, int width, int height) {
    BarycentricTable table;
    table.width = width;
    table.height = height;
    table.triangle.assign(static_cast<size_t>(width) * height, -1);
    table.barycentric.assign(static_cast<size_t>(width) * height, {0.0, 0.0, 0.0});

    constexpr double kEdgeTol = 1e-9;
    for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
        const auto& tri = mesh.triangles[t];
        const Eigen::Vector2d a = mesh.vertices.point(tri[0]);
        const Eigen::Vector2d b = mesh.vertices.point(tri[1]);
        const Eigen::Vector2d c = mesh.vertices.point(tri[2]);
        const double den = cross2(a, b, c);
        if (std::abs(den) < 1e-14) continue;

        const int x0 = std::max(0, static_cast<int>(std::floor(std::min({a.x(), b.x(), c.x()}) - 1)));
        const int x1 = std::min(width - 1, static_cast<int>(std::ceil(std::max({a.x(), b.x(), c.x()}) + 1)));
        const int y0 = std::max(0, static_cast<int>(std::floor(std::min({a.y(), b.y(), c.y()}) - 1)));
        const int y1 = std::min(height - 1, static_cast<int>(std::ceil(std::max({a.y(), b.y(), c.y()}) + 1)));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const size_t idx = static_cast<size_t>(y) * width + x;
                if (table.triangle[idx] >= 0) continue; // lowest index wins
                const Eigen::Vector2d p(static_cast<double>(x), static_cast<double>(y));
                const double beta = cross2(a, p, c) / den;
                const double gamma = cross2(a, b, p) / den;
                const double alpha = 1.0 - beta - gamma;
                if (alpha < -kEdgeTol || beta < -kEdgeTol || gamma < -kEdgeTol) continue;
                table.triangle[idx] = t;
                table.barycentric[idx] = {alpha, beta, gamma};
            }
        }
    }
    return table;
}

void piecewise_affine_warp(const BarycentricTable& table, const TriMesh& src_mesh,
                           const Shape& dst_vertices, const Image& image, Image& out) {
    if (dst_vertices.num_points() != src_mesh.vertices.num_points())
        throw DimensionError("piecewise_affine_warp: vertex count mismatch");
    for (int y = 0; y < table.height; ++y) {
        for (int x = 0; x < table.width; ++x) {
            const size_t idx = static_cast<size_t>(y) * table.width + x;
            const int t = table.triangle[idx];
            if (t < 0) {
                out.at(x, y) = 0.0;
                continue;
            }
            const auto& tri = src_mesh.triangles[t];
            const auto& [alpha, beta, gamma] = table.barycentric[idx];
            const Eigen::Vector2d p = alpha * dst_vertices.point(tri[0]) +
                                      beta * dst_vertices.point(tri[1]) +
                                      gamma * dst_vertices.point(tri[2]);
            out.at(x, y) = image.sample_bilinear(p.x(), p.y());
        }
    }
}

Image piecewise_affine_warp(const TriMesh& src_mesh, const Shape& dst_vertices,
                            const Image& image, int width, int height) {
    const BarycentricTable table = build_barycentric_table(src_mesh, width, height);
    Image out(width, height, 0.0);
    piecewise_affine_warp(table, src_mesh, dst_vertices, image, out);
    return out;
}

} // namespace aam
