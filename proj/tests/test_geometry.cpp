#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>

#include "aam/geometry.hpp"
#include "oracles.hpp"

using namespace aam;

namespace {

Shape make_shape(std::initializer_list<double> coords) {
    Shape s;
    s.points.resize(static_cast<Index>(coords.size()));
    Index i = 0;
    for (double c : coords) s.points(i++) = c;
    return s;
}

SimilarityTransform random_similarity(Rng& rng) {
    SimilarityTransform t;
    t.scale = std::exp(rng.normal(0.0, 0.3));
    t.rotation = rng.uniform(-std::numbers::pi, std::numbers::pi);
    t.translation = {rng.normal(0.0, 20.0), rng.normal(0.0, 20.0)};
    return t;
}

const Shape kSquare = make_shape({0, 0, 1, 0, 1, 1, 0, 1});

} // namespace

TEST_CASE("face_size") {
    CHECK(face_size(kSquare) == doctest::Approx(1.0));
    const Shape rect = make_shape({0, 0, 2, 0, 2, 4, 0, 4});
    CHECK(face_size(rect) == doctest::Approx(3.0));

    Rng rng(17);
    const Shape s = oracle::random_shape(9, rng);
    const double c = 2.7;
    SimilarityTransform scale_only;
    scale_only.scale = c;
    CHECK(face_size(scale_only.apply(s)) == doctest::Approx(c * face_size(s)).epsilon(1e-12));

    SimilarityTransform translate;
    translate.translation = {123.4, -77.0};
    CHECK(face_size(translate.apply(s)) == doctest::Approx(face_size(s)).epsilon(1e-12));
}

TEST_CASE("optimal_similarity recovers transforms") {
    Rng rng(23);
    const Shape src = oracle::random_shape(12, rng);

    SUBCASE("identity") {
        const SimilarityTransform t = optimal_similarity(src, src);
        CHECK(t.scale == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(t.rotation) <= 1e-12);
        CHECK(t.translation.norm() <= 1e-10);
    }
    SUBCASE("pure rotation about the centroid") {
        SimilarityTransform rot;
        rot.rotation = std::numbers::pi / 2;
        const Eigen::Vector2d c = src.centroid();
        rot.translation = c - rot.linear() * c;
        const SimilarityTransform t = optimal_similarity(src, rot.apply(src));
        CHECK(t.rotation == doctest::Approx(std::numbers::pi / 2).epsilon(1e-10));
        CHECK(t.scale == doctest::Approx(1.0).epsilon(1e-10));
    }
    SUBCASE("random generate-and-recover") {
        for (int trial = 0; trial < 10; ++trial) {
            const SimilarityTransform truth = random_similarity(rng);
            const Shape dst = truth.apply(src);
            const SimilarityTransform t = optimal_similarity(src, dst);
            CHECK(t.scale == doctest::Approx(truth.scale).epsilon(1e-8));
            CHECK(t.rotation == doctest::Approx(truth.rotation).epsilon(1e-8));
            CHECK((t.translation - truth.translation).norm() <= 1e-8 * (1 + truth.translation.norm()));
        }
    }
    SUBCASE("degenerate source throws") {
        Shape collapsed = src;
        for (Index i = 0; i < collapsed.num_points(); ++i) collapsed.set_point(i, 1.0, 2.0);
        CHECK_THROWS_AS(optimal_similarity(collapsed, src), DegenerateInputError);
    }
    SUBCASE("landmark count mismatch throws") {
        CHECK_THROWS_AS(optimal_similarity(src, kSquare), DimensionError);
    }
}

TEST_CASE("procrustes_align on a pure similarity family") {
    Rng rng(29);
    const Shape canonical = oracle::random_shape(10, rng);
    std::vector<Shape> shapes;
    for (int i = 0; i < 8; ++i) shapes.push_back(random_similarity(rng).apply(canonical));

    const AlignedShapeSet aligned = procrustes_align(shapes);
    for (Index i = 1; i < aligned.num_samples(); ++i)
        CHECK((aligned.shapes.col(i) - aligned.shapes.col(0)).norm() <= 1e-7);
    // mean is the canonical shape up to the normalization gauge
    const SimilarityTransform t = optimal_similarity(canonical, aligned.mean);
    CHECK((t.apply(canonical).points - aligned.mean.points).norm() <= 1e-7);
}

TEST_CASE("procrustes_align basic contracts") {
    Rng rng(31);
    SUBCASE("single shape normalizes to the mean") {
        const Shape s = oracle::random_shape(6, rng);
        const AlignedShapeSet a = procrustes_align({s});
        CHECK(a.num_samples() == 1);
        CHECK((a.shapes.col(0) - a.mean.points).norm() <= 1e-12);
        CHECK(std::abs(a.mean.points.norm() - 1.0) <= 1e-9);
        CHECK(a.mean.centroid().norm() <= 1e-12);
    }
    SUBCASE("mean field equals the column mean") {
        std::vector<Shape> shapes;
        for (int i = 0; i < 6; ++i) shapes.push_back(oracle::random_shape(7, rng));
        const AlignedShapeSet a = procrustes_align(shapes);
        CHECK((a.shapes.rowwise().mean() - a.mean.points).norm() <= 1e-10);
        for (Index i = 0; i < a.num_samples(); ++i)
            CHECK(a.shape(i).centroid().norm() <= 1e-9);
    }
    SUBCASE("differing landmark counts throw") {
        CHECK_THROWS_AS(procrustes_align({oracle::random_shape(5, rng), oracle::random_shape(6, rng)}),
                        DimensionError);
    }
    SUBCASE("objective is non-increasing across iterations") {
        std::vector<Shape> shapes;
        for (int i = 0; i < 9; ++i) shapes.push_back(oracle::random_shape(8, rng));
        // Run alignment twice: once as-is, once on the aligned output. The
        // second pass must not increase the spread around the mean.
        const AlignedShapeSet a1 = procrustes_align(shapes);
        const Matrix centered1 = a1.shapes.colwise() - Vector(a1.mean.points);
        std::vector<Shape> again;
        for (Index i = 0; i < a1.num_samples(); ++i) again.push_back(a1.shape(i));
        const AlignedShapeSet a2 = procrustes_align(again);
        const Matrix centered2 = a2.shapes.colwise() - Vector(a2.mean.points);
        CHECK(centered2.squaredNorm() <= centered1.squaredNorm() + 1e-10);
    }
}

TEST_CASE("procrustes_align is invariant to input similarity transforms") {
    Rng rng(37);
    std::vector<Shape> shapes;
    for (int i = 0; i < 7; ++i) shapes.push_back(oracle::random_shape(9, rng));
    const AlignedShapeSet base = procrustes_align(shapes);

    const SimilarityTransform g = random_similarity(rng);
    std::vector<Shape> moved;
    for (const Shape& s : shapes) moved.push_back(g.apply(s));
    const AlignedShapeSet transformed = procrustes_align(moved);

    CHECK((base.shapes - transformed.shapes).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("global_similarity_basis") {
    Rng rng(41);
    const Shape mean = oracle::random_shape(8, rng);

    SUBCASE("four orthonormal columns") {
        const Basis b = global_similarity_basis(mean);
        REQUIRE(b.size() == 4);
        const Matrix gram = b.columns.transpose() * b.columns;
        CHECK((gram - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-10);
    }
    SUBCASE("raw third column is the uniform x translation") {
        const Matrix raw = global_similarity_raw(mean);
        Shape translated(mean.points + 5.0 * raw.col(2));
        for (Index i = 0; i < mean.num_points(); ++i) {
            CHECK(translated.x(i) == doctest::Approx(mean.x(i) + 5.0));
            CHECK(translated.y(i) == doctest::Approx(mean.y(i)));
        }
    }
    SUBCASE("small rotations stay within the span") {
        const Basis b = global_similarity_basis(mean);
        for (double eps : {1e-3, 1e-2}) {
            SimilarityTransform rot;
            rot.rotation = eps;
            const Vector delta = rot.apply(mean).points - mean.points;
            const Vector residual = delta - b.columns * (b.columns.transpose() * delta);
            CHECK(residual.norm() <= eps * eps * (1.0 + mean.points.norm()));
        }
    }
}

TEST_CASE("delaunay") {
    SUBCASE("three points give one triangle") {
        const TriMesh mesh = delaunay(make_shape({0, 0, 4, 0, 0, 3}));
        REQUIRE(mesh.triangles.size() == 1);
    }
    SUBCASE("unit square gives two triangles sharing a diagonal") {
        const TriMesh mesh = delaunay(kSquare);
        REQUIRE(mesh.triangles.size() == 2);
        CHECK(oracle::delaunay_property_holds(mesh));
        // the two triangles share exactly one edge (two common vertices)
        int shared = 0;
        for (int a : mesh.triangles[0])
            for (int b : mesh.triangles[1])
                if (a == b) ++shared;
        CHECK(shared == 2);
    }
    SUBCASE("30 random points satisfy the empty-circumcircle property") {
        Rng rng(47);
        Shape pts;
        pts.points.resize(60);
        for (Index i = 0; i < 60; ++i) pts.points(i) = rng.uniform(0.0, 100.0);
        const TriMesh mesh = delaunay(pts);
        CHECK(mesh.triangles.size() >= 30);
        CHECK(oracle::delaunay_property_holds(mesh, 1e-9));
    }
    SUBCASE("collinear input throws") {
        CHECK_THROWS_AS(delaunay(make_shape({0, 0, 1, 1, 2, 2, 3, 3})), GeometryError);
    }
    SUBCASE("deterministic for identical input") {
        Rng rng(53);
        const Shape pts = oracle::random_shape(15, rng);
        const TriMesh a = delaunay(pts);
        const TriMesh b = delaunay(pts);
        CHECK(a.triangles == b.triangles);
    }
}

TEST_CASE("piecewise_affine_warp") {
    Rng rng(59);
    // A well-spread mesh over a 40x40 raster.
    const Shape verts = make_shape({2, 2, 37, 3, 36, 36, 3, 35, 20, 18});
    const TriMesh mesh = delaunay(verts);
    Image image(40, 40);
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 40; ++x) image.at(x, y) = rng.uniform();

    SUBCASE("identity warp reproduces masked pixels exactly") {
        const Image out = piecewise_affine_warp(mesh, verts, image, 40, 40);
        const BarycentricTable table = build_barycentric_table(mesh, 40, 40);
        int inside = 0;
        for (int y = 0; y < 40; ++y) {
            for (int x = 0; x < 40; ++x) {
                if (table.triangle[static_cast<size_t>(y) * 40 + x] < 0) {
                    CHECK(out.at(x, y) == 0.0);
                } else {
                    CHECK(out.at(x, y) == image.at(x, y)); // bit-level via center snap
                    ++inside;
                }
            }
        }
        CHECK(inside > 400);
    }
    SUBCASE("vertices map to their destination samples") {
        SimilarityTransform t;
        t.scale = 0.9;
        t.rotation = 0.1;
        t.translation = {2.0, 1.5};
        const Shape dst = t.apply(verts);
        const Image out = piecewise_affine_warp(mesh, dst, image, 40, 40);
        // probing at an interior vertex: the warp evaluates image at dst vertex
        const int vx = static_cast<int>(verts.x(4));
        const int vy = static_cast<int>(verts.y(4));
        // vertex 4 is at integer coordinates, inside the mesh
        CHECK(out.at(vx, vy) ==
              doctest::Approx(image.sample_bilinear(dst.x(4), dst.y(4))).epsilon(1e-6));
    }
    SUBCASE("global affine maps match the closed-form resampler") {
        Eigen::Matrix2d a;
        a << 1.05, 0.08, -0.06, 0.97;
        const Eigen::Vector2d t(1.25, -0.75);
        Shape dst = verts;
        for (Index i = 0; i < verts.num_points(); ++i) {
            const Eigen::Vector2d q = a * verts.point(i) + t;
            dst.set_point(i, q.x(), q.y());
        }
        const Image out = piecewise_affine_warp(mesh, dst, image, 40, 40);
        const BarycentricTable table = build_barycentric_table(mesh, 40, 40);
        int checked = 0;
        for (int trial = 0; trial < 1000 && checked < 200; ++trial) {
            const int x = static_cast<int>(rng.below(40));
            const int y = static_cast<int>(rng.below(40));
            if (table.triangle[static_cast<size_t>(y) * 40 + x] < 0) continue;
            const double expect =
                oracle::affine_resample(image, a, t, {double(x), double(y)});
            CHECK(out.at(x, y) == doctest::Approx(expect).epsilon(1e-6));
            ++checked;
        }
        CHECK(checked == 200);
    }
    SUBCASE("warp is linear in the image") {
        Image image2(40, 40);
        for (int y = 0; y < 40; ++y)
            for (int x = 0; x < 40; ++x) image2.at(x, y) = rng.uniform();
        SimilarityTransform t;
        t.scale = 1.1;
        t.translation = {-1.0, 0.5};
        const Shape dst = t.apply(verts);
        const double alpha = 0.6, beta = -1.7;
        Image mix(40, 40);
        for (int y = 0; y < 40; ++y)
            for (int x = 0; x < 40; ++x)
                mix.at(x, y) = alpha * image.at(x, y) + beta * image2.at(x, y);
        const Image w1 = piecewise_affine_warp(mesh, dst, image, 40, 40);
        const Image w2 = piecewise_affine_warp(mesh, dst, image2, 40, 40);
        const Image wm = piecewise_affine_warp(mesh, dst, mix, 40, 40);
        for (int y = 0; y < 40; ++y)
            for (int x = 0; x < 40; ++x)
                CHECK(std::abs(wm.at(x, y) - alpha * w1.at(x, y) - beta * w2.at(x, y)) <= 1e-8);
    }
}
