#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "aam/appearance_model.hpp"
#include "aam/synth.hpp"
#include "oracles.hpp"

using namespace aam;

namespace {

Shape unit_square() {
    Shape s;
    s.points.resize(8);
    s.points << 0, 0, 1, 0, 1, 1, 0, 1;
    return s;
}

/// Renders an image that paints the frame's own raster at a given placement.
Image paint_frame(const ReferenceFrame& frame, const Vector& appearance) {
    return frame.unvectorize(appearance);
}

} // namespace

TEST_CASE("build_reference_frame geometry") {
    SUBCASE("unit square at target size 100") {
        const ReferenceFrame frame = build_reference_frame(unit_square(), 100.0);
        CHECK(frame.width >= 100);
        CHECK(frame.width <= 110);
        CHECK(frame.height >= 100);
        CHECK(frame.height <= 110);
        CHECK(frame.L > 0);
        CHECK(frame.L <= static_cast<Index>(frame.width) * frame.height);
        CHECK(face_size(frame.mesh.vertices) == doctest::Approx(100.0).epsilon(1e-9));
    }
    SUBCASE("pixel indices are dense 0..L-1") {
        const ReferenceFrame frame = build_reference_frame(stylized_face_shape(), 60.0);
        std::vector<bool> seen(frame.L, false);
        for (int y = 0; y < frame.height; ++y) {
            for (int x = 0; x < frame.width; ++x) {
                const size_t idx = static_cast<size_t>(y) * frame.width + x;
                const int pi = frame.pixel_index[idx];
                if (frame.mask[idx]) {
                    REQUIRE(pi >= 0);
                    REQUIRE(pi < frame.L);
                    CHECK(!seen[pi]);
                    seen[pi] = true;
                } else {
                    CHECK(pi == -1);
                }
            }
        }
        for (bool s : seen) CHECK(s);
    }
    SUBCASE("doubling the face size roughly quadruples L") {
        const ReferenceFrame small = build_reference_frame(stylized_face_shape(), 50.0);
        const ReferenceFrame big = build_reference_frame(stylized_face_shape(), 100.0);
        const double ratio = static_cast<double>(big.L) / static_cast<double>(small.L);
        CHECK(ratio >= 4.0 * 0.95);
        CHECK(ratio <= 4.0 * 1.05);
    }
    SUBCASE("frame construction is deterministic") {
        const ReferenceFrame a = build_reference_frame(stylized_face_shape(), 60.0);
        const ReferenceFrame b = build_reference_frame(stylized_face_shape(), 60.0);
        CHECK(a.width == b.width);
        CHECK(a.height == b.height);
        CHECK(a.mask == b.mask);
        CHECK(a.mesh.triangles == b.mesh.triangles);
        CHECK((a.mesh.vertices.points - b.mesh.vertices.points).norm() == 0.0);
    }
    SUBCASE("mask pixels lie inside the mesh") {
        const ReferenceFrame frame = build_reference_frame(stylized_face_shape(), 60.0);
        const BarycentricTable table =
            build_barycentric_table(frame.mesh, frame.width, frame.height);
        for (size_t i = 0; i < frame.mask.size(); ++i)
            CHECK(static_cast<bool>(frame.mask[i]) == (table.triangle[i] >= 0));
    }
}

TEST_CASE("sample_appearance") {
    Rng rng(211);
    const ReferenceFrame frame = build_reference_frame(stylized_face_shape(), 60.0);

    SUBCASE("identity placement recovers painted values") {
        const Vector painted = oracle::random_vector(frame.L, rng);
        const Image image = paint_frame(frame, painted);
        const Vector sampled = sample_appearance(frame, image, frame.mesh.vertices);
        CHECK((sampled - painted).cwiseAbs().maxCoeff() <= 1e-12);
    }
    SUBCASE("constant image samples to a constant vector") {
        Image image(200, 200, 0.37);
        Rng pose_rng(212);
        Shape shape = frame.mesh.vertices;
        shape.points *= 1.7;
        shape.points.array() += 20.0;
        const Vector sampled = sample_appearance(frame, image, shape);
        for (Index k = 0; k < frame.L; ++k) CHECK(sampled(k) == doctest::Approx(0.37));
    }
    SUBCASE("matches a per-pixel barycentric oracle") {
        Image image(160, 160);
        for (int y = 0; y < 160; ++y)
            for (int x = 0; x < 160; ++x) image.at(x, y) = rng.uniform();
        SimilarityTransform t;
        t.scale = 1.9;
        t.rotation = 0.3;
        t.translation = {35.0, 42.0};
        const Shape shape = t.apply(frame.mesh.vertices);

        const Vector sampled = sample_appearance(frame, image, shape);
        for (int trial = 0; trial < 100; ++trial) {
            const Index k = static_cast<Index>(rng.below(static_cast<std::uint64_t>(frame.L)));
            const int px = frame.masked_xy[2 * k];
            const int py = frame.masked_xy[2 * k + 1];
            // oracle: find the containing triangle by brute force
            double expect = 0.0;
            bool found = false;
            for (const auto& tri : frame.mesh.triangles) {
                const Eigen::Vector2d a = frame.mesh.vertices.point(tri[0]);
                const Eigen::Vector2d b = frame.mesh.vertices.point(tri[1]);
                const Eigen::Vector2d c = frame.mesh.vertices.point(tri[2]);
                const Eigen::Vector2d p(px, py);
                const double den =
                    (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
                const double beta =
                    ((p.x() - a.x()) * (c.y() - a.y()) - (p.y() - a.y()) * (c.x() - a.x())) / den;
                const double gamma =
                    ((b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x())) / den;
                const double alpha = 1.0 - beta - gamma;
                if (alpha < -1e-9 || beta < -1e-9 || gamma < -1e-9) continue;
                const Eigen::Vector2d q = alpha * shape.point(tri[0]) +
                                          beta * shape.point(tri[1]) +
                                          gamma * shape.point(tri[2]);
                expect = image.sample_bilinear(q.x(), q.y());
                found = true;
                break;
            }
            REQUIRE(found);
            CHECK(sampled(k) == doctest::Approx(expect).epsilon(1e-6));
        }
    }
    SUBCASE("sampling is linear in the image") {
        Image i1(160, 160), i2(160, 160);
        for (int y = 0; y < 160; ++y)
            for (int x = 0; x < 160; ++x) {
                i1.at(x, y) = rng.uniform();
                i2.at(x, y) = rng.uniform();
            }
        SimilarityTransform t;
        t.scale = 2.1;
        t.translation = {30.0, 30.0};
        const Shape shape = t.apply(frame.mesh.vertices);
        const double a = 0.35, b = 1.4;
        Image mix(160, 160);
        for (int y = 0; y < 160; ++y)
            for (int x = 0; x < 160; ++x) mix.at(x, y) = a * i1.at(x, y) + b * i2.at(x, y);
        const Vector s1 = sample_appearance(frame, i1, shape);
        const Vector s2 = sample_appearance(frame, i2, shape);
        const Vector sm = sample_appearance(frame, mix, shape);
        CHECK((sm - a * s1 - b * s2).cwiseAbs().maxCoeff() <= 1e-8);
    }
}

TEST_CASE("train_appearance_model") {
    Rng rng(223);
    const Shape base = stylized_face_shape();
    const ReferenceFrame frame = build_reference_frame(base, 60.0);

    SUBCASE("identical examples give M = 0") {
        const Vector painted = oracle::random_vector(frame.L, rng);
        Example ex;
        ex.image = paint_frame(frame, painted);
        ex.shape = frame.mesh.vertices;
        std::vector<Example> examples(4, ex);
        const AppearanceModel model = train_appearance_model(examples, frame, 1.0);
        CHECK(model.basis.size() == 0);
        CHECK((model.mean - painted).cwiseAbs().maxCoeff() <= 1e-12);
    }
    SUBCASE("single linear factor is recovered") {
        const Vector nu = Vector::Constant(frame.L, 0.5);
        Vector psi = oracle::random_vector(frame.L, rng).normalized();
        std::vector<Example> examples;
        for (int i = 0; i < 12; ++i) {
            Example ex;
            ex.image = paint_frame(frame, nu + rng.normal(0.0, 0.08) * psi);
            ex.shape = frame.mesh.vertices;
            examples.push_back(std::move(ex));
        }
        const AppearanceModel model = train_appearance_model(examples, frame, 1.0);
        REQUIRE(model.basis.size() == 1);
        const double cos2 = std::pow(model.basis.columns.col(0).dot(psi), 2);
        CHECK(cos2 >= 0.999);
    }
    SUBCASE("training appearances reconstruct at fraction 1") {
        Matrix appearances;
        std::vector<Example> examples;
        for (int i = 0; i < 6; ++i) {
            Example ex;
            ex.image = paint_frame(frame, oracle::random_vector(frame.L, rng));
            ex.shape = frame.mesh.vertices;
            examples.push_back(std::move(ex));
        }
        const AppearanceModel model =
            train_appearance_model(examples, frame, 1.0, &appearances);
        for (Index i = 0; i < appearances.cols(); ++i) {
            const Vector q = project(model.basis, model.mean, Vector(appearances.col(i)));
            const Vector rebuilt = reconstruct(model.basis, model.mean, q);
            CHECK((rebuilt - appearances.col(i)).norm() <= 1e-6 * std::max(1.0, appearances.col(i).norm()));
        }
    }
    SUBCASE("fewer than 2 examples throws") {
        Example ex;
        ex.image = Image(10, 10);
        ex.shape = frame.mesh.vertices;
        CHECK_THROWS_AS(train_appearance_model({ex}, frame, 1.0), DegenerateInputError);
    }
}
