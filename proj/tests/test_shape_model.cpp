#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>

#include "aam/shape_model.hpp"
#include "aam/synth.hpp"
#include "oracles.hpp"

using namespace aam;

namespace {

SimilarityTransform random_similarity(Rng& rng) {
    SimilarityTransform t;
    t.scale = std::exp(rng.normal(0.0, 0.25));
    t.rotation = rng.uniform(-std::numbers::pi, std::numbers::pi);
    t.translation = {rng.normal(0.0, 15.0), rng.normal(0.0, 15.0)};
    return t;
}

/// Carries a deformation direction from the base frame into the model's
/// aligned frame (rotation part only; directions have no translation).
Vector direction_in_aligned_frame(const Shape& base, const Shape& aligned_mean,
                                  const Vector& dir) {
    const SimilarityTransform t = optimal_similarity(base, aligned_mean);
    const Eigen::Matrix2d r = t.linear() / t.scale;
    Vector out(dir.size());
    for (Index i = 0; i < dir.size() / 2; ++i)
        out.segment<2>(2 * i) = r * dir.segment<2>(2 * i);
    return out.normalized();
}

} // namespace

TEST_CASE("pure similarity family trains to K = 0") {
    Rng rng(101);
    const Shape canonical = stylized_face_shape();
    std::vector<Shape> shapes;
    for (int i = 0; i < 20; ++i) shapes.push_back(random_similarity(rng).apply(canonical));

    AlignedShapeSet aligned;
    const ShapeModel model = train_shape_model(shapes, 1.0, &aligned);
    CHECK(model.num_local() == 0);
    CHECK(model.basis.size() == 4);

    // every aligned input reconstructs from the global basis + mean
    for (Index i = 0; i < aligned.num_samples(); ++i) {
        const ShapeParams p = shape_to_params(model, aligned.shape(i));
        const Shape rebuilt = params_to_shape(model, p);
        CHECK((rebuilt.points - aligned.shapes.col(i)).norm() <= 1e-6);
    }
}

TEST_CASE("two-factor generative family") {
    Rng rng(103);
    const Shape base = stylized_face_shape();
    Matrix dirs(base.points.size(), 0);
    Vector d1 = random_deformation_direction(base, dirs, rng);
    dirs.conservativeResize(Eigen::NoChange, 1);
    dirs.col(0) = d1;
    Vector d2 = random_deformation_direction(base, dirs, rng);

    // 10:1 variance ratio, small enough that the quadratic terms of the
    // Procrustes norm normalization stay below the model's variance floor
    // and the 1e-6 reconstruction bound.
    const double s1 = 0.25, s2 = 0.25 / std::sqrt(10.0);
    std::vector<Shape> shapes;
    for (int i = 0; i < 10; ++i) {
        const Vector deformed =
            base.points + rng.normal(0.0, s1) * d1 + rng.normal(0.0, s2) * d2;
        shapes.push_back(random_similarity(rng).apply(Shape(deformed)));
    }

    SUBCASE("fraction 1.0 recovers K = 2 and reconstructs the training set") {
        AlignedShapeSet aligned;
        const ShapeModel model = train_shape_model(shapes, 1.0, &aligned);
        CHECK(model.num_local() == 2);
        for (Index i = 0; i < aligned.num_samples(); ++i) {
            const Shape rebuilt =
                params_to_shape(model, shape_to_params(model, aligned.shape(i)));
            CHECK((rebuilt.points - aligned.shapes.col(i)).norm() <= 1e-6);
        }
    }
    SUBCASE("fraction 0.5 keeps only the dominant factor") {
        AlignedShapeSet aligned;
        const ShapeModel model = train_shape_model(shapes, 0.5, &aligned);
        REQUIRE(model.num_local() == 1);
        const Vector expected = direction_in_aligned_frame(base, aligned.mean, d1);
        const double cos2 =
            std::pow(model.local_basis().columns.col(0).dot(expected), 2);
        CHECK(cos2 >= 0.99);
    }
}

TEST_CASE("shape model structural invariants") {
    Rng rng(107);
    const Shape base = stylized_face_shape();
    Matrix none(base.points.size(), 0);
    const Vector d = random_deformation_direction(base, none, rng);
    std::vector<Shape> shapes;
    for (int i = 0; i < 12; ++i) {
        const Vector deformed = base.points + rng.normal(0.0, 2.5) * d;
        shapes.push_back(random_similarity(rng).apply(Shape(deformed)));
    }
    AlignedShapeSet aligned;
    const ShapeModel model = train_shape_model(shapes, 1.0, &aligned);

    SUBCASE("basis is orthonormal") {
        const Matrix gram = model.basis.columns.transpose() * model.basis.columns;
        CHECK((gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() <= 1e-10);
    }
    SUBCASE("first four columns span the similarity tangent at the mean") {
        const Matrix raw = global_similarity_raw(model.mean);
        const Matrix global = model.basis.columns.leftCols(4);
        for (Index j = 0; j < raw.cols(); ++j) {
            const Vector c = global.transpose() * raw.col(j);
            CHECK((global * c - raw.col(j)).norm() <= 1e-8 * raw.col(j).norm());
        }
    }
    SUBCASE("eigenvalues positive and nonincreasing") {
        for (Index i = 0; i < model.eigenvalues.size(); ++i) {
            CHECK(model.eigenvalues(i) > 0.0);
            if (i > 0) CHECK(model.eigenvalues(i) <= model.eigenvalues(i - 1) * (1 + 1e-12));
        }
    }
    SUBCASE("similarity perturbations touch only the global parameters") {
        // finite-difference gauge check at the mean and near it
        const double eps = 1e-4;
        for (double local_scale : {0.0, 0.003}) {
            Vector p0 = Vector::Zero(model.basis.size());
            if (model.num_local() > 0 && local_scale > 0) p0(4) = local_scale;
            const Shape s = params_to_shape(model, ShapeParams{p0});

            SimilarityTransform nudge;
            nudge.scale = 1.0 + eps;
            nudge.rotation = eps;
            nudge.translation = {eps, -eps};
            const ShapeParams p1 = shape_to_params(model, nudge.apply(s));
            for (Index i = 4; i < p1.p.size(); ++i)
                CHECK(std::abs(p1.p(i) - p0(i)) <= 1e-6);
        }
    }
    SUBCASE("landmark count mismatch throws") {
        Shape other;
        other.points = Vector::Zero(2 * (base.num_points() + 1));
        CHECK_THROWS_AS(shape_to_params(model, other), DimensionError);
    }
    SUBCASE("fewer than 2 shapes throws") {
        CHECK_THROWS_AS(train_shape_model({shapes[0]}, 1.0), DegenerateInputError);
    }
}
