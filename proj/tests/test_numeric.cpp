#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "aam/numeric.hpp"
#include "oracles.hpp"

using namespace aam;

namespace {

void check_orthonormal(const Basis& b, double tol = 1e-10) {
    for (Index i = 0; i < b.size(); ++i) {
        CHECK(std::abs(b.columns.col(i).norm() - 1.0) <= tol);
        for (Index j = i + 1; j < b.size(); ++j)
            CHECK(std::abs(b.columns.col(i).dot(b.columns.col(j))) <= tol);
    }
}

} // namespace

TEST_CASE("pca: two 2D samples on the x axis") {
    Matrix samples(2, 2);
    samples << -1, 1, 0, 0;
    const PcaResult r = pca<double>(samples, 1.0);
    CHECK(r.mean.norm() == doctest::Approx(0.0).epsilon(1e-15));
    REQUIRE(r.basis.size() == 1);
    CHECK(std::abs(r.basis.columns(0, 0)) == doctest::Approx(1.0));
    CHECK(std::abs(r.basis.columns(1, 0)) == doctest::Approx(0.0));
    CHECK(r.eigenvalues(0) == doctest::Approx(2.0)); // divisor N-1 = 1
}

TEST_CASE("pca: identical samples give an empty basis") {
    Matrix samples(3, 5);
    Vector one(3);
    one << 0.3, -1.2, 4.0;
    for (Index i = 0; i < 5; ++i) samples.col(i) = one;
    const PcaResult r = pca<double>(samples, 1.0);
    CHECK((r.mean - one).norm() <= 1e-12);
    CHECK(r.basis.size() == 0);
    CHECK(r.eigenvalues.size() == 0);
}

TEST_CASE("pca matches the covariance eigendecomposition oracle") {
    Rng rng(42);
    SUBCASE("covariance route, dim < N") {
        const Matrix samples = oracle::random_matrix(4, 5, rng);
        const PcaResult r = pca<double>(samples, 1.0);
        const oracle::EigResult ref = oracle::covariance_eig(samples);
        REQUIRE(r.basis.size() <= ref.eigenvalues.size());
        for (Index i = 0; i < r.basis.size(); ++i) {
            CHECK(r.eigenvalues(i) == doctest::Approx(ref.eigenvalues(i)).epsilon(1e-9));
            // directions match up to sign
            const double c = std::abs(r.basis.columns.col(i).dot(ref.directions.col(i)));
            CHECK(c == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
    SUBCASE("gram route, dim > N, against the covariance oracle") {
        const Matrix samples = oracle::random_matrix(12, 5, rng);
        const PcaResult r = pca<double>(samples, 1.0);
        const oracle::EigResult ref = oracle::covariance_eig(samples);
        REQUIRE(r.basis.size() == 4); // N - 1
        for (Index i = 0; i < r.basis.size(); ++i) {
            CHECK(r.eigenvalues(i) == doctest::Approx(ref.eigenvalues(i)).epsilon(1e-9));
            const double c = std::abs(r.basis.columns.col(i).dot(ref.directions.col(i)));
            CHECK(c == doctest::Approx(1.0).epsilon(1e-9));
        }
        check_orthonormal(r.basis);
    }
}

TEST_CASE("pca respects the variance fraction") {
    Rng rng(7);
    // Two dominant directions with 10:1 variance plus negligible noise.
    Matrix samples(6, 40);
    const Vector d1 = Vector::Unit(6, 0);
    const Vector d2 = Vector::Unit(6, 3);
    for (Index i = 0; i < 40; ++i)
        samples.col(i) = rng.normal(0.0, 10.0) * d1 + rng.normal(0.0, std::sqrt(10.0)) * d2;
    const PcaResult half = pca<double>(samples, 0.5);
    REQUIRE(half.basis.size() == 1);
    const double cos2 = std::pow(half.basis.columns.col(0).dot(d1), 2);
    CHECK(cos2 >= 0.999); // finite-sample estimate of the dominant factor
    const PcaResult all = pca<double>(samples, 1.0);
    CHECK(all.basis.size() == 2);
}

TEST_CASE("pca eigenvalue sum equals total variance at fraction 1") {
    Rng rng(99);
    const Matrix samples = oracle::random_matrix(8, 12, rng);
    const PcaResult r = pca<double>(samples, 1.0);
    const Matrix centered = samples.colwise() - r.mean;
    const double total = centered.squaredNorm() / 11.0;
    CHECK(r.eigenvalues.sum() == doctest::Approx(total).epsilon(1e-8));
}

TEST_CASE("pca round trip reconstructs training samples at fraction 1") {
    Rng rng(3);
    const Matrix samples = oracle::random_matrix(9, 6, rng);
    const PcaResult r = pca<double>(samples, 1.0);
    for (Index i = 0; i < samples.cols(); ++i) {
        const Vector coeffs = project(r.basis, r.mean, Vector(samples.col(i)));
        const Vector rebuilt = reconstruct(r.basis, r.mean, coeffs);
        CHECK((rebuilt - samples.col(i)).norm() <= 1e-8);
    }
}

TEST_CASE("pca rejects degenerate input") {
    Matrix one(3, 1);
    one << 1, 2, 3;
    CHECK_THROWS_AS(pca<double>(one, 1.0), DegenerateInputError);
}

TEST_CASE("orthonormalize: already orthonormal input is preserved") {
    Matrix m = Matrix::Identity(5, 3);
    const Basis b = orthonormalize<double>(m);
    REQUIRE(b.size() == 3);
    check_orthonormal(b);
    // span unchanged: every input column reconstructs exactly
    for (Index j = 0; j < 3; ++j) {
        const Vector c = b.columns.transpose() * m.col(j);
        CHECK((b.columns * c - m.col(j)).norm() <= 1e-12);
    }
}

TEST_CASE("orthonormalize: rank-1 pruning of [v, 2v]") {
    Rng rng(5);
    const Vector v = oracle::random_vector(7, rng);
    Matrix m(7, 2);
    m.col(0) = v;
    m.col(1) = 2.0 * v;
    const Basis b = orthonormalize<double>(m);
    REQUIRE(b.size() == 1);
    CHECK(std::abs(b.columns.col(0).dot(v.normalized())) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("orthonormalize: rank-4 matrix keeps exactly 4 columns") {
    Rng rng(11);
    // Construct a 10x6 matrix of rank 4 and confirm with the SVD oracle.
    const Matrix a = oracle::random_matrix(10, 4, rng);
    const Matrix c = oracle::random_matrix(4, 6, rng);
    const Matrix m = a * c;
    REQUIRE(oracle::svd_rank(m) == 4);
    const Basis b = orthonormalize<double>(m);
    REQUIRE(b.size() == 4);
    const Matrix gram = b.columns.transpose() * b.columns;
    CHECK((gram - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-10);
    // span preserved
    for (Index j = 0; j < m.cols(); ++j) {
        const Vector coeffs = b.columns.transpose() * m.col(j);
        CHECK((b.columns * coeffs - m.col(j)).norm() <= 1e-8 * std::max(1.0, m.col(j).norm()));
    }
}

TEST_CASE("orthonormalize: empty and zero input") {
    const Basis empty = orthonormalize<double>(Matrix(5, 0));
    CHECK(empty.size() == 0);
    const Basis zero = orthonormalize<double>(Matrix::Zero(5, 3));
    CHECK(zero.size() == 0);
}

TEST_CASE("orthonormalize keeps leading columns under pruning") {
    // A tiny-norm dependent-ish column later must not displace leading ones.
    Matrix m(4, 3);
    m.col(0) = Vector::Unit(4, 0);
    m.col(1) = Vector::Unit(4, 1);
    m.col(2) = 1e-13 * Vector::Unit(4, 0); // below 1e-10 * largest diagonal
    std::vector<Index> kept;
    const Basis b = orthonormalize<double>(m, &kept);
    REQUIRE(b.size() == 2);
    CHECK(kept == std::vector<Index>{0, 1});
}

TEST_CASE("project and reconstruct") {
    Rng rng(21);
    const Matrix samples = oracle::random_matrix(6, 8, rng);
    const PcaResult r = pca<double>(samples, 1.0);
    REQUIRE(r.basis.size() >= 2);

    SUBCASE("sample at the mean projects to zero") {
        const Vector p = project(r.basis, r.mean, r.mean);
        CHECK(p.norm() <= 1e-12);
    }
    SUBCASE("mean plus three times a column projects to (3, 0, ...)") {
        const Vector s = r.mean + 3.0 * r.basis.columns.col(0);
        const Vector p = project(r.basis, r.mean, s);
        CHECK(p(0) == doctest::Approx(3.0).epsilon(1e-12));
        for (Index i = 1; i < p.size(); ++i) CHECK(std::abs(p(i)) <= 1e-10);
    }
    SUBCASE("projection residual is orthogonal to every basis column") {
        const Vector s = oracle::random_vector(6, rng);
        const Vector p = project(r.basis, r.mean, s);
        const Vector residual = s - reconstruct(r.basis, r.mean, p);
        for (Index j = 0; j < r.basis.size(); ++j)
            CHECK(std::abs(residual.dot(r.basis.columns.col(j))) <= 1e-10);
    }
    SUBCASE("zero coefficients reconstruct the mean") {
        const Vector zero = Vector::Zero(r.basis.size());
        CHECK((reconstruct(r.basis, r.mean, zero) - r.mean).norm() <= 1e-15);
    }
    SUBCASE("project after reconstruct is the identity on coefficients") {
        const Vector c = oracle::random_vector(r.basis.size(), rng);
        const Vector back = project(r.basis, r.mean, reconstruct(r.basis, r.mean, c));
        CHECK((back - c).norm() <= 1e-10);
    }
    SUBCASE("dimension mismatches throw") {
        const Vector short_vec = Vector::Zero(5);
        const Vector long_coeffs = Vector::Zero(r.basis.size() + 1);
        CHECK_THROWS_AS(project(r.basis, r.mean, short_vec), DimensionError);
        CHECK_THROWS_AS(reconstruct(r.basis, r.mean, long_coeffs), DimensionError);
    }
}

TEST_CASE("basis columns carry the deterministic sign convention") {
    Rng rng(31);
    const Matrix samples = oracle::random_matrix(5, 10, rng);
    const PcaResult r = pca<double>(samples, 1.0);
    for (Index j = 0; j < r.basis.size(); ++j) {
        Index imax = 0;
        r.basis.columns.col(j).cwiseAbs().maxCoeff(&imax);
        CHECK(r.basis.columns(imax, j) > 0.0);
    }
}
