#pragma once

#include <vector>

#include <Eigen/Dense>

#include "aam/error.hpp"
#include "aam/types.hpp"

namespace aam {

/// Matrix whose columns are unit-norm, pairwise-orthogonal directions.
/// Columns are sign-normalized: the largest-magnitude entry of each column
/// is positive, so identical spans serialize identically.
template <typename Scalar>
struct BasisT {
    MatrixX<Scalar> columns; // dim x k

    Index dim() const { return columns.rows(); }
    Index size() const { return columns.cols(); }
    bool empty() const { return columns.cols() == 0; }
};

using Basis = BasisT<double>;

template <typename Scalar>
struct PcaResultT {
    VectorX<Scalar> mean;        // dim
    BasisT<Scalar> basis;        // dim x k, principal directions
    VectorX<Scalar> eigenvalues; // k, nonincreasing, sample variance (divisor N-1)
};

using PcaResult = PcaResultT<double>;

namespace detail {

/// Flips each column so its largest-magnitude entry is positive.
template <typename Scalar>
void normalize_column_signs(MatrixX<Scalar>& m) {
    for (Index j = 0; j < m.cols(); ++j) {
        Index imax = 0;
        m.col(j).cwiseAbs().maxCoeff(&imax);
        if (m(imax, j) < Scalar(0)) m.col(j) = -m.col(j);
    }
}

/// Two rounds of modified Gram-Schmidt against already accepted columns.
template <typename Scalar>
void orthogonalize_against(const MatrixX<Scalar>& q, Index k, VectorX<Scalar>& v) {
    for (int round = 0; round < 2; ++round) {
        for (Index j = 0; j < k; ++j) {
            v -= q.col(j).dot(v) * q.col(j);
        }
    }
}

} // namespace detail

/// Orthonormal basis spanning the input column space. Columns are processed
/// in order; a column whose residual against the columns before it falls
/// below 1e-10 times the largest such residual is dropped (rank pruning),
/// so leading columns always survive intact. `kept`, when non-null, receives
/// the input indices of the surviving columns.
template <typename Scalar>
BasisT<Scalar> orthonormalize(const MatrixX<Scalar>& columns, std::vector<Index>* kept = nullptr) {
    const Index dim = columns.rows();
    const Index m = columns.cols();
    if (kept) kept->clear();
    if (m == 0) return BasisT<Scalar>{MatrixX<Scalar>(dim, 0)};

    // Residual norms play the role of the QR diagonal. The pruning threshold
    // is relative to the largest diagonal over the whole input, so a first
    // pass records diagnostics and a second pass builds the basis.
    const Scalar rel_tol = Scalar(1e-10);

    MatrixX<Scalar> q(dim, m);
    VectorX<Scalar> diag(m);
    Index k = 0;
    for (Index j = 0; j < m; ++j) {
        VectorX<Scalar> v = columns.col(j);
        detail::orthogonalize_against(q, k, v);
        const Scalar r = v.norm();
        diag(j) = r;
        if (r > Scalar(0)) {
            q.col(k) = v / r;
            ++k;
        }
    }
    const Scalar dmax = diag.size() ? diag.maxCoeff() : Scalar(0);
    if (dmax <= Scalar(0)) return BasisT<Scalar>{MatrixX<Scalar>(dim, 0)};

    MatrixX<Scalar> out(dim, m);
    k = 0;
    for (Index j = 0; j < m; ++j) {
        if (diag(j) < rel_tol * dmax) continue;
        VectorX<Scalar> v = columns.col(j);
        detail::orthogonalize_against(out, k, v);
        const Scalar r = v.norm();
        if (r < rel_tol * dmax) continue;
        out.col(k) = v / r;
        if (kept) kept->push_back(j);
        ++k;
    }
    out.conservativeResize(Eigen::NoChange, k);
    detail::normalize_column_signs(out);
    return BasisT<Scalar>{std::move(out)};
}

/// PCA of the samples (one sample per column). Mean is the column average;
/// directions are unit eigenvectors of the sample covariance with divisor
/// N-1; eigenvalues are the variances along them, sorted nonincreasing.
/// Keeps the smallest k whose retained variance reaches
/// variance_fraction * total; directions with eigenvalue below 1e-12 times
/// the largest are dropped regardless. When dim > N the N x N Gram matrix
/// is decomposed instead of the dim x dim covariance.
template <typename Scalar>
PcaResultT<Scalar> pca(const MatrixX<Scalar>& samples, Scalar variance_fraction) {
    const Index dim = samples.rows();
    const Index n = samples.cols();
    if (n < 2) throw DegenerateInputError("pca: need at least 2 samples");
    if (dim < 1) throw DegenerateInputError("pca: samples have zero dimension");
    if (!(variance_fraction > Scalar(0)) || variance_fraction > Scalar(1))
        throw ConfigError("pca: variance_fraction must be in (0, 1]");

    PcaResultT<Scalar> result;
    result.mean = samples.rowwise().mean();
    MatrixX<Scalar> centered = samples.colwise() - result.mean;

    VectorX<Scalar> eigs;    // descending, >= 0
    MatrixX<Scalar> dirs;    // dim x r
    if (dim <= n) {
        MatrixX<Scalar> cov = centered * centered.transpose() / Scalar(n - 1);
        Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(cov);
        const Index r = dim;
        eigs.resize(r);
        dirs.resize(dim, r);
        for (Index i = 0; i < r; ++i) {
            eigs(i) = es.eigenvalues()(r - 1 - i); // ascending -> descending
            dirs.col(i) = es.eigenvectors().col(r - 1 - i);
        }
    } else {
        MatrixX<Scalar> gram = centered.transpose() * centered; // N x N
        Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(gram);
        const Index r = n;
        eigs.resize(r);
        dirs.resize(dim, r);
        Index valid = 0;
        for (Index i = 0; i < r; ++i) {
            const Scalar g = es.eigenvalues()(r - 1 - i);
            if (g <= Scalar(0)) break;
            eigs(valid) = g / Scalar(n - 1);
            dirs.col(valid) = centered * es.eigenvectors().col(r - 1 - i) / std::sqrt(g);
            ++valid;
        }
        eigs.conservativeResize(valid);
        dirs.conservativeResize(Eigen::NoChange, valid);
        // The Gram route loses a little orthogonality for small eigenvalues.
        for (Index j = 0; j < dirs.cols(); ++j) {
            VectorX<Scalar> v = dirs.col(j);
            detail::orthogonalize_against(dirs, j, v);
            const Scalar nv = v.norm();
            if (nv > Scalar(0)) dirs.col(j) = v / nv;
        }
    }

    eigs = eigs.cwiseMax(Scalar(0));
    const Scalar total = eigs.sum();
    const Scalar eig_floor = eigs.size() ? Scalar(1e-12) * eigs(0) : Scalar(0);
    const Index k_cap = std::min(dim, n - 1);

    Index k = 0;
    Scalar retained = Scalar(0);
    for (Index i = 0; i < eigs.size() && k < k_cap; ++i) {
        if (eigs(i) < eig_floor || eigs(i) <= Scalar(0)) break;
        retained += eigs(i);
        ++k;
        if (total > Scalar(0) && retained >= variance_fraction * total) break;
    }

    result.basis.columns = dirs.leftCols(k);
    detail::normalize_column_signs(result.basis.columns);
    result.eigenvalues = eigs.head(k);
    return result;
}

/// Coefficients of (sample - mean) on the basis columns.
template <typename Scalar>
VectorX<Scalar> project(const BasisT<Scalar>& basis, const VectorX<Scalar>& mean,
                        const VectorX<Scalar>& sample) {
    if (sample.size() != mean.size() || (basis.size() > 0 && basis.dim() != mean.size()))
        throw DimensionError("project: sample/mean/basis dimensions disagree");
    if (basis.size() == 0) return VectorX<Scalar>(0);
    return basis.columns.transpose() * (sample - mean);
}

/// mean + basis * coeffs.
template <typename Scalar>
VectorX<Scalar> reconstruct(const BasisT<Scalar>& basis, const VectorX<Scalar>& mean,
                            const VectorX<Scalar>& coeffs) {
    if (coeffs.size() != basis.size())
        throw DimensionError("reconstruct: coefficient count does not match basis size");
    if (basis.size() > 0 && basis.dim() != mean.size())
        throw DimensionError("reconstruct: basis/mean dimensions disagree");
    if (basis.size() == 0) return mean;
    return mean + basis.columns * coeffs;
}

} // namespace aam
