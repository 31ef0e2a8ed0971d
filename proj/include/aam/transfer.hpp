#pragma once

#include <vector>

#include "aam/model.hpp"

namespace aam {

/// How source components are ranked before the top D are taken:
/// by the variance of the target data along them, or by the source
/// eigenvalue order they ship with.
enum class Ordering { TargetVariance, SourceEigenvalue };

std::string to_string(Ordering ordering);
Ordering ordering_from_string(const std::string& s);

/// Per-source-direction variance of the target samples, with the
/// descending-variance permutation (stable: ties keep source order).
struct ProjectedVariance {
    Vector sigma2;            // K_S, clamped at 0
    std::vector<Index> order; // permutation of 0..K_S-1
};

struct TransferConfig {
    Index d_shape = 3;
    Index d_appearance = 30;
    Ordering ordering = Ordering::TargetVariance;
    bool renormalize_warped = true;
};

/// sigma2[i] = variance of the mean-centered target samples along source
/// column i, divisor N_T - 1.
ProjectedVariance projected_variance(const Basis& source_basis, const Matrix& target_samples,
                                     const Vector& target_mean);

/// Concatenates [target_basis | top-d source columns per `ordering`] and
/// orthonormalizes with rank pruning; target columns come first so they
/// survive intact. `selected_out` receives the chosen source column indices.
Basis select_subspace(const Basis& target_basis, const Basis& source_basis,
                      const Matrix& target_samples, const Vector& target_mean, Index d,
                      Ordering ordering, std::vector<Index>* selected_out = nullptr);

/// Shape transfer: keeps the target mean and full target basis (global
/// columns first), augments with the top-d LOCAL source components, and
/// re-estimates local eigenvalues from the target samples.
ShapeModel transfer_shape(const ShapeModel& target, const ShapeModel& source,
                          const AlignedShapeSet& target_aligned, Index d, Ordering ordering,
                          ProjectedVariance* pv_out = nullptr,
                          std::vector<Index>* selected_out = nullptr);

/// Warps each source appearance eigenvector onto the target frame, then
/// selects and augments as in the shape case. Warped columns are
/// renormalized to unit norm before scoring unless disabled.
AppearanceModel transfer_appearance(const AppearanceModel& target,
                                    const AppearanceModel& source,
                                    const Matrix& target_appearances, Index d, Ordering ordering,
                                    bool renormalize_warped = true,
                                    ProjectedVariance* pv_out = nullptr,
                                    std::vector<Index>* selected_out = nullptr);

/// Warps one source-frame appearance vector onto the target frame's mask.
Vector warp_appearance_between_frames(const ReferenceFrame& source_frame,
                                      const ReferenceFrame& target_frame,
                                      const Vector& source_appearance);

/// Model trained on the union of both sample sets.
AamModel baseline_sut(const std::vector<Example>& source_data,
                      const std::vector<Example>& target_data, const TrainOptions& options);

/// Subspace-transfer baseline: target means, QR-merged concatenation of the
/// full target and (frame-warped) source bases.
AamModel baseline_st(const AamModel& target, const AamModel& source);

/// Selection report emitted alongside the transferred model.
struct TransferReport {
    ProjectedVariance shape_sigma2;
    std::vector<Index> shape_selected;       // local source component indices
    ProjectedVariance appearance_sigma2;
    std::vector<Index> appearance_selected;  // source appearance component indices
};

/// Full transfer: shape + appearance subspace selection applied to a trained
/// target model. Produces the Selected model.
AamModel transfer_model(const TrainedAam& target, const AamModel& source,
                        const TransferConfig& config, TransferReport* report = nullptr);

} // namespace aam
