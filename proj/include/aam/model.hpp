#pragma once

#include <string>
#include <vector>

#include "aam/appearance_model.hpp"
#include "aam/shape_model.hpp"

namespace aam {

enum class ModelLabel { Source, Target, SUT, ST, Selected };

std::string to_string(ModelLabel label);
ModelLabel model_label_from_string(const std::string& s);

/// Full AAM: shape model, appearance model (with its reference frame), and
/// the role this model plays in an experiment.
struct AamModel {
    ShapeModel shape;
    AppearanceModel appearance;
    ModelLabel label = ModelLabel::Target;

    Index num_points() const { return shape.num_points(); }
};

struct TrainOptions {
    double shape_variance_fraction = 0.98;
    double appearance_variance_fraction = 0.98;
    double reference_face_size = 150.0;
    ModelLabel label = ModelLabel::Target;
};

/// Training byproducts needed by the transfer operations.
struct TrainedAam {
    AamModel model;
    AlignedShapeSet aligned;  // Procrustes-aligned training shapes
    Matrix appearances;       // L x N appearance samples in the frame
};

/// Trains shape and appearance models from annotated examples.
TrainedAam train_aam(const std::vector<Example>& examples, const TrainOptions& options);

} // namespace aam
