#include "aam/model.hpp"

namespace aam {

std::string to_string(ModelLabel label) {
    switch (label) {
        case ModelLabel::Source: return "source";
        case ModelLabel::Target: return "target";
        case ModelLabel::SUT: return "sut";
        case ModelLabel::ST: return "st";
        case ModelLabel::Selected: return "selected";
    }
    return "unknown";
}

ModelLabel model_label_from_string(const std::string& s) {
    if (s == "source") return ModelLabel::Source;
    if (s == "target") return ModelLabel::Target;
    if (s == "sut") return ModelLabel::SUT;
    if (s == "st") return ModelLabel::ST;
    if (s == "selected") return ModelLabel::Selected;
    throw ConfigError("unknown model label: " + s);
}

TrainedAam train_aam(const std::vector<Example>& examples, const TrainOptions& options) {
    if (examples.size() < 2) throw DegenerateInputError("train_aam: need at least 2 examples");

    std::vector<Shape> shapes;
    shapes.reserve(examples.size());
    for (const Example& e : examples) shapes.push_back(e.shape);

    TrainedAam out;
    out.model.label = options.label;
    out.model.shape =
        train_shape_model(shapes, options.shape_variance_fraction, &out.aligned);
    ReferenceFrame frame =
        build_reference_frame(out.model.shape.mean, options.reference_face_size);
    out.model.appearance = train_appearance_model(
        examples, frame, options.appearance_variance_fraction, &out.appearances);
    return out;
}

} // namespace aam
