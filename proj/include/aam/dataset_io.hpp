#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "aam/model.hpp"

namespace aam {

/// Parsed ibug-style .pts landmark file.
struct LandmarkFile {
    int version = 1;
    int n_points = 0;
    std::vector<std::pair<double, double>> points;

    Shape to_shape() const;
    static LandmarkFile from_shape(const Shape& s);
};

/// Grammar: `version: <int>`, `n_points: <int>`, `{`, one `x y` pair per
/// line, `}`. Throws ParseError with the offending line on malformed
/// headers, non-numeric coordinates, or point-count mismatches.
LandmarkFile parse_pts(const std::string& text);

/// Canonical serialization; parse(write(l)) == l exactly.
std::string write_pts(const LandmarkFile& l);

/// Standard inner-mouth-corner indices of the ibug 68-point scheme.
inline constexpr int kInnerMouthCornerA = 60;
inline constexpr int kInnerMouthCornerB = 64;
inline constexpr Index kStandardLandmarkCount = 66;

/// Removes the two inner-mouth-corner points (defaults per the ibug layout),
/// preserving the order of the survivors. Requires V = 68.
Shape trim_68_to_66(const Shape& s, int index_a = kInnerMouthCornerA,
                    int index_b = kInnerMouthCornerB);

enum class Split { Train, Test };

struct ManifestEntry {
    std::string image_path;
    std::string landmark_path;
    std::string subject_id;
    Split split = Split::Train;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;

    std::set<std::string> subject_ids() const;
};

/// Tab-separated, one entry per line: image, landmarks, subject, split.
/// Three-field lines derive the subject id from the image filename via
/// `subject_pattern` (ECMAScript regex, capture group 1; default: the stem
/// up to the first underscore). '#' lines and blank lines are skipped.
DatasetManifest parse_manifest(const std::string& text,
                               const std::string& subject_pattern = "^([^_]+)_.*$");
std::string write_manifest(const DatasetManifest& manifest);

DatasetManifest load_manifest(const std::filesystem::path& path,
                              const std::string& subject_pattern = "^([^_]+)_.*$");

/// Partition by subject: entries whose subject is in train_ids form the
/// train set, everything else the test set. Unknown ids are an error.
std::pair<DatasetManifest, DatasetManifest>
subject_disjoint_split(const DatasetManifest& manifest, const std::set<std::string>& train_ids);

/// Binary PGM (P5), 8- or 16-bit, mapped to [0, 1].
Image read_pgm(const std::filesystem::path& path);
void write_pgm(const Image& image, const std::filesystem::path& path, int bit_depth = 16);

struct LoadOptions {
    bool trim_68_to_66 = false;
    int trim_index_a = kInnerMouthCornerA;
    int trim_index_b = kInnerMouthCornerB;
};

/// Loads the examples of one split; paths are resolved relative to `root`
/// when not absolute.
std::vector<Example> load_examples(const DatasetManifest& manifest, Split split,
                                   const std::filesystem::path& root,
                                   const LoadOptions& options = {});

/// Versioned binary container, round-trip exact to full double precision,
/// with a content checksum. Distinct errors for bad magic, newer versions,
/// truncation, and checksum failures.
void save_model(const AamModel& model, const std::filesystem::path& path);
AamModel load_model(const std::filesystem::path& path);

} // namespace aam
