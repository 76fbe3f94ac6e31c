#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geoevent/autoencoder.hpp"
#include "geoevent/config.hpp"
#include "geoevent/image.hpp"
#include "geoevent/types.hpp"
#include "json.hpp"

namespace geoevent {

/// Axis-aligned person box in fractional image coordinates.
struct PersonBox {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
    double confidence = 1.0;

    double area() const { return std::max(0.0, x1 - x0) * std::max(0.0, y1 - y0); }
};

struct HumanAnnotation {
    std::string image_id;
    std::vector<PersonBox> person_boxes;
};

using AnnotationIndex = std::map<std::string, HumanAnnotation>;

/// Annotation sidecar, one object per line:
///   {"image_id": "...", "boxes": [{"x0":..,"y0":..,"x1":..,"y1":..,"confidence":..}]}
HumanAnnotation parse_annotation(const nlohmann::json& record);
nlohmann::json serialize_annotation(const HumanAnnotation& annotation);
AnnotationIndex read_annotations(const std::filesystem::path& path);
void write_annotations(const std::filesystem::path& path, const AnnotationIndex& annotations);

/// Exact area of the union of the boxes (clipped to the unit square).
double union_area(std::span<const PersonBox> boxes);

/// True when an image is dominated by people: union area at or above the
/// total threshold, or any single box at or above the single threshold.
bool is_human_image(const HumanAnnotation& annotation, const DetectorConfig& config);

/// Keeps images that are not human-dominated, preserving order. Images without
/// an annotation count as having no boxes (a warning is emitted).
std::vector<std::string> filter_human_images(const std::vector<std::string>& image_ids,
                                             const AnnotationIndex& annotations,
                                             const DetectorConfig& config);

/// Images posted with at least one of the candidate's top keywords, human
/// filtered, ordered by (tweet timestamp, image id), without duplicates.
std::vector<std::string> select_images(const EventCandidate& candidate,
                                       const AnnotationIndex& annotations,
                                       const DetectorConfig& config);

/// `count` random crop_size x crop_size crops at uniformly drawn offsets.
/// Throws ShapeError if the image is smaller than the crop.
std::vector<Crop> generate_crops(const Image& image, const std::string& image_id, int count,
                                 int crop_size, std::uint64_t seed);

/// Seed used for an image's crops: global seed mixed with the id hash.
std::uint64_t crop_seed(std::uint64_t global_seed, const std::string& image_id);

struct CropPartition {
    std::vector<std::string> train_images;
    std::vector<std::string> test_images;
    int crops_per_image = 0;
};

/// Shuffles the images and sends the first floor(fraction * k) to training.
/// Returns nothing (bypass) when fewer than `min_images` are supplied.
std::optional<CropPartition> split_partition(const std::vector<std::string>& image_ids,
                                             double train_fraction, int min_images,
                                             int crops_per_image, std::uint64_t seed);

REStats summarize(std::vector<double> errors);

/// Coherence ratios from per-crop reconstruction errors. The verdict rejects
/// iff the mean ratio reaches `threshold`.
CoherenceReport coherence_from_errors(std::vector<double> train_errors,
                                      std::vector<double> test_errors, double threshold);

/// Scores every crop of both sides with a model trained on the training side.
CoherenceReport coherence_ratio(const AEModel& model, const CropPartition& partition,
                                const std::map<std::string, std::vector<Crop>>& crops,
                                double threshold);

enum class ImageStageStatus {
    Bypassed,   // fewer than min_images eligible images
    Accepted,
    Rejected,
    Degraded,   // analysis failed; candidate kept
};

struct ImageAnalysis {
    ImageStageStatus status = ImageStageStatus::Bypassed;
    std::optional<CoherenceReport> report;
    std::vector<std::string> eligible_images;
    std::string note;

    bool keeps_candidate() const { return status != ImageStageStatus::Rejected; }
};

/// Crops, partitions, trains and scores an explicit list of images.
/// Seeds derive from `config.rng_seed` and the image ids, so the same image
/// set always yields the same report.
ImageAnalysis analyze_images(const std::vector<std::string>& image_ids, const ImageSource& images,
                             const DetectorConfig& config);

/// Full image gate for one candidate: select_images, then analyze_images.
ImageAnalysis analyze_candidate(const EventCandidate& candidate, const ImageSource& images,
                                const AnnotationIndex& annotations, const DetectorConfig& config);

nlohmann::json report_to_json(const CoherenceReport& report, bool include_errors = false);
const char* to_string(ImageStageStatus status);

}  // namespace geoevent
