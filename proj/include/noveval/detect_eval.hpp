#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <unordered_map>
#include <vector>

namespace noveval {

/// Axis-aligned box in normalized image coordinates.
struct BoundingBox {
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
};

void validate_box(const BoundingBox& b);

struct Annotation {
    std::int64_t image_id = 0;
    std::int64_t object_id = 0;
    BoundingBox box;
};

struct Detection {
    std::int64_t image_id = 0;
    BoundingBox box;
    double confidence = 0.0;
};

struct MatchResult {
    struct TruePositive {
        std::int64_t object_id;
        std::size_t detection_index;  // index into the per-image detection list
        double iou;
    };
    std::vector<TruePositive> tp;
    std::vector<std::size_t> fp;       // unmatched detection indices
    std::vector<std::int64_t> fn;      // undetected ground-truth objects
};

double iou(const BoundingBox& a, const BoundingBox& b);

/// Greedy matching in descending confidence order: each detection claims the
/// unmatched ground-truth box with the highest IoU if that IoU reaches the
/// threshold, otherwise it becomes a false positive. Detections with equal
/// confidence keep their input order; IoU ties go to the lower object_id.
/// All records must share one image_id.
MatchResult match_detections(std::span<const Annotation> annotations,
                             std::span<const Detection> detections,
                             double threshold = 0.5);

struct ObjectLoss {
    std::int64_t object_id;
    double loss;  // in [0,1]
};

/// Per-object loss: mean absolute difference of the four normalized
/// coordinates for matched objects, 1 for undetected ones (their confidence
/// is taken as 0). False positives carry no loss.
std::vector<ObjectLoss> detection_loss(const MatchResult& match,
                                       std::span<const Annotation> annotations,
                                       std::span<const Detection> detections);

/// Fraction of ground-truth objects detected at the IoU threshold:
/// TP / (TP + FN) aggregated over all images.
double accuracy(std::span<const MatchResult> matches);

/// Matches image by image (ascending image_id) and concatenates the results.
struct DatasetEvaluation {
    std::vector<MatchResult> matches;   // one per image, ascending image_id
    std::vector<ObjectLoss> losses;     // all GT objects, grouped by image
    std::size_t fp_count = 0;
};
DatasetEvaluation evaluate_dataset(std::span<const Annotation> annotations,
                                   std::span<const Detection> detections,
                                   double threshold = 0.5);

// JSONL ingestion: one record per image.
// {"image_id": 7, "objects": [{"object_id": 7, "box": [x1,y1,x2,y2]}]}
// {"image_id": 7, "detections": [{"box": [x1,y1,x2,y2], "confidence": 0.9}]}
std::vector<Annotation> read_annotations_jsonl(const std::filesystem::path& path);
std::vector<Detection> read_detections_jsonl(const std::filesystem::path& path);
void write_annotations_jsonl(const std::filesystem::path& path, std::span<const Annotation> annotations);
void write_detections_jsonl(const std::filesystem::path& path, std::span<const Detection> detections);

/// Stand-in for an external detector: perturbs ground-truth boxes with seeded
/// Gaussian noise and drops boxes with a fixed probability. Objects whose
/// value in `noise_boost_by_object` is at or above `boost_threshold` get
/// `noise + boost_noise` as their noise level, which plants a controllable
/// loss-vs-factor association for pipeline experiments.
struct StubDetectorConfig {
    double noise = 0.02;          // box coordinate noise sigma, normalized units
    double drop = 0.0;            // probability a ground-truth box is missed
    double boost_noise = 0.0;     // extra sigma applied above the threshold
    double boost_threshold = 1.0; // compared against noise_boost_by_object values
    std::uint64_t seed = 0;
};
std::vector<Detection> stub_detect(
    std::span<const Annotation> annotations, const StubDetectorConfig& config,
    const std::unordered_map<std::int64_t, double>& noise_boost_by_object = {});

}  // namespace noveval
