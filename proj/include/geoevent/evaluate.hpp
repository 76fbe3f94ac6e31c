#pragma once

#include <optional>
#include <string>
#include <vector>

#include "geoevent/coherence.hpp"
#include "geoevent/config.hpp"
#include "geoevent/embedding.hpp"
#include "geoevent/event_io.hpp"
#include "geoevent/image.hpp"
#include "json.hpp"

namespace geoevent {

struct EvalMatch {
    std::string detected_id;
    std::optional<std::string> truth_id;
    double overlap = 0.0;  // fraction of the detection's tweets inside the matched truth event
};

struct EvalResult {
    double precision = 1.0;
    double pseudo_recall = 0.0;
    std::size_t n_true = 0;       // truth events matched by at least one detection
    std::size_t n_total = 0;      // truth events
    std::size_t detected = 0;     // detections after merging
    std::size_t true_detections = 0;
    bool vacuous_precision = false;  // no detections; precision reported as 1
    std::vector<EvalMatch> matches;
};

/// A detection matches a truth event when more than half of its tweets belong
/// to that event and the time spans overlap. Each detection is credited to
/// the truth event holding most of its tweets.
EvalResult evaluate(const std::vector<EventRecord>& detected, const std::vector<TruthEvent>& truth);

nlohmann::json eval_to_json(const EvalResult& r);

/// Detections reduced to the fields the evaluator reads.
std::vector<EventRecord> to_records(const std::vector<DetectedEvent>& events);

struct AblationResult {
    EvalResult with_gate;
    EvalResult without_gate;
    std::vector<DetectedEvent> events_with_gate;
    std::vector<DetectedEvent> events_without_gate;
};

/// Runs the stream detector twice, with and without the image stage, under
/// the same configuration and seeds, and evaluates both against `truth`.
AblationResult ablate(const std::vector<Tweet>& stream, const std::vector<TruthEvent>& truth,
                      const VectorTable& table, const ImageSource& images,
                      const AnnotationIndex& annotations, const DetectorConfig& config);

nlohmann::json ablation_to_json(const AblationResult& r);

}  // namespace geoevent
