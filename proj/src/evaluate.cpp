#include "geoevent/evaluate.hpp"

#include "geoevent/pipeline.hpp"

#include <set>
#include <unordered_map>

namespace geoevent {

EvalResult evaluate(const std::vector<EventRecord>& detected, const std::vector<TruthEvent>& truth) {
    std::unordered_map<std::string, std::size_t> owner;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        for (const auto& id : truth[k].tweet_ids) owner.emplace(id, k);
    }

    EvalResult r;
    r.n_total = truth.size();
    r.detected = detected.size();
    std::set<std::size_t> found;
    for (const auto& d : detected) {
        std::vector<std::size_t> hits(truth.size(), 0);
        const std::set<std::string> ids(d.tweet_ids.begin(), d.tweet_ids.end());
        for (const auto& id : ids) {
            if (auto it = owner.find(id); it != owner.end()) ++hits[it->second];
        }
        EvalMatch m;
        m.detected_id = d.id;
        for (std::size_t k = 0; k < truth.size(); ++k) {
            const double frac = ids.empty() ? 0.0 : static_cast<double>(hits[k]) / ids.size();
            const bool spans_overlap = d.start < truth[k].end && truth[k].start <= d.end;
            if (2 * hits[k] > ids.size() && spans_overlap && frac > m.overlap) {
                m.truth_id = truth[k].id;
                m.overlap = frac;
                found.insert(k);
            }
        }
        if (m.truth_id) ++r.true_detections;
        r.matches.push_back(std::move(m));
    }
    r.n_true = found.size();
    if (r.detected == 0) {
        r.precision = 1.0;
        r.vacuous_precision = true;
    } else {
        r.precision = static_cast<double>(r.true_detections) / static_cast<double>(r.detected);
    }
    r.pseudo_recall = r.n_total == 0 ? 0.0 : static_cast<double>(r.n_true) / r.n_total;
    return r;
}

nlohmann::json eval_to_json(const EvalResult& r) {
    nlohmann::json matches = nlohmann::json::array();
    for (const auto& m : r.matches) {
        matches.push_back({{"detected", m.detected_id},
                           {"truth", m.truth_id ? nlohmann::json(*m.truth_id) : nlohmann::json(nullptr)},
                           {"overlap", m.overlap}});
    }
    return {{"precision", r.precision},
            {"pseudo_recall", r.pseudo_recall},
            {"n_true", r.n_true},
            {"n_total", r.n_total},
            {"detected", r.detected},
            {"true_detections", r.true_detections},
            {"vacuous_precision", r.vacuous_precision},
            {"matches", matches}};
}

std::vector<EventRecord> to_records(const std::vector<DetectedEvent>& events) {
    std::vector<EventRecord> out;
    out.reserve(events.size());
    for (const auto& e : events) out.push_back(parse_event_record(event_to_json(e)));
    return out;
}

AblationResult ablate(const std::vector<Tweet>& stream, const std::vector<TruthEvent>& truth,
                      const VectorTable& table, const ImageSource& images,
                      const AnnotationIndex& annotations, const DetectorConfig& config) {
    AblationResult r;
    DetectorConfig on = config;
    on.image_stage = true;
    ImageAnalysisCache cache;
    r.events_with_gate = run_stream(stream, {on, table, &images, &annotations, &cache}).events;

    DetectorConfig off = config;
    off.image_stage = false;
    r.events_without_gate = run_stream(stream, {off, table, nullptr, &annotations, nullptr}).events;

    r.with_gate = evaluate(to_records(r.events_with_gate), truth);
    r.without_gate = evaluate(to_records(r.events_without_gate), truth);
    return r;
}

nlohmann::json ablation_to_json(const AblationResult& r) {
    return {{"image_stage_on", eval_to_json(r.with_gate)},
            {"image_stage_off", eval_to_json(r.without_gate)}};
}

}  // namespace geoevent
