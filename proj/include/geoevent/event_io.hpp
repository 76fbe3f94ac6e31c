#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "geoevent/types.hpp"
#include "json.hpp"

namespace geoevent {

/// One output line of `detect`.
nlohmann::json event_to_json(const DetectedEvent& event);
void write_events(const std::filesystem::path& path, const std::vector<DetectedEvent>& events);

/// The parts of a detected-event line that evaluation needs.
struct EventRecord {
    std::string id;
    std::int64_t window_id = 0;
    int level = 0;
    std::vector<std::string> tweet_ids;
    Timestamp start = 0;  // earliest tweet
    Timestamp end = 0;    // latest tweet
};

EventRecord parse_event_record(const nlohmann::json& j);
/// Throws IoError when the file is missing or a line does not parse.
std::vector<EventRecord> read_event_records(const std::filesystem::path& path);

/// Planted ground truth: one line per genuine event.
struct TruthEvent {
    std::string id;
    Timestamp start = 0;
    Timestamp end = 0;  // exclusive
    double lat = 0.0;
    double lon = 0.0;
    std::vector<std::string> tweet_ids;
};

nlohmann::json truth_to_json(const TruthEvent& t);
TruthEvent parse_truth(const nlohmann::json& j);
void write_truth(const std::filesystem::path& path, const std::vector<TruthEvent>& truth);
std::vector<TruthEvent> read_truth(const std::filesystem::path& path);

/// Reads a JSONL file into objects; blank lines are skipped. Throws IoError
/// naming the line on a parse failure.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

}  // namespace geoevent
