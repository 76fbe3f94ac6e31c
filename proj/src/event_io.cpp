#include "geoevent/event_io.hpp"

#include <algorithm>
#include <fstream>

#include "geoevent/coherence.hpp"

namespace geoevent {

using nlohmann::json;

json event_to_json(const DetectedEvent& e) {
    const EventCandidate& c = e.candidate;
    json tweet_ids = json::array();
    Timestamp start = 0, end = 0;
    for (std::size_t i = 0; i < c.tweets.size(); ++i) {
        tweet_ids.push_back(c.tweets[i].id);
        start = i == 0 ? c.tweets[i].timestamp : std::min(start, c.tweets[i].timestamp);
        end = i == 0 ? c.tweets[i].timestamp : std::max(end, c.tweets[i].timestamp);
    }
    json keywords = json::array();
    for (const auto& k : c.top_keywords) keywords.push_back({{"keyword", k.keyword}, {"count", k.count}});
    return {
        {"id", c.cluster_id},
        {"window", e.detection_window_id},
        {"level", c.level},
        {"cell",
         {{"lat_min", c.cell.lat_min},
          {"lat_max", c.cell.lat_max},
          {"lon_min", c.cell.lon_min},
          {"lon_max", c.cell.lon_max}}},
        {"start", start},
        {"end", end},
        {"tweet_ids", tweet_ids},
        {"top_keywords", keywords},
        {"coherence", e.coherence ? report_to_json(*e.coherence) : json(nullptr)},
        {"merged_from", e.merged_from},
        {"provenance", e.provenance},
    };
}

void write_events(const std::filesystem::path& path, const std::vector<DetectedEvent>& events) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& e : events) out << event_to_json(e).dump() << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<json> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::exception& e) {
            throw IoError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

EventRecord parse_event_record(const json& j) {
    try {
        EventRecord r;
        r.id = j.at("id").get<std::string>();
        r.window_id = j.at("window").get<std::int64_t>();
        r.level = j.at("level").get<int>();
        r.tweet_ids = j.at("tweet_ids").get<std::vector<std::string>>();
        r.start = j.at("start").get<Timestamp>();
        r.end = j.at("end").get<Timestamp>();
        return r;
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed event record: ") + e.what());
    }
}

std::vector<EventRecord> read_event_records(const std::filesystem::path& path) {
    std::vector<EventRecord> out;
    for (const auto& j : read_jsonl(path)) out.push_back(parse_event_record(j));
    return out;
}

json truth_to_json(const TruthEvent& t) {
    return {{"id", t.id},     {"start", t.start}, {"end", t.end},
            {"lat", t.lat},   {"lon", t.lon},     {"tweet_ids", t.tweet_ids}};
}

TruthEvent parse_truth(const json& j) {
    try {
        TruthEvent t;
        t.id = j.at("id").get<std::string>();
        t.start = j.at("start").get<Timestamp>();
        t.end = j.at("end").get<Timestamp>();
        t.lat = j.at("lat").get<double>();
        t.lon = j.at("lon").get<double>();
        t.tweet_ids = j.at("tweet_ids").get<std::vector<std::string>>();
        return t;
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed truth record: ") + e.what());
    }
}

void write_truth(const std::filesystem::path& path, const std::vector<TruthEvent>& truth) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& t : truth) out << truth_to_json(t).dump() << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

std::vector<TruthEvent> read_truth(const std::filesystem::path& path) {
    std::vector<TruthEvent> out;
    for (const auto& j : read_jsonl(path)) out.push_back(parse_truth(j));
    return out;
}

}  // namespace geoevent
