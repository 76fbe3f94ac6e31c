#include "geoevent/tweet_io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

namespace geoevent {

using nlohmann::json;

namespace {

bool is_word_byte(unsigned char c) {
    return std::isalnum(c) != 0 || c == '_' || c >= 0x80;
}

const json& require_field(const json& record, const char* name) {
    auto it = record.find(name);
    if (it == record.end()) throw ParseError(std::string("missing field '") + name + "'");
    return *it;
}

}  // namespace

std::vector<std::string> scan_markers(std::string_view text, char marker) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != marker) continue;
        if (i > 0 && is_word_byte(static_cast<unsigned char>(text[i - 1]))) continue;
        std::size_t j = i + 1;
        while (j < text.size() && is_word_byte(static_cast<unsigned char>(text[j]))) ++j;
        if (j > i + 1) {
            std::string token(text.substr(i + 1, j - i - 1));
            std::transform(token.begin(), token.end(), token.begin(), [](unsigned char c) {
                return static_cast<char>(std::tolower(c));
            });
            out.push_back(std::move(token));
        }
        i = j - 1;
    }
    return out;
}

Tweet parse_tweet(const json& record) {
    if (!record.is_object()) throw ParseError("tweet record is not a JSON object");
    Tweet t;
    const auto& id = require_field(record, "id");
    if (!id.is_string()) throw ParseError("field 'id' must be a string");
    t.id = id.get<std::string>();

    const auto& ts = require_field(record, "ts");
    if (!ts.is_number_integer()) throw ParseError("field 'ts' must be an integer");
    t.timestamp = ts.get<Timestamp>();

    const auto& lat = require_field(record, "lat");
    if (!lat.is_number()) throw ParseError("field 'lat' must be a number");
    t.lat = lat.get<double>();
    const auto& lon = require_field(record, "lon");
    if (!lon.is_number()) throw ParseError("field 'lon' must be a number");
    t.lon = lon.get<double>();
    if (!(t.lat >= -90.0 && t.lat <= 90.0)) {
        throw RangeError("tweet " + t.id + ": lat " + std::to_string(t.lat) + " outside [-90, 90]");
    }
    if (!(t.lon >= -180.0 && t.lon <= 180.0)) {
        throw RangeError("tweet " + t.id + ": lon " + std::to_string(t.lon) +
                         " outside [-180, 180]");
    }

    const auto& text = require_field(record, "text");
    if (!text.is_string()) throw ParseError("field 'text' must be a string");
    t.text = text.get<std::string>();
    t.hashtags = scan_markers(t.text, '#');
    t.mentions = scan_markers(t.text, '@');

    if (auto it = record.find("images"); it != record.end() && !it->is_null()) {
        if (!it->is_array()) throw ParseError("field 'images' must be an array");
        for (const auto& ref : *it) {
            if (!ref.is_string()) throw ParseError("field 'images' must hold strings");
            t.image_refs.push_back(ref.get<std::string>());
        }
    }
    return t;
}

Tweet parse_tweet_line(std::string_view line) {
    json record;
    try {
        record = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
    return parse_tweet(record);
}

json serialize_tweet(const Tweet& t) {
    json j{{"id", t.id}, {"ts", t.timestamp}, {"lat", t.lat}, {"lon", t.lon}, {"text", t.text}};
    if (!t.image_refs.empty()) j["images"] = t.image_refs;
    return j;
}

std::vector<Tweet> read_tweets(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open tweet stream: " + path.string());
    std::vector<Tweet> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(parse_tweet_line(line));
        } catch (const ParseError& e) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const Tweet& a, const Tweet& b) { return a.timestamp < b.timestamp; });
    return out;
}

void write_tweets(const std::filesystem::path& path, const std::vector<Tweet>& tweets) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write tweet stream: " + path.string());
    for (const auto& t : tweets) out << serialize_tweet(t).dump() << '\n';
}

std::vector<StreamWindow> split_windows(const std::vector<Tweet>& tweets, Timestamp origin,
                                        Timestamp length) {
    if (length <= 0) throw ConfigError("window length must be positive");
    std::vector<StreamWindow> windows;
    for (const auto& t : tweets) {
        if (t.timestamp < origin) continue;
        const auto index = (t.timestamp - origin) / length;
        while (static_cast<std::int64_t>(windows.size()) <= index) {
            const auto id = static_cast<std::int64_t>(windows.size());
            windows.push_back({id, origin + id * length, origin + (id + 1) * length, {}});
        }
        windows[static_cast<std::size_t>(index)].tweets.push_back(t);
    }
    return windows;
}

std::vector<Tweet> tweets_between(const std::vector<Tweet>& tweets, Timestamp start,
                                  Timestamp end) {
    auto lo = std::lower_bound(tweets.begin(), tweets.end(), start,
                               [](const Tweet& t, Timestamp v) { return t.timestamp < v; });
    auto hi = std::lower_bound(lo, tweets.end(), end,
                               [](const Tweet& t, Timestamp v) { return t.timestamp < v; });
    return {lo, hi};
}

}  // namespace geoevent
