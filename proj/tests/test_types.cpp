#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "geoevent/config.hpp"
#include "geoevent/tweet_io.hpp"
#include "geoevent/types.hpp"

using namespace geoevent;
using nlohmann::json;

namespace {

StreamWindow window(std::int64_t id) {
    StreamWindow w;
    w.window_id = id;
    w.start = id * 1800;
    w.end = w.start + 1800;
    return w;
}

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "geoevent_test_types";
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("parse_tweet reads the minimal record") {
    const Tweet t = parse_tweet_line(R"({"id":"1","ts":0,"lat":0,"lon":0,"text":"hello"})");
    CHECK(t.id == "1");
    CHECK(t.timestamp == 0);
    CHECK(t.hashtags.empty());
    CHECK(t.mentions.empty());
    CHECK(t.image_refs.empty());
}

TEST_CASE("hashtags and mentions keep one entry per occurrence") {
    const Tweet t =
        parse_tweet_line(R"({"id":"2","ts":5,"lat":1,"lon":2,"text":"#Fire at #fire dock @FD"})");
    CHECK(t.hashtags == std::vector<std::string>{"fire", "fire"});
    CHECK(t.mentions == std::vector<std::string>{"fd"});
}

TEST_CASE("markers need a word boundary before them") {
    CHECK(scan_markers("mail me at a@b.com #ok", '@').empty());
    CHECK(scan_markers("(#paren) x#y", '#') == std::vector<std::string>{"paren"});
    CHECK(scan_markers("##double", '#') == std::vector<std::string>{"double"});
}

TEST_CASE("parse_tweet errors") {
    CHECK_THROWS_AS(parse_tweet_line(R"({"id":"1","ts":0,"lat":91,"lon":0,"text":""})"), RangeError);
    CHECK_THROWS_AS(parse_tweet_line(R"({"id":"1","ts":0,"lat":0,"lon":-181,"text":""})"), RangeError);
    try {
        parse_tweet_line(R"({"id":"1","lat":0,"lon":0,"text":""})");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("ts") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_tweet_line(R"({"id":1,"ts":0,"lat":0,"lon":0,"text":""})"), ParseError);
    CHECK_THROWS_AS(parse_tweet_line("not json"), ParseError);
}

TEST_CASE("serialize round-trips semantic fields") {
    const json record = {{"id", "abc"},   {"ts", 1546300800}, {"lat", 40.7},
                         {"lon", -74.0},  {"text", "Parade on 5th #NYC @mayor"},
                         {"images", {"a.png", "b.png"}}};
    const Tweet t = parse_tweet(record);
    const json back = serialize_tweet(t);
    for (const char* key : {"id", "ts", "lat", "lon", "text", "images"}) CHECK(back.at(key) == record.at(key));
    const Tweet again = parse_tweet(back);
    CHECK(again.hashtags == t.hashtags);
    CHECK(again.mentions == t.mentions);
}

TEST_CASE("read_tweets sorts by timestamp and keeps ties in file order") {
    const auto path = scratch("stream.jsonl");
    {
        std::ofstream out(path);
        out << R"({"id":"c","ts":20,"lat":0,"lon":0,"text":""})" << "\n\n";
        out << R"({"id":"a","ts":10,"lat":0,"lon":0,"text":""})" << "\n";
        out << R"({"id":"b","ts":10,"lat":0,"lon":0,"text":""})" << "\n";
    }
    const auto tweets = read_tweets(path);
    REQUIRE(tweets.size() == 3);
    CHECK(tweets[0].id == "a");
    CHECK(tweets[1].id == "b");
    CHECK(tweets[2].id == "c");
    CHECK_THROWS_AS(read_tweets(scratch("missing.jsonl")), IoError);
}

TEST_CASE("sliding windows evict the oldest") {
    SlidingWindows s(6);
    for (int i = 0; i < 6; ++i) s.advance(window(i));
    CHECK(s.size() == 6);
    s.advance(window(6));
    CHECK(s.size() == 6);
    CHECK(s.windows().front().window_id == 1);
    CHECK(s.newest().window_id == 6);
}

TEST_CASE("sliding windows from empty") {
    SlidingWindows s(6);
    s.advance(window(0));
    CHECK(s.size() == 1);
    const SlidingWindows t = advance(SlidingWindows(6), window(3));
    CHECK(t.newest().window_id == 3);
}

TEST_CASE("sliding windows reject gaps") {
    SlidingWindows s(6);
    s.advance(window(3));
    CHECK_THROWS_AS(s.advance(window(5)), SequenceError);
}

TEST_CASE("property: sliding windows hold at most K in insertion order") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const int k = std::uniform_int_distribution<int>(1, 8)(rng);
        const int n = std::uniform_int_distribution<int>(0, 30)(rng);
        const int first = std::uniform_int_distribution<int>(0, 100)(rng);
        SlidingWindows s(static_cast<std::size_t>(k));
        for (int i = 0; i < n; ++i) {
            s.advance(window(first + i));
            REQUIRE(s.size() <= static_cast<std::size_t>(k));
            std::int64_t expected = first + i - static_cast<std::int64_t>(s.size()) + 1;
            for (const auto& w : s.windows()) CHECK(w.window_id == expected++);
        }
    }
}

TEST_CASE("split_windows keeps empty windows and half-open bounds") {
    std::vector<Tweet> tweets;
    for (Timestamp ts : {0, 1799, 1800, 5400}) {
        Tweet t;
        t.id = std::to_string(ts);
        t.timestamp = ts;
        tweets.push_back(t);
    }
    const auto ws = split_windows(tweets, 0, 1800);
    REQUIRE(ws.size() == 4);
    CHECK(ws[0].tweets.size() == 2);
    CHECK(ws[1].tweets.size() == 1);
    CHECK(ws[2].tweets.empty());
    CHECK(ws[3].tweets.size() == 1);
    for (const auto& w : ws) {
        CHECK(w.end - w.start == 1800);
        for (const auto& t : w.tweets) CHECK((t.timestamp >= w.start && t.timestamp < w.end));
    }
    CHECK(tweets_between(tweets, 1799, 1801).size() == 2);
}

TEST_CASE("config defaults and overrides") {
    DetectorConfig c;
    CHECK(c.query_window_minutes == 30);
    CHECK(c.sliding_window_count == 6);
    CHECK(c.quadtree_max_depth == 30);
    CHECK(c.quadtree_split_threshold == 50);
    CHECK(c.verification_window_minutes == 5);
    CHECK(c.verification_rounds == 2);
    CHECK(c.top_keyword_count == 5);
    CHECK(c.coherence_threshold == 1.5);
    CHECK(c.crops_per_image == 500);
    CHECK(c.crop_size == 32);
    CHECK(c.min_images == 3);
    CHECK(c.train_crop_fraction == doctest::Approx(2.0 / 3.0));
    CHECK(c.human_area_total_threshold == 0.40);
    CHECK(c.human_area_single_threshold == 0.20);
    CHECK(c.powerlaw_pvalue_threshold == 0.1);
    CHECK(c.bootstrap_iterations == 100);
    CHECK_NOTHROW(c.validate());

    const auto path = scratch("cfg.txt");
    {
        std::ofstream out(path);
        out << "# comment\ncoherence_threshold = 2.0\nregion_names = paris, France\n"
               "image_stage = false\nregion.lat_min = 48.8\nregion.lat_max = 48.9\n";
    }
    const DetectorConfig loaded = load_config(path);
    CHECK(loaded.coherence_threshold == 2.0);
    CHECK(loaded.region_names == std::vector<std::string>{"paris", "France"});
    CHECK_FALSE(loaded.image_stage);
    CHECK(loaded.region.lat_min == 48.8);
}

TEST_CASE("config errors") {
    DetectorConfig c;
    CHECK_THROWS_AS(apply_config(c, {{"no_such_key", "1"}}), ConfigError);
    CHECK_THROWS_AS(apply_config(c, {{"crop_size", "big"}}), ConfigError);
    c = DetectorConfig{};
    c.train_crop_fraction = 1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = DetectorConfig{};
    c.crop_size = 30;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK_THROWS_AS(load_config(scratch("absent.cfg")), IoError);
}
