#include <set>

#include "doctest.h"
#include "geoevent/evaluate.hpp"
#include "geoevent/pipeline.hpp"
#include "geoevent/synth.hpp"

using namespace geoevent;

namespace {

Tweet tagged(const std::string& id, std::vector<std::string> hashtags, Timestamp ts = 0) {
    Tweet t;
    t.id = id;
    t.timestamp = ts;
    t.hashtags = std::move(hashtags);
    return t;
}

DetectedEvent event(const std::string& id, std::vector<std::string> tweet_ids, Bounds cell, int level,
                    std::int64_t window, std::vector<std::string> keywords) {
    DetectedEvent e;
    e.candidate.cluster_id = id;
    e.candidate.level = level;
    e.candidate.cell = cell;
    for (const auto& t : tweet_ids) e.candidate.tweets.push_back(tagged(t, {}));
    for (const auto& k : keywords) e.candidate.top_keywords.push_back({k, 3});
    e.detection_window_id = window;
    e.merged_from = {id};
    return e;
}

VectorTable table_of(const Scenario& sc) {
    VectorTable table(static_cast<int>(sc.vectors.front().second.size()));
    for (const auto& [w, v] : sc.vectors) table.insert(w, v);
    return table;
}

}  // namespace

TEST_CASE("top_keywords orders by count then keyword") {
    const std::vector<Tweet> tweets{tagged("1", {"b", "a"}), tagged("2", {"b"}), tagged("3", {"c", "nyc"}),
                                    tagged("4", {"a"})};
    const auto top = top_keywords(tweets, 2, {"nyc"});
    CHECK(top == std::vector<KeywordCount>{{"a", 2}, {"b", 2}});
}

TEST_CASE("prune: eight of ten share a keyword") {
    DetectorConfig config;
    EventCandidate c;
    for (int i = 0; i < 8; ++i) c.tweets.push_back(tagged("f" + std::to_string(i), {"fire"}));
    c.tweets.push_back(tagged("x", {"concert"}));
    c.tweets.push_back(tagged("y", {"concert"}));
    const auto r = prune(c, excluded_keywords(config), config);
    CHECK(r.report.removed_tweet_ids.empty());
    CHECK(r.report.containment_fraction == doctest::Approx(1.0));
    REQUIRE(r.candidate);

    config.top_keyword_count = 1;
    const auto one = prune(c, excluded_keywords(config), config);
    CHECK(one.report.containment_fraction == doctest::Approx(0.8));
    CHECK(one.report.kept);
}

TEST_CASE("prune removes tweets whose markers are all singletons or excluded") {
    DetectorConfig config;
    config.top_keyword_count = 1;
    EventCandidate c;
    c.tweets = {tagged("a", {"fire"}), tagged("b", {"fire"}), tagged("c", {"unique1"}),
                tagged("d", {"nyc"}), tagged("e", {}), tagged("f", {"fire", "unique2"})};
    const auto r = prune(c, excluded_keywords(config), config);
    CHECK(std::set<std::string>(r.report.removed_tweet_ids.begin(), r.report.removed_tweet_ids.end()) ==
          std::set<std::string>{"c", "d"});
    REQUIRE(r.candidate);
    CHECK(r.candidate->tweets.size() == 4);
    // three of four remaining carry #fire
    CHECK(r.report.containment_fraction == doctest::Approx(0.75));
}

TEST_CASE("prune drops a candidate with no shared keyword") {
    DetectorConfig config;
    config.top_keyword_count = 1;
    EventCandidate c;
    c.tweets = {tagged("a", {"x"}), tagged("b", {"x"}), tagged("c", {}), tagged("d", {}), tagged("e", {})};
    const auto r = prune(c, {}, config);
    CHECK(r.report.containment_fraction == doctest::Approx(0.4));
    CHECK_FALSE(r.candidate);
    CHECK_FALSE(prune(EventCandidate{}, {}, config).candidate);
}

TEST_CASE("merge_duplicates") {
    const Bounds left{0, 1, 0, 1}, right{0, 1, 2, 3}, inner{0, 0.5, 0, 0.5};
    SUBCASE("tweet overlap merges, deepest level represents") {
        const auto out = merge_duplicates(
            {event("a", {"1", "2", "3"}, left, 2, 4, {"x"}), event("b", {"2", "3", "4", "5"}, right, 3, 9, {"y"})},
            {});
        REQUIRE(out.size() == 1);
        CHECK(out[0].candidate.cluster_id == "b");
        CHECK(std::set<std::string>(out[0].merged_from.begin(), out[0].merged_from.end()) ==
              std::set<std::string>{"a", "b"});
    }
    SUBCASE("overlapping cells with a shared keyword in adjacent windows") {
        const auto out = merge_duplicates(
            {event("a", {"1"}, left, 1, 4, {"fire"}), event("b", {"2"}, inner, 2, 5, {"fire", "x"})}, {});
        CHECK(out.size() == 1);
    }
    SUBCASE("no shared keyword or distant windows keeps both") {
        CHECK(merge_duplicates({event("a", {"1"}, left, 1, 4, {"fire"}), event("b", {"2"}, inner, 2, 5, {"x"})}, {})
                  .size() == 2);
        CHECK(merge_duplicates({event("a", {"1"}, left, 1, 4, {"fire"}), event("b", {"2"}, inner, 2, 6, {"fire"})},
                               {})
                  .size() == 2);
        CHECK(merge_duplicates({event("a", {"1"}, left, 1, 4, {"fire"}), event("b", {"2"}, right, 2, 4, {"fire"})},
                               {})
                  .size() == 2);
    }
    SUBCASE("transitive chains collapse") {
        const auto out = merge_duplicates({event("a", {"1", "2", "3"}, left, 1, 1, {"p"}),
                                           event("b", {"2", "3", "4"}, right, 1, 1, {"q"}),
                                           event("c", {"3", "4", "5"}, left, 1, 9, {"r"})},
                                          {});
        REQUIRE(out.size() == 1);
        CHECK(out[0].candidate.cluster_id == "a");
    }
    SUBCASE("history absorbs a repeat") {
        const auto out = merge_duplicates({event("new", {"1", "2"}, left, 3, 7, {"p"})},
                                          {event("old", {"1", "2", "3"}, left, 2, 6, {"p"})});
        REQUIRE(out.size() == 1);
        CHECK(out[0].merged_from.size() == 2);
    }
    CHECK(merge_duplicates({}, {}).empty());
}

TEST_CASE("empty inputs") {
    const DetectorConfig config;
    VectorTable table(2);
    const DetectionContext ctx{config, table};
    CHECK(run_stream({}, ctx).events.empty());
    const auto search = find_candidates({}, EmbedMode::Keywords, config, table, 0, "w0");
    CHECK(search.candidates.empty());
    CHECK(verify({}, {}, {}, table, config, "v").empty());
}

TEST_CASE("null streams yield no events") {
    int empty = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const Scenario sc = generate_scenario(preset_scenario(seed, 0, 0));
        const VectorTable table = table_of(sc);
        DetectorConfig config;
        config.image_stage = false;
        const DetectionContext ctx{config, table};
        if (run_stream(sc.stream, ctx).events.empty()) ++empty;
    }
    CHECK(empty >= 19);
}

TEST_CASE("a planted event is found; the image gate only removes events") {
    const Scenario sc = generate_scenario(preset_scenario(1, 1, 1));
    const VectorTable table = table_of(sc);
    const MemoryImageSource images = scenario_images(sc);
    DetectorConfig config;
    config.crops_per_image = 150;
    config.ae_epochs = 10;

    DetectorConfig off = config;
    off.image_stage = false;
    const auto without = run_stream(sc.stream, DetectionContext{off, table});
    const EvalResult e = evaluate(to_records(without.events), sc.truth);
    CHECK(e.pseudo_recall == 1.0);

    ImageAnalysisCache cache;
    const auto with = run_stream(sc.stream, DetectionContext{config, table, &images, &sc.annotations, &cache});
    CHECK(with.events.size() <= without.events.size());
    const EvalResult g = evaluate(to_records(with.events), sc.truth);
    CHECK(g.precision >= e.precision);

    // Determinism of the whole stream.
    const auto again = run_stream(sc.stream, DetectionContext{off, table});
    REQUIRE(again.events.size() == without.events.size());
    for (std::size_t i = 0; i < again.events.size(); ++i) {
        CHECK(again.events[i].candidate.cluster_id == without.events[i].candidate.cluster_id);
    }
}
