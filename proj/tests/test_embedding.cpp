#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "geoevent/embedding.hpp"
#include "geoevent/text.hpp"
#include "geoevent/types.hpp"

using namespace geoevent;
using Strings = std::vector<std::string>;

namespace {

std::filesystem::path scratch(const std::string& name, const std::string& content) {
    auto dir = std::filesystem::temp_directory_path() / "geoevent_test_embedding";
    std::filesystem::create_directories(dir);
    std::ofstream(dir / name) << content;
    return dir / name;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

VectorTable tiny_table() {
    VectorTable t(2);
    t.insert("fire", vec({1, 0}));
    t.insert("smoke", vec({0, 1}));
    t.insert("brooklyn", vec({2, 2}));
    t.insert("bridge", vec({4, 0}));
    return t;
}

}  // namespace

TEST_CASE("extract_keywords examples") {
    CHECK(extract_keywords("Fire near Brooklyn Bridge #nyc") == Strings{"fire", "brooklyn bridge", "nyc"});
    CHECK(extract_keywords("").empty());
    CHECK(extract_keywords("the and of").empty());
    CHECK(extract_keywords("The Big Apple").size() == 1);
    CHECK(extract_keywords("The Big Apple") == Strings{"big apple"});
    CHECK(extract_keywords("Hello, World") == Strings{"hello", "world"});
    CHECK(extract_keywords("@Mayor says #Parade #parade") == Strings{"mayor", "parade", "parade"});
}

TEST_CASE("property: keywords appear in the source text") {
    for (const char* text : {"Times Square is packed #NYE @NYPD tonight",
                             "Smoke over Queens, Fire trucks everywhere #Fire",
                             "lowercase only here", "Ünïcode Café #Straße"}) {
        const std::string lower = to_lower(text);
        for (const auto& k : extract_keywords(text)) CHECK(lower.find(k) != std::string::npos);
    }
}

TEST_CASE("stop words") {
    CHECK(is_stop_word("the"));
    CHECK(is_stop_word("and"));
    CHECK_FALSE(is_stop_word("fire"));
    CHECK(std::is_sorted(stop_words().begin(), stop_words().end()));
    CHECK(word_tokens("It's #hot, really HOT!") == Strings{"it's", "hot", "really", "hot"});
}

TEST_CASE("load_vectors format") {
    const auto ok = scratch("ok.txt", "2 3\nFire 1 2 3\nsmoke 4 5 6\n");
    const VectorTable t = load_vectors(ok);
    CHECK(t.size() == 2);
    CHECK(t.dimension() == 3);
    REQUIRE(t.lookup("fire"));
    CHECK(*t.lookup("fire") == vec({1, 2, 3}));

    const auto short_row = scratch("short.txt", "2 3\nfire 1 2 3\nsmoke 4 5\n");
    try {
        load_vectors(short_row);
        FAIL("expected LoadError");
    } catch (const LoadError& e) {
        CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }
    CHECK_THROWS_AS(load_vectors(scratch("header.txt", "x y\n")), LoadError);
    CHECK_THROWS_AS(load_vectors(scratch("count.txt", "3 1\na 1\nb 2\n")), LoadError);
    CHECK_THROWS_AS(load_vectors("/nonexistent/vectors.txt"), IoError);
}

TEST_CASE("shipped miniature table loads exactly") {
    const std::filesystem::path path = std::filesystem::path(GEOEVENT_TEST_DATA) / "mini_vectors.txt";
    const VectorTable t = load_vectors(path);
    CHECK(t.dimension() == 64);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    std::string token;
    in >> token;
    Eigen::VectorXd row(64);
    for (int i = 0; i < 64; ++i) in >> row[i];
    REQUIRE(t.lookup(token));
    CHECK(*t.lookup(token) == row);
}

TEST_CASE("write_vectors round-trips") {
    const std::vector<std::pair<std::string, Eigen::VectorXd>> rows{{"a", vec({0.1, -2.5})},
                                                                    {"b", vec({1e-17, 3.0})}};
    auto dir = std::filesystem::temp_directory_path() / "geoevent_test_embedding";
    std::filesystem::create_directories(dir);
    write_vectors(dir / "rt.txt", rows);
    const VectorTable t = load_vectors(dir / "rt.txt");
    CHECK(*t.lookup("a") == rows[0].second);
    CHECK(*t.lookup("b") == rows[1].second);
}

TEST_CASE("embed_keywords means") {
    const VectorTable t = tiny_table();
    CHECK(embed_keywords({"fire"}, t)->vector == vec({1, 0}));
    const auto two = embed_keywords({"fire", "smoke"}, t);
    CHECK(two->vector == vec({0.5, 0.5}));
    CHECK(two->keyword_count == 2);
    CHECK_FALSE(embed_keywords({"unknown", "words"}, t));
    // Multi-word keyword contributes its own mean first.
    CHECK(embed_keywords({"brooklyn bridge"}, t)->vector == vec({3, 1}));
    CHECK(embed_keywords({"brooklyn bridge", "fire"}, t)->vector == vec({2, 0.5}));
    // Duplicates weigh in: mean of {v, v, w} = (2v + w) / 3.
    const auto dup = embed_keywords({"fire", "fire", "smoke"}, t)->vector;
    CHECK(dup[0] == doctest::Approx(2.0 / 3.0));
    CHECK(dup[1] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("embed_keywords is permutation invariant") {
    const VectorTable t = tiny_table();
    const auto a = embed_keywords({"fire", "smoke", "brooklyn", "bridge"}, t)->vector;
    const auto b = embed_keywords({"bridge", "brooklyn", "smoke", "fire"}, t)->vector;
    CHECK((a - b).norm() < 1e-12);
}

TEST_CASE("embed_text") {
    const VectorTable t = tiny_table();
    CHECK(embed_text("fire and smoke", t)->vector == vec({0.5, 0.5}));
    CHECK_FALSE(embed_text("the and of", t));
    CHECK(embed_text("Fire!", t)->vector == vec({1, 0}));
}

TEST_CASE("subword fallback") {
    VectorTable t = tiny_table();
    CHECK_FALSE(t.lookup("fires"));
    t.enable_subwords();
    const auto v = t.lookup("fires");
    REQUIRE(v);
    CHECK(v->allFinite());
    // Shares more n-grams with "fire" than with "bridge".
    CHECK((*v - vec({1, 0})).norm() < (*v - vec({4, 0})).norm());
    CHECK_THROWS_AS(t.insert("bad", vec({1, 2, 3})), DimensionError);
}
