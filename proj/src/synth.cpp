#include "geoevent/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>

#include "geoevent/embedding.hpp"
#include "geoevent/seed.hpp"
#include "geoevent/text.hpp"
#include "geoevent/texture.hpp"
#include "geoevent/tweet_io.hpp"

namespace geoevent {

void ScenarioConfig::validate() const {
    if (duration <= 0) throw ConfigError("scenario duration must be positive");
    if (!(background_rate >= 0.0)) throw ConfigError("background rate must be non-negative");
    if (topics < 1 || words_per_topic < 2) throw ConfigError("need at least one topic of two words");
    if (dimension < 1) throw ConfigError("vector dimension must be positive");
    if (image_size < 1) throw ConfigError("image size must be positive");
    for (std::size_t k = 0; k < clusters.size(); ++k) {
        const auto& c = clusters[k];
        const std::string name = "cluster " + std::to_string(k);
        if (!region.contains(c.lat, c.lon)) throw ConfigError(name + " lies outside the region");
        if (c.start < start || c.end > start + duration || c.end <= c.start) {
            throw ConfigError(name + " span lies outside the scenario duration");
        }
        if (c.tweet_count < 1 || c.vocabulary_size < 2 || c.image_count < 0 || c.human_images < 0 ||
            !(c.radius > 0.0) || !(c.zipf_exponent > 0.0)) {
            throw ConfigError(name + " has a non-positive size or rate");
        }
    }
}

namespace {

constexpr const char* kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p",
                                   "r", "s", "t", "v", "z", "br", "tr", "kl", "st"};
constexpr const char* kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou"};
constexpr const char* kFiller[] = {"at", "the", "with", "near", "so", "and", "for", "this",
                                   "my", "today", "really", "just", "now", "here", "we", "all"};

class WordFactory {
public:
    explicit WordFactory(std::mt19937_64& rng) : rng_(rng) {}

    std::string next() {
        std::uniform_int_distribution<int> syllables(2, 3);
        std::uniform_int_distribution<std::size_t> onset(0, std::size(kOnsets) - 1);
        std::uniform_int_distribution<std::size_t> vowel(0, std::size(kVowels) - 1);
        for (;;) {
            std::string w;
            const int n = syllables(rng_);
            for (int s = 0; s < n; ++s) {
                w += kOnsets[onset(rng_)];
                w += kVowels[vowel(rng_)];
            }
            if (is_stop_word(w) || !used_.insert(w).second) continue;
            return w;
        }
    }

private:
    std::mt19937_64& rng_;
    std::set<std::string> used_;
};

std::string capitalise(std::string w) {
    if (!w.empty()) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
    return w;
}

std::string filler(std::mt19937_64& rng) {
    return kFiller[std::uniform_int_distribution<std::size_t>(0, std::size(kFiller) - 1)(rng)];
}

std::string unique_tag(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> letter('a', 'z');
    std::string tag = "q";
    for (int i = 0; i < 7; ++i) tag += static_cast<char>(letter(rng));
    return tag;
}

struct Vocabulary {
    std::vector<std::string> words;
    Eigen::VectorXd centre;
};

Vocabulary make_vocabulary(int size, int dimension, double noise, WordFactory& words,
                           std::mt19937_64& rng,
                           std::vector<std::pair<std::string, Eigen::VectorXd>>& table) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vocabulary v;
    v.centre = Eigen::VectorXd(dimension);
    for (int d = 0; d < dimension; ++d) v.centre[d] = normal(rng);
    for (int i = 0; i < size; ++i) {
        v.words.push_back(words.next());
        Eigen::VectorXd vec(dimension);
        for (int d = 0; d < dimension; ++d) vec[d] = v.centre[d] + noise * normal(rng);
        table.emplace_back(v.words.back(), vec);
    }
    return v;
}

HumanAnnotation background_people(const std::string& id, bool dominated, std::mt19937_64& rng) {
    HumanAnnotation a;
    a.image_id = id;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (dominated) {
        const double x0 = 0.1 * unit(rng), y0 = 0.1 * unit(rng);
        a.person_boxes.push_back({x0, y0, x0 + 0.6, y0 + 0.7, 0.9});
    } else if (unit(rng) < 0.5) {
        const double x0 = 0.7 * unit(rng), y0 = 0.7 * unit(rng);
        a.person_boxes.push_back({x0, y0, x0 + 0.2, y0 + 0.25, 0.8});
    }
    return a;
}

}  // namespace

Scenario generate_scenario(const ScenarioConfig& config) {
    config.validate();
    Scenario sc;
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    WordFactory words(rng);

    std::vector<Vocabulary> topics;
    for (int t = 0; t < config.topics; ++t) {
        topics.push_back(make_vocabulary(config.words_per_topic, config.dimension, config.word_noise,
                                         words, rng, sc.vectors));
    }
    std::vector<Vocabulary> cluster_vocab;
    for (const auto& c : config.clusters) {
        cluster_vocab.push_back(make_vocabulary(c.vocabulary_size, config.dimension,
                                                config.word_noise, words, rng, sc.vectors));
    }

    int image_counter = 0;
    auto next_image_id = [&] {
        char buf[16];
        std::snprintf(buf, sizeof buf, "img%05d.ppm", image_counter++);
        return std::string(buf);
    };
    auto add_tweet = [&](std::string id, Timestamp ts, double lat, double lon, std::string text,
                         std::vector<std::string> images) {
        Tweet t;
        t.id = std::move(id);
        t.timestamp = ts;
        t.lat = lat;
        t.lon = lon;
        t.text = std::move(text);
        t.hashtags = scan_markers(t.text, '#');
        t.mentions = scan_markers(t.text, '@');
        t.image_refs = std::move(images);
        sc.stream.push_back(std::move(t));
    };

    // Background traffic: uniform in space and time, topic words written as
    // capitalised nouns, occasional one-off hashtags and unrelated photos.
    const auto n_background = static_cast<long long>(
        std::llround(config.background_rate * static_cast<double>(config.duration) / 3600.0));
    const Bounds& r = config.region;
    for (long long i = 0; i < n_background; ++i) {
        const auto ts = config.start + static_cast<Timestamp>(unit(rng) * static_cast<double>(config.duration));
        const double lat = r.lat_min + unit(rng) * (r.lat_max - r.lat_min);
        const double lon = r.lon_min + unit(rng) * (r.lon_max - r.lon_min);
        const auto& topic = topics[std::uniform_int_distribution<std::size_t>(0, topics.size() - 1)(rng)];
        std::uniform_int_distribution<std::size_t> pick(0, topic.words.size() - 1);
        std::string text = capitalise(topic.words[pick(rng)]) + " " + filler(rng) + " " +
                           filler(rng) + " " + capitalise(topic.words[pick(rng)]);
        if (unit(rng) < config.background_hashtag_fraction) text += " #" + unique_tag(rng);
        std::vector<std::string> images;
        if (unit(rng) < config.background_image_fraction) {
            const std::string id = next_image_id();
            const bool crowd = unit(rng) < 0.3;
            sc.images.emplace(id, incoherent_image(config.image_size, config.image_noise, rng));
            sc.annotations[id] = background_people(id, crowd, rng);
            images.push_back(id);
        }
        add_tweet("b" + std::to_string(i), ts, lat, lon, std::move(text), std::move(images));
    }

    // Planted clusters.
    for (std::size_t k = 0; k < config.clusters.size(); ++k) {
        const PlantedCluster& c = config.clusters[k];
        const Vocabulary& vocab = cluster_vocab[k];
        std::vector<double> weights;
        for (int rank = 1; rank <= c.vocabulary_size; ++rank) {
            weights.push_back(std::pow(static_cast<double>(rank), -c.zipf_exponent));
        }
        std::discrete_distribution<std::size_t> zipf(weights.begin(), weights.end());
        std::normal_distribution<double> spread(0.0, c.radius);
        const TextureFamily family = random_texture_family(rng);

        const std::string prefix = (c.genuine ? "e" : "h") + std::to_string(k) + "_";
        TruthEvent truth;
        truth.id = "event" + std::to_string(k);
        truth.start = c.start;
        truth.end = c.end;
        truth.lat = c.lat;
        truth.lon = c.lon;

        std::vector<std::size_t> order(static_cast<std::size_t>(c.tweet_count));
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<int> image_slot(order.size(), 0);  // 1 scene image, 2 crowd image
        for (int i = 0; i < c.image_count && i < c.tweet_count; ++i) image_slot[order[static_cast<std::size_t>(i)]] = 1;
        for (int i = 0; i < c.human_images && c.image_count + i < c.tweet_count; ++i) {
            image_slot[order[static_cast<std::size_t>(c.image_count + i)]] = 2;
        }

        for (int i = 0; i < c.tweet_count; ++i) {
            const auto ts = c.start + static_cast<Timestamp>(unit(rng) * static_cast<double>(c.end - c.start));
            const double lat = std::clamp(c.lat + spread(rng), r.lat_min, r.lat_max);
            const double lon = std::clamp(c.lon + spread(rng), r.lon_min, r.lon_max);
            const int slot = image_slot[static_cast<std::size_t>(i)];
            // Photo posts carry the event's headline hashtag.
            const std::string& tag = slot != 0 ? vocab.words.front() : vocab.words[zipf(rng)];
            std::string text = capitalise(vocab.words[zipf(rng)]) + " " + filler(rng) + " #" + tag;
            if (unit(rng) < 0.6) text += " " + filler(rng) + " #" + vocab.words[zipf(rng)];
            if (unit(rng) < 0.1) text += " @" + vocab.words[zipf(rng)];
            std::vector<std::string> images;
            if (slot != 0) {
                const std::string id = next_image_id();
                if (slot == 1) {
                    sc.images.emplace(id, c.genuine ? coherent_image(family, config.image_size,
                                                                     config.image_jitter,
                                                                     config.image_noise, rng)
                                                    : incoherent_image(config.image_size,
                                                                       config.image_noise, rng));
                    sc.annotations[id] = background_people(id, false, rng);
                } else {
                    sc.images.emplace(id, incoherent_image(config.image_size, config.image_noise, rng));
                    sc.annotations[id] = background_people(id, true, rng);
                }
                images.push_back(id);
            }
            const std::string id = prefix + std::to_string(i);
            if (c.genuine) truth.tweet_ids.push_back(id);
            add_tweet(id, ts, lat, lon, std::move(text), std::move(images));
        }
        if (c.genuine) sc.truth.push_back(std::move(truth));
    }

    std::stable_sort(sc.stream.begin(), sc.stream.end(),
                     [](const Tweet& a, const Tweet& b) { return a.timestamp < b.timestamp; });
    // Public ids follow stream order so they carry no hint of the generator's labels.
    std::map<std::string, std::string> public_id;
    for (std::size_t i = 0; i < sc.stream.size(); ++i) {
        char buf[24];
        std::snprintf(buf, sizeof buf, "t%06zu", i);
        public_id[sc.stream[i].id] = buf;
        sc.stream[i].id = buf;
    }
    for (auto& t : sc.truth) {
        for (auto& id : t.tweet_ids) id = public_id.at(id);
        std::sort(t.tweet_ids.begin(), t.tweet_ids.end());
    }
    return sc;
}

void write_scenario(const Scenario& sc, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir / "images", ec);
    if (ec) throw IoError("cannot create " + (dir / "images").string() + ": " + ec.message());
    write_tweets(dir / "stream.jsonl", sc.stream);
    write_truth(dir / "truth.jsonl", sc.truth);
    write_annotations(dir / "annotations.jsonl", sc.annotations);
    write_vectors(dir / "vectors.txt", sc.vectors);
    for (const auto& [id, img] : sc.images) write_ppm(dir / "images" / id, img);
}

namespace {

// Spreads the clusters over distinct 30-minute windows where possible.
void plan_clusters(ScenarioConfig& cfg, int events, int hotspots) {
    constexpr Timestamp kWindow = 30 * 60;
    std::mt19937_64 rng(derive_seed(cfg.seed, 0x5ce7a));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int windows = std::max(1, static_cast<int>(cfg.duration / kWindow));
    std::vector<int> slots(static_cast<std::size_t>(windows));
    for (int i = 0; i < windows; ++i) slots[static_cast<std::size_t>(i)] = i;
    std::shuffle(slots.begin(), slots.end(), rng);
    const Bounds& r = cfg.region;
    const double margin = 0.05;
    cfg.clusters.clear();
    for (int k = 0; k < events + hotspots; ++k) {
        PlantedCluster c;
        c.genuine = k < events;
        c.lat = r.lat_min + margin + unit(rng) * (r.lat_max - r.lat_min - 2 * margin);
        c.lon = r.lon_min + margin + unit(rng) * (r.lon_max - r.lon_min - 2 * margin);
        const int slot = slots[static_cast<std::size_t>(k % windows)];
        c.start = cfg.start + slot * kWindow + static_cast<Timestamp>(unit(rng) * 300.0);
        c.end = std::min(c.start + 20 * 60, cfg.start + cfg.duration);
        c.human_images = c.genuine ? 1 : 0;
        cfg.clusters.push_back(c);
    }
}

}  // namespace

ScenarioConfig preset_scenario(std::uint64_t seed, int events, int hotspots) {
    ScenarioConfig cfg;
    cfg.seed = seed;
    plan_clusters(cfg, events, hotspots);
    return cfg;
}

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw ConfigError("invalid value '" + value + "' for scenario key '" + key + "'");
    }
    return out;
}

}  // namespace

ScenarioConfig scenario_from_values(const std::map<std::string, std::string>& values,
                                    std::uint64_t seed) {
    auto get = [&](const char* key) -> const std::string* {
        auto it = values.find(key);
        return it == values.end() ? nullptr : &it->second;
    };
    static const std::set<std::string> known = {
        "events", "hotspots", "seed", "duration_minutes", "background_rate",
        "background_image_fraction", "background_hashtag_fraction", "topics", "words_per_topic",
        "event_tweets", "vocabulary_size", "zipf_exponent", "image_count", "human_images",
        "image_size", "image_jitter", "image_noise", "radius"};
    for (const auto& [k, v] : values) {
        if (!known.contains(k)) throw ConfigError("unknown scenario key '" + k + "'");
    }
    if (const auto* v = get("seed")) seed = parse_number<std::uint64_t>("seed", *v);
    const int events = get("events") ? parse_number<int>("events", *get("events")) : 2;
    const int hotspots = get("hotspots") ? parse_number<int>("hotspots", *get("hotspots")) : 3;
    if (events < 0 || hotspots < 0) throw ConfigError("events and hotspots must be non-negative");
    ScenarioConfig cfg;
    cfg.seed = seed;
    if (const auto* v = get("duration_minutes")) {
        cfg.duration = parse_number<Timestamp>("duration_minutes", *v) * 60;
    }
    plan_clusters(cfg, events, hotspots);
    if (const auto* v = get("background_rate")) cfg.background_rate = parse_number<double>("background_rate", *v);
    if (const auto* v = get("background_image_fraction")) {
        cfg.background_image_fraction = parse_number<double>("background_image_fraction", *v);
    }
    if (const auto* v = get("background_hashtag_fraction")) {
        cfg.background_hashtag_fraction = parse_number<double>("background_hashtag_fraction", *v);
    }
    if (const auto* v = get("topics")) cfg.topics = parse_number<int>("topics", *v);
    if (const auto* v = get("words_per_topic")) cfg.words_per_topic = parse_number<int>("words_per_topic", *v);
    if (const auto* v = get("image_size")) cfg.image_size = parse_number<int>("image_size", *v);
    if (const auto* v = get("image_jitter")) cfg.image_jitter = parse_number<double>("image_jitter", *v);
    if (const auto* v = get("image_noise")) cfg.image_noise = parse_number<double>("image_noise", *v);
    for (auto& c : cfg.clusters) {
        if (const auto* v = get("event_tweets")) c.tweet_count = parse_number<int>("event_tweets", *v);
        if (const auto* v = get("vocabulary_size")) c.vocabulary_size = parse_number<int>("vocabulary_size", *v);
        if (const auto* v = get("zipf_exponent")) c.zipf_exponent = parse_number<double>("zipf_exponent", *v);
        if (const auto* v = get("image_count")) c.image_count = parse_number<int>("image_count", *v);
        if (const auto* v = get("human_images")) {
            if (c.genuine) c.human_images = parse_number<int>("human_images", *v);
        }
        if (const auto* v = get("radius")) c.radius = parse_number<double>("radius", *v);
    }
    cfg.validate();
    return cfg;
}

MemoryImageSource scenario_images(const Scenario& scenario) {
    MemoryImageSource source;
    for (const auto& [id, img] : scenario.images) source.add(id, img);
    return source;
}

}  // namespace geoevent
