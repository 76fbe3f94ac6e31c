#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "geoevent/coherence.hpp"
#include "geoevent/event_io.hpp"
#include "geoevent/image.hpp"
#include "geoevent/types.hpp"

namespace geoevent {

/// A spatially and temporally concentrated burst of tweets. Genuine clusters
/// are planted events with coherent images and appear in the ground truth.
/// Hotspots look the same in text but carry unrelated images and are not
/// events.
struct PlantedCluster {
    double lat = 0.0;
    double lon = 0.0;
    double radius = 0.0005;      // Gaussian sigma, degrees
    Timestamp start = 0;
    Timestamp end = 0;           // exclusive
    int tweet_count = 40;
    int vocabulary_size = 30;
    double zipf_exponent = 1.1;
    int image_count = 4;
    bool genuine = true;
    int human_images = 1;        // extra person-dominated images (filtered by annotation)
};

struct ScenarioConfig {
    Bounds region{40.4774, 40.9176, -74.2591, -73.7004};
    Timestamp start = 1'546'300'800;   // 2019-01-01T00:00:00Z
    Timestamp duration = 4 * 3600;
    double background_rate = 400.0;    // tweets per hour
    double background_image_fraction = 0.05;
    double background_hashtag_fraction = 0.3;
    int topics = 20;
    int words_per_topic = 40;
    int dimension = 64;
    double word_noise = 0.35;          // per-coordinate sigma around a topic centre
    int image_size = 96;
    double image_jitter = 64.0;
    double image_noise = 0.05;
    std::vector<PlantedCluster> clusters;
    std::uint64_t seed = 1;

    /// Throws ConfigError for clusters outside the region or duration and for
    /// non-positive rates or sizes.
    void validate() const;
};

/// Everything `simulate` writes, held in memory.
struct Scenario {
    std::vector<Tweet> stream;  // timestamp order
    std::vector<TruthEvent> truth;
    std::map<std::string, Image> images;  // by image id
    AnnotationIndex annotations;
    std::vector<std::pair<std::string, Eigen::VectorXd>> vectors;
};

Scenario generate_scenario(const ScenarioConfig& config);

/// Writes stream.jsonl, truth.jsonl, annotations.jsonl, vectors.txt and
/// images/<id>.ppm under `dir`.
void write_scenario(const Scenario& scenario, const std::filesystem::path& dir);

/// Default benchmark: four hours of background traffic, `events` genuine
/// events and `hotspots` hotspots, each confined to one 30-minute window.
ScenarioConfig preset_scenario(std::uint64_t seed, int events = 2, int hotspots = 3);

/// Applies `key = value` overrides (duration_minutes, background_rate,
/// events, hotspots, event_tweets, image_count, image_size, seed, ...).
ScenarioConfig scenario_from_values(const std::map<std::string, std::string>& values,
                                    std::uint64_t seed);

/// Memory-backed image source over a scenario's images.
MemoryImageSource scenario_images(const Scenario& scenario);

}  // namespace geoevent
