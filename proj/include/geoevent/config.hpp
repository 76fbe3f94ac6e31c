#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "geoevent/types.hpp"

namespace geoevent {

struct DetectorConfig {
    // Stream windows
    int query_window_minutes = 30;
    int sliding_window_count = 6;
    int verification_window_minutes = 5;
    int verification_rounds = 2;

    // Spatial index
    Bounds region{40.4774, 40.9176, -74.2591, -73.7004};  // New York City
    int quadtree_max_depth = 30;
    int quadtree_split_threshold = 50;

    // Clustering
    int birch_branching = 50;
    int birch_leaf_capacity = 50;
    int threshold_search_cap = 100;
    double threshold_step_fraction = 0.05;  // of the sampled median pairwise distance
    int threshold_step_sample = 200;
    int small_cluster_size = 10;
    double small_cluster_fraction = 0.05;
    double largest_cluster_fraction = 0.5;

    // Power-law detection
    double powerlaw_pvalue_threshold = 0.1;
    int bootstrap_iterations = 100;
    int powerlaw_min_tail = 10;

    // Pruning
    int top_keyword_count = 5;
    std::vector<std::string> region_names{"nyc", "new york", "newyork", "ny", "brooklyn",
                                          "manhattan", "usa", "america"};

    // Image analysis
    bool image_stage = true;
    double coherence_threshold = 1.5;
    int crops_per_image = 500;
    int crop_size = 32;
    int min_images = 3;
    double train_crop_fraction = 2.0 / 3.0;
    double human_area_total_threshold = 0.40;
    double human_area_single_threshold = 0.20;
    int ae_epochs = 30;
    double ae_learning_rate = 1e-3;
    int ae_batch_size = 64;

    // Execution
    int threads = 1;
    std::uint64_t rng_seed = 20190101;

    /// Throws ConfigError when a value violates its documented range.
    void validate() const;

    std::int64_t query_window_seconds() const { return std::int64_t{query_window_minutes} * 60; }
    std::int64_t verification_window_seconds() const {
        return std::int64_t{verification_window_minutes} * 60;
    }
};

/// Parses a flat `key = value` text file (`#` starts a comment). Unknown
/// keys and unparsable values raise ConfigError.
DetectorConfig load_config(const std::filesystem::path& path);

/// Applies `key = value` assignments to `config` in place.
void apply_config(DetectorConfig& config, const std::map<std::string, std::string>& values);

/// Reads key/value pairs without interpreting them.
std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);

}  // namespace geoevent
