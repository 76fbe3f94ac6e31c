#include "geoevent/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace geoevent {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const auto* first = value.data();
    const auto* last = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc{} || ptr != last) {
        throw ConfigError("invalid value for '" + key + "': " + value);
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    throw ConfigError("invalid boolean for '" + key + "': " + value);
}

std::vector<std::string> parse_list(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

void DetectorConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw ConfigError(what);
    };
    require(query_window_minutes > 0, "query_window_minutes must be positive");
    require(sliding_window_count > 0, "sliding_window_count must be positive");
    require(verification_window_minutes > 0, "verification_window_minutes must be positive");
    require(verification_rounds >= 0, "verification_rounds must be non-negative");
    require(region.lat_min < region.lat_max && region.lon_min < region.lon_max,
            "region must have positive extent");
    require(region.lat_min >= -90.0 && region.lat_max <= 90.0 && region.lon_min >= -180.0 &&
                region.lon_max <= 180.0,
            "region must lie within geographic bounds");
    require(quadtree_max_depth >= 0, "quadtree_max_depth must be non-negative");
    require(quadtree_split_threshold > 0, "quadtree_split_threshold must be positive");
    require(birch_branching >= 2 && birch_leaf_capacity >= 2,
            "BIRCH branching and leaf capacity must be at least 2");
    require(threshold_search_cap > 0, "threshold_search_cap must be positive");
    require(threshold_step_fraction > 0.0, "threshold_step_fraction must be positive");
    require(powerlaw_pvalue_threshold > 0.0 && powerlaw_pvalue_threshold <= 1.0,
            "powerlaw_pvalue_threshold must be in (0, 1]");
    require(bootstrap_iterations > 0, "bootstrap_iterations must be positive");
    require(powerlaw_min_tail > 1, "powerlaw_min_tail must exceed 1");
    require(top_keyword_count > 0, "top_keyword_count must be positive");
    require(coherence_threshold > 0.0, "coherence_threshold must be positive");
    require(crops_per_image > 0, "crops_per_image must be positive");
    require(crop_size > 0 && crop_size % 4 == 0, "crop_size must be a positive multiple of 4");
    require(min_images >= 2, "min_images must be at least 2");
    require(train_crop_fraction > 0.0 && train_crop_fraction < 1.0,
            "train_crop_fraction must be in (0, 1)");
    require(human_area_total_threshold > 0.0 && human_area_single_threshold > 0.0,
            "human area thresholds must be positive");
    require(ae_epochs >= 0, "ae_epochs must be non-negative");
    require(ae_learning_rate >= 0.0, "ae_learning_rate must be non-negative");
    require(ae_batch_size > 0, "ae_batch_size must be positive");
    require(threads > 0, "threads must be positive");
}

std::map<std::string, std::string> read_key_values(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path.string());
    std::map<std::string, std::string> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                              ": expected key = value");
        }
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

void apply_config(DetectorConfig& c, const std::map<std::string, std::string>& values) {
    using Setter = std::function<void(const std::string&, const std::string&)>;
    auto i32 = [](int& field) -> Setter {
        return [&field](const std::string& k, const std::string& v) {
            field = parse_number<int>(k, v);
        };
    };
    auto f64 = [](double& field) -> Setter {
        return [&field](const std::string& k, const std::string& v) {
            field = parse_number<double>(k, v);
        };
    };
    const std::map<std::string, Setter> setters{
        {"query_window_minutes", i32(c.query_window_minutes)},
        {"sliding_window_count", i32(c.sliding_window_count)},
        {"verification_window_minutes", i32(c.verification_window_minutes)},
        {"verification_rounds", i32(c.verification_rounds)},
        {"region.lat_min", f64(c.region.lat_min)},
        {"region.lat_max", f64(c.region.lat_max)},
        {"region.lon_min", f64(c.region.lon_min)},
        {"region.lon_max", f64(c.region.lon_max)},
        {"quadtree_max_depth", i32(c.quadtree_max_depth)},
        {"quadtree_split_threshold", i32(c.quadtree_split_threshold)},
        {"birch_branching", i32(c.birch_branching)},
        {"birch_leaf_capacity", i32(c.birch_leaf_capacity)},
        {"threshold_search_cap", i32(c.threshold_search_cap)},
        {"threshold_step_fraction", f64(c.threshold_step_fraction)},
        {"threshold_step_sample", i32(c.threshold_step_sample)},
        {"small_cluster_size", i32(c.small_cluster_size)},
        {"small_cluster_fraction", f64(c.small_cluster_fraction)},
        {"largest_cluster_fraction", f64(c.largest_cluster_fraction)},
        {"powerlaw_pvalue_threshold", f64(c.powerlaw_pvalue_threshold)},
        {"bootstrap_iterations", i32(c.bootstrap_iterations)},
        {"powerlaw_min_tail", i32(c.powerlaw_min_tail)},
        {"top_keyword_count", i32(c.top_keyword_count)},
        {"region_names",
         [&c](const std::string&, const std::string& v) { c.region_names = parse_list(v); }},
        {"image_stage",
         [&c](const std::string& k, const std::string& v) { c.image_stage = parse_bool(k, v); }},
        {"coherence_threshold", f64(c.coherence_threshold)},
        {"crops_per_image", i32(c.crops_per_image)},
        {"crop_size", i32(c.crop_size)},
        {"min_images", i32(c.min_images)},
        {"train_crop_fraction", f64(c.train_crop_fraction)},
        {"human_area_total_threshold", f64(c.human_area_total_threshold)},
        {"human_area_single_threshold", f64(c.human_area_single_threshold)},
        {"ae_epochs", i32(c.ae_epochs)},
        {"ae_learning_rate", f64(c.ae_learning_rate)},
        {"ae_batch_size", i32(c.ae_batch_size)},
        {"threads", i32(c.threads)},
        {"rng_seed",
         [&c](const std::string& k, const std::string& v) {
             c.rng_seed = parse_number<std::uint64_t>(k, v);
         }},
    };
    for (const auto& [key, value] : values) {
        auto it = setters.find(key);
        if (it == setters.end()) throw ConfigError("unknown configuration key: " + key);
        it->second(key, value);
    }
}

DetectorConfig load_config(const std::filesystem::path& path) {
    DetectorConfig config;
    apply_config(config, read_key_values(path));
    config.validate();
    return config;
}

}  // namespace geoevent
