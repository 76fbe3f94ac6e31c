#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace geoevent {

// ------------------------------------------------------------
// Errors
// ------------------------------------------------------------

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input record; the message names the offending field.
class ParseError : public Error { using Error::Error; };
/// Value outside its admissible range (coordinates, probabilities).
class RangeError : public Error { using Error::Error; };
/// Query windows pushed out of order.
class SequenceError : public Error { using Error::Error; };
/// Point that cannot be placed inside the spatial index region.
class PlacementError : public Error { using Error::Error; };
/// Malformed file contents (vector tables, models, images).
class LoadError : public Error { using Error::Error; };
class DimensionError : public Error { using Error::Error; };
class FitError : public Error { using Error::Error; };
class ShapeError : public Error { using Error::Error; };
class DivergenceError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class IoError : public Error { using Error::Error; };

// ------------------------------------------------------------
// Geometry
// ------------------------------------------------------------

struct Bounds {
    double lat_min = -90.0;
    double lat_max = 90.0;
    double lon_min = -180.0;
    double lon_max = 180.0;

    double lat_mid() const { return 0.5 * (lat_min + lat_max); }
    double lon_mid() const { return 0.5 * (lon_min + lon_max); }

    /// Closed containment test.
    bool contains(double lat, double lon) const {
        return lat >= lat_min && lat <= lat_max && lon >= lon_min && lon <= lon_max;
    }

    /// True when the two rectangles share interior area.
    bool overlaps(const Bounds& o) const {
        return lat_min < o.lat_max && o.lat_min < lat_max && lon_min < o.lon_max &&
               o.lon_min < lon_max;
    }

    bool operator==(const Bounds&) const = default;
};

// ------------------------------------------------------------
// Stream records
// ------------------------------------------------------------

using Timestamp = std::int64_t;  // seconds since epoch, UTC

struct Tweet {
    std::string id;
    Timestamp timestamp = 0;
    double lat = 0.0;
    double lon = 0.0;
    std::string text;
    std::vector<std::string> hashtags;  // lowercase, one entry per occurrence
    std::vector<std::string> mentions;  // lowercase, one entry per occurrence
    std::vector<std::string> image_refs;

    bool has_markers() const { return !hashtags.empty() || !mentions.empty(); }
};

/// A fixed-length batch of tweets, half-open in time: [start, end).
struct StreamWindow {
    std::int64_t window_id = 0;
    Timestamp start = 0;
    Timestamp end = 0;
    std::vector<Tweet> tweets;
};

/// FIFO of the latest `capacity` query windows.
class SlidingWindows {
public:
    explicit SlidingWindows(std::size_t capacity = 6);

    /// Appends `window`, evicting the oldest when full. Throws SequenceError
    /// unless window ids are consecutive.
    void advance(StreamWindow window);

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return windows_.size(); }
    bool empty() const { return windows_.empty(); }
    const std::deque<StreamWindow>& windows() const { return windows_; }
    const StreamWindow& newest() const { return windows_.back(); }

    /// All tweets across the held windows, in timestamp order.
    std::vector<Tweet> tweets() const;

private:
    std::size_t capacity_;
    std::deque<StreamWindow> windows_;
};

/// Value-returning form of SlidingWindows::advance.
SlidingWindows advance(SlidingWindows sliding, StreamWindow window);

// ------------------------------------------------------------
// Detection results
// ------------------------------------------------------------

struct KeywordCount {
    std::string keyword;
    int count = 0;
    bool operator==(const KeywordCount&) const = default;
};

struct EventCandidate {
    std::string cluster_id;
    int level = 0;
    Bounds cell;
    std::vector<Tweet> tweets;
    std::vector<KeywordCount> top_keywords;  // count desc, then keyword asc
    std::vector<double> centroid_vector;
};

struct REStats {
    std::vector<double> errors;
    double mean = 0.0;
    double median = 0.0;
    double variance = 0.0;
};

enum class Verdict { Accept, Reject };

struct CoherenceReport {
    double r_mean = 0.0;
    double r_median = 0.0;
    double r_variance = 0.0;
    REStats train;
    REStats test;
    Verdict verdict = Verdict::Accept;
    std::size_t images_used = 0;
    bool degenerate = false;   // zero training error, ratio undefined
};

struct DetectedEvent {
    EventCandidate candidate;
    std::int64_t detection_window_id = 0;
    std::optional<CoherenceReport> coherence;
    std::vector<std::string> merged_from;
    std::vector<std::string> provenance;  // stages passed, in order
};

}  // namespace geoevent
