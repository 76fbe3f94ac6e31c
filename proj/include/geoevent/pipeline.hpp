#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "geoevent/birch.hpp"
#include "geoevent/coherence.hpp"
#include "geoevent/config.hpp"
#include "geoevent/embedding.hpp"
#include "geoevent/image.hpp"
#include "geoevent/quadtree.hpp"
#include "geoevent/types.hpp"

namespace geoevent {

/// Keywords ignored by pruning and keyword statistics: the stop-word list
/// plus the configured region names.
std::vector<std::string> excluded_keywords(const DetectorConfig& config);

/// Top `x` hashtags/mentions by occurrence count (ties: lexicographic),
/// skipping `excluded`.
std::vector<KeywordCount> top_keywords(const std::vector<Tweet>& tweets, int x,
                                       const std::vector<std::string>& excluded);

struct PruneReport {
    std::vector<std::string> removed_tweet_ids;
    std::vector<KeywordCount> top_keywords;
    double containment_fraction = 0.0;
    bool kept = false;
};

struct PruneResult {
    PruneReport report;
    std::optional<EventCandidate> candidate;  // present iff kept
};

/// Removes tweets whose every hashtag/mention occurs once in the cluster,
/// appears in a single tweet, or is excluded; then keeps the candidate iff
/// at least half of the remaining tweets carry one of the top keywords.
PruneResult prune(const EventCandidate& candidate, const std::vector<std::string>& excluded,
                  const DetectorConfig& config);

enum class EmbedMode { Keywords, Text };

/// Receives the quad-tree and keyword clustering built for a query window.
using ClusteringObserver =
    std::function<void(const std::string& prefix, const QuadTree& tree,
                       const std::vector<TweetVector>& vectors, const ClusterAssignment& assignment)>;

struct CandidateSearch {
    std::vector<EventCandidate> candidates;  // passed the power-law test
    std::vector<std::string> fit_notes;      // one per candidate, same order
    std::size_t clusters = 0;
    double threshold = 0.0;
    bool threshold_converged = false;
};

/// Embeds `tweets`, clusters them with the adaptive BIRCH search and runs
/// power-law detection on every (cluster, quad-tree cell) group at every
/// level. Only groups holding a tweet with timestamp >= `newest_start`
/// qualify. Groups whose path ended above the level are skipped there.
/// Candidate ids are "<prefix>.c<cluster>.L<level>.n<node>".
CandidateSearch find_candidates(const std::vector<Tweet>& tweets, EmbedMode mode,
                                const DetectorConfig& config, const VectorTable& table,
                                Timestamp newest_start, const std::string& prefix,
                                const ClusteringObserver* observer = nullptr);

/// One verification round: re-clusters `base` plus `verification` tweets by
/// text embedding and keeps each candidate that shares more than half of its
/// tweets with some group passing the power-law test.
std::vector<EventCandidate> verify(const std::vector<EventCandidate>& candidates,
                                   const std::vector<Tweet>& base,
                                   const std::vector<Tweet>& verification,
                                   const VectorTable& table, const DetectorConfig& config,
                                   const std::string& prefix);

/// Union-find merge of `events` with `history`. Two events merge when their
/// tweet sets overlap by more than half of the smaller one, or when their
/// cells overlap, they share a top keyword and their windows are equal or
/// adjacent. Each group keeps its deepest-level member (then earliest window,
/// then smallest id) as representative; merged_from collects all ids.
std::vector<DetectedEvent> merge_duplicates(const std::vector<DetectedEvent>& events,
                                            const std::vector<DetectedEvent>& history);

/// Thread-safe memo of image analyses keyed by the eligible image set.
class ImageAnalysisCache {
public:
    std::optional<ImageAnalysis> find(const std::string& key) const;
    void store(const std::string& key, const ImageAnalysis& analysis);
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::map<std::string, ImageAnalysis> entries_;
};

struct DetectionContext {
    const DetectorConfig& config;
    const VectorTable& table;
    const ImageSource* images = nullptr;  // null disables the image stage
    const AnnotationIndex* annotations = nullptr;
    ImageAnalysisCache* cache = nullptr;
    const ClusteringObserver* observer = nullptr;  // debug dumps
};

struct WindowStats {
    std::int64_t window_id = 0;
    std::size_t tweets = 0;
    std::size_t clusters = 0;
    std::size_t candidates = 0;
    std::size_t verified = 0;
    std::size_t pruned_kept = 0;
    std::size_t image_rejected = 0;
    std::size_t events = 0;
};

/// Algorithm for one query window (the newest in `sliding`): quad-tree,
/// keyword embedding, adaptive BIRCH, per-level power-law detection,
/// verification rounds over consecutive windows taken from
/// `verification_feed`, pruning, image gate and duplicate merging.
std::vector<DetectedEvent> detect(const SlidingWindows& sliding,
                                  const std::vector<Tweet>& verification_feed,
                                  const DetectionContext& context, WindowStats* stats = nullptr);

struct StreamResult {
    std::vector<DetectedEvent> events;
    std::vector<WindowStats> windows;
};

/// Runs detect over consecutive query windows of a timestamp-sorted stream,
/// starting at the window containing its first tweet, and merges events
/// across windows.
StreamResult run_stream(const std::vector<Tweet>& stream, const DetectionContext& context);

}  // namespace geoevent
