#include "geoevent/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "geoevent/log.hpp"
#include "geoevent/powerlaw.hpp"
#include "geoevent/seed.hpp"
#include "geoevent/text.hpp"
#include "geoevent/tweet_io.hpp"

namespace geoevent {

std::vector<std::string> excluded_keywords(const DetectorConfig& config) {
    std::vector<std::string> out(stop_words().begin(), stop_words().end());
    for (const auto& name : config.region_names) out.push_back(to_lower(name));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace {

bool is_excluded(const std::vector<std::string>& sorted_excluded, const std::string& k) {
    return std::binary_search(sorted_excluded.begin(), sorted_excluded.end(), k);
}

std::vector<std::string> sorted_copy(std::vector<std::string> v) {
    std::sort(v.begin(), v.end());
    return v;
}

std::vector<std::string> markers(const Tweet& t) {
    std::vector<std::string> out = t.hashtags;
    out.insert(out.end(), t.mentions.begin(), t.mentions.end());
    return out;
}

std::string fixed(double v, int digits) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(digits);
    s << v;
    return s.str();
}

}  // namespace

std::vector<KeywordCount> top_keywords(const std::vector<Tweet>& tweets, int x,
                                       const std::vector<std::string>& excluded) {
    const auto ex = sorted_copy(excluded);
    std::map<std::string, int> freq;
    for (const auto& t : tweets) {
        for (auto& m : markers(t)) {
            if (!is_excluded(ex, m)) ++freq[m];
        }
    }
    std::vector<KeywordCount> all;
    for (const auto& [k, c] : freq) all.push_back({k, c});
    std::stable_sort(all.begin(), all.end(),
                     [](const KeywordCount& a, const KeywordCount& b) { return a.count > b.count; });
    if (static_cast<int>(all.size()) > x) all.resize(static_cast<std::size_t>(std::max(x, 0)));
    return all;
}

PruneResult prune(const EventCandidate& candidate, const std::vector<std::string>& excluded,
                  const DetectorConfig& config) {
    const auto ex = sorted_copy(excluded);
    std::map<std::string, int> occurrences;
    std::map<std::string, int> tweet_count;
    for (const auto& t : candidate.tweets) {
        const auto ms = markers(t);
        for (const auto& m : ms) ++occurrences[m];
        for (const auto& m : std::set<std::string>(ms.begin(), ms.end())) ++tweet_count[m];
    }

    PruneResult out;
    EventCandidate pruned = candidate;
    pruned.tweets.clear();
    for (const auto& t : candidate.tweets) {
        const auto ms = markers(t);
        const bool removable =
            !ms.empty() && std::all_of(ms.begin(), ms.end(), [&](const std::string& m) {
                return occurrences[m] == 1 || tweet_count[m] == 1 || is_excluded(ex, m);
            });
        if (removable) {
            out.report.removed_tweet_ids.push_back(t.id);
        } else {
            pruned.tweets.push_back(t);
        }
    }

    out.report.top_keywords = top_keywords(pruned.tweets, config.top_keyword_count, ex);
    std::size_t covered = 0;
    for (const auto& t : pruned.tweets) {
        const auto ms = markers(t);
        const bool hit = std::any_of(out.report.top_keywords.begin(), out.report.top_keywords.end(),
                                     [&](const KeywordCount& k) {
                                         return std::find(ms.begin(), ms.end(), k.keyword) != ms.end();
                                     });
        if (hit) ++covered;
    }
    out.report.containment_fraction =
        pruned.tweets.empty() ? 0.0
                              : static_cast<double>(covered) / static_cast<double>(pruned.tweets.size());
    out.report.kept = !pruned.tweets.empty() && 2 * covered >= pruned.tweets.size();
    if (out.report.kept) {
        pruned.top_keywords = out.report.top_keywords;
        out.candidate = std::move(pruned);
    }
    return out;
}

namespace {

struct Clustering {
    std::vector<Tweet> tweets;  // in-region input, timestamp order
    std::optional<QuadTree> tree;
    std::vector<Eigen::VectorXd> vectors;             // per entry of `tweets`, empty if none
    std::vector<std::vector<std::size_t>> clusters;   // indices into `tweets`
    double threshold = 0.0;
    bool converged = false;
    std::vector<TweetVector> embedded;
    ClusterAssignment assignment;
};

Clustering cluster_tweets(const std::vector<Tweet>& input, EmbedMode mode,
                          const DetectorConfig& config, const VectorTable& table,
                          std::uint64_t seed) {
    Clustering c;
    std::size_t outside = 0;
    for (const auto& t : input) {
        if (config.region.contains(t.lat, t.lon)) {
            c.tweets.push_back(t);
        } else {
            ++outside;
        }
    }
    if (outside > 0) warn(std::to_string(outside) + " tweets outside the region ignored");
    c.tree = QuadTree::build(c.tweets, config.region, config.quadtree_max_depth,
                             config.quadtree_split_threshold);

    std::vector<TweetVector> vectors;
    std::vector<std::size_t> owner;
    c.vectors.resize(c.tweets.size());
    for (std::size_t i = 0; i < c.tweets.size(); ++i) {
        const auto& t = c.tweets[i];
        auto v = mode == EmbedMode::Keywords ? embed_keywords(extract_keywords(t.text), table)
                                             : embed_text(t.text, table);
        if (!v) continue;
        v->tweet_id = t.id;
        c.vectors[i] = v->vector;
        vectors.push_back(std::move(*v));
        owner.push_back(i);
    }
    c.embedded = vectors;
    if (vectors.empty()) return c;

    const double step = default_step(vectors, config.threshold_step_fraction,
                                     config.threshold_step_sample, derive_seed(seed, 0));
    StopRule rule;
    rule.small_cluster_size = config.small_cluster_size;
    rule.small_cluster_fraction = config.small_cluster_fraction;
    rule.largest_cluster_fraction = config.largest_cluster_fraction;
    rule.max_steps = config.threshold_search_cap;
    const BirchShape shape{config.birch_branching, config.birch_leaf_capacity};
    const ThresholdSearch search = adaptive_threshold(vectors, step, rule, shape);
    if (!search.converged) {
        warn("threshold search reached its cap of " + std::to_string(rule.max_steps) +
             " steps; using the last assignment");
    }
    c.threshold = search.threshold;
    c.converged = search.converged;
    c.assignment = search.assignment;
    for (const auto& members : search.assignment.members) {
        std::vector<std::size_t> idx;
        idx.reserve(members.size());
        for (int m : members) idx.push_back(owner[static_cast<std::size_t>(m)]);
        c.clusters.push_back(std::move(idx));
    }
    return c;
}

std::size_t distinct_keywords(const std::vector<Tweet>& tweets, const std::vector<std::string>& ex) {
    std::set<std::string> seen;
    for (const auto& t : tweets) {
        for (auto& k : extract_keywords(t.text)) {
            if (std::find(ex.begin(), ex.end(), k) == ex.end()) seen.insert(std::move(k));
        }
    }
    return seen.size();
}

// Visits every (cluster, level, cell) group whose path reaches the level.
template <typename Visit>
void for_each_group(const Clustering& c, const DetectorConfig& config, Visit&& visit) {
    if (!c.tree) return;
    const int max_level = c.tree->depth();
    for (std::size_t k = 0; k < c.clusters.size(); ++k) {
        std::vector<Tweet> members;
        members.reserve(c.clusters[k].size());
        for (std::size_t i : c.clusters[k]) members.push_back(c.tweets[i]);
        // Subsets never have more distinct keywords than the whole cluster.
        if (distinct_keywords(members, config.region_names) <
            static_cast<std::size_t>(config.powerlaw_min_tail)) {
            continue;
        }
        for (int level = 0; level <= max_level; ++level) {
            bool reached = false;
            for (auto& g : c.tree->partition_by_level(members, level)) {
                if (g.depth != level) continue;
                reached = true;
                visit(k, level, g);
            }
            if (!reached) break;
        }
    }
}

std::string group_id(const std::string& prefix, std::size_t cluster, int level, int node) {
    return prefix + ".c" + std::to_string(cluster) + ".L" + std::to_string(level) + ".n" +
           std::to_string(node);
}

EventCandidate make_candidate(const Clustering& c, const std::string& id, int level,
                              const CellGroup& g, const DetectorConfig& config,
                              const std::vector<std::string>& excluded) {
    EventCandidate cand;
    cand.cluster_id = id;
    cand.level = level;
    cand.cell = g.cell;
    cand.tweets = g.tweets;
    cand.top_keywords = top_keywords(cand.tweets, config.top_keyword_count, excluded);
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < c.tweets.size(); ++i) index.emplace(c.tweets[i].id, i);
    Eigen::VectorXd sum;
    int n = 0;
    for (const auto& t : cand.tweets) {
        const auto& v = c.vectors[index.at(t.id)];
        if (v.size() == 0) continue;
        if (n == 0) sum = Eigen::VectorXd::Zero(v.size());
        sum += v;
        ++n;
    }
    if (n > 0) {
        sum /= n;
        cand.centroid_vector.assign(sum.data(), sum.data() + sum.size());
    }
    return cand;
}

std::string fit_note(const PowerLawDecision& d) {
    if (!d.fit) return "powerlaw: " + d.reason;
    return "powerlaw: alpha=" + fixed(d.fit->alpha, 3) + " xmin=" + std::to_string(d.fit->xmin) +
           " ks=" + fixed(d.fit->ks_stat, 4) + " p=" + fixed(d.fit->p_value, 2);
}

}  // namespace

CandidateSearch find_candidates(const std::vector<Tweet>& tweets, EmbedMode mode,
                                const DetectorConfig& config, const VectorTable& table,
                                Timestamp newest_start, const std::string& prefix,
                                const ClusteringObserver* observer) {
    const std::uint64_t seed = derive_seed(config.rng_seed, fnv1a(prefix));
    const Clustering c = cluster_tweets(tweets, mode, config, table, seed);
    if (observer && *observer && c.tree) (*observer)(prefix, *c.tree, c.embedded, c.assignment);
    const auto excluded = excluded_keywords(config);
    CandidateSearch out;
    out.clusters = c.clusters.size();
    out.threshold = c.threshold;
    out.threshold_converged = c.converged;
    for_each_group(c, config, [&](std::size_t k, int level, const CellGroup& g) {
        const bool fresh = std::any_of(g.tweets.begin(), g.tweets.end(),
                                       [&](const Tweet& t) { return t.timestamp >= newest_start; });
        if (!fresh) return;
        const std::string id = group_id(prefix, k, level, g.node);
        EventCandidate cand = make_candidate(c, id, level, g, config, excluded);
        const PowerLawDecision d = passes_powerlaw(cand, config, derive_seed(seed, fnv1a(id)));
        if (!d.passes) return;
        out.candidates.push_back(std::move(cand));
        out.fit_notes.push_back(fit_note(d));
    });
    return out;
}

std::vector<EventCandidate> verify(const std::vector<EventCandidate>& candidates,
                                   const std::vector<Tweet>& base,
                                   const std::vector<Tweet>& verification,
                                   const VectorTable& table, const DetectorConfig& config,
                                   const std::string& prefix) {
    if (candidates.empty()) return {};
    std::vector<Tweet> combined = base;
    std::unordered_set<std::string> seen;
    for (const auto& t : combined) seen.insert(t.id);
    for (const auto& t : verification) {
        if (seen.insert(t.id).second) combined.push_back(t);
    }
    std::stable_sort(combined.begin(), combined.end(),
                     [](const Tweet& a, const Tweet& b) { return a.timestamp < b.timestamp; });

    const std::uint64_t seed = derive_seed(config.rng_seed, fnv1a(prefix));
    const Clustering c = cluster_tweets(combined, EmbedMode::Text, config, table, seed);

    std::vector<std::unordered_set<std::string>> ids(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        for (const auto& t : candidates[i].tweets) ids[i].insert(t.id);
    }
    std::vector<char> kept(candidates.size(), 0);
    for_each_group(c, config, [&](std::size_t k, int level, const CellGroup& g) {
        std::optional<bool> passes;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (kept[i]) continue;
            std::size_t shared = 0;
            for (const auto& t : g.tweets) shared += ids[i].count(t.id);
            if (2 * shared <= ids[i].size()) continue;
            if (!passes) {
                const std::string id = group_id(prefix, k, level, g.node);
                EventCandidate group;
                group.cluster_id = id;
                group.level = level;
                group.cell = g.cell;
                group.tweets = g.tweets;
                passes = passes_powerlaw(group, config, derive_seed(seed, fnv1a(id))).passes;
            }
            if (*passes) kept[i] = 1;
        }
    });

    std::vector<EventCandidate> out;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (kept[i]) out.push_back(candidates[i]);
    }
    return out;
}

// ------------------------------------------------------------
// Duplicate merging
// ------------------------------------------------------------

namespace {

struct DisjointSets {
    std::vector<std::size_t> parent;
    explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

bool same_event(const DetectedEvent& a, const std::vector<std::string>& ids_a,
                const DetectedEvent& b, const std::vector<std::string>& ids_b) {
    std::size_t shared = 0;
    auto i = ids_a.begin(), j = ids_b.begin();
    while (i != ids_a.end() && j != ids_b.end()) {
        if (*i < *j) {
            ++i;
        } else if (*j < *i) {
            ++j;
        } else {
            ++shared;
            ++i;
            ++j;
        }
    }
    const std::size_t smaller = std::min(ids_a.size(), ids_b.size());
    if (smaller > 0 && 2 * shared > smaller) return true;

    if (!a.candidate.cell.overlaps(b.candidate.cell)) return false;
    if (std::llabs(a.detection_window_id - b.detection_window_id) > 1) return false;
    for (const auto& ka : a.candidate.top_keywords) {
        for (const auto& kb : b.candidate.top_keywords) {
            if (ka.keyword == kb.keyword) return true;
        }
    }
    return false;
}

bool better_representative(const DetectedEvent& a, const DetectedEvent& b) {
    if (a.candidate.level != b.candidate.level) return a.candidate.level > b.candidate.level;
    if (a.detection_window_id != b.detection_window_id) {
        return a.detection_window_id < b.detection_window_id;
    }
    return a.candidate.cluster_id < b.candidate.cluster_id;
}

}  // namespace

std::vector<DetectedEvent> merge_duplicates(const std::vector<DetectedEvent>& events,
                                            const std::vector<DetectedEvent>& history) {
    std::vector<const DetectedEvent*> all;
    for (const auto& e : history) all.push_back(&e);
    for (const auto& e : events) all.push_back(&e);

    std::vector<std::vector<std::string>> ids(all.size());
    for (std::size_t i = 0; i < all.size(); ++i) {
        for (const auto& t : all[i]->candidate.tweets) ids[i].push_back(t.id);
        std::sort(ids[i].begin(), ids[i].end());
        ids[i].erase(std::unique(ids[i].begin(), ids[i].end()), ids[i].end());
    }
    DisjointSets sets(all.size());
    for (std::size_t i = 0; i < all.size(); ++i) {
        for (std::size_t j = i + 1; j < all.size(); ++j) {
            if (sets.find(i) == sets.find(j)) continue;
            if (same_event(*all[i], ids[i], *all[j], ids[j])) sets.unite(i, j);
        }
    }

    std::vector<DetectedEvent> out;
    std::map<std::size_t, std::size_t> slot;  // root -> index in out
    for (std::size_t i = 0; i < all.size(); ++i) {
        const std::size_t root = sets.find(i);
        auto [it, fresh] = slot.emplace(root, out.size());
        if (fresh) {
            out.push_back(*all[i]);
            continue;
        }
        DetectedEvent& group = out[it->second];
        std::vector<std::string> from = group.merged_from;
        from.insert(from.end(), all[i]->merged_from.begin(), all[i]->merged_from.end());
        if (better_representative(*all[i], group)) group = *all[i];
        std::sort(from.begin(), from.end());
        from.erase(std::unique(from.begin(), from.end()), from.end());
        group.merged_from = std::move(from);
    }
    for (auto& e : out) {
        std::sort(e.merged_from.begin(), e.merged_from.end());
        e.merged_from.erase(std::unique(e.merged_from.begin(), e.merged_from.end()),
                            e.merged_from.end());
    }
    return out;
}

// ------------------------------------------------------------
// Image gate and window driver
// ------------------------------------------------------------

std::optional<ImageAnalysis> ImageAnalysisCache::find(const std::string& key) const {
    std::lock_guard lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) return it->second;
    return std::nullopt;
}

void ImageAnalysisCache::store(const std::string& key, const ImageAnalysis& analysis) {
    std::lock_guard lock(mutex_);
    entries_.emplace(key, analysis);
}

std::size_t ImageAnalysisCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

namespace {

ImageAnalysis gate_candidate(const EventCandidate& candidate, const DetectionContext& ctx) {
    static const AnnotationIndex kNoAnnotations;
    const AnnotationIndex& annotations = ctx.annotations ? *ctx.annotations : kNoAnnotations;
    const auto selected = select_images(candidate, annotations, ctx.config);
    if (static_cast<int>(selected.size()) < ctx.config.min_images) {
        ImageAnalysis out;
        out.eligible_images = selected;
        out.note = "fewer than " + std::to_string(ctx.config.min_images) + " eligible images";
        return out;
    }
    auto sorted = selected;
    std::sort(sorted.begin(), sorted.end());
    std::string key;
    for (const auto& id : sorted) key += id + '\n';
    if (ctx.cache) {
        if (auto hit = ctx.cache->find(key)) return *hit;
    }
    ImageAnalysis out;
    try {
        out = analyze_images(selected, *ctx.images, ctx.config);
    } catch (const std::exception& e) {
        out = ImageAnalysis{};
        out.status = ImageStageStatus::Degraded;
        out.eligible_images = selected;
        out.note = e.what();
        warn("image analysis failed for " + candidate.cluster_id + ": " + e.what());
    }
    if (ctx.cache) ctx.cache->store(key, out);
    return out;
}

std::vector<ImageAnalysis> gate_all(const std::vector<EventCandidate>& candidates,
                                    const DetectionContext& ctx) {
    std::vector<ImageAnalysis> out(candidates.size());
    const int workers =
        std::clamp(ctx.config.threads, 1, std::max(1, static_cast<int>(candidates.size())));
    if (workers == 1) {
        for (std::size_t i = 0; i < candidates.size(); ++i) out[i] = gate_candidate(candidates[i], ctx);
        return out;
    }
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = static_cast<std::size_t>(w); i < candidates.size();
                 i += static_cast<std::size_t>(workers)) {
                out[i] = gate_candidate(candidates[i], ctx);
            }
        });
    }
    for (auto& t : pool) t.join();
    return out;
}

}  // namespace

std::vector<DetectedEvent> detect(const SlidingWindows& sliding,
                                  const std::vector<Tweet>& verification_feed,
                                  const DetectionContext& ctx, WindowStats* stats) {
    const DetectorConfig& config = ctx.config;
    if (ctx.table.size() == 0) throw ConfigError("detection needs a non-empty vector table");
    WindowStats local;
    WindowStats& st = stats ? *stats : local;
    st = WindowStats{};
    if (sliding.empty()) return {};

    const StreamWindow& window = sliding.newest();
    st.window_id = window.window_id;
    const std::vector<Tweet> base = sliding.tweets();
    st.tweets = base.size();
    const std::string prefix = "w" + std::to_string(window.window_id);

    CandidateSearch search =
        find_candidates(base, EmbedMode::Keywords, config, ctx.table, window.start, prefix,
                        ctx.observer);
    st.clusters = search.clusters;
    st.candidates = search.candidates.size();
    std::map<std::string, std::string> fit_notes;
    for (std::size_t i = 0; i < search.candidates.size(); ++i) {
        fit_notes[search.candidates[i].cluster_id] = search.fit_notes[i];
    }

    std::vector<EventCandidate> survivors = std::move(search.candidates);
    const Timestamp v_len = config.verification_window_seconds();
    for (int round = 1; round <= config.verification_rounds && !survivors.empty(); ++round) {
        const Timestamp start = window.end + (round - 1) * v_len;
        const auto fresh = tweets_between(verification_feed, start, start + v_len);
        survivors = verify(survivors, base, fresh, ctx.table, config,
                           prefix + ".v" + std::to_string(round));
    }
    st.verified = survivors.size();

    const auto excluded = excluded_keywords(config);
    std::vector<EventCandidate> kept;
    std::vector<std::string> prune_notes;
    for (const auto& cand : survivors) {
        PruneResult r = prune(cand, excluded, config);
        if (!r.candidate) continue;
        prune_notes.push_back("prune: removed=" + std::to_string(r.report.removed_tweet_ids.size()) +
                              " containment=" + fixed(r.report.containment_fraction, 3));
        kept.push_back(std::move(*r.candidate));
    }
    st.pruned_kept = kept.size();

    const bool gate = config.image_stage && ctx.images != nullptr;
    std::vector<ImageAnalysis> analyses;
    if (gate) analyses = gate_all(kept, ctx);

    std::vector<DetectedEvent> events;
    for (std::size_t i = 0; i < kept.size(); ++i) {
        DetectedEvent e;
        e.candidate = kept[i];
        e.detection_window_id = window.window_id;
        e.merged_from = {kept[i].cluster_id};
        e.provenance.push_back(fit_notes[kept[i].cluster_id]);
        for (int round = 1; round <= config.verification_rounds; ++round) {
            e.provenance.push_back("verify: round " + std::to_string(round));
        }
        e.provenance.push_back(prune_notes[i]);
        if (gate) {
            const ImageAnalysis& a = analyses[i];
            std::string note = std::string("image: ") + to_string(a.status);
            if (a.report) note += " r_mean=" + fixed(a.report->r_mean, 4);
            if (!a.note.empty()) note += " (" + a.note + ")";
            if (!a.keeps_candidate()) {
                ++st.image_rejected;
                continue;
            }
            e.provenance.push_back(note);
            if (a.report) e.coherence = a.report;
        } else {
            e.provenance.push_back("image: disabled");
        }
        events.push_back(std::move(e));
    }
    events = merge_duplicates(events, {});
    st.events = events.size();
    return events;
}

StreamResult run_stream(const std::vector<Tweet>& stream, const DetectionContext& ctx) {
    StreamResult out;
    if (stream.empty()) return out;
    const Timestamp length = ctx.config.query_window_seconds();
    const Timestamp first = stream.front().timestamp;
    const Timestamp origin = (first >= 0 ? first / length : (first - length + 1) / length) * length;
    SlidingWindows sliding(static_cast<std::size_t>(ctx.config.sliding_window_count));
    const Timestamp lookahead = ctx.config.verification_window_seconds() * ctx.config.verification_rounds;
    for (auto& window : split_windows(stream, origin, length)) {
        const Timestamp end = window.end;
        sliding.advance(std::move(window));
        const auto feed = tweets_between(stream, end, end + lookahead);
        WindowStats st;
        auto events = detect(sliding, feed, ctx, &st);
        out.events = merge_duplicates(events, out.events);
        out.windows.push_back(st);
    }
    return out;
}

}  // namespace geoevent
