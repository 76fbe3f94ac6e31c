#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "geoevent/embedding.hpp"

namespace geoevent {

/// BIRCH clustering feature: count, linear sum and sum of squared norms.
struct CFEntry {
    std::int64_t n = 0;
    Eigen::VectorXd ls;
    double ss = 0.0;

    static CFEntry of_point(const Eigen::VectorXd& x);

    Eigen::VectorXd centroid() const { return ls / static_cast<double>(n); }
    /// Mean squared distance of members to the centroid, floored at zero.
    double radius_squared() const;
    double radius() const;
};

/// Additive merge. Throws DimensionError on mismatched vectors and
/// std::invalid_argument when either side is empty.
CFEntry cf_merge(const CFEntry& a, const CFEntry& b);

struct ClusterAssignment {
    std::vector<int> labels;                 // per input vector
    std::vector<CFEntry> clusters;           // indexed by label
    std::vector<std::vector<int>> members;   // input indices per label, ascending

    std::size_t cluster_count() const { return clusters.size(); }
};

struct BirchShape {
    int branching = 50;       // children per non-leaf node
    int leaf_capacity = 50;   // entries per leaf node
};

/// Single-pass CF-tree insertion in input order. Each point descends to the
/// closest leaf entry (Euclidean distance between centroids) and joins it if
/// the merged radius stays within `threshold`, else it opens a new entry.
/// Leaf entries are the clusters; labels follow the order of each cluster's
/// first member. Throws DimensionError on mixed dimensions and
/// std::invalid_argument for a non-positive threshold.
ClusterAssignment birch_cluster(const std::vector<TweetVector>& vectors, double threshold,
                                const BirchShape& shape = {});

struct StopRule {
    int small_cluster_size = 10;
    double small_cluster_fraction = 0.05;
    double largest_cluster_fraction = 0.5;
    int max_steps = 100;
};

struct ThresholdSearch {
    double threshold = 0.0;
    int steps = 0;
    bool converged = false;  // false: step cap reached, assignment is the last one tried
    ClusterAssignment assignment;
};

/// Clusters at thresholds step, 2 step, ... and stops at the first one where
/// items in clusters smaller than `small_cluster_size` make up less than
/// `small_cluster_fraction` of all items, or the largest cluster holds more
/// than `largest_cluster_fraction` of them.
ThresholdSearch adaptive_threshold(const std::vector<TweetVector>& vectors, double step,
                                   const StopRule& rule = {}, const BirchShape& shape = {});

/// `fraction` times the median pairwise distance of a seeded sample of at
/// most `sample` vectors. Falls back to a tiny positive step for identical
/// inputs.
double default_step(const std::vector<TweetVector>& vectors, double fraction, int sample,
                    std::uint64_t seed);

/// CSV with header "tweet_id,label".
void write_assignment_csv(std::ostream& out, const std::vector<TweetVector>& vectors,
                          const ClusterAssignment& assignment);

}  // namespace geoevent
