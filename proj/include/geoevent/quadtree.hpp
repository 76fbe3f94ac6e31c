#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "geoevent/types.hpp"

namespace geoevent {

/// Node of the point-region quad-tree. Children are stored as a block of four
/// consecutive nodes ordered (south-west, south-east, north-west, north-east).
/// Quadrant routing is half-open: a point on a midline goes to the upper half.
struct QuadTreeNode {
    Bounds bounds;
    int depth = 0;
    int first_child = -1;          // index of the SW child, -1 for a leaf
    std::vector<int> points;       // indices into QuadTree::points(), leaves only
    bool degenerate = false;       // over-full leaf whose points all coincide

    bool is_leaf() const { return first_child < 0; }
};

/// A group of candidate tweets sharing one cell at a given level.
struct CellGroup {
    int node = 0;
    Bounds cell;
    int depth = 0;  // < requested level when the path ended early
    std::vector<Tweet> tweets;
};

class QuadTree {
public:
    struct Point {
        std::string id;
        double lat = 0.0;
        double lon = 0.0;
    };

    /// Inserts `tweets` in order. A leaf that would exceed `split_threshold`
    /// points splits into four and redistributes them, recursively, unless it
    /// sits at `max_depth` or all of its points coincide. Throws
    /// PlacementError for a tweet outside `region`.
    static QuadTree build(const std::vector<Tweet>& tweets, const Bounds& region, int max_depth,
                          int split_threshold);

    const Bounds& region() const { return nodes_.front().bounds; }
    int max_depth() const { return max_depth_; }
    int split_threshold() const { return split_threshold_; }
    const std::vector<QuadTreeNode>& nodes() const { return nodes_; }
    const QuadTreeNode& root() const { return nodes_.front(); }
    const std::vector<Point>& points() const { return points_; }

    /// Deepest node depth present in the tree.
    int depth() const;

    std::vector<int> leaves() const;

    /// Node containing (lat, lon) at `level`, or the deepest node on the
    /// path when the path ends earlier. Throws PlacementError outside the
    /// region.
    int node_at(double lat, double lon, int level) const;
    Bounds locate(const Tweet& tweet, int level) const;

    /// Groups `tweets` by their level-`level` cell, in order of first
    /// appearance. Subsets are disjoint and cover the input.
    std::vector<CellGroup> partition_by_level(const std::vector<Tweet>& tweets, int level) const;

    /// Indented text listing: one line per node with depth, bounds and count.
    void dump(std::ostream& out) const;

private:
    QuadTree(const Bounds& region, int max_depth, int split_threshold);

    void insert(int point);
    void split(int node);
    int child_for(const QuadTreeNode& node, double lat, double lon) const;

    int max_depth_;
    int split_threshold_;
    std::vector<QuadTreeNode> nodes_;
    std::vector<Point> points_;
};

}  // namespace geoevent
