#include "geoevent/quadtree.hpp"

#include <algorithm>
#include <functional>
#include <ostream>
#include <unordered_map>

namespace geoevent {

QuadTree::QuadTree(const Bounds& region, int max_depth, int split_threshold)
    : max_depth_(max_depth), split_threshold_(split_threshold) {
    if (max_depth < 0) throw RangeError("quadtree max depth must be non-negative");
    if (split_threshold < 1) throw RangeError("quadtree split threshold must be positive");
    if (!(region.lat_min < region.lat_max) || !(region.lon_min < region.lon_max)) {
        throw RangeError("quadtree region must have positive extent");
    }
    QuadTreeNode root;
    root.bounds = region;
    nodes_.push_back(std::move(root));
}

QuadTree QuadTree::build(const std::vector<Tweet>& tweets, const Bounds& region, int max_depth,
                         int split_threshold) {
    QuadTree tree(region, max_depth, split_threshold);
    tree.points_.reserve(tweets.size());
    for (const auto& t : tweets) {
        if (!region.contains(t.lat, t.lon)) {
            throw PlacementError("tweet " + t.id + " at (" + std::to_string(t.lat) + ", " +
                                 std::to_string(t.lon) + ") lies outside the region");
        }
        tree.points_.push_back({t.id, t.lat, t.lon});
        tree.insert(static_cast<int>(tree.points_.size()) - 1);
    }
    return tree;
}

int QuadTree::child_for(const QuadTreeNode& node, double lat, double lon) const {
    const int north = lat >= node.bounds.lat_mid() ? 1 : 0;
    const int east = lon >= node.bounds.lon_mid() ? 1 : 0;
    return node.first_child + 2 * north + east;
}

void QuadTree::insert(int point) {
    const Point& p = points_[static_cast<std::size_t>(point)];
    int n = 0;
    while (!nodes_[static_cast<std::size_t>(n)].is_leaf()) {
        n = child_for(nodes_[static_cast<std::size_t>(n)], p.lat, p.lon);
    }
    nodes_[static_cast<std::size_t>(n)].points.push_back(point);
    split(n);
}

void QuadTree::split(int index) {
    auto& node = nodes_[static_cast<std::size_t>(index)];
    if (static_cast<int>(node.points.size()) <= split_threshold_ || node.depth >= max_depth_) {
        return;
    }
    const Point& first = points_[static_cast<std::size_t>(node.points.front())];
    const bool coincident = std::all_of(node.points.begin(), node.points.end(), [&](int i) {
        const Point& q = points_[static_cast<std::size_t>(i)];
        return q.lat == first.lat && q.lon == first.lon;
    });
    if (coincident) {
        node.degenerate = true;
        return;
    }
    node.degenerate = false;

    const Bounds b = node.bounds;
    const int depth = node.depth + 1;
    const double lat_mid = b.lat_mid(), lon_mid = b.lon_mid();
    const Bounds quads[4] = {
        {b.lat_min, lat_mid, b.lon_min, lon_mid},
        {b.lat_min, lat_mid, lon_mid, b.lon_max},
        {lat_mid, b.lat_max, b.lon_min, lon_mid},
        {lat_mid, b.lat_max, lon_mid, b.lon_max},
    };
    std::vector<int> moving = std::move(node.points);
    node.points.clear();
    const int first_child = static_cast<int>(nodes_.size());
    node.first_child = first_child;  // `node` is invalidated by the push_backs below
    for (const Bounds& q : quads) {
        QuadTreeNode child;
        child.bounds = q;
        child.depth = depth;
        nodes_.push_back(std::move(child));
    }
    const QuadTreeNode& parent = nodes_[static_cast<std::size_t>(index)];
    for (int i : moving) {
        const Point& q = points_[static_cast<std::size_t>(i)];
        nodes_[static_cast<std::size_t>(child_for(parent, q.lat, q.lon))].points.push_back(i);
    }
    for (int c = 0; c < 4; ++c) split(first_child + c);
}

int QuadTree::depth() const {
    int d = 0;
    for (const auto& n : nodes_) d = std::max(d, n.depth);
    return d;
}

std::vector<int> QuadTree::leaves() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].is_leaf()) out.push_back(static_cast<int>(i));
    }
    return out;
}

int QuadTree::node_at(double lat, double lon, int level) const {
    if (!region().contains(lat, lon)) {
        throw PlacementError("point (" + std::to_string(lat) + ", " + std::to_string(lon) +
                             ") lies outside the region");
    }
    int n = 0;
    while (nodes_[static_cast<std::size_t>(n)].depth < level &&
           !nodes_[static_cast<std::size_t>(n)].is_leaf()) {
        n = child_for(nodes_[static_cast<std::size_t>(n)], lat, lon);
    }
    return n;
}

Bounds QuadTree::locate(const Tweet& tweet, int level) const {
    try {
        return nodes_[static_cast<std::size_t>(node_at(tweet.lat, tweet.lon, level))].bounds;
    } catch (const PlacementError&) {
        throw PlacementError("tweet " + tweet.id + " lies outside the region");
    }
}

std::vector<CellGroup> QuadTree::partition_by_level(const std::vector<Tweet>& tweets,
                                                    int level) const {
    std::vector<CellGroup> groups;
    std::unordered_map<int, std::size_t> slot;
    for (const auto& t : tweets) {
        int n;
        try {
            n = node_at(t.lat, t.lon, level);
        } catch (const PlacementError&) {
            throw PlacementError("tweet " + t.id + " lies outside the region");
        }
        auto [it, fresh] = slot.emplace(n, groups.size());
        if (fresh) {
            const auto& node = nodes_[static_cast<std::size_t>(n)];
            groups.push_back({n, node.bounds, node.depth, {}});
        }
        groups[it->second].tweets.push_back(t);
    }
    return groups;
}

void QuadTree::dump(std::ostream& out) const {
    std::function<void(int)> visit = [&](int i) {
        const auto& n = nodes_[static_cast<std::size_t>(i)];
        out << std::string(static_cast<std::size_t>(2 * n.depth), ' ') << "depth=" << n.depth
            << " lat=[" << n.bounds.lat_min << ", " << n.bounds.lat_max << ") lon=["
            << n.bounds.lon_min << ", " << n.bounds.lon_max << ")";
        if (n.is_leaf()) {
            out << " count=" << n.points.size();
            if (n.degenerate) out << " degenerate";
            out << '\n';
        } else {
            out << '\n';
            for (int c = 0; c < 4; ++c) visit(n.first_child + c);
        }
    };
    visit(0);
}

}  // namespace geoevent
