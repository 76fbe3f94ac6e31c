#include "geoevent/birch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

#include "geoevent/types.hpp"

namespace geoevent {

CFEntry CFEntry::of_point(const Eigen::VectorXd& x) { return {1, x, x.squaredNorm()}; }

double CFEntry::radius_squared() const {
    const double dn = static_cast<double>(n);
    return std::max(0.0, ss / dn - (ls / dn).squaredNorm());
}

double CFEntry::radius() const { return std::sqrt(radius_squared()); }

CFEntry cf_merge(const CFEntry& a, const CFEntry& b) {
    if (a.n < 1 || b.n < 1) throw std::invalid_argument("cf_merge requires non-empty entries");
    if (a.ls.size() != b.ls.size()) {
        throw DimensionError("cf_merge: dimension " + std::to_string(a.ls.size()) + " vs " +
                             std::to_string(b.ls.size()));
    }
    return {a.n + b.n, a.ls + b.ls, a.ss + b.ss};
}

namespace {

void absorb(CFEntry& into, const CFEntry& other) {
    if (into.n == 0) {
        into = other;
        return;
    }
    into.n += other.n;
    into.ls += other.ls;
    into.ss += other.ss;
}

class CFTree {
public:
    CFTree(double threshold, BirchShape shape) : threshold_(threshold), shape_(shape) {
        nodes_.push_back({true, {}, {}});
    }

    void insert(int point, const Eigen::VectorXd& x) {
        const CFEntry p = CFEntry::of_point(x);
        std::vector<int> path{0};
        while (!nodes_[static_cast<std::size_t>(path.back())].leaf) {
            const Node& n = nodes_[static_cast<std::size_t>(path.back())];
            path.push_back(n.children[closest(n.children, x, false)]);
        }
        Node& leaf = nodes_[static_cast<std::size_t>(path.back())];
        bool joined = false;
        if (!leaf.children.empty()) {
            const int e = leaf.children[closest(leaf.children, x, true)];
            CFEntry merged = cf_merge(entries_[static_cast<std::size_t>(e)], p);
            if (merged.radius() <= threshold_) {
                entries_[static_cast<std::size_t>(e)] = std::move(merged);
                members_[static_cast<std::size_t>(e)].push_back(point);
                joined = true;
            }
        }
        if (!joined) {
            entries_.push_back(p);
            members_.push_back({point});
            leaf.children.push_back(static_cast<int>(entries_.size()) - 1);
        }
        for (int n : path) absorb(nodes_[static_cast<std::size_t>(n)].cf, p);

        for (std::size_t level = path.size(); level-- > 0;) {
            const int n = path[level];
            const Node& node = nodes_[static_cast<std::size_t>(n)];
            const auto cap = static_cast<std::size_t>(node.leaf ? shape_.leaf_capacity : shape_.branching);
            if (node.children.size() <= cap) break;
            const int sibling = split(n);
            if (level == 0) {
                Node root{false, {n, sibling}, {}};
                absorb(root.cf, nodes_[static_cast<std::size_t>(n)].cf);
                absorb(root.cf, nodes_[static_cast<std::size_t>(sibling)].cf);
                nodes_.push_back(std::move(root));
                std::swap(nodes_[0], nodes_.back());
                // The old root moved to the back; repoint the new root at it.
                const int moved = static_cast<int>(nodes_.size()) - 1;
                for (int& c : nodes_[0].children) {
                    if (c == 0) c = moved;
                }
            } else {
                auto& siblings = nodes_[static_cast<std::size_t>(path[level - 1])].children;
                siblings.insert(std::find(siblings.begin(), siblings.end(), n) + 1, sibling);
            }
        }
    }

    const std::vector<CFEntry>& entries() const { return entries_; }
    const std::vector<std::vector<int>>& members() const { return members_; }

private:
    struct Node {
        bool leaf;
        std::vector<int> children;  // entry ids for leaves, node ids otherwise
        CFEntry cf;
    };

    const CFEntry& child_cf(int child, bool leaf) const {
        return leaf ? entries_[static_cast<std::size_t>(child)]
                    : nodes_[static_cast<std::size_t>(child)].cf;
    }

    std::size_t closest(const std::vector<int>& children, const Eigen::VectorXd& x, bool leaf) const {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < children.size(); ++i) {
            const CFEntry& cf = child_cf(children[i], leaf);
            const double d = (cf.ls / static_cast<double>(cf.n) - x).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        return best;
    }

    // Moves roughly half of node `n`'s children to a new sibling, seeded by
    // the farthest pair of child centroids. Returns the sibling's index.
    int split(int n) {
        const bool leaf = nodes_[static_cast<std::size_t>(n)].leaf;
        const std::vector<int> children = std::move(nodes_[static_cast<std::size_t>(n)].children);
        std::vector<Eigen::VectorXd> c;
        c.reserve(children.size());
        for (int ch : children) c.push_back(child_cf(ch, leaf).centroid());

        std::size_t si = 0, sj = 1;
        double far = -1.0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            for (std::size_t j = i + 1; j < c.size(); ++j) {
                const double d = (c[i] - c[j]).squaredNorm();
                if (d > far) {
                    far = d;
                    si = i;
                    sj = j;
                }
            }
        }
        Node a{leaf, {}, {}}, b{leaf, {}, {}};
        for (std::size_t k = 0; k < children.size(); ++k) {
            const bool to_b =
                k == sj || (k != si && (c[k] - c[sj]).squaredNorm() < (c[k] - c[si]).squaredNorm());
            Node& dst = to_b ? b : a;
            dst.children.push_back(children[k]);
            absorb(dst.cf, child_cf(children[k], leaf));
        }
        nodes_[static_cast<std::size_t>(n)] = std::move(a);
        nodes_.push_back(std::move(b));
        return static_cast<int>(nodes_.size()) - 1;
    }

    double threshold_;
    BirchShape shape_;
    std::vector<Node> nodes_;
    std::vector<CFEntry> entries_;
    std::vector<std::vector<int>> members_;
};

}  // namespace

ClusterAssignment birch_cluster(const std::vector<TweetVector>& vectors, double threshold,
                                const BirchShape& shape) {
    if (!(threshold > 0.0)) throw std::invalid_argument("BIRCH threshold must be positive");
    if (shape.branching < 2 || shape.leaf_capacity < 2) {
        throw std::invalid_argument("BIRCH branching and leaf capacity must be at least 2");
    }
    ClusterAssignment out;
    if (vectors.empty()) return out;
    const Eigen::Index d = vectors.front().vector.size();
    CFTree tree(threshold, shape);
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        if (vectors[i].vector.size() != d) {
            throw DimensionError("vector " + vectors[i].tweet_id + " has dimension " +
                                 std::to_string(vectors[i].vector.size()) + ", expected " +
                                 std::to_string(d));
        }
        tree.insert(static_cast<int>(i), vectors[i].vector);
    }
    // Entries are created by their first member, so creation order is
    // first-member order.
    out.clusters = tree.entries();
    out.members = tree.members();
    out.labels.assign(vectors.size(), -1);
    for (std::size_t label = 0; label < out.members.size(); ++label) {
        for (int i : out.members[label]) out.labels[static_cast<std::size_t>(i)] = static_cast<int>(label);
    }
    return out;
}

ThresholdSearch adaptive_threshold(const std::vector<TweetVector>& vectors, double step,
                                   const StopRule& rule, const BirchShape& shape) {
    if (vectors.empty()) throw std::invalid_argument("adaptive_threshold needs at least one vector");
    if (!(step > 0.0)) throw std::invalid_argument("threshold step must be positive");
    ThresholdSearch out;
    const double total = static_cast<double>(vectors.size());
    for (int k = 1; k <= rule.max_steps; ++k) {
        out.threshold = step * k;
        out.steps = k;
        out.assignment = birch_cluster(vectors, out.threshold, shape);
        std::size_t in_small = 0, largest = 0;
        for (const auto& m : out.assignment.members) {
            if (static_cast<int>(m.size()) < rule.small_cluster_size) in_small += m.size();
            largest = std::max(largest, m.size());
        }
        if (static_cast<double>(in_small) / total < rule.small_cluster_fraction ||
            static_cast<double>(largest) / total > rule.largest_cluster_fraction) {
            out.converged = true;
            return out;
        }
    }
    return out;
}

double default_step(const std::vector<TweetVector>& vectors, double fraction, int sample,
                    std::uint64_t seed) {
    std::vector<std::size_t> idx(vectors.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    if (sample > 0 && idx.size() > static_cast<std::size_t>(sample)) {
        std::mt19937_64 rng(seed);
        // Partial Fisher-Yates: the first `sample` slots form the sample.
        for (std::size_t i = 0; i < static_cast<std::size_t>(sample); ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
            std::swap(idx[i], idx[pick(rng)]);
        }
        idx.resize(static_cast<std::size_t>(sample));
    }
    std::vector<double> dist;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        for (std::size_t j = i + 1; j < idx.size(); ++j) {
            dist.push_back((vectors[idx[i]].vector - vectors[idx[j]].vector).norm());
        }
    }
    constexpr double kTinyStep = 1e-9;
    if (dist.empty()) return kTinyStep;
    auto mid = dist.begin() + static_cast<std::ptrdiff_t>(dist.size() / 2);
    std::nth_element(dist.begin(), mid, dist.end());
    double step = fraction * *mid;
    if (step <= 0.0) step = fraction * *std::max_element(dist.begin(), dist.end());
    return step > 0.0 ? step : kTinyStep;
}

void write_assignment_csv(std::ostream& out, const std::vector<TweetVector>& vectors,
                          const ClusterAssignment& assignment) {
    out << "tweet_id,label\n";
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        out << vectors[i].tweet_id << ',' << assignment.labels[i] << '\n';
    }
}

}  // namespace geoevent
