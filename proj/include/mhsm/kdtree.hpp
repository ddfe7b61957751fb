#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mhsm/geometry.hpp"

namespace mhsm {

/// Static 2D k-d tree over a point array. Built once, then queried read-only,
/// so concurrent queries from multiple threads are safe.
///
/// All queries rank candidates by (squared distance, point index), which makes
/// results identical to a brute-force scan even in the presence of ties.
class KdTree2 {
public:
    KdTree2() = default;

    explicit KdTree2(const std::vector<Point2>& points) : points_(points) {
        if (points_.empty()) return;
        order_.resize(points_.size());
        for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
        nodes_.reserve(points_.size());
        root_ = build(0, points_.size(), 0);
    }

    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }

    /// Indices of the min(k, size) points closest to `query`, ascending by
    /// (distance, index).
    std::vector<std::size_t> knn(const Point2& query, std::size_t k) const {
        std::vector<Entry> heap;
        if (k == 0 || empty()) return {};
        heap.reserve(k + 1);
        knn_search(root_, query, k, heap);
        std::sort(heap.begin(), heap.end());
        std::vector<std::size_t> out(heap.size());
        for (std::size_t i = 0; i < heap.size(); ++i) out[i] = heap[i].index;
        return out;
    }

    /// Index of the closest point; ties broken toward the lower index.
    std::size_t nearest(const Point2& query) const {
        if (empty()) throw std::logic_error("KdTree2::nearest on empty tree");
        Entry best{std::numeric_limits<double>::infinity(), 0};
        nearest_search(root_, query, best);
        return best.index;
    }

    /// Squared distance from `query` to the closest point.
    double nearest_dist_sq(const Point2& query) const {
        if (empty()) throw std::logic_error("KdTree2::nearest_dist_sq on empty tree");
        Entry best{std::numeric_limits<double>::infinity(), 0};
        nearest_search(root_, query, best);
        return best.dist_sq;
    }

    /// Indices of all points strictly within `radius` of `query`, ascending by
    /// index.
    std::vector<std::size_t> radius_search(const Point2& query, double radius) const {
        std::vector<std::size_t> out;
        if (empty() || radius <= 0.0) return out;
        range_collect(root_, query, radius * radius, out);
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    struct Node {
        std::size_t point = 0;
        int left = -1;
        int right = -1;
        int axis = 0;
    };

    struct Entry {
        double dist_sq;
        std::size_t index;
        bool operator<(const Entry& o) const {
            return dist_sq < o.dist_sq || (dist_sq == o.dist_sq && index < o.index);
        }
    };

    int build(std::size_t lo, std::size_t hi, int axis) {
        if (lo >= hi) return -1;
        const std::size_t mid = lo + (hi - lo) / 2;
        std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                         [&](std::size_t a, std::size_t b) {
                             return coord(a, axis) < coord(b, axis);
                         });
        const int id = static_cast<int>(nodes_.size());
        nodes_.push_back(Node{order_[mid], -1, -1, axis});
        const int next = 1 - axis;
        // nodes_ may reallocate inside the recursive calls, so assign afterwards
        const int left = build(lo, mid, next);
        const int right = build(mid + 1, hi, next);
        nodes_[id].left = left;
        nodes_[id].right = right;
        return id;
    }

    double coord(std::size_t point, int axis) const {
        return axis == 0 ? points_[point].x : points_[point].y;
    }

    void knn_search(int node_id, const Point2& query, std::size_t k,
                    std::vector<Entry>& heap) const {
        if (node_id < 0) return;
        const Node& node = nodes_[node_id];
        const Entry cand{distance_sq(query, points_[node.point]), node.point};
        if (heap.size() < k) {
            heap.push_back(cand);
            std::push_heap(heap.begin(), heap.end());
        } else if (cand < heap.front()) {
            std::pop_heap(heap.begin(), heap.end());
            heap.back() = cand;
            std::push_heap(heap.begin(), heap.end());
        }
        const double d = (node.axis == 0 ? query.x : query.y) - coord(node.point, node.axis);
        const int first = d < 0.0 ? node.left : node.right;
        const int second = d < 0.0 ? node.right : node.left;
        knn_search(first, query, k, heap);
        // Descend on equality too: an equidistant point with a lower index may
        // live on the far side.
        if (heap.size() < k || d * d <= heap.front().dist_sq) {
            knn_search(second, query, k, heap);
        }
    }

    void nearest_search(int node_id, const Point2& query, Entry& best) const {
        if (node_id < 0) return;
        const Node& node = nodes_[node_id];
        const Entry cand{distance_sq(query, points_[node.point]), node.point};
        if (cand < best) best = cand;
        const double d = (node.axis == 0 ? query.x : query.y) - coord(node.point, node.axis);
        const int first = d < 0.0 ? node.left : node.right;
        const int second = d < 0.0 ? node.right : node.left;
        nearest_search(first, query, best);
        if (d * d <= best.dist_sq) nearest_search(second, query, best);
    }

    void range_collect(int node_id, const Point2& query, double radius_sq,
                       std::vector<std::size_t>& out) const {
        if (node_id < 0) return;
        const Node& node = nodes_[node_id];
        if (distance_sq(query, points_[node.point]) < radius_sq) out.push_back(node.point);
        const double d = (node.axis == 0 ? query.x : query.y) - coord(node.point, node.axis);
        const int first = d < 0.0 ? node.left : node.right;
        const int second = d < 0.0 ? node.right : node.left;
        range_collect(first, query, radius_sq, out);
        if (d * d < radius_sq) range_collect(second, query, radius_sq, out);
    }

    std::vector<Point2> points_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

}  // namespace mhsm
