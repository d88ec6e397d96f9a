#include "poseloop/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace poseloop {

double add_metric(const std::vector<Vec3>& model_points, const Pose& estimate,
                  const Pose& truth) {
    if (model_points.empty()) throw std::invalid_argument("no model points");
    double sum = 0;
    for (const Vec3& x : model_points)
        sum += (transform_point(estimate, x) - transform_point(truth, x)).norm();
    return sum / double(model_points.size());
}

namespace {

// Minimal exact 3-d kd-tree over a fixed point set.
class KdTree {
public:
    explicit KdTree(const std::vector<Vec3>& pts) : pts_(pts), order_(pts.size()) {
        std::iota(order_.begin(), order_.end(), 0);
        nodes_.reserve(2 * pts.size());
        if (!pts.empty()) root_ = build(0, int(pts.size()), 0);
    }

    double nearest_distance(const Vec3& q) const {
        double best = std::numeric_limits<double>::infinity();
        search(root_, q, 0, best);
        return std::sqrt(best);
    }

private:
    struct Node {
        int point = -1;
        int left = -1, right = -1;
    };

    int build(int first, int count, int depth) {
        int axis = depth % 3;
        int mid = first + count / 2;
        std::nth_element(order_.begin() + first, order_.begin() + mid,
                         order_.begin() + first + count,
                         [&](int a, int b) { return pts_[a][axis] < pts_[b][axis]; });
        Node node;
        node.point = order_[mid];
        int idx = int(nodes_.size());
        nodes_.push_back(node);
        int left_count = mid - first;
        int right_count = first + count - mid - 1;
        int l = left_count > 0 ? build(first, left_count, depth + 1) : -1;
        int r = right_count > 0 ? build(mid + 1, right_count, depth + 1) : -1;
        nodes_[idx].left = l;
        nodes_[idx].right = r;
        return idx;
    }

    void search(int idx, const Vec3& q, int depth, double& best) const {
        if (idx < 0) return;
        const Node& node = nodes_[idx];
        double d2 = (pts_[node.point] - q).squaredNorm();
        best = std::min(best, d2);
        int axis = depth % 3;
        double delta = q[axis] - pts_[node.point][axis];
        int near = delta < 0 ? node.left : node.right;
        int far = delta < 0 ? node.right : node.left;
        search(near, q, depth + 1, best);
        if (delta * delta < best) search(far, q, depth + 1, best);
    }

    const std::vector<Vec3>& pts_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

}  // namespace

double adds_metric(const std::vector<Vec3>& model_points, const Pose& estimate,
                   const Pose& truth) {
    if (model_points.empty()) throw std::invalid_argument("no model points");
    std::vector<Vec3> under_truth(model_points.size());
    for (std::size_t i = 0; i < model_points.size(); ++i)
        under_truth[i] = transform_point(truth, model_points[i]);
    KdTree tree(under_truth);
    double sum = 0;
    for (const Vec3& x : model_points)
        sum += tree.nearest_distance(transform_point(estimate, x));
    return sum / double(model_points.size());
}

double f1_segmentation(const MaskImage& pred, const MaskImage& gt, int object_id,
                       bool* vacuous) {
    if (pred.width != gt.width || pred.height != gt.height)
        throw std::invalid_argument("f1: image resolutions differ");
    if (vacuous) *vacuous = false;
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        bool p = pred.data[i] == object_id;
        bool g = gt.data[i] == object_id;
        tp += p && g;
        fp += p && !g;
        fn += !p && g;
    }
    if (tp + fp == 0 && tp + fn == 0) {
        if (vacuous) *vacuous = true;
        return 1.0;
    }
    if (tp == 0) return 0.0;
    double precision = double(tp) / double(tp + fp);
    double recall = double(tp) / double(tp + fn);
    return 2.0 * precision * recall / (precision + recall);
}

}  // namespace poseloop
