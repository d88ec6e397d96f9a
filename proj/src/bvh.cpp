#include "poseloop/bvh.hpp"

#include <algorithm>
#include <cmath>

namespace poseloop {

namespace {

struct TriRef {
    Vec3 centroid;
    Vec3 lo, hi;
};

// Moller-Trumbore
bool ray_triangle(const Vec3& o, const Vec3& d, const Vec3& a, const Vec3& b, const Vec3& c,
                  double& t_out) {
    Vec3 e1 = b - a, e2 = c - a;
    Vec3 pv = d.cross(e2);
    double det = e1.dot(pv);
    if (std::abs(det) < 1e-14) return false;
    double inv = 1.0 / det;
    Vec3 tv = o - a;
    double u = tv.dot(pv) * inv;
    if (u < 0.0 || u > 1.0) return false;
    Vec3 qv = tv.cross(e1);
    double v = d.dot(qv) * inv;
    if (v < 0.0 || u + v > 1.0) return false;
    t_out = e2.dot(qv) * inv;
    return true;
}

double ray_box(const Vec3& o, const Vec3& inv_d, const Vec3& lo, const Vec3& hi, double t_max) {
    double t0 = 0.0, t1 = t_max;
    for (int i = 0; i < 3; ++i) {
        double ta = (lo[i] - o[i]) * inv_d[i];
        double tb = (hi[i] - o[i]) * inv_d[i];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1) return -1.0;
    }
    return t0;
}

double box_distance_sq(const Vec3& p, const Vec3& lo, const Vec3& hi) {
    double d = 0.0;
    for (int i = 0; i < 3; ++i) {
        double v = std::max({lo[i] - p[i], 0.0, p[i] - hi[i]});
        d += v * v;
    }
    return d;
}

}  // namespace

double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    // Ericson, Real-Time Collision Detection 5.1.5
    Vec3 ab = b - a, ac = c - a, ap = p - a;
    double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return (p - a).norm();

    Vec3 bp = p - b;
    double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return (p - b).norm();

    double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
        double v = d1 / (d1 - d3);
        return (p - (a + v * ab)).norm();
    }

    Vec3 cp = p - c;
    double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return (p - c).norm();

    double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
        double w = d2 / (d2 - d6);
        return (p - (a + w * ac)).norm();
    }

    double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (p - (b + w * (c - b))).norm();
    }

    double denom = 1.0 / (va + vb + vc);
    double v = vb * denom, w = vc * denom;
    return (p - (a + v * ab + w * ac)).norm();
}

TriangleBvh::TriangleBvh(const TriangleMesh& mesh) : mesh_(mesh) {
    int n = int(mesh_.triangles.size());
    tri_order_.resize(n);
    for (int i = 0; i < n; ++i) tri_order_[i] = i;
    nodes_.reserve(2 * n);
    if (n > 0) build(0, n, tri_order_, 0);
}

int TriangleBvh::build(int first, int count, std::vector<int>& order, int depth) {
    Node node;
    node.lo = Vec3::Constant(1e30);
    node.hi = Vec3::Constant(-1e30);
    Vec3 clo = Vec3::Constant(1e30), chi = Vec3::Constant(-1e30);
    for (int i = first; i < first + count; ++i) {
        const auto& t = mesh_.triangles[order[i]];
        Vec3 c = Vec3::Zero();
        for (int k = 0; k < 3; ++k) {
            const Vec3& v = mesh_.vertices[t[k]];
            node.lo = node.lo.cwiseMin(v);
            node.hi = node.hi.cwiseMax(v);
            c += v;
        }
        c /= 3.0;
        clo = clo.cwiseMin(c);
        chi = chi.cwiseMax(c);
    }
    int idx = int(nodes_.size());
    nodes_.push_back(node);
    if (count <= 4 || depth > 40) {
        nodes_[idx].first = first;
        nodes_[idx].count = count;
        return idx;
    }
    Vec3 extent = chi - clo;
    int axis = 0;
    if (extent[1] > extent[axis]) axis = 1;
    if (extent[2] > extent[axis]) axis = 2;
    int mid = first + count / 2;
    std::nth_element(order.begin() + first, order.begin() + mid, order.begin() + first + count,
                     [&](int a, int b) {
                         const auto& ta = mesh_.triangles[a];
                         const auto& tb = mesh_.triangles[b];
                         double ca = mesh_.vertices[ta[0]][axis] + mesh_.vertices[ta[1]][axis] +
                                     mesh_.vertices[ta[2]][axis];
                         double cb = mesh_.vertices[tb[0]][axis] + mesh_.vertices[tb[1]][axis] +
                                     mesh_.vertices[tb[2]][axis];
                         return ca < cb;
                     });
    int l = build(first, mid - first, order, depth + 1);
    int r = build(mid, first + count - mid, order, depth + 1);
    nodes_[idx].left = l;
    nodes_[idx].right = r;
    return idx;
}

RayHit TriangleBvh::raycast(const Vec3& origin, const Vec3& dir, double t_min,
                            double t_max) const {
    RayHit hit;
    if (nodes_.empty()) return hit;
    hit.t = t_max;
    Vec3 inv_d(1.0 / dir[0], 1.0 / dir[1], 1.0 / dir[2]);
    int stack[64];
    int sp = 0;
    stack[sp++] = 0;
    while (sp > 0) {
        const Node& node = nodes_[stack[--sp]];
        if (ray_box(origin, inv_d, node.lo, node.hi, hit.t) < 0.0) continue;
        if (node.count > 0) {
            for (int i = node.first; i < node.first + node.count; ++i) {
                int tri = tri_order_[i];
                const auto& t = mesh_.triangles[tri];
                double tt;
                if (ray_triangle(origin, dir, mesh_.vertices[t[0]], mesh_.vertices[t[1]],
                                 mesh_.vertices[t[2]], tt) &&
                    tt > t_min && tt < hit.t) {
                    hit.t = tt;
                    hit.triangle = tri;
                }
            }
        } else {
            stack[sp++] = node.left;
            stack[sp++] = node.right;
        }
    }
    if (hit.valid()) {
        const auto& t = mesh_.triangles[hit.triangle];
        Vec3 n = (mesh_.vertices[t[1]] - mesh_.vertices[t[0]])
                     .cross(mesh_.vertices[t[2]] - mesh_.vertices[t[0]]);
        double len = n.norm();
        hit.normal = len > 0 ? Vec3(n / len) : Vec3(0, 0, 1);
    } else {
        hit.t = std::numeric_limits<double>::infinity();
    }
    return hit;
}

int TriangleBvh::count_crossings(const Vec3& origin, const Vec3& dir, double t_min) const {
    if (nodes_.empty()) return 0;
    int count = 0;
    Vec3 inv_d(1.0 / dir[0], 1.0 / dir[1], 1.0 / dir[2]);
    int stack[64];
    int sp = 0;
    stack[sp++] = 0;
    while (sp > 0) {
        const Node& node = nodes_[stack[--sp]];
        if (ray_box(origin, inv_d, node.lo, node.hi,
                    std::numeric_limits<double>::infinity()) < 0.0)
            continue;
        if (node.count > 0) {
            for (int i = node.first; i < node.first + node.count; ++i) {
                const auto& t = mesh_.triangles[tri_order_[i]];
                double tt;
                if (ray_triangle(origin, dir, mesh_.vertices[t[0]], mesh_.vertices[t[1]],
                                 mesh_.vertices[t[2]], tt) &&
                    tt > t_min)
                    ++count;
            }
        } else {
            stack[sp++] = node.left;
            stack[sp++] = node.right;
        }
    }
    return count;
}

void TriangleBvh::closest_rec(int nidx, const Vec3& p, double& best) const {
    const Node& node = nodes_[nidx];
    if (box_distance_sq(p, node.lo, node.hi) >= best * best) return;
    if (node.count > 0) {
        for (int i = node.first; i < node.first + node.count; ++i) {
            const auto& t = mesh_.triangles[tri_order_[i]];
            double d = point_triangle_distance(p, mesh_.vertices[t[0]], mesh_.vertices[t[1]],
                                               mesh_.vertices[t[2]]);
            best = std::min(best, d);
        }
        return;
    }
    double dl = box_distance_sq(p, nodes_[node.left].lo, nodes_[node.left].hi);
    double dr = box_distance_sq(p, nodes_[node.right].lo, nodes_[node.right].hi);
    if (dl < dr) {
        closest_rec(node.left, p, best);
        closest_rec(node.right, p, best);
    } else {
        closest_rec(node.right, p, best);
        closest_rec(node.left, p, best);
    }
}

double TriangleBvh::closest_distance(const Vec3& p) const {
    if (nodes_.empty()) return std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    closest_rec(0, p, best);
    return best;
}

bool TriangleBvh::is_inside(const Vec3& p) const {
    if (nodes_.empty()) return false;
    // slightly skewed directions avoid exact edge/face alignment
    const Vec3 dirs[3] = {Vec3(1.0, 1.3e-4, 2.7e-4), Vec3(3.1e-4, 1.0, 1.9e-4),
                          Vec3(2.3e-4, 1.1e-4, 1.0)};
    int votes = 0;
    for (const auto& d : dirs)
        if (count_crossings(p, d, 0.0) % 2 == 1) ++votes;
    return votes >= 2;
}

}  // namespace poseloop
