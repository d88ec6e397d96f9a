#pragma once

#include <limits>
#include <memory>
#include <vector>

#include "poseloop/mesh.hpp"

namespace poseloop {

struct RayHit {
    double t = std::numeric_limits<double>::infinity();
    int triangle = -1;
    Vec3 normal = Vec3::Zero();  // unit, mesh-outward (as wound)

    bool valid() const { return triangle >= 0; }
};

/// Axis-aligned BVH over a triangle mesh. Immutable after construction.
class TriangleBvh {
public:
    explicit TriangleBvh(const TriangleMesh& mesh);

    const TriangleMesh& mesh() const { return mesh_; }

    /// Nearest hit with t in (t_min, t_max). dir need not be unit length; t is
    /// in units of dir.
    RayHit raycast(const Vec3& origin, const Vec3& dir, double t_min = 1e-9,
                   double t_max = std::numeric_limits<double>::infinity()) const;

    /// Number of intersections with t > t_min (for inside/outside parity).
    int count_crossings(const Vec3& origin, const Vec3& dir, double t_min = 1e-9) const;

    /// Unsigned distance to the closest point on the surface.
    double closest_distance(const Vec3& p) const;

    /// Negative inside. Parity of three skewed axis rays, majority vote.
    bool is_inside(const Vec3& p) const;

private:
    struct Node {
        Vec3 lo, hi;
        int left = -1, right = -1;  // internal children
        int first = 0, count = 0;   // leaf triangle range
    };

    int build(int first, int count, std::vector<int>& order, int depth);
    void closest_rec(int node, const Vec3& p, double& best) const;

    TriangleMesh mesh_;
    std::vector<Node> nodes_;
    std::vector<int> tri_order_;
};

double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

}  // namespace poseloop
