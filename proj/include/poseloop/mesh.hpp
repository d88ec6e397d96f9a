#pragma once

#include <array>
#include <string>
#include <vector>

#include "poseloop/geometry.hpp"
#include "poseloop/rng.hpp"

namespace poseloop {

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;

    /// Max pairwise vertex distance (meters).
    double diameter() const;
    double surface_area() const;
    Vec3 centroid() const;
    void bounds(Vec3& lo, Vec3& hi) const;

    /// Every undirected edge shared by exactly two triangles.
    bool is_watertight(std::string* why = nullptr) const;
};

// Procedural corpus standing in for scanned object models. All centered on
// the origin of their canonical frame, z up.
TriangleMesh make_box(double sx, double sy, double sz);
TriangleMesh make_cylinder(double radius, double height, int segments = 48);
TriangleMesh make_icosphere(double radius, int subdivisions = 3);
/// Asymmetric L-shaped prism: legs along +x/+y, extruded in z.
TriangleMesh make_l_bracket(double leg_a, double leg_b, double thickness, double depth);
/// Cylinder body with a torus handle; two closed components.
TriangleMesh make_mug(double radius, double height);

/// Area-weighted uniform surface samples, deterministic per seed.
/// Throws on a degenerate (zero-area) mesh or m < 1.
std::vector<Vec3> sample_surface(const TriangleMesh& mesh, int m, std::uint64_t seed);

// Wavefront-style ASCII triangle format, v/f lines only.
TriangleMesh load_obj(const std::string& path);
void save_obj(const TriangleMesh& mesh, const std::string& path);

}  // namespace poseloop
