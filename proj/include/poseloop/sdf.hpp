#pragma once

#include <array>
#include <string>
#include <vector>

#include "poseloop/mesh.hpp"

namespace poseloop {

/// Voxelized signed distance field, negative inside. Values live at voxel
/// nodes: node (i,j,k) sits at origin + voxel_size * (i,j,k). Immutable
/// after build.
struct SdfGrid {
    Vec3 origin = Vec3::Zero();
    double voxel_size = 0.0;
    std::array<int, 3> dims = {0, 0, 0};
    std::vector<float> values;  // x-fastest

    float at(int i, int j, int k) const {
        return values[std::size_t((k * dims[1] + j) * dims[0] + i)];
    }
    Vec3 max_corner() const {
        return origin + voxel_size * Vec3(dims[0] - 1, dims[1] - 1, dims[2] - 1);
    }
};

struct SdfSample {
    double value = 0.0;
    Vec3 gradient = Vec3::Zero();
    /// Query fell outside the grid; value includes the distance to bounds
    /// and the gradient is the outward direction, so descending it walks
    /// back onto the grid.
    bool far_field = false;
};

/// Exact point-triangle distance per node, sign by ray parity. Grid covers
/// mesh bounds plus `padding` voxels on every side (at least 2).
/// Throws on a non-watertight mesh, naming offending edges.
SdfGrid build_sdf(const TriangleMesh& mesh, double voxel_size, int padding = 4);

/// Trilinear value and the analytic gradient of the interpolant. Out-of-bounds
/// queries evaluate at the clamped point with the outside distance added.
SdfSample sample_sdf(const SdfGrid& g, const Vec3& x);

// Little-endian binary: dims as int32, voxel_size + origin as float32,
// then float32 values, x-fastest.
void save_sdf(const SdfGrid& g, const std::string& path);
SdfGrid load_sdf(const std::string& path);

}  // namespace poseloop
