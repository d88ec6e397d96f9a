#pragma once

#include <cstdint>
#include <vector>

#include "poseloop/bvh.hpp"
#include "poseloop/image.hpp"

namespace poseloop {

struct RenderItem {
    const TriangleBvh* shape = nullptr;
    Pose pose;  // object frame -> world
    std::uint8_t id = 1;
    Vec3 albedo = Vec3(0.7, 0.7, 0.7);
};

/// Finite desk rectangle in the world z=0 plane, centered on the origin.
/// Renders into depth but not into the mask (it is not a scene object).
struct SupportPlane {
    double half_extent = 1.0;
    Vec3 albedo = Vec3(0.45, 0.43, 0.40);
};

struct RenderResult {
    RgbImage rgb;
    DepthImage depth;
    MaskImage mask;
};

/// Distinct per-object albedo, stable across runs.
Vec3 palette_color(int id);

/// Lab light direction shared by the simulator and the verification renders.
inline Vec3 default_light() { return Vec3(0.4, 0.2, -1.0); }

/// Ray-cast z-buffer render. Depth stores camera-frame z of the nearest hit,
/// not ray length. `camera` maps camera frame to world; `light_dir` is the
/// direction light travels, in world frame.
RenderResult render(const std::vector<RenderItem>& scene, const Pose& camera,
                    const CameraIntrinsics& K, const Vec3& light_dir = Vec3(0.4, 0.2, -1.0),
                    const SupportPlane* plane = nullptr);

/// Same, tracing only pixels with u in [u0, u1) and v in [v0, v1). Pixels
/// outside the window stay background. Window is clipped to the image.
RenderResult render_region(const std::vector<RenderItem>& scene, const Pose& camera,
                           const CameraIntrinsics& K, const Vec3& light_dir, int u0, int v0,
                           int u1, int v1, const SupportPlane* plane = nullptr);

struct PointCloud {
    std::vector<Vec3> points;  // camera frame
    int skipped_invalid = 0;   // masked pixels dropped for zero depth
};

/// Back-project every pixel where mask == id: D(u,v) * K^-1 * (u, v, 1)^T.
PointCloud backproject(const DepthImage& depth, const MaskImage& mask, std::uint8_t id,
                       const CameraIntrinsics& K);

struct Roi {
    RgbImage image;  // fixed 64x64 resample
    double center_u = 0, center_v = 0;
    double side = 0;           // source-pixel side of the square crop
    bool out_of_view = false;  // crop rectangle missed the source image entirely
};

inline constexpr int kRoiSize = 64;
inline constexpr double kRoiMargin = 1.4;

/// Square crop of side margin * fx * diameter / z around (u, v), bilinearly
/// resampled. Out-of-bounds source pixels read as background. Throws if z <= 0.
Roi crop_roi(const RgbImage& img, double u, double v, double z, double diameter,
             const CameraIntrinsics& K, double margin = kRoiMargin);

}  // namespace poseloop
