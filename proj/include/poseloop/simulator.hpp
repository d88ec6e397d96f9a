#pragma once

#include <memory>
#include <string>
#include <vector>

#include "poseloop/render.hpp"
#include "poseloop/rng.hpp"

namespace poseloop {

/// A mesh plus the acceleration structures scene ops and rendering share.
struct ObjectModel {
    std::string name;
    TriangleMesh mesh;
    std::shared_ptr<TriangleBvh> bvh;
    std::vector<Vec3> clearance_samples;  // surface points for penetration tests
    double diameter = 0;

    static ObjectModel build(std::string name, TriangleMesh mesh);
};

using ModelLibrary = std::vector<ObjectModel>;

/// box, cylinder, sphere, l_bracket, mug at desk scale.
ModelLibrary standard_models();

struct SceneObject {
    int id = 0;     // mask label, > 0
    int model = 0;  // index into the library
    Pose pose;      // object -> world
};

/// Objects resting on the z = 0 support plane inside an axis-aligned
/// workspace box.
struct Scene {
    std::vector<SceneObject> objects;
    Vec3 workspace_lo = Vec3(-0.25, -0.25, 0.0);
    Vec3 workspace_hi = Vec3(0.25, 0.25, 0.4);

    const SceneObject* find(int id) const;
};

/// Smallest signed separation between the two placed objects: negative means
/// penetration, measured by each object's surface samples against the other's
/// surface.
double pair_clearance(const ObjectModel& a, const Pose& pa, const ObjectModel& b,
                      const Pose& pb);

/// Allowed penetration slop for an object (2 voxels at the default SDF
/// resolution of diameter/64).
double penetration_slop(const ObjectModel& m);

/// Rejection-sample resting poses (canonical orientation + yaw, lowest vertex
/// on the plane) until nothing penetrates and everything is inside the
/// workspace. Throws "workspace too crowded" after 1000 rejections per object.
Scene generate_scene(const ModelLibrary& lib, const std::vector<int>& models,
                     const Vec3& workspace_lo, const Vec3& workspace_hi, std::uint64_t seed);

struct Trajectory {
    std::vector<Pose> waypoints;  // camera -> world
    Vec3 target = Vec3::Zero();   // look-at point
};

/// Waypoint 0 is the initialization view at the given elevation; the rest
/// sweep an azimuth arc at the same distance, all looking at the clutter
/// centroid. Camera frame: x right, y down, z forward.
Trajectory make_trajectory(const Scene& scene, int n_waypoints, double distance,
                           double elevation_deg, std::uint64_t seed);

struct NoiseModel {
    double fk_rot_sigma = 0.0;     // radians per step
    double fk_trans_sigma = 0.0;   // meters per step
    Pose calib_bias;               // fixed hand-eye offset
    double depth_sigma = 0.0;      // meters
    double depth_dropout = 0.0;    // fraction of pixels losing depth
    double rgb_offset = 0.0;       // additive brightness shift
    double rgb_sigma = 0.0;        // per-pixel Gaussian
    Vec3 rgb_gain = Vec3::Ones();  // per-channel multiplicative shift
};

struct Observation {
    RgbImage rgb;
    DepthImage depth;
    MaskImage gt_mask;
    Pose true_camera;                    // camera -> world
    MotionDelta true_delta;              // previous camera frame -> this one
    MotionDelta reported_delta;          // as forward kinematics would report
    std::vector<Pose> gt_object_in_cam;  // parallel to scene.objects
};

std::vector<RenderItem> scene_items(const Scene& scene, const ModelLibrary& lib);

/// Desk rectangle sized to keep the workspace in view from any sweep angle.
SupportPlane workspace_plane(const Vec3& lo, const Vec3& hi);

/// Render the scene (with the support plane) and corrupt it per the noise
/// model. reported_delta = bias^-1 * (fk noise * true_delta) * bias.
Observation observe(const Scene& scene, const ModelLibrary& lib, const Pose& camera,
                    const Pose& prev_camera, const CameraIntrinsics& K, const NoiseModel& noise,
                    std::uint64_t seed);

struct SegErrorModel {
    int erode_px = 0;
    int dilate_px = 0;
    double flip_rate = 0.0;  // per-pixel chance of copying a neighbor's label
    double miss_rate = 0.0;  // per-object chance of vanishing entirely
};

/// Ground-truth masks degraded per the error model; the stand-in for an
/// imperfect learned segmenter.
MaskImage oracle_segment(const Observation& obs, const SegErrorModel& err, std::uint64_t seed);

struct InteractionResult {
    Scene scene;
    bool moved = false;    // scene actually changed
    bool grasped = false;  // grasp_place only: gripper held on
};

/// Slide the object toward the other objects' centroid (or the workspace
/// center when alone) with direction/yaw jitter. Displacement shrinks until
/// the result is collision-free and in bounds; gives up unchanged otherwise.
InteractionResult push(const Scene& scene, const ModelLibrary& lib, int object_id,
                       std::uint64_t seed);

/// Pick up the object and place it at a random pose (new canonical
/// orientation, uniform yaw and position). With probability 1 - p_grasp the
/// grasp slips and the object only jitters by up to 2 cm / 10 degrees.
InteractionResult grasp_place(const Scene& scene, const ModelLibrary& lib, int object_id,
                              std::uint64_t seed, double p_grasp = 0.8);

}  // namespace poseloop
