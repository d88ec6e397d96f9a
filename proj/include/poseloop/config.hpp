#pragma once

#include <map>
#include <string>
#include <vector>

#include "poseloop/evaluate.hpp"
#include "poseloop/filter.hpp"
#include "poseloop/refine.hpp"
#include "poseloop/simulator.hpp"

namespace poseloop {

enum class Stage { kSingleObject, kClutter };

/// Sensor and actuation corruption representative of a real cell. Zero the
/// fields explicitly for noiseless experiments.
inline NoiseModel default_noise() {
    NoiseModel n;
    n.fk_rot_sigma = 0.01;
    n.fk_trans_sigma = 0.003;
    n.depth_sigma = 0.003;
    n.depth_dropout = 0.02;
    n.rgb_offset = 0.03;
    n.rgb_sigma = 0.02;
    n.rgb_gain = Vec3(0.92, 1.0, 1.08);
    return n;
}

inline SegErrorModel default_segmenter() {
    SegErrorModel s;
    s.erode_px = 1;
    s.dilate_px = 1;
    s.flip_rate = 0.002;
    s.miss_rate = 0.02;
    return s;
}

/// Everything a run needs, with desk-scale defaults. Loadable from a plain
/// key = value file (see default_config_text for the schema).
struct RunConfig {
    FilterConfig filter;
    RefineConfig refine;
    GateConfig gate;
    NoiseModel noise = default_noise();
    SegErrorModel segmenter = default_segmenter();
    GridDims grid;

    Stage stage = Stage::kClutter;
    std::vector<std::string> scene_models;  // names from the model library
    Vec3 workspace_lo = Vec3(-0.25, -0.25, 0.0);
    Vec3 workspace_hi = Vec3(0.25, 0.25, 0.4);

    int image_width = 160;
    int image_height = 120;
    int n_waypoints = 20;
    double camera_distance = 0.5;    // meters
    double camera_elevation = 55.0;  // degrees
    double z0 = 0.5;                 // codebook canonical distance, meters

    int max_init_attempts = 15;  // iteration stand-in for a wall-clock budget
    double p_grasp = 0.8;

    CameraIntrinsics intrinsics() const {
        return default_intrinsics(image_width, image_height);
    }
};

/// Parse `key = value` lines ('#' comments, blank lines ignored). Unknown or
/// malformed keys throw with the offending line. Keys not present keep their
/// defaults.
RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& text);

/// The full schema with defaults, as a loadable config file.
std::string default_config_text();

}  // namespace poseloop
