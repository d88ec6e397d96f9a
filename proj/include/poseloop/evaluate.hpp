#pragma once

#include <string>

#include "poseloop/encoder.hpp"
#include "poseloop/render.hpp"

namespace poseloop {

struct GateConfig {
    double s_star = 0.5;   // minimum color-code similarity
    double e_star = 0.03;  // meters, maximum mean depth error
};

struct PoseVerdict {
    double s = -1.0;
    double e = std::numeric_limits<double>::infinity();
    bool accepted = false;
    int object_id = 0;
    std::string reason;  // set when rejected
};

/// Compare the object rendered at the estimated pose against the observation.
/// s compares encoder codes of RoIs cropped at the estimate's projection; e is
/// the mean absolute depth difference over the support mask. Rejects with
/// "no visible support" when the mask is empty and "no visible appearance"
/// when either RoI encodes to the zero code.
PoseVerdict evaluate_pose(const RenderResult& rendered, const RgbImage& observed_rgb,
                          const DepthImage& observed_depth, const MaskImage& support,
                          const Pose& estimate, double diameter, const CameraIntrinsics& K,
                          const GateConfig& gate, int object_id = 1);

}  // namespace poseloop
