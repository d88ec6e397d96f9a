#include "poseloop/evaluate.hpp"

#include <cmath>

namespace poseloop {

PoseVerdict evaluate_pose(const RenderResult& rendered, const RgbImage& observed_rgb,
                          const DepthImage& observed_depth, const MaskImage& support,
                          const Pose& estimate, double diameter, const CameraIntrinsics& K,
                          const GateConfig& gate, int object_id) {
    PoseVerdict out;
    out.object_id = object_id;

    double sum = 0;
    long count = 0;
    for (int v = 0; v < support.height; ++v)
        for (int u = 0; u < support.width; ++u) {
            if (!support.at(u, v)) continue;
            sum += std::abs(double(rendered.depth.at(u, v)) - double(observed_depth.at(u, v)));
            ++count;
        }
    if (count == 0) {
        out.reason = "no visible support";
        return out;
    }
    out.e = sum / double(count);

    double cu, cv, cz;
    point_to_pixel(estimate.translation, K, cu, cv, cz);
    if (cz <= 0) {
        out.reason = "estimate behind the camera";
        return out;
    }
    Code rendered_code = encode(crop_roi(rendered.rgb, cu, cv, cz, diameter, K).image);
    Code observed_code = encode(crop_roi(observed_rgb, cu, cv, cz, diameter, K).image);
    if (!rendered_code.valid() || !observed_code.valid()) {
        out.reason = "no visible appearance";
        return out;
    }
    out.s = cosine_similarity(rendered_code, observed_code);

    out.accepted = out.s >= gate.s_star && out.e <= gate.e_star;
    if (!out.accepted && out.reason.empty())
        out.reason = out.s < gate.s_star ? "appearance mismatch" : "depth mismatch";
    return out;
}

}  // namespace poseloop
