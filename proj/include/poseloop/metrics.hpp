#pragma once

#include <vector>

#include "poseloop/image.hpp"

namespace poseloop {

/// Mean distance between model points under the two poses.
double add_metric(const std::vector<Vec3>& model_points, const Pose& estimate,
                  const Pose& truth);

/// Mean closest-point distance (symmetric variant). Exact nearest neighbors
/// via a kd-tree, not an approximation.
double adds_metric(const std::vector<Vec3>& model_points, const Pose& estimate,
                   const Pose& truth);

/// Pixelwise F1 of pred == id against gt == id. Returns 0 when precision and
/// recall are both 0; both masks empty counts as vacuous agreement (1) and
/// sets *vacuous when given.
double f1_segmentation(const MaskImage& pred, const MaskImage& gt, int object_id,
                       bool* vacuous = nullptr);

}  // namespace poseloop
