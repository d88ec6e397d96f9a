#pragma once

#include <vector>

#include "poseloop/image.hpp"
#include "poseloop/sdf.hpp"

namespace poseloop {

struct RefineConfig {
    double margin = 0.02;    // meters, visibility mask band
    double lambda = 0.001;   // translation regularizer weight
    int max_iters = 60;
    double step_tol = 1e-5;  // meters of combined step length
};

/// Pixels where measured and rendered depth agree within the margin and both
/// are valid. Output is 1/0. Throws on resolution mismatch.
MaskImage visibility_mask(const DepthImage& measured, const DepthImage& rendered,
                          double margin);

/// Pixelwise intersection: predicted, rendered, and visibility masks all
/// nonzero. Keeps the predicted mask's label.
MaskImage object_mask(const MaskImage& predicted, const MaskImage& rendered,
                      const MaskImage& visibility);

struct RefineResult {
    Pose pose;
    double initial_objective = 0;
    double final_objective = 0;
    int iterations = 0;
    /// Objective after each accepted step, starting with the initial value.
    /// Non-increasing by construction; exposed so harnesses can assert it.
    std::vector<double> objective_trace;
    /// Fewer than 10 support points; pose returned unchanged.
    bool insufficient_support = false;
};

/// Minimize mean |SDF(R^-1 (p - t))| + lambda/2 ||t - t_bar||^2 over the
/// object-in-camera pose by steepest descent with Armijo backtracking.
/// Rotation steps are left tangent increments, re-orthonormalized. The
/// objective never increases across accepted steps; the best-seen pose is
/// returned. Points inside the voxel noise band (|SDF| < voxel/4) contribute
/// no gradient.
RefineResult refine_pose(const std::vector<Vec3>& points, const SdfGrid& sdf, const Pose& init,
                         const RefineConfig& cfg);

/// Objective value at a given pose (exposed for gradient and monotonicity
/// checks).
double refine_objective(const std::vector<Vec3>& points, const SdfGrid& sdf, const Pose& pose,
                        const Pose& init, const RefineConfig& cfg);

}  // namespace poseloop
