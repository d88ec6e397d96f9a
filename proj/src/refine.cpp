#include "poseloop/refine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace poseloop {

MaskImage visibility_mask(const DepthImage& measured, const DepthImage& rendered,
                          double margin) {
    if (measured.width != rendered.width || measured.height != rendered.height)
        throw std::invalid_argument("visibility mask: image resolutions differ");
    MaskImage out(measured.width, measured.height, 0);
    for (int v = 0; v < out.height; ++v)
        for (int u = 0; u < out.width; ++u) {
            float d = measured.at(u, v), r = rendered.at(u, v);
            if (d > 0 && r > 0 && std::abs(double(d) - double(r)) < margin) out.at(u, v) = 1;
        }
    return out;
}

MaskImage object_mask(const MaskImage& predicted, const MaskImage& rendered,
                      const MaskImage& visibility) {
    if (predicted.width != rendered.width || predicted.height != rendered.height ||
        predicted.width != visibility.width || predicted.height != visibility.height)
        throw std::invalid_argument("object mask: image resolutions differ");
    MaskImage out(predicted.width, predicted.height, 0);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        if (predicted.data[i] && rendered.data[i] && visibility.data[i])
            out.data[i] = predicted.data[i];
    return out;
}

namespace {

struct Grad {
    double value = 0;
    Vec3 d_t = Vec3::Zero();
    Vec3 d_w = Vec3::Zero();  // left tangent of rotation
};

Grad objective_and_gradient(const std::vector<Vec3>& points, const SdfGrid& sdf,
                            const Pose& pose, const Pose& init, const RefineConfig& cfg,
                            bool want_gradient) {
    Grad out;
    const double band = sdf.voxel_size / 4.0;
    const Eigen::Matrix3d R = pose.rotation.toRotationMatrix();
    const Eigen::Matrix3d Rt = R.transpose();
    const double inv_n = 1.0 / double(points.size());

    for (const Vec3& p : points) {
        Vec3 rel = p - pose.translation;
        SdfSample s = sample_sdf(sdf, Rt * rel);
        out.value += std::abs(s.value) * inv_n;
        if (!want_gradient) continue;
        double sign = s.value > band ? 1.0 : (s.value < -band ? -1.0 : 0.0);
        if (sign == 0.0) continue;
        Vec3 wg = R * s.gradient;  // SDF gradient carried to camera frame
        out.d_t += (-sign * inv_n) * wg;
        out.d_w += (sign * inv_n) * wg.cross(rel);
    }

    Vec3 dt = pose.translation - init.translation;
    out.value += 0.5 * cfg.lambda * dt.squaredNorm();
    if (want_gradient) out.d_t += cfg.lambda * dt;
    return out;
}

Pose step_pose(const Pose& pose, const Vec3& dt, const Vec3& dw) {
    Pose out;
    out.translation = pose.translation + dt;
    double angle = dw.norm();
    Quat dq = angle > 1e-16 ? Quat(Eigen::AngleAxisd(angle, dw / angle)) : Quat::Identity();
    out.rotation = (dq * pose.rotation).normalized();
    return out;
}

}  // namespace

double refine_objective(const std::vector<Vec3>& points, const SdfGrid& sdf, const Pose& pose,
                        const Pose& init, const RefineConfig& cfg) {
    if (points.empty()) throw std::invalid_argument("empty point cloud");
    return objective_and_gradient(points, sdf, pose, init, cfg, false).value;
}

RefineResult refine_pose(const std::vector<Vec3>& points, const SdfGrid& sdf, const Pose& init,
                         const RefineConfig& cfg) {
    RefineResult res;
    res.pose = init;
    if (points.size() < 10) {
        res.insufficient_support = true;
        return res;
    }

    Pose cur = init;
    Grad g = objective_and_gradient(points, sdf, cur, init, cfg, true);
    res.initial_objective = g.value;
    res.objective_trace.push_back(g.value);
    double best_value = g.value;
    Pose best_pose = cur;
    double alpha = sdf.voxel_size;  // meters of translation per unit gradient, roughly

    bool converged = false;
    for (int it = 0; it < cfg.max_iters && !converged; ++it) {
        res.iterations = it + 1;
        double g2 = g.d_t.squaredNorm() + g.d_w.squaredNorm();
        if (g2 < 1e-20) break;

        bool accepted = false;
        double a = alpha;
        for (int bt = 0; bt < 30; ++bt) {
            Pose cand = step_pose(cur, -a * g.d_t, -a * g.d_w);
            double f = objective_and_gradient(points, sdf, cand, init, cfg, false).value;
            if (f <= g.value - 1e-4 * a * g2) {
                converged = a * std::sqrt(g2) < cfg.step_tol;
                cur = cand;
                g = objective_and_gradient(points, sdf, cur, init, cfg, true);
                res.objective_trace.push_back(g.value);
                if (g.value < best_value) {
                    best_value = g.value;
                    best_pose = cur;
                }
                alpha = a * 2.0;  // optimistic growth, backtracking trims it
                accepted = true;
                break;
            }
            a *= 0.5;
        }
        if (!accepted) break;
    }

    res.pose = best_pose;
    res.final_objective = best_value;
    return res;
}

}  // namespace poseloop
