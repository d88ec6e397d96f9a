#include "poseloop/render.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace poseloop {

namespace {

const Vec3 kBackground(0.08, 0.08, 0.09);
constexpr double kAmbient = 0.3;

}  // namespace

Vec3 palette_color(int id) {
    // golden-angle hue walk, fixed saturation/value
    double h = std::fmod(0.13 + 0.61803398875 * id, 1.0) * 6.0;
    double c = 0.55, m = 0.25;
    double x = c * (1.0 - std::abs(std::fmod(h, 2.0) - 1.0));
    double r = m, g = m, b = m;
    switch (int(h)) {
        case 0: r += c; g += x; break;
        case 1: r += x; g += c; break;
        case 2: g += c; b += x; break;
        case 3: g += x; b += c; break;
        case 4: r += x; b += c; break;
        default: r += c; b += x; break;
    }
    return Vec3(r, g, b);
}

RenderResult render_region(const std::vector<RenderItem>& scene, const Pose& camera,
                           const CameraIntrinsics& K, const Vec3& light_dir, int u0, int v0,
                           int u1, int v1, const SupportPlane* plane) {
    RenderResult out;
    out.rgb = RgbImage(K.width, K.height, kBackground.cast<float>());
    out.depth = DepthImage(K.width, K.height, 0.0f);
    out.mask = MaskImage(K.width, K.height, 0);

    u0 = std::max(u0, 0);
    v0 = std::max(v0, 0);
    u1 = std::min(u1, K.width);
    v1 = std::min(v1, K.height);

    struct Local {
        const RenderItem* item;
        Pose world_to_obj;
    };
    std::vector<Local> locals;
    locals.reserve(scene.size());
    for (const auto& it : scene)
        if (it.shape) locals.push_back({&it, invert(it.pose)});

    Vec3 light = light_dir.normalized();
    const Vec3 cam_origin = camera.translation;

    for (int v = v0; v < v1; ++v) {
        for (int u = u0; u < u1; ++u) {
            Vec3 dir_cam((u - K.cx) / K.fx, (v - K.cy) / K.fy, 1.0);
            Vec3 dir_world = rotate_vector(camera, dir_cam);

            double best_t = std::numeric_limits<double>::infinity();
            const Local* best = nullptr;
            Vec3 best_normal = Vec3::Zero();  // world frame
            for (const auto& loc : locals) {
                Vec3 o = transform_point(loc.world_to_obj, cam_origin);
                Vec3 d = rotate_vector(loc.world_to_obj, dir_world);
                RayHit hit = loc.item->shape->raycast(o, d, 1e-6, best_t);
                if (hit.valid()) {
                    best_t = hit.t;
                    best = &loc;
                    best_normal = rotate_vector(loc.item->pose, hit.normal);
                }
            }

            bool plane_hit = false;
            if (plane && std::abs(dir_world[2]) > 1e-12) {
                double t = -cam_origin[2] / dir_world[2];
                if (t > 1e-6 && t < best_t) {
                    Vec3 p = cam_origin + t * dir_world;
                    if (std::abs(p[0]) <= plane->half_extent &&
                        std::abs(p[1]) <= plane->half_extent) {
                        best_t = t;
                        best = nullptr;
                        best_normal = Vec3(0, 0, 1);
                        plane_hit = true;
                    }
                }
            }

            if (!best && !plane_hit) continue;

            // dir_cam has z = 1, so the ray parameter equals camera-frame depth
            out.depth.at(u, v) = float(best_t);
            Vec3 n = best_normal;
            if (n.dot(dir_world) > 0) n = -n;
            double shade = kAmbient + (1.0 - kAmbient) * std::max(0.0, n.dot(-light));
            Vec3 albedo = best ? best->item->albedo : plane->albedo;
            out.rgb.at(u, v) = (albedo * shade).cwiseMin(1.0).cast<float>();
            if (best) out.mask.at(u, v) = best->item->id;
        }
    }
    return out;
}

RenderResult render(const std::vector<RenderItem>& scene, const Pose& camera,
                    const CameraIntrinsics& K, const Vec3& light_dir, const SupportPlane* plane) {
    return render_region(scene, camera, K, light_dir, 0, 0, K.width, K.height, plane);
}

PointCloud backproject(const DepthImage& depth, const MaskImage& mask, std::uint8_t id,
                       const CameraIntrinsics& K) {
    PointCloud pc;
    for (int v = 0; v < depth.height; ++v)
        for (int u = 0; u < depth.width; ++u) {
            if (mask.at(u, v) != id) continue;
            double z = depth.at(u, v);
            if (z <= 0.0) {
                ++pc.skipped_invalid;
                continue;
            }
            pc.points.emplace_back(z * (u - K.cx) / K.fx, z * (v - K.cy) / K.fy, z);
        }
    return pc;
}

Roi crop_roi(const RgbImage& img, double u, double v, double z, double diameter,
             const CameraIntrinsics& K, double margin) {
    if (z <= 0.0) throw std::invalid_argument("crop_roi requires z > 0");
    Roi roi;
    roi.center_u = u;
    roi.center_v = v;
    roi.side = margin * K.fx * diameter / z;
    roi.image = RgbImage(kRoiSize, kRoiSize, kBackground.cast<float>());

    double half = roi.side / 2.0;
    roi.out_of_view = (u + half < 0 || u - half > img.width - 1 || v + half < 0 ||
                       v - half > img.height - 1);

    double step = roi.side / kRoiSize;
    for (int ry = 0; ry < kRoiSize; ++ry)
        for (int rx = 0; rx < kRoiSize; ++rx) {
            double su = u - half + (rx + 0.5) * step;
            double sv = v - half + (ry + 0.5) * step;
            int u0 = int(std::floor(su)), v0 = int(std::floor(sv));
            double fu = su - u0, fv = sv - v0;
            Eigen::Vector3f acc = Eigen::Vector3f::Zero();
            for (int dj = 0; dj < 2; ++dj)
                for (int di = 0; di < 2; ++di) {
                    double w = (di ? fu : 1 - fu) * (dj ? fv : 1 - fv);
                    Eigen::Vector3f c = img.contains(u0 + di, v0 + dj)
                                            ? img.at(u0 + di, v0 + dj)
                                            : kBackground.cast<float>().eval();
                    acc += float(w) * c;
                }
            roi.image.at(rx, ry) = acc;
        }
    return roi;
}

}  // namespace poseloop
