#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "poseloop/geometry.hpp"

namespace poseloop {

template <typename T>
struct Image {
    int width = 0;
    int height = 0;
    std::vector<T> data;

    Image() = default;
    Image(int w, int h, T fill = T{}) : width(w), height(h), data(std::size_t(w) * h, fill) {}

    T& at(int u, int v) { return data[std::size_t(v) * width + u]; }
    const T& at(int u, int v) const { return data[std::size_t(v) * width + u]; }
    bool contains(int u, int v) const { return u >= 0 && u < width && v >= 0 && v < height; }
};

/// Linear RGB in [0,1].
using RgbImage = Image<Eigen::Vector3f>;
/// Meters; 0 encodes invalid.
using DepthImage = Image<float>;
/// Object id per pixel; 0 = background.
using MaskImage = Image<std::uint8_t>;

// PNG persistence. RGB as 8-bit sRGB-agnostic values, depth as 16-bit
// millimeters, mask as 8-bit ids.
void save_rgb_png(const RgbImage& img, const std::string& path);
RgbImage load_rgb_png(const std::string& path);
void save_depth_png(const DepthImage& img, const std::string& path);
DepthImage load_depth_png(const std::string& path);
void save_mask_png(const MaskImage& img, const std::string& path);
MaskImage load_mask_png(const std::string& path);

struct CameraIntrinsics {
    double fx = 0, fy = 0, cx = 0, cy = 0;
    int width = 0, height = 0;

    bool valid() const {
        return fx > 0 && fy > 0 && cx >= 0 && cx < width && cy >= 0 && cy < height;
    }
};

/// Desk-scale default used across tools and tests.
CameraIntrinsics default_intrinsics(int width = 160, int height = 120);

inline Vec3 pixel_to_point(double u, double v, double z, const CameraIntrinsics& K) {
    return {z * (u - K.cx) / K.fx, z * (v - K.cy) / K.fy, z};
}

inline void point_to_pixel(const Vec3& p, const CameraIntrinsics& K, double& u, double& v,
                           double& z) {
    z = p[2];
    u = K.fx * p[0] / p[2] + K.cx;
    v = K.fy * p[1] / p[2] + K.cy;
}

}  // namespace poseloop
