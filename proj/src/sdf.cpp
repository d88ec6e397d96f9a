#include "poseloop/sdf.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

#include "poseloop/bvh.hpp"

namespace poseloop {

SdfGrid build_sdf(const TriangleMesh& mesh, double voxel_size, int padding) {
    if (voxel_size <= 0.0) throw std::invalid_argument("voxel_size must be positive");
    std::string why;
    if (!mesh.is_watertight(&why))
        throw std::runtime_error("mesh is not watertight: " + why);
    padding = std::max(padding, 2);

    Vec3 lo, hi;
    mesh.bounds(lo, hi);

    SdfGrid g;
    g.voxel_size = voxel_size;
    g.origin = lo - voxel_size * Vec3::Constant(padding);
    for (int a = 0; a < 3; ++a)
        g.dims[a] = int(std::ceil((hi[a] - g.origin[a]) / voxel_size)) + padding + 1;
    g.values.resize(std::size_t(g.dims[0]) * g.dims[1] * g.dims[2]);

    TriangleBvh bvh(mesh);
    for (int k = 0; k < g.dims[2]; ++k)
        for (int j = 0; j < g.dims[1]; ++j)
            for (int i = 0; i < g.dims[0]; ++i) {
                Vec3 p = g.origin + voxel_size * Vec3(i, j, k);
                double d = bvh.closest_distance(p);
                if (bvh.is_inside(p)) d = -d;
                g.values[std::size_t((k * g.dims[1] + j) * g.dims[0] + i)] = float(d);
            }
    return g;
}

SdfSample sample_sdf(const SdfGrid& g, const Vec3& x) {
    SdfSample out;
    if (g.values.empty()) throw std::runtime_error("empty SDF grid");

    Vec3 hi = g.max_corner();
    Vec3 q = x.cwiseMax(g.origin).cwiseMin(hi);
    Vec3 off = x - q;  // zero inside bounds
    double outside = off.norm();

    Vec3 f = (q - g.origin) / g.voxel_size;
    int i0[3], i1[3];
    double w[3];
    for (int a = 0; a < 3; ++a) {
        i0[a] = std::clamp(int(std::floor(f[a])), 0, g.dims[a] - 2 >= 0 ? g.dims[a] - 2 : 0);
        i1[a] = std::min(i0[a] + 1, g.dims[a] - 1);
        w[a] = std::clamp(f[a] - i0[a], 0.0, 1.0);
    }

    double c[2][2][2];
    for (int dk = 0; dk < 2; ++dk)
        for (int dj = 0; dj < 2; ++dj)
            for (int di = 0; di < 2; ++di)
                c[di][dj][dk] = g.at(di ? i1[0] : i0[0], dj ? i1[1] : i0[1], dk ? i1[2] : i0[2]);

    // collapse z, then y
    double cz[2][2], cy[2];
    for (int di = 0; di < 2; ++di)
        for (int dj = 0; dj < 2; ++dj)
            cz[di][dj] = c[di][dj][0] * (1 - w[2]) + c[di][dj][1] * w[2];
    for (int di = 0; di < 2; ++di) cy[di] = cz[di][0] * (1 - w[1]) + cz[di][1] * w[1];
    out.value = cy[0] * (1 - w[0]) + cy[1] * w[0];

    double gx = (cy[1] - cy[0]) / g.voxel_size;
    double gy = ((cz[0][1] - cz[0][0]) * (1 - w[0]) + (cz[1][1] - cz[1][0]) * w[0]) / g.voxel_size;
    double gz = 0.0;
    for (int di = 0; di < 2; ++di)
        for (int dj = 0; dj < 2; ++dj) {
            double wd = (di ? w[0] : 1 - w[0]) * (dj ? w[1] : 1 - w[1]);
            gz += wd * (c[di][dj][1] - c[di][dj][0]);
        }
    gz /= g.voxel_size;
    out.gradient = Vec3(gx, gy, gz);

    if (outside > 0.0) {
        out.far_field = true;
        out.value += outside;
        out.gradient = off / outside;  // dominant term; steers back to grid
    }
    return out;
}

namespace {

template <typename T>
void put(std::ofstream& f, T v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& f) {
    T v;
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

}  // namespace

void save_sdf(const SdfGrid& g, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    const char magic[4] = {'S', 'D', 'F', '1'};
    f.write(magic, 4);
    for (int a = 0; a < 3; ++a) put<std::int32_t>(f, g.dims[a]);
    put<float>(f, float(g.voxel_size));
    for (int a = 0; a < 3; ++a) put<float>(f, float(g.origin[a]));
    f.write(reinterpret_cast<const char*>(g.values.data()),
            std::streamsize(g.values.size() * sizeof(float)));
    if (!f) throw std::runtime_error("short write to " + path);
}

SdfGrid load_sdf(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::string(magic, 4) != "SDF1")
        throw std::runtime_error(path + " is not an SDF grid file");
    SdfGrid g;
    for (int a = 0; a < 3; ++a) g.dims[a] = get<std::int32_t>(f);
    g.voxel_size = get<float>(f);
    for (int a = 0; a < 3; ++a) g.origin[a] = get<float>(f);
    std::size_t n = std::size_t(g.dims[0]) * g.dims[1] * g.dims[2];
    if (g.dims[0] <= 0 || g.dims[1] <= 0 || g.dims[2] <= 0 || g.voxel_size <= 0)
        throw std::runtime_error(path + " has a corrupt header");
    g.values.resize(n);
    f.read(reinterpret_cast<char*>(g.values.data()), std::streamsize(n * sizeof(float)));
    if (!f) throw std::runtime_error(path + " is truncated");
    return g;
}

}  // namespace poseloop
