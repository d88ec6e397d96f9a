#include "poseloop/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

namespace poseloop {

Code encode(const RgbImage& roi) {
    if (roi.width != kRoiSize || roi.height != kRoiSize)
        throw std::invalid_argument("encode expects a 64x64 RoI");
    constexpr int box = kRoiSize / kCodePatch;

    Eigen::VectorXf v(kCodeLength);
    float lo = 1e9f, hi = -1e9f;
    for (int c = 0; c < 3; ++c)
        for (int py = 0; py < kCodePatch; ++py)
            for (int px = 0; px < kCodePatch; ++px) {
                float acc = 0.f;
                for (int dy = 0; dy < box; ++dy)
                    for (int dx = 0; dx < box; ++dx)
                        acc += roi.at(px * box + dx, py * box + dy)[c];
                acc /= float(box * box);
                v[(c * kCodePatch + py) * kCodePatch + px] = acc;
                lo = std::min(lo, acc);
                hi = std::max(hi, acc);
            }

    Code out;
    if (hi - lo < 0.05f) return out;  // featureless: background or dead sensor

    for (int c = 0; c < 3; ++c) {
        auto seg = v.segment(c * kCodePatch * kCodePatch, kCodePatch * kCodePatch);
        seg.array() -= seg.mean();
    }
    float n = v.norm();
    if (n < 1e-12f) return out;
    out.descriptor = v / n;
    return out;
}

double cosine_similarity(const Code& a, const Code& b) {
    if (!a.valid() || !b.valid())
        throw std::invalid_argument("cosine similarity of a zero code");
    double s = double(a.descriptor.dot(b.descriptor)) /
               (double(a.descriptor.norm()) * double(b.descriptor.norm()));
    return std::clamp(s, -1.0, 1.0);
}

Code Codebook::code(int cell) const {
    Code c;
    c.descriptor = codes.row(cell).transpose();
    return c;
}

Codebook build_codebook(const TriangleMesh& mesh, const CameraIntrinsics& K, GridDims dims,
                        double z0, int object_id) {
    if (z0 <= 0) throw std::invalid_argument("canonical distance must be positive");
    Codebook book;
    book.object_id = object_id;
    book.dims = dims;
    book.z0 = z0;
    book.diameter = mesh.diameter();
    book.codes.resize(dims.cells(), kCodeLength);
    book.center_offsets = Eigen::VectorXf::Zero(dims.cells());

    TriangleBvh bvh(mesh);
    double side = kRoiMargin * K.fx * book.diameter / z0;
    int u0 = int(std::floor(K.cx - side / 2)) - 1;
    int v0 = int(std::floor(K.cy - side / 2)) - 1;
    int u1 = int(std::ceil(K.cx + side / 2)) + 2;
    int v1 = int(std::ceil(K.cy + side / 2)) + 2;

    RotationGrid grid = RotationGrid::uniform(dims);
    RenderItem item;
    item.shape = &bvh;
    item.id = 1;
    item.albedo = palette_color(object_id);
    for (int cell = 0; cell < dims.cells(); ++cell) {
        item.pose = Pose::from(grid.cell_quaternion(cell), Vec3(0, 0, z0));
        auto frame = render_region({item}, Pose::identity(), K, Vec3(0.4, 0.2, -1.0), u0, v0,
                                   u1, v1);
        Roi roi = crop_roi(frame.rgb, K.cx, K.cy, z0, book.diameter, K);
        Code c = encode(roi.image);
        if (c.valid())
            book.codes.row(cell) = c.descriptor.transpose();
        else
            book.codes.row(cell).setZero();

        double depth_sum = 0.0;
        int depth_n = 0;
        for (float d : frame.depth.data)
            if (d > 0.f) {
                depth_sum += d;
                ++depth_n;
            }
        if (depth_n > 0) book.center_offsets[cell] = float(z0 - depth_sum / depth_n);
    }
    return book;
}

RotationGrid rotation_likelihoods(const Code& c, const Codebook& book, double beta,
                                  bool* degenerate) {
    if (degenerate) *degenerate = false;
    RotationGrid grid = RotationGrid::uniform(book.dims);
    if (!c.valid()) {
        if (degenerate) *degenerate = true;
        return grid;
    }
    Eigen::VectorXf cos = book.codes * c.descriptor;
    for (int i = 0; i < grid.weights().size(); ++i)
        grid.weights()[i] = std::exp(beta * std::max(0.0, double(cos[i])));
    grid.normalize();
    return grid;
}

Codebook adapt_codebook(const Codebook& book, const std::vector<AdaptSample>& samples,
                        double alpha) {
    if (alpha < 0 || alpha > 1) throw std::invalid_argument("mix ratio must be in [0, 1]");
    Codebook out = book;
    if (samples.empty() || alpha == 0.0) return out;

    Eigen::MatrixXf sums = Eigen::MatrixXf::Zero(book.cell_count(), kCodeLength);
    std::vector<int> counts(book.cell_count(), 0);
    for (const auto& s : samples) {
        if (s.cell < 0 || s.cell >= book.cell_count())
            throw std::out_of_range("adapt sample cell out of range");
        Code c = encode(s.roi);
        if (!c.valid()) continue;
        sums.row(s.cell) += c.descriptor.transpose();
        counts[s.cell] += 1;
    }
    for (int cell = 0; cell < book.cell_count(); ++cell) {
        if (counts[cell] == 0) continue;
        Eigen::RowVectorXf mean = sums.row(cell) / float(counts[cell]);
        Eigen::RowVectorXf mixed =
            float(1.0 - alpha) * book.codes.row(cell) + float(alpha) * mean;
        float n = mixed.norm();
        if (n > 1e-12f) out.codes.row(cell) = mixed / n;
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

void save_codebook(const Codebook& book, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    const char magic[4] = {'C', 'B', 'K', '1'};
    f.write(magic, 4);
    put<std::int32_t>(f, book.object_id);
    put<std::int32_t>(f, book.dims.n_pitch);
    put<std::int32_t>(f, book.dims.n_yaw);
    put<std::int32_t>(f, book.dims.n_roll);
    put<float>(f, float(book.z0));
    put<float>(f, float(book.diameter));
    put<std::int32_t>(f, kCodeLength);
    // Eigen default storage is column-major; write row by row through a buffer.
    std::vector<float> row(kCodeLength);
    for (int cell = 0; cell < book.cell_count(); ++cell) {
        Eigen::Map<Eigen::RowVectorXf>(row.data(), kCodeLength) = book.codes.row(cell);
        f.write(reinterpret_cast<const char*>(row.data()),
                std::streamsize(row.size() * sizeof(float)));
    }
    f.write(reinterpret_cast<const char*>(book.center_offsets.data()),
            std::streamsize(book.center_offsets.size() * sizeof(float)));
    if (!f) throw std::runtime_error("short write to " + path);
}

Codebook load_codebook(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::string(magic, 4) != "CBK1")
        throw std::runtime_error(path + " is not a codebook file");
    Codebook book;
    book.object_id = get<std::int32_t>(f);
    book.dims.n_pitch = get<std::int32_t>(f);
    book.dims.n_yaw = get<std::int32_t>(f);
    book.dims.n_roll = get<std::int32_t>(f);
    book.z0 = get<float>(f);
    book.diameter = get<float>(f);
    int len = get<std::int32_t>(f);
    if (len != kCodeLength) throw std::runtime_error(path + " has an unsupported code length");
    int cells = book.dims.cells();
    if (cells <= 0 || book.z0 <= 0) throw std::runtime_error(path + " has a corrupt header");
    book.codes.resize(cells, kCodeLength);
    std::vector<float> row(kCodeLength);
    for (int cell = 0; cell < cells; ++cell) {
        f.read(reinterpret_cast<char*>(row.data()),
               std::streamsize(row.size() * sizeof(float)));
        book.codes.row(cell) = Eigen::Map<Eigen::RowVectorXf>(row.data(), kCodeLength);
    }
    book.center_offsets.resize(cells);
    f.read(reinterpret_cast<char*>(book.center_offsets.data()),
           std::streamsize(cells * sizeof(float)));
    if (!f) throw std::runtime_error(path + " is truncated");
    return book;
}

}  // namespace poseloop
