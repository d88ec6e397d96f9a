#pragma once

#include <string>
#include <vector>

#include "poseloop/image.hpp"
#include "poseloop/render.hpp"

namespace poseloop {

inline constexpr int kCodePatch = 16;
inline constexpr int kCodeLength = 3 * kCodePatch * kCodePatch;

/// Fixed-length appearance descriptor, unit L2 norm. All-background RoIs
/// map to the reserved zero code.
struct Code {
    Eigen::VectorXf descriptor = Eigen::VectorXf::Zero(kCodeLength);

    bool valid() const { return descriptor.squaredNorm() > 0.25f; }
};

/// Box-average the 64x64 RoI to 16x16, subtract the per-channel mean,
/// L2-normalize. Deterministic. RoIs with no contrast (max-min spread below
/// 0.05 after downsampling) count as background and yield the zero code.
Code encode(const RgbImage& roi);

double cosine_similarity(const Code& a, const Code& b);

/// One template code per rotation cell, rendered alone at (0, 0, z0).
struct Codebook {
    int object_id = 0;
    GridDims dims;
    double z0 = 0.5;        // canonical camera distance (meters)
    double diameter = 0.0;  // of the source mesh, for crop sizing
    Eigen::MatrixXf codes;  // cells x kCodeLength, row-major cell order
    /// Distance from object center to the mean visible surface per rotation
    /// cell; lets depth evidence compare center z against measured surface z.
    Eigen::VectorXf center_offsets;

    int cell_count() const { return int(codes.rows()); }
    Code code(int cell) const;
};

Codebook build_codebook(const TriangleMesh& mesh, const CameraIntrinsics& K, GridDims dims,
                        double z0, int object_id = 1);

/// Per-cell weight proportional to exp(beta * max(0, cos)). A zero query code
/// yields the uniform grid and sets *degenerate when given.
RotationGrid rotation_likelihoods(const Code& c, const Codebook& book, double beta = 40.0,
                                  bool* degenerate = nullptr);

struct AdaptSample {
    RgbImage roi;  // 64x64
    int cell = 0;
};

/// Blend observed appearance into the templates: cells with at least one
/// sample get normalize((1-alpha)*old + alpha*mean(sample codes)). Zero-code
/// samples are ignored.
Codebook adapt_codebook(const Codebook& book, const std::vector<AdaptSample>& samples,
                        double alpha);

// Binary persistence: header (object id, dims, z0, diameter, code length as
// int32/float32) + float32 codes in cell order.
void save_codebook(const Codebook& book, const std::string& path);
Codebook load_codebook(const std::string& path);

}  // namespace poseloop
