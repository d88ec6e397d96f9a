#pragma once

#include <cstdint>
#include <vector>

#include "poseloop/encoder.hpp"

namespace poseloop {

/// One translation hypothesis carrying a full rotation distribution.
struct Particle {
    double u = 0, v = 0;  // pixels
    double z = 0;         // meters, > 0
    RotationGrid rotation;
    double weight = 0;
};

struct ParticleSet {
    std::vector<Particle> particles;
    int object_id = 0;

    int size() const { return int(particles.size()); }
    double weight_sum() const;
    void normalize_weights();
};

struct FilterConfig {
    int n_particles = 100;
    double sigma_u = 20.0;  // pixels
    double sigma_v = 20.0;  // pixels
    double sigma_z = 0.1;   // meters; uniform half-range around measured depth
    int k_steps = 50;       // filtering steps during initialization
    double sigma_t = 0.015;  // meters, translation process noise
    double sigma_r = 0.05;   // radians, rotation diffusion per step
    double beta = 40.0;      // appearance likelihood sharpness
    double sigma_d = 0.02;   // meters, depth likelihood width
    bool weight_by_sum = false;  // sum-over-cells evidence instead of max cell
};

/// Gaussian pixel scatter around the detected center, depth sampled uniformly
/// within +-sigma_z of the measurement, uniform rotation grids. Zero-depth
/// pixels fall back to the nearest valid pixel within 10 px; if the center
/// itself has none, throws "depth hole at detection".
ParticleSet init_particles(double u_hat, double v_hat, const DepthImage& depth, GridDims dims,
                           const FilterConfig& cfg, std::uint64_t seed, int object_id = 1);

/// Uniform over all valid-depth pixels. Throws if the depth image is empty.
ParticleSet global_init(const DepthImage& depth, GridDims dims, const FilterConfig& cfg,
                        std::uint64_t seed, int object_id = 1);

struct UpdateResult {
    ParticleSet particles;
    bool reinit_needed = false;  // every RoI was background; weights left uniform
    double ess = 0.0;            // effective sample size before any resampling
    bool resampled = false;
};

/// Observation update: encode each particle's RoI, Bayes-update its rotation
/// grid against the codebook, weight by appearance (exp(beta * best cosine),
/// or the prior-weighted sum when cfg.weight_by_sum) times a Gaussian depth
/// factor exp(-(z - D(u,v))^2 / (2 sigma_d^2)). Invalid measured depth
/// contributes no depth evidence. Background (zero-code) RoIs get weight 0.
/// Resamples systematically when ESS < N/2 (deterministic offset).
UpdateResult update(const ParticleSet& ps, const RgbImage& rgb, const DepthImage& depth,
                    const CameraIntrinsics& K, const Codebook& book, const FilterConfig& cfg);

/// Motion prior: x' = dR * x + dt + Normal(0, noise_scale * sigma_t), applied
/// to each backprojected particle, then reprojected; rotation grids shift by
/// dR and blur by noise_scale * sigma_r. Particles pushed outside the frustum
/// clamp to its boundary (count reported via clamped when given).
ParticleSet propagate(const ParticleSet& ps, const MotionDelta& delta,
                      const CameraIntrinsics& K, const FilterConfig& cfg, std::uint64_t seed,
                      double noise_scale = 1.0, int* clamped = nullptr);

/// Weighted mean translation (camera frame) and the rotation-grid expectation
/// of the weight-averaged grid. Throws if all weights are zero.
Pose estimate(const ParticleSet& ps, const CameraIntrinsics& K);

double effective_sample_size(const ParticleSet& ps);

}  // namespace poseloop
