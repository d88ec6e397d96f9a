#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "poseloop/config.hpp"
#include "poseloop/dataset.hpp"
#include "poseloop/filter.hpp"
#include "poseloop/metrics.hpp"
#include "poseloop/refine.hpp"
#include "poseloop/sdf.hpp"

namespace poseloop {

/// Per-run immutable assets: models, their SDFs and codebooks, metric point
/// sets, camera, config.
struct PipelineContext {
    ModelLibrary lib;
    std::vector<SdfGrid> sdfs;                    // per model
    std::vector<Codebook> books;                  // per model
    std::vector<std::vector<Vec3>> model_points;  // per model, for ADD metrics
    CameraIntrinsics K;
    RunConfig cfg;

    int model_index(const std::string& name) const;
    std::vector<int> stage_models(int scene_id) const;

    /// Builds (or loads from cache_dir when set) SDFs and codebooks for every
    /// model in the library.
    static PipelineContext make(const RunConfig& cfg, const std::string& cache_dir = "");
};

/// Filter state for one object across a run.
struct ObjectTrack {
    int id = 0;
    int model = 0;
    ParticleSet particles;
    Pose estimate;  // refined object-in-camera pose at the last accepted frame
    bool initialized = false;
    bool failed = false;  // init budget exhausted; excluded until re-init
    int strikes = 0;      // consecutive rejected tracked frames
};

/// Everything tests and reports need about one object at one frame.
struct FrameOutcome {
    int object_id = 0;
    bool accepted = false;
    bool attempted_init = false;
    double s = -1;
    double e = std::numeric_limits<double>::infinity();
    Pose estimate;
    Pose gt;       // object in camera
    double add = 0;
};

struct PersistPayload {
    AnnotationRecord ann;
    GroundTruthRecord gt;
    RgbImage roi;
    MaskImage support;
    const Observation* observation = nullptr;
};
using PersistSink = std::function<void(const PersistPayload&)>;

/// Refine the estimate against the observation and gate it. The returned
/// outcome carries the refined pose; roi/support are filled for persistence.
/// camera_guess (camera -> world, e.g. dead-reckoned) places the desk and the
/// lab light in the verification render so it is comparable to the sensor
/// image pixel-for-pixel.
struct Assessment {
    Pose pose;
    PoseVerdict verdict;
    RgbImage roi;
    MaskImage support;
};
Assessment assess_pose(const PipelineContext& ctx, const Observation& obs,
                       const MaskImage& segmentation, int object_id, int model,
                       const Pose& candidate, const Pose& camera_guess);

/// Detection-seeded particle init followed by k_steps annealed filter steps,
/// refinement, and gating; retried with fresh seeds up to the attempt budget.
/// Objects missing from the segmentation fall back to a uniform image-wide
/// init in the single-object stage and are marked failed in clutter.
std::vector<FrameOutcome> initialize_scene(const PipelineContext& ctx, const Scene& scene,
                                           const Observation& obs,
                                           const MaskImage& segmentation,
                                           std::vector<ObjectTrack>& tracks,
                                           std::uint64_t seed);

struct TrackedFrame {
    int sequence = 0;
    int frame = 0;
    Pose camera_true;
    Pose camera_dead_reckoned;
    std::vector<FrameOutcome> outcomes;
};

struct TrackResult {
    std::vector<TrackedFrame> frames;
    bool aborted = false;  // every object unrecoverable
};

/// One pass over the trajectory: per waypoint, propagate each track by the
/// reported delta, run one filter update, refine and gate; persist accepted
/// frames through the sink. Three consecutive rejections trigger a fresh
/// initialization for that object. Uninitialized tracks initialize at the
/// first waypoint. When disable_motion_prior is set, propagation uses the
/// identity delta (ablation hook).
TrackResult track_scene(const PipelineContext& ctx, const Scene& scene,
                        const Trajectory& traj, std::vector<ObjectTrack>& tracks, int sequence,
                        std::uint64_t seed, const std::optional<Pose>& prev_camera,
                        const PersistSink& sink, bool disable_motion_prior = false);

struct CollectStats {
    int scenes = 0;
    int sequences = 0;
    int frames = 0;
    int records = 0;
    std::string output_dir;
};

/// The full annotation loop: generate scene, initialize, track, persist,
/// interact (push/grasp alternating round-robin over objects), repeat.
CollectStats collect(const PipelineContext& ctx, int n_scenes, int interactions_per_scene,
                     const std::string& out_dir, std::uint64_t master_seed);

struct AdaptReport {
    int holdout_scenes = 0;
    int samples_used = 0;
    double base_success = 0, adapted_success = 0;
    double base_mean_s = 0, adapted_mean_s = 0;
    double base_mean_add = 0, adapted_mean_add = 0;
    std::string to_json() const;
};

/// Fold the collected RoIs back into the codebooks and compare initialization
/// on fresh held-out single-object scenes with the unadapted vs adapted books.
AdaptReport adapt_and_compare(const PipelineContext& ctx, const std::string& dataset_dir,
                              double alpha, int holdout_scenes, std::uint64_t seed);

/// Per-record CSV plus JSON summary with per-model ADD/ADD-S means and a
/// threshold-accuracy AUC (trapezoid over kAucThresholds points in
/// [0, kAucMaxThreshold]). Byte-stable across reruns.
void write_report(const std::string& dataset_dir, const std::string& out_dir);

inline constexpr double kAucMaxThreshold = 0.10;  // meters
inline constexpr int kAucThresholds = 1001;

}  // namespace poseloop
