#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "poseloop/image.hpp"
#include "poseloop/simulator.hpp"

namespace poseloop {

/// One gated pose annotation. Only accepted estimates are ever persisted;
/// ground truth lives in a separate file so the dataset reads like real
/// robot output with an optional scoring key.
struct AnnotationRecord {
    int scene_id = 0;
    int sequence = 0;
    int frame = 0;
    int object_id = 0;
    std::string model;
    Pose camera;  // dead-reckoned from reported deltas, camera -> world
    Pose pose;    // object in camera, refined estimate
    double s = 0;
    double e = 0;
    bool accepted = true;
    std::string roi_png;   // relative to the scene directory
    std::string mask_png;  // support mask, relative to the scene directory
};

struct GroundTruthRecord {
    int scene_id = 0;
    int sequence = 0;
    int frame = 0;
    int object_id = 0;
    Pose camera_true;  // camera -> world
    Pose pose_gt;      // object in camera
};

/// Layout: <root>/manifest.json plus one directory per scene with
/// annotations.jsonl, gt.jsonl, and PNG frames/crops.
class DatasetWriter {
public:
    explicit DatasetWriter(std::string root);

    void begin_scene(int scene_id, const Scene& scene, const ModelLibrary& lib);
    /// Saves rgb/depth once per (sequence, frame); returns scene-relative stem.
    std::string save_frame(int sequence, int frame, const RgbImage& rgb,
                           const DepthImage& depth);
    void add(const AnnotationRecord& ann, const GroundTruthRecord& gt, const RgbImage& roi,
             const MaskImage& support);
    void end_scene();

    /// Writes manifest.json. Output is byte-stable for identical runs.
    void finish(std::uint64_t master_seed, const std::string& config_echo);

    int total_records() const { return total_records_; }
    int total_frames() const { return total_frames_; }

private:
    struct SceneEntry {
        int id = 0;
        std::string dir;
        std::vector<std::pair<int, std::string>> objects;  // id, model name
        int sequences = 0;
        int frames = 0;
        int records = 0;
    };

    std::string root_;
    std::vector<SceneEntry> scenes_;
    std::ofstream ann_out_, gt_out_;
    std::map<std::pair<int, int>, std::string> frame_stems_;
    int max_sequence_ = -1;
    int total_frames_ = 0;
    int total_records_ = 0;
    int total_sequences_ = 0;
};

struct DatasetEntry {
    AnnotationRecord ann;
    GroundTruthRecord gt;
    std::string scene_dir;  // absolute
};

struct Dataset {
    std::vector<DatasetEntry> entries;  // sorted by scene, sequence, frame, object
    std::map<std::pair<int, int>, std::string> object_models;  // (scene, object) -> model
    int scenes = 0;
    int sequences = 0;
    int frames = 0;
    std::uint64_t master_seed = 0;
};

Dataset load_dataset(const std::string& root);

}  // namespace poseloop
