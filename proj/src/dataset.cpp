#include "poseloop/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <stdexcept>
#include <tuple>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace poseloop {

namespace {

json pose_to_json(const Pose& p) {
    return json{{"q", {p.rotation.w(), p.rotation.x(), p.rotation.y(), p.rotation.z()}},
                {"t", {p.translation[0], p.translation[1], p.translation[2]}}};
}

Pose pose_from_json(const json& j) {
    const auto& q = j.at("q");
    const auto& t = j.at("t");
    return Pose::from(Quat(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(),
                           q[3].get<double>()),
                      Vec3(t[0].get<double>(), t[1].get<double>(), t[2].get<double>()));
}

std::string zero_pad(int value, int width) {
    std::string s = std::to_string(value);
    return std::string(std::size_t(std::max(0, width - int(s.size()))), '0') + s;
}

}  // namespace

DatasetWriter::DatasetWriter(std::string root) : root_(std::move(root)) {
    fs::create_directories(root_);
}

void DatasetWriter::begin_scene(int scene_id, const Scene& scene, const ModelLibrary& lib) {
    SceneEntry entry;
    entry.id = scene_id;
    entry.dir = "scene_" + zero_pad(scene_id, 4);
    for (const auto& o : scene.objects) entry.objects.emplace_back(o.id, lib[o.model].name);
    scenes_.push_back(entry);

    fs::path dir = fs::path(root_) / entry.dir;
    fs::create_directories(dir);
    ann_out_.open(dir / "annotations.jsonl", std::ios::trunc);
    gt_out_.open(dir / "gt.jsonl", std::ios::trunc);
    if (!ann_out_ || !gt_out_)
        throw std::runtime_error("cannot open annotation files under " + dir.string());
    frame_stems_.clear();
    max_sequence_ = -1;
}

std::string DatasetWriter::save_frame(int sequence, int frame, const RgbImage& rgb,
                                      const DepthImage& depth) {
    auto key = std::make_pair(sequence, frame);
    auto it = frame_stems_.find(key);
    if (it != frame_stems_.end()) return it->second;

    std::string stem = "seq" + zero_pad(sequence, 2) + "_frame" + zero_pad(frame, 3);
    fs::path dir = fs::path(root_) / scenes_.back().dir;
    save_rgb_png(rgb, (dir / (stem + ".rgb.png")).string());
    save_depth_png(depth, (dir / (stem + ".depth.png")).string());
    frame_stems_[key] = stem;
    scenes_.back().frames += 1;
    total_frames_ += 1;
    if (sequence > max_sequence_) max_sequence_ = sequence;
    return stem;
}

void DatasetWriter::add(const AnnotationRecord& ann, const GroundTruthRecord& gt,
                        const RgbImage& roi, const MaskImage& support) {
    fs::path dir = fs::path(root_) / scenes_.back().dir;
    save_rgb_png(roi, (dir / ann.roi_png).string());
    save_mask_png(support, (dir / ann.mask_png).string());

    json a{{"scene", ann.scene_id},   {"seq", ann.sequence},
           {"frame", ann.frame},      {"object", ann.object_id},
           {"model", ann.model},      {"camera", pose_to_json(ann.camera)},
           {"pose", pose_to_json(ann.pose)}, {"s", ann.s},
           {"e", ann.e},              {"accepted", ann.accepted},
           {"roi_png", ann.roi_png},  {"mask_png", ann.mask_png}};
    ann_out_ << a.dump() << "\n";

    json g{{"scene", gt.scene_id},
           {"seq", gt.sequence},
           {"frame", gt.frame},
           {"object", gt.object_id},
           {"camera_true", pose_to_json(gt.camera_true)},
           {"pose_gt", pose_to_json(gt.pose_gt)}};
    gt_out_ << g.dump() << "\n";

    scenes_.back().records += 1;
    total_records_ += 1;
}

void DatasetWriter::end_scene() {
    scenes_.back().sequences = max_sequence_ + 1;
    total_sequences_ += scenes_.back().sequences;
    ann_out_.close();
    gt_out_.close();
}

void DatasetWriter::finish(std::uint64_t master_seed, const std::string& config_echo) {
    json scenes = json::array();
    for (const auto& s : scenes_) {
        json objs = json::array();
        for (const auto& [id, model] : s.objects) objs.push_back({{"id", id}, {"model", model}});
        scenes.push_back({{"id", s.id},
                          {"dir", s.dir},
                          {"objects", objs},
                          {"sequences", s.sequences},
                          {"frames", s.frames},
                          {"records", s.records}});
    }
    json manifest{{"scenes", int(scenes_.size())}, {"sequences", total_sequences_},
                  {"frames", total_frames_},       {"records", total_records_},
                  {"master_seed", master_seed},    {"scene_list", scenes},
                  {"config", config_echo}};
    std::ofstream out(fs::path(root_) / "manifest.json", std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write manifest under " + root_);
    out << manifest.dump(2) << "\n";
}

Dataset load_dataset(const std::string& root) {
    Dataset ds;
    fs::path mpath = fs::path(root) / "manifest.json";
    std::ifstream mf(mpath);
    if (!mf) throw std::runtime_error("no manifest.json under " + root);
    json manifest = json::parse(mf);
    ds.scenes = manifest.at("scenes").get<int>();
    ds.sequences = manifest.at("sequences").get<int>();
    ds.frames = manifest.at("frames").get<int>();
    ds.master_seed = manifest.at("master_seed").get<std::uint64_t>();

    for (const auto& s : manifest.at("scene_list")) {
        int scene_id = s.at("id").get<int>();
        for (const auto& o : s.at("objects"))
            ds.object_models[{scene_id, o.at("id").get<int>()}] =
                o.at("model").get<std::string>();

        fs::path dir = fs::path(root) / s.at("dir").get<std::string>();
        std::ifstream af(dir / "annotations.jsonl");
        std::ifstream gf(dir / "gt.jsonl");
        if (!af || !gf)
            throw std::runtime_error("scene directory missing annotation files: " +
                                     dir.string());
        std::string aline, gline;
        while (std::getline(af, aline)) {
            if (!std::getline(gf, gline))
                throw std::runtime_error("gt.jsonl shorter than annotations.jsonl in " +
                                         dir.string());
            json a = json::parse(aline);
            json g = json::parse(gline);
            DatasetEntry e;
            e.scene_dir = dir.string();
            e.ann.scene_id = a.at("scene").get<int>();
            e.ann.sequence = a.at("seq").get<int>();
            e.ann.frame = a.at("frame").get<int>();
            e.ann.object_id = a.at("object").get<int>();
            e.ann.model = a.at("model").get<std::string>();
            e.ann.camera = pose_from_json(a.at("camera"));
            e.ann.pose = pose_from_json(a.at("pose"));
            e.ann.s = a.at("s").get<double>();
            e.ann.e = a.at("e").get<double>();
            e.ann.accepted = a.at("accepted").get<bool>();
            e.ann.roi_png = a.at("roi_png").get<std::string>();
            e.ann.mask_png = a.at("mask_png").get<std::string>();
            e.gt.scene_id = g.at("scene").get<int>();
            e.gt.sequence = g.at("seq").get<int>();
            e.gt.frame = g.at("frame").get<int>();
            e.gt.object_id = g.at("object").get<int>();
            e.gt.camera_true = pose_from_json(g.at("camera_true"));
            e.gt.pose_gt = pose_from_json(g.at("pose_gt"));
            if (e.gt.scene_id != e.ann.scene_id || e.gt.frame != e.ann.frame ||
                e.gt.object_id != e.ann.object_id)
                throw std::runtime_error("annotation/gt rows out of sync in " + dir.string());
            ds.entries.push_back(std::move(e));
        }
    }
    std::sort(ds.entries.begin(), ds.entries.end(), [](const auto& a, const auto& b) {
        return std::tie(a.ann.scene_id, a.ann.sequence, a.ann.frame, a.ann.object_id) <
               std::tie(b.ann.scene_id, b.ann.sequence, b.ann.frame, b.ann.object_id);
    });
    return ds;
}

}  // namespace poseloop
