#include "poseloop/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <json.hpp>

#include "poseloop/encoder.hpp"
#include "poseloop/evaluate.hpp"
#include "poseloop/mesh.hpp"
#include "poseloop/render.hpp"
#include "poseloop/rng.hpp"
#include "poseloop/simulator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace poseloop {

namespace {

constexpr int kSdfDivisions = 64;  // voxels across the model diameter
constexpr int kMetricPoints = 512;
constexpr std::uint64_t kMetricSeed = 0x5eed;
constexpr int kMaxStrikes = 3;
constexpr double kAnnealDecay = 0.85;  // per-step shrink of init jitter
constexpr double kAnnealFloor = 0.1;

std::vector<Vec3> metric_points(const TriangleMesh& mesh) {
    return sample_surface(mesh, kMetricPoints, kMetricSeed);
}

std::string zero_pad(int value, int width) {
    std::string s = std::to_string(value);
    return std::string(std::size_t(std::max(0, width - int(s.size()))), '0') + s;
}

void sync_tracks(std::vector<ObjectTrack>& tracks, const Scene& scene) {
    if (tracks.empty()) {
        tracks.reserve(scene.objects.size());
        for (const auto& o : scene.objects) {
            ObjectTrack t;
            t.id = o.id;
            t.model = o.model;
            tracks.push_back(std::move(t));
        }
        return;
    }
    if (tracks.size() != scene.objects.size())
        throw std::invalid_argument("track list does not match the scene");
    for (std::size_t i = 0; i < tracks.size(); ++i)
        if (tracks[i].id != scene.objects[i].id || tracks[i].model != scene.objects[i].model)
            throw std::invalid_argument("track list does not match the scene");
}

struct InitOutcome {
    FrameOutcome outcome;
    Assessment assessment;  // meaningful only when assessed
    bool assessed = false;
};

/// Shared by initialize_scene, track_scene re-localization, and the
/// adaptation holdout: seed particles from the detection (or the whole image
/// when allowed), anneal k_steps same-image updates, refine and gate; retry
/// with fresh seeds until accepted or the budget runs out.
InitOutcome init_object(const PipelineContext& ctx, const std::vector<Codebook>& books,
                        const Observation& obs, const MaskImage& seg, int object_id, int model,
                        const Pose& camera_guess, std::uint64_t seed, ObjectTrack& track) {
    InitOutcome r;
    r.outcome.object_id = object_id;
    r.outcome.attempted_init = true;

    double su = 0, sv = 0;
    long n = 0;
    for (int v = 0; v < seg.height; ++v)
        for (int u = 0; u < seg.width; ++u)
            if (seg.at(u, v) == object_id) {
                su += u;
                sv += v;
                ++n;
            }
    const bool detected = n > 0;
    // With clutter an undetected object has no usable seed; alone in the
    // scene, scattering particles over all valid depth still works.
    if (!detected && ctx.cfg.stage != Stage::kSingleObject) return r;

    const FilterConfig& fc = ctx.cfg.filter;
    for (int attempt = 0; attempt < ctx.cfg.max_init_attempts; ++attempt) {
        std::uint64_t aseed = Rng::derive(seed, 0xa11, std::uint64_t(attempt));
        ParticleSet ps;
        try {
            if (detected) {
                try {
                    ps = init_particles(su / double(n), sv / double(n), obs.depth, ctx.cfg.grid,
                                        fc, aseed, object_id);
                } catch (const std::runtime_error&) {
                    // depth hole at the detection: fall back to a wide seed
                    ps = global_init(obs.depth, ctx.cfg.grid, fc, aseed, object_id);
                }
            } else {
                ps = global_init(obs.depth, ctx.cfg.grid, fc, aseed, object_id);
            }
        } catch (const std::runtime_error&) {
            break;  // no valid depth anywhere; this frame is unusable
        }

        bool dead = false;
        for (int k = 0; k < fc.k_steps; ++k) {
            double scale = std::max(kAnnealFloor, std::pow(kAnnealDecay, k));
            ps = propagate(ps, Pose::identity(), ctx.K, fc, Rng::derive(aseed, 0x57e9, k),
                           scale);
            UpdateResult ur = update(ps, obs.rgb, obs.depth, ctx.K, books[model], fc);
            if (ur.reinit_needed) {
                dead = true;
                break;
            }
            ps = std::move(ur.particles);
        }
        if (dead) continue;

        Pose cand = estimate(ps, ctx.K);
        Assessment as = assess_pose(ctx, obs, seg, object_id, model, cand, camera_guess);
        r.outcome.s = as.verdict.s;
        r.outcome.e = as.verdict.e;
        r.outcome.estimate = as.pose;
        r.assessment = std::move(as);
        r.assessed = true;
        if (r.assessment.verdict.accepted) {
            r.outcome.accepted = true;
            track.particles = std::move(ps);
            track.estimate = r.outcome.estimate;
            track.initialized = true;
            track.failed = false;
            track.strikes = 0;
            return r;
        }
    }
    return r;
}

}  // namespace

int PipelineContext::model_index(const std::string& name) const {
    for (std::size_t i = 0; i < lib.size(); ++i)
        if (lib[i].name == name) return int(i);
    return -1;
}

std::vector<int> PipelineContext::stage_models(int scene_id) const {
    if (cfg.stage == Stage::kSingleObject) return {scene_id % int(lib.size())};
    std::vector<int> all(lib.size());
    std::iota(all.begin(), all.end(), 0);
    return all;
}

PipelineContext PipelineContext::make(const RunConfig& cfg, const std::string& cache_dir) {
    PipelineContext ctx;
    ctx.cfg = cfg;
    ctx.K = cfg.intrinsics();

    ModelLibrary all = standard_models();
    if (cfg.scene_models.empty()) {
        ctx.lib = std::move(all);
    } else {
        for (const auto& name : cfg.scene_models) {
            auto it = std::find_if(all.begin(), all.end(),
                                   [&](const ObjectModel& m) { return m.name == name; });
            if (it == all.end()) throw std::runtime_error("unknown model: " + name);
            ctx.lib.push_back(*it);
        }
    }

    if (!cache_dir.empty()) fs::create_directories(cache_dir);

    for (std::size_t i = 0; i < ctx.lib.size(); ++i) {
        const ObjectModel& m = ctx.lib[i];
        const double voxel = m.diameter / kSdfDivisions;

        SdfGrid sdf;
        bool have_sdf = false;
        fs::path sdf_path;
        if (!cache_dir.empty()) {
            sdf_path = fs::path(cache_dir) /
                       (m.name + "_v" + std::to_string(kSdfDivisions) + ".sdf");
            if (fs::exists(sdf_path)) {
                sdf = load_sdf(sdf_path.string());
                have_sdf = std::abs(sdf.voxel_size - voxel) < 1e-9;
            }
        }
        if (!have_sdf) {
            sdf = build_sdf(m.mesh, voxel);
            if (!cache_dir.empty()) save_sdf(sdf, sdf_path.string());
        }
        ctx.sdfs.push_back(std::move(sdf));

        const int book_id = int(i) + 1;
        Codebook book;
        bool have_book = false;
        fs::path book_path;
        if (!cache_dir.empty()) {
            std::ostringstream bn;
            bn << m.name << "_i" << book_id << "_g" << cfg.grid.n_pitch << "x" << cfg.grid.n_yaw
               << "x" << cfg.grid.n_roll << "_z" << int(std::lround(cfg.z0 * 1000)) << "_w"
               << cfg.image_width << ".cbk";
            book_path = fs::path(cache_dir) / bn.str();
            if (fs::exists(book_path)) {
                book = load_codebook(book_path.string());
                have_book = book.dims == cfg.grid && std::abs(book.z0 - cfg.z0) < 1e-6 &&
                            std::abs(book.diameter - m.diameter) < 1e-6 &&
                            book.object_id == book_id &&
                            book.center_offsets.size() == book.dims.cells();
            }
        }
        if (!have_book) {
            book = build_codebook(m.mesh, ctx.K, cfg.grid, cfg.z0, book_id);
            if (!cache_dir.empty()) save_codebook(book, book_path.string());
        }
        ctx.books.push_back(std::move(book));

        ctx.model_points.push_back(metric_points(m.mesh));
    }
    return ctx;
}

Assessment assess_pose(const PipelineContext& ctx, const Observation& obs,
                       const MaskImage& segmentation, int object_id, int model,
                       const Pose& candidate, const Pose& camera_guess) {
    const ObjectModel& m = ctx.lib[std::size_t(model)];
    const SupportPlane plane = workspace_plane(ctx.cfg.workspace_lo, ctx.cfg.workspace_hi);

    // Render in world coordinates so the desk and the lab light land where the
    // sensor sees them; the candidate itself stays an object-in-camera pose.
    RenderItem item;
    item.shape = m.bvh.get();
    item.pose = compose(camera_guess, candidate);
    item.id = std::uint8_t(object_id);
    item.albedo = palette_color(model + 1);

    MaskImage pred(segmentation.width, segmentation.height, 0);
    for (int v = 0; v < segmentation.height; ++v)
        for (int u = 0; u < segmentation.width; ++u)
            if (segmentation.at(u, v) == object_id) pred.at(u, v) = std::uint8_t(object_id);

    RenderResult first = render({item}, camera_guess, ctx.K, default_light(), &plane);
    MaskImage vis = visibility_mask(obs.depth, first.depth, ctx.cfg.refine.margin);
    MaskImage support = object_mask(pred, first.mask, vis);

    PointCloud cloud = backproject(obs.depth, support, std::uint8_t(object_id), ctx.K);
    RefineResult rr =
        refine_pose(cloud.points, ctx.sdfs[std::size_t(model)], candidate, ctx.cfg.refine);

    item.pose = compose(camera_guess, rr.pose);
    RenderResult second = render({item}, camera_guess, ctx.K, default_light(), &plane);
    vis = visibility_mask(obs.depth, second.depth, ctx.cfg.refine.margin);
    support = object_mask(pred, second.mask, vis);

    Assessment out;
    out.pose = rr.pose;
    out.verdict = evaluate_pose(second, obs.rgb, obs.depth, support, rr.pose, m.diameter,
                                ctx.K, ctx.cfg.gate, object_id);
    out.support = std::move(support);

    double cu, cv, cz;
    point_to_pixel(rr.pose.translation, ctx.K, cu, cv, cz);
    out.roi = cz > 0 ? crop_roi(obs.rgb, cu, cv, cz, m.diameter, ctx.K).image
                     : RgbImage(kRoiSize, kRoiSize);
    return out;
}

std::vector<FrameOutcome> initialize_scene(const PipelineContext& ctx, const Scene& scene,
                                           const Observation& obs,
                                           const MaskImage& segmentation,
                                           std::vector<ObjectTrack>& tracks,
                                           std::uint64_t seed) {
    sync_tracks(tracks, scene);
    std::vector<FrameOutcome> out;
    out.reserve(scene.objects.size());
    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
        const SceneObject& o = scene.objects[i];
        // Initialization happens from the home waypoint, where the arm pose is
        // freshly calibrated, so the true camera stands in for dead reckoning.
        InitOutcome r = init_object(ctx, ctx.books, obs, segmentation, o.id, o.model,
                                    obs.true_camera, Rng::derive(seed, 0x1417, i), tracks[i]);
        if (!r.outcome.accepted) tracks[i].failed = true;
        r.outcome.gt = obs.gt_object_in_cam[i];
        r.outcome.add =
            add_metric(ctx.model_points[std::size_t(o.model)], r.outcome.estimate, r.outcome.gt);
        out.push_back(std::move(r.outcome));
    }
    return out;
}

TrackResult track_scene(const PipelineContext& ctx, const Scene& scene, const Trajectory& traj,
                        std::vector<ObjectTrack>& tracks, int sequence, std::uint64_t seed,
                        const std::optional<Pose>& prev_camera, const PersistSink& sink,
                        bool disable_motion_prior) {
    sync_tracks(tracks, scene);
    if (traj.waypoints.empty()) throw std::invalid_argument("empty trajectory");

    TrackResult res;
    Pose cam_dr;
    for (std::size_t w = 0; w < traj.waypoints.size(); ++w) {
        const Pose& cam = traj.waypoints[w];
        const Pose prev = w == 0 ? (prev_camera ? *prev_camera : cam) : traj.waypoints[w - 1];
        Observation obs = observe(scene, ctx.lib, cam, prev, ctx.K, ctx.cfg.noise,
                                  Rng::derive(seed, 0x0b5, w));
        MaskImage seg = oracle_segment(obs, ctx.cfg.segmenter, Rng::derive(seed, 0x5e6, w));

        // the arm re-homes before each sweep, so dead reckoning restarts here
        cam_dr = w == 0 ? cam : compose(cam_dr, invert(obs.reported_delta));

        TrackedFrame frame;
        frame.sequence = sequence;
        frame.frame = int(w);
        frame.camera_true = cam;
        frame.camera_dead_reckoned = cam_dr;

        for (std::size_t i = 0; i < tracks.size(); ++i) {
            ObjectTrack& t = tracks[i];
            FrameOutcome oc;
            bool persist_frame = false;
            Assessment persist_as;

            if (!t.initialized) {
                InitOutcome r = init_object(ctx, ctx.books, obs, seg, t.id, t.model, cam_dr,
                                            Rng::derive(seed, 0x141, w, i), t);
                oc = std::move(r.outcome);
                if (oc.accepted) {
                    persist_frame = true;
                    persist_as = std::move(r.assessment);
                } else {
                    t.failed = true;
                }
            } else {
                oc.object_id = t.id;
                const MotionDelta delta =
                    disable_motion_prior ? Pose::identity() : obs.reported_delta;
                t.particles = propagate(t.particles, delta, ctx.K, ctx.cfg.filter,
                                        Rng::derive(seed, 0x9a9, w, i), 1.0);
                UpdateResult ur =
                    update(t.particles, obs.rgb, obs.depth, ctx.K,
                           ctx.books[std::size_t(t.model)], ctx.cfg.filter);
                const bool lost = ur.reinit_needed;
                t.particles = std::move(ur.particles);
                Pose cand = estimate(t.particles, ctx.K);
                Assessment as = assess_pose(ctx, obs, seg, t.id, t.model, cand, cam_dr);
                oc.s = as.verdict.s;
                oc.e = as.verdict.e;
                oc.estimate = as.pose;
                if (!lost && as.verdict.accepted) {
                    oc.accepted = true;
                    t.estimate = as.pose;
                    t.strikes = 0;
                    persist_frame = true;
                    persist_as = std::move(as);
                } else if (++t.strikes >= kMaxStrikes) {
                    t.initialized = false;  // re-localize from scratch next frame
                    t.strikes = 0;
                }
            }

            oc.gt = obs.gt_object_in_cam[i];
            oc.add = add_metric(ctx.model_points[std::size_t(t.model)], oc.estimate, oc.gt);

            if (persist_frame && sink) {
                PersistPayload pl;
                pl.ann.sequence = sequence;
                pl.ann.frame = int(w);
                pl.ann.object_id = t.id;
                pl.ann.model = ctx.lib[std::size_t(t.model)].name;
                pl.ann.camera = cam_dr;
                pl.ann.pose = persist_as.pose;
                pl.ann.s = persist_as.verdict.s;
                pl.ann.e = persist_as.verdict.e;
                pl.ann.accepted = true;
                std::string stem = "seq" + zero_pad(sequence, 2) + "_frame" +
                                   zero_pad(int(w), 3) + "_obj" + std::to_string(t.id);
                pl.ann.roi_png = stem + ".roi.png";
                pl.ann.mask_png = stem + ".sup.png";
                pl.gt.sequence = sequence;
                pl.gt.frame = int(w);
                pl.gt.object_id = t.id;
                pl.gt.camera_true = cam;
                pl.gt.pose_gt = oc.gt;
                pl.roi = std::move(persist_as.roi);
                pl.support = std::move(persist_as.support);
                pl.observation = &obs;
                sink(pl);
            }
            frame.outcomes.push_back(std::move(oc));
        }

        res.frames.push_back(std::move(frame));

        const bool all_dead = std::all_of(
            tracks.begin(), tracks.end(),
            [](const ObjectTrack& t) { return !t.initialized && t.failed; });
        if (all_dead) {
            res.aborted = true;
            break;
        }
    }
    return res;
}

CollectStats collect(const PipelineContext& ctx, int n_scenes, int interactions_per_scene,
                     const std::string& out_dir, std::uint64_t master_seed) {
    if (n_scenes < 1) throw std::invalid_argument("need at least one scene");
    if (interactions_per_scene < 0)
        throw std::invalid_argument("interaction count cannot be negative");

    DatasetWriter writer(out_dir);
    CollectStats st;
    st.output_dir = out_dir;

    for (int scene_id = 0; scene_id < n_scenes; ++scene_id) {
        std::vector<int> models = ctx.stage_models(scene_id);
        Scene scene = generate_scene(ctx.lib, models, ctx.cfg.workspace_lo, ctx.cfg.workspace_hi,
                                     Rng::derive(master_seed, 0x5ce, scene_id));
        writer.begin_scene(scene_id, scene, ctx.lib);

        std::vector<ObjectTrack> tracks;
        std::optional<Pose> prev_cam;
        const int n_sequences = interactions_per_scene + 1;

        for (int seq = 0; seq < n_sequences; ++seq) {
            Trajectory traj = make_trajectory(scene, ctx.cfg.n_waypoints,
                                              ctx.cfg.camera_distance, ctx.cfg.camera_elevation,
                                              Rng::derive(master_seed, 0x7a7, scene_id, seq));
            PersistSink sink = [&writer, scene_id](const PersistPayload& pl) {
                AnnotationRecord ann = pl.ann;
                GroundTruthRecord gt = pl.gt;
                ann.scene_id = scene_id;
                gt.scene_id = scene_id;
                writer.save_frame(ann.sequence, ann.frame, pl.observation->rgb,
                                  pl.observation->depth);
                writer.add(ann, gt, pl.roi, pl.support);
            };

            TrackResult res =
                track_scene(ctx, scene, traj, tracks, seq,
                            Rng::derive(master_seed, 0x79c, scene_id, seq), prev_cam, sink);
            st.frames += int(res.frames.size());
            st.sequences += 1;
            if (!res.frames.empty()) prev_cam = res.frames.back().camera_true;
            if (res.aborted) break;  // nothing recoverable left; abandon the scene

            if (seq + 1 < n_sequences) {
                const int victim =
                    scene.objects[std::size_t(seq) % scene.objects.size()].id;
                InteractionResult ir =
                    seq % 2 == 0
                        ? push(scene, ctx.lib, victim,
                               Rng::derive(master_seed, 0x9b5, scene_id, seq))
                        : grasp_place(scene, ctx.lib, victim,
                                      Rng::derive(master_seed, 0x96a, scene_id, seq),
                                      ctx.cfg.p_grasp);
                scene = std::move(ir.scene);
                if (ir.moved)
                    for (auto& t : tracks)
                        if (t.id == victim) {
                            t.initialized = false;  // pose jumped; old belief is void
                            t.failed = false;
                            t.strikes = 0;
                        }
            }
        }
        writer.end_scene();
        st.scenes += 1;
    }

    std::ostringstream echo;
    echo << "stage="
         << (ctx.cfg.stage == Stage::kSingleObject ? "single_object" : "clutter");
    echo << " models=";
    for (std::size_t i = 0; i < ctx.lib.size(); ++i)
        echo << (i ? "," : "") << ctx.lib[i].name;
    echo << " grid=" << ctx.cfg.grid.n_pitch << "x" << ctx.cfg.grid.n_yaw << "x"
         << ctx.cfg.grid.n_roll << " particles=" << ctx.cfg.filter.n_particles
         << " waypoints=" << ctx.cfg.n_waypoints << " scenes=" << n_scenes
         << " interactions=" << interactions_per_scene;
    writer.finish(master_seed, echo.str());

    st.records = writer.total_records();
    return st;
}

std::string AdaptReport::to_json() const {
    json j{{"holdout_scenes", holdout_scenes},
           {"samples_used", samples_used},
           {"base",
            {{"success", base_success}, {"mean_s", base_mean_s}, {"mean_add", base_mean_add}}},
           {"adapted",
            {{"success", adapted_success},
             {"mean_s", adapted_mean_s},
             {"mean_add", adapted_mean_add}}}};
    return j.dump(2);
}

AdaptReport adapt_and_compare(const PipelineContext& ctx, const std::string& dataset_dir,
                              double alpha, int holdout_scenes, std::uint64_t seed) {
    Dataset ds = load_dataset(dataset_dir);

    std::vector<std::vector<AdaptSample>> samples(ctx.lib.size());
    std::vector<RotationGrid> grids;
    grids.reserve(ctx.books.size());
    for (const auto& b : ctx.books) grids.push_back(RotationGrid::uniform(b.dims));

    int used = 0;
    for (const auto& entry : ds.entries) {
        if (!entry.ann.accepted) continue;
        int m = ctx.model_index(entry.ann.model);
        if (m < 0) continue;
        RgbImage roi = load_rgb_png((fs::path(entry.scene_dir) / entry.ann.roi_png).string());
        if (roi.width != kRoiSize || roi.height != kRoiSize) continue;
        AdaptSample s;
        s.roi = std::move(roi);
        s.cell = grids[std::size_t(m)].nearest_cell(entry.ann.pose.rotation);
        samples[std::size_t(m)].push_back(std::move(s));
        ++used;
    }

    std::vector<Codebook> adapted;
    adapted.reserve(ctx.books.size());
    for (std::size_t m = 0; m < ctx.books.size(); ++m)
        adapted.push_back(adapt_codebook(ctx.books[m], samples[m], alpha));

    AdaptReport rep;
    rep.holdout_scenes = holdout_scenes;
    rep.samples_used = used;

    struct Side {
        double accepted = 0, s_sum = 0, add_sum = 0;
        int n_s = 0, n_add = 0;
    };
    Side base, tuned;
    for (int h = 0; h < holdout_scenes; ++h) {
        const int m = h % int(ctx.lib.size());
        Scene sc = generate_scene(ctx.lib, {m}, ctx.cfg.workspace_lo, ctx.cfg.workspace_hi,
                                  Rng::derive(seed, 0xada0, h));
        Trajectory tr = make_trajectory(sc, 2, ctx.cfg.camera_distance,
                                        ctx.cfg.camera_elevation, Rng::derive(seed, 0xada1, h));
        Observation obs = observe(sc, ctx.lib, tr.waypoints[0], tr.waypoints[0], ctx.K,
                                  ctx.cfg.noise, Rng::derive(seed, 0xada2, h));
        MaskImage seg = oracle_segment(obs, ctx.cfg.segmenter, Rng::derive(seed, 0xada3, h));

        auto eval = [&](const std::vector<Codebook>& books, Side& side) {
            ObjectTrack t;
            t.id = sc.objects[0].id;
            t.model = m;
            InitOutcome r = init_object(ctx, books, obs, seg, t.id, m, obs.true_camera,
                                        Rng::derive(seed, 0xada4, h), t);
            if (r.outcome.accepted) {
                side.accepted += 1;
                side.add_sum += add_metric(ctx.model_points[std::size_t(m)],
                                           r.outcome.estimate, obs.gt_object_in_cam[0]);
                side.n_add += 1;
            }
            if (r.outcome.s >= 0) {
                side.s_sum += r.outcome.s;
                side.n_s += 1;
            }
        };
        eval(ctx.books, base);
        eval(adapted, tuned);
    }

    const double H = std::max(holdout_scenes, 1);
    rep.base_success = base.accepted / H;
    rep.adapted_success = tuned.accepted / H;
    rep.base_mean_s = base.n_s ? base.s_sum / base.n_s : 0.0;
    rep.adapted_mean_s = tuned.n_s ? tuned.s_sum / tuned.n_s : 0.0;
    rep.base_mean_add = base.n_add ? base.add_sum / base.n_add : 0.0;
    rep.adapted_mean_add = tuned.n_add ? tuned.add_sum / tuned.n_add : 0.0;
    return rep;
}

namespace {

double auc_below(std::vector<double> errors) {
    if (errors.empty()) return 0.0;
    std::sort(errors.begin(), errors.end());
    auto accuracy_at = [&](double t) {
        return double(std::upper_bound(errors.begin(), errors.end(), t) - errors.begin()) /
               double(errors.size());
    };
    const double dt = kAucMaxThreshold / (kAucThresholds - 1);
    double integral = 0.0;
    double prev = accuracy_at(0.0);
    for (int i = 1; i < kAucThresholds; ++i) {
        double cur = accuracy_at(dt * i);
        integral += 0.5 * (prev + cur) * dt;
        prev = cur;
    }
    return integral / kAucMaxThreshold;
}

}  // namespace

void write_report(const std::string& dataset_dir, const std::string& out_dir) {
    Dataset ds = load_dataset(dataset_dir);
    ModelLibrary lib = standard_models();
    std::map<std::string, std::vector<Vec3>> points;
    for (const auto& m : lib) points[m.name] = metric_points(m.mesh);

    fs::create_directories(out_dir);
    std::ofstream csv(fs::path(out_dir) / "records.csv");
    if (!csv) throw std::runtime_error("cannot write records.csv under " + out_dir);
    csv << "scene,sequence,frame,object,model,s,e,add,adds,trans_err,rot_err\n";

    struct Acc {
        int n = 0;
        double add = 0, adds = 0, s = 0, e = 0;
        std::vector<double> add_all;
    };
    std::map<std::string, Acc> per_model;
    Acc overall;

    char line[320];
    for (const auto& entry : ds.entries) {
        auto it = points.find(entry.ann.model);
        if (it == points.end())
            throw std::runtime_error("dataset references unknown model " + entry.ann.model);
        const double add = add_metric(it->second, entry.ann.pose, entry.gt.pose_gt);
        const double adds = adds_metric(it->second, entry.ann.pose, entry.gt.pose_gt);
        const double terr =
            (entry.ann.pose.translation - entry.gt.pose_gt.translation).norm();
        const double rerr = rotation_angle(entry.ann.pose.rotation, entry.gt.pose_gt.rotation);
        std::snprintf(line, sizeof line, "%d,%d,%d,%d,%s,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                      entry.ann.scene_id, entry.ann.sequence, entry.ann.frame,
                      entry.ann.object_id, entry.ann.model.c_str(), entry.ann.s, entry.ann.e,
                      add, adds, terr, rerr);
        csv << line;
        for (Acc* a : {&per_model[entry.ann.model], &overall}) {
            a->n += 1;
            a->add += add;
            a->adds += adds;
            a->s += entry.ann.s;
            a->e += entry.ann.e;
            a->add_all.push_back(add);
        }
    }
    csv.close();

    auto summarize = [](const Acc& a) {
        json j;
        j["records"] = a.n;
        j["mean_add"] = a.n ? a.add / a.n : 0.0;
        j["mean_adds"] = a.n ? a.adds / a.n : 0.0;
        j["mean_s"] = a.n ? a.s / a.n : 0.0;
        j["mean_e"] = a.n ? a.e / a.n : 0.0;
        j["auc_add"] = auc_below(a.add_all);
        return j;
    };

    json models = json::object();
    for (const auto& [name, acc] : per_model) models[name] = summarize(acc);
    json root{{"records", overall.n},
              {"scenes", ds.scenes},
              {"sequences", ds.sequences},
              {"frames", ds.frames},
              {"master_seed", ds.master_seed},
              {"models", models},
              {"overall", summarize(overall)},
              {"auc_max_threshold", kAucMaxThreshold},
              {"auc_points", kAucThresholds}};

    std::ofstream summary(fs::path(out_dir) / "summary.json");
    if (!summary) throw std::runtime_error("cannot write summary.json under " + out_dir);
    summary << root.dump(2) << "\n";
}

}  // namespace poseloop
