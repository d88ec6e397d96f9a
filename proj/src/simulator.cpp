#include "poseloop/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace poseloop {

namespace {

constexpr double kPi = std::numbers::pi;

// Resting orientations for roughly prismatic objects: identity plus the four
// side rolls and upside down.
const std::array<Quat, 6>& canonical_orientations() {
    static const std::array<Quat, 6> set = {
        Quat::Identity(),
        Quat(Eigen::AngleAxisd(kPi / 2, Vec3::UnitX())),
        Quat(Eigen::AngleAxisd(-kPi / 2, Vec3::UnitX())),
        Quat(Eigen::AngleAxisd(kPi / 2, Vec3::UnitY())),
        Quat(Eigen::AngleAxisd(-kPi / 2, Vec3::UnitY())),
        Quat(Eigen::AngleAxisd(kPi, Vec3::UnitX())),
    };
    return set;
}

double lowest_vertex_z(const TriangleMesh& mesh, const Quat& q) {
    double lo = 1e18;
    for (const auto& v : mesh.vertices) lo = std::min(lo, (q * v)[2]);
    return lo;
}

bool object_in_workspace(const ObjectModel& m, const Pose& pose, const Vec3& lo,
                         const Vec3& hi) {
    for (const auto& s : m.clearance_samples) {
        Vec3 p = transform_point(pose, s);
        if (p[0] < lo[0] || p[0] > hi[0] || p[1] < lo[1] || p[1] > hi[1] || p[2] < -1e-6 ||
            p[2] > hi[2])
            return false;
    }
    return true;
}

bool placement_ok(const Scene& scene, const ModelLibrary& lib, int skip_id,
                  const ObjectModel& m, const Pose& pose) {
    if (!object_in_workspace(m, pose, scene.workspace_lo, scene.workspace_hi)) return false;
    double slop_m = penetration_slop(m);
    for (const auto& other : scene.objects) {
        if (other.id == skip_id) continue;
        const ObjectModel& om = lib[other.model];
        double slop = std::max(slop_m, penetration_slop(om));
        if (pair_clearance(m, pose, om, other.pose) < -slop) return false;
    }
    return true;
}

Pose sample_resting_pose(const ObjectModel& m, const Vec3& lo, const Vec3& hi, Rng& rng) {
    const auto& canon = canonical_orientations();
    Quat base = canon[rng.uniform_index(canon.size())];
    Quat yaw(Eigen::AngleAxisd(rng.uniform() * 2 * kPi, Vec3::UnitZ()));
    Quat q = (yaw * base).normalized();
    double r = m.diameter / 2;
    double x = lo[0] + r + rng.uniform() * std::max(0.0, hi[0] - lo[0] - 2 * r);
    double y = lo[1] + r + rng.uniform() * std::max(0.0, hi[1] - lo[1] - 2 * r);
    return Pose::from(q, Vec3(x, y, -lowest_vertex_z(m.mesh, q)));
}

}  // namespace

ObjectModel ObjectModel::build(std::string name, TriangleMesh mesh) {
    ObjectModel m;
    m.name = std::move(name);
    m.diameter = mesh.diameter();
    m.bvh = std::make_shared<TriangleBvh>(mesh);
    m.clearance_samples = sample_surface(mesh, 256, 0x5eedu);
    m.mesh = std::move(mesh);
    return m;
}

ModelLibrary standard_models() {
    ModelLibrary lib;
    lib.push_back(ObjectModel::build("box", make_box(0.09, 0.06, 0.045)));
    lib.push_back(ObjectModel::build("cylinder", make_cylinder(0.033, 0.12)));
    lib.push_back(ObjectModel::build("sphere", make_icosphere(0.04)));
    lib.push_back(ObjectModel::build("l_bracket", make_l_bracket(0.10, 0.07, 0.03, 0.025)));
    lib.push_back(ObjectModel::build("mug", make_mug(0.04, 0.085)));
    return lib;
}

const SceneObject* Scene::find(int id) const {
    for (const auto& o : objects)
        if (o.id == id) return &o;
    return nullptr;
}

double penetration_slop(const ObjectModel& m) { return 2.0 * m.diameter / 64.0; }

double pair_clearance(const ObjectModel& a, const Pose& pa, const ObjectModel& b,
                      const Pose& pb) {
    auto one_way = [](const ObjectModel& from, const Pose& pf, const ObjectModel& to,
                      const Pose& pt) {
        Pose to_local = compose(invert(pt), pf);
        double best = 1e18;
        for (const auto& s : from.clearance_samples) {
            Vec3 q = transform_point(to_local, s);
            double d = to.bvh->closest_distance(q);
            if (to.bvh->is_inside(q)) d = -d;
            best = std::min(best, d);
        }
        return best;
    };
    return std::min(one_way(a, pa, b, pb), one_way(b, pb, a, pa));
}

Scene generate_scene(const ModelLibrary& lib, const std::vector<int>& models,
                     const Vec3& workspace_lo, const Vec3& workspace_hi, std::uint64_t seed) {
    Scene scene;
    scene.workspace_lo = workspace_lo;
    scene.workspace_hi = workspace_hi;
    Rng rng(Rng::derive(seed, 0x5ce7e));
    int next_id = 1;
    for (int model : models) {
        if (model < 0 || model >= int(lib.size()))
            throw std::out_of_range("model index outside the library");
        const ObjectModel& m = lib[model];
        bool placed = false;
        for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
            Pose pose = sample_resting_pose(m, workspace_lo, workspace_hi, rng);
            if (!placement_ok(scene, lib, -1, m, pose)) continue;
            scene.objects.push_back({next_id, model, pose});
            placed = true;
        }
        if (!placed) throw std::runtime_error("workspace too crowded");
        ++next_id;
    }
    return scene;
}

namespace {

Pose look_at(const Vec3& eye, const Vec3& target) {
    Vec3 f = (target - eye).normalized();
    Vec3 down(0, 0, -1);
    if (std::abs(f.dot(Vec3(0, 0, 1))) > 0.999) down = Vec3(0, -1, 0);
    Vec3 y = (down - down.dot(f) * f).normalized();
    Vec3 x = y.cross(f);
    Eigen::Matrix3d r;
    r.col(0) = x;
    r.col(1) = y;
    r.col(2) = f;
    return Pose::from(Quat(r), eye);
}

}  // namespace

Trajectory make_trajectory(const Scene& scene, int n_waypoints, double distance,
                           double elevation_deg, std::uint64_t seed) {
    if (n_waypoints < 1) throw std::invalid_argument("need at least one waypoint");
    Trajectory traj;
    Vec3 c = Vec3::Zero();
    if (scene.objects.empty()) {
        c = 0.5 * (scene.workspace_lo + scene.workspace_hi);
        c[2] = 0;
    } else {
        for (const auto& o : scene.objects) c += o.pose.translation;
        c /= double(scene.objects.size());
    }
    traj.target = c;

    Rng rng(Rng::derive(seed, 0x7a70));
    double az0 = rng.uniform() * 2 * kPi;
    double el = elevation_deg * kPi / 180.0;
    double arc = n_waypoints > 1 ? (4.0 / 3.0) * kPi / (n_waypoints - 1) : 0.0;
    for (int i = 0; i < n_waypoints; ++i) {
        double az = az0 + i * arc;
        Vec3 eye = c + distance * Vec3(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
                                       std::sin(el));
        traj.waypoints.push_back(look_at(eye, c));
    }
    return traj;
}

std::vector<RenderItem> scene_items(const Scene& scene, const ModelLibrary& lib) {
    std::vector<RenderItem> items;
    items.reserve(scene.objects.size());
    for (const auto& o : scene.objects) {
        RenderItem it;
        it.shape = lib[o.model].bvh.get();
        it.pose = o.pose;
        it.id = std::uint8_t(o.id);
        it.albedo = palette_color(o.model + 1);  // intrinsic to the model, not the instance
        items.push_back(it);
    }
    return items;
}

SupportPlane workspace_plane(const Vec3& lo, const Vec3& hi) {
    SupportPlane plane;
    plane.half_extent = std::max({std::abs(lo[0]), std::abs(hi[0]), std::abs(lo[1]),
                                  std::abs(hi[1])}) +
                        0.35;
    return plane;
}

Observation observe(const Scene& scene, const ModelLibrary& lib, const Pose& camera,
                    const Pose& prev_camera, const CameraIntrinsics& K, const NoiseModel& noise,
                    std::uint64_t seed) {
    Observation obs;
    obs.true_camera = camera;

    SupportPlane plane = workspace_plane(scene.workspace_lo, scene.workspace_hi);
    RenderResult clean = render(scene_items(scene, lib), camera, K, default_light(), &plane);
    obs.gt_mask = std::move(clean.mask);

    Rng rng(Rng::derive(seed, 0x0b5e7e));
    obs.depth = clean.depth;
    for (auto& d : obs.depth.data) {
        if (d <= 0) continue;
        if (noise.depth_dropout > 0 && rng.bernoulli(noise.depth_dropout)) {
            d = 0;
            continue;
        }
        if (noise.depth_sigma > 0)
            d = std::max(0.0f, d + float(noise.depth_sigma * rng.normal()));
    }
    obs.rgb = clean.rgb;
    for (auto& px : obs.rgb.data)
        for (int c = 0; c < 3; ++c) {
            double v = double(px[c]) * noise.rgb_gain[c] + noise.rgb_offset;
            if (noise.rgb_sigma > 0) v += noise.rgb_sigma * rng.normal();
            px[c] = float(std::clamp(v, 0.0, 1.0));
        }

    obs.true_delta = relative_motion(prev_camera, camera);
    Pose fk_noise = Pose::identity();
    if (noise.fk_rot_sigma > 0 || noise.fk_trans_sigma > 0) {
        Vec3 axis(rng.normal(), rng.normal(), rng.normal());
        if (axis.norm() < 1e-12) axis = Vec3::UnitZ();
        fk_noise.rotation = Quat(Eigen::AngleAxisd(noise.fk_rot_sigma * rng.normal(),
                                                   axis.normalized()));
        fk_noise.translation = noise.fk_trans_sigma * Vec3(rng.normal(), rng.normal(),
                                                           rng.normal());
    }
    Pose noisy = compose(fk_noise, obs.true_delta);
    obs.reported_delta = compose(compose(invert(noise.calib_bias), noisy), noise.calib_bias);

    obs.gt_object_in_cam.reserve(scene.objects.size());
    Pose world_to_cam = invert(camera);
    for (const auto& o : scene.objects)
        obs.gt_object_in_cam.push_back(compose(world_to_cam, o.pose));
    return obs;
}

namespace {

MaskImage morph(const MaskImage& in, std::uint8_t id, int pixels, bool dilate) {
    MaskImage cur = in;
    for (int round = 0; round < pixels; ++round) {
        MaskImage next = cur;
        for (int v = 0; v < cur.height; ++v)
            for (int u = 0; u < cur.width; ++u) {
                bool on = cur.at(u, v) == id;
                bool edge = false;
                for (int d = 0; d < 4 && !edge; ++d) {
                    int uu = u + (d == 0) - (d == 1), vv = v + (d == 2) - (d == 3);
                    bool non = cur.contains(uu, vv) ? cur.at(uu, vv) == id : false;
                    edge = (non != on);
                }
                if (!edge) continue;
                if (dilate && !on && cur.at(u, v) == 0)
                    next.at(u, v) = id;
                else if (!dilate && on)
                    next.at(u, v) = 0;
            }
        cur = std::move(next);
    }
    return cur;
}

}  // namespace

MaskImage oracle_segment(const Observation& obs, const SegErrorModel& err, std::uint64_t seed) {
    MaskImage out = obs.gt_mask;
    Rng rng(Rng::derive(seed, 0x5e6));

    std::vector<std::uint8_t> ids;
    for (auto m : out.data)
        if (m && std::find(ids.begin(), ids.end(), m) == ids.end()) ids.push_back(m);
    std::sort(ids.begin(), ids.end());

    for (auto id : ids) {
        if (err.miss_rate > 0 && rng.bernoulli(err.miss_rate)) {
            for (auto& m : out.data)
                if (m == id) m = 0;
            continue;
        }
        if (err.erode_px > 0) out = morph(out, id, err.erode_px, false);
        if (err.dilate_px > 0) out = morph(out, id, err.dilate_px, true);
    }

    if (err.flip_rate > 0) {
        MaskImage src = out;
        for (int v = 0; v < out.height; ++v)
            for (int u = 0; u < out.width; ++u) {
                if (!rng.bernoulli(err.flip_rate)) continue;
                int du = int(rng.uniform_index(3)) - 1;
                int dv = int(rng.uniform_index(3)) - 1;
                if (src.contains(u + du, v + dv)) out.at(u, v) = src.at(u + du, v + dv);
            }
    }
    return out;
}

InteractionResult push(const Scene& scene, const ModelLibrary& lib, int object_id,
                       std::uint64_t seed) {
    InteractionResult res{scene, false, false};
    const SceneObject* target = scene.find(object_id);
    if (!target) throw std::invalid_argument("push: no such object in scene");
    const ObjectModel& m = lib[target->model];

    Vec3 goal;
    int others = 0;
    Vec3 acc = Vec3::Zero();
    for (const auto& o : scene.objects)
        if (o.id != object_id) {
            acc += o.pose.translation;
            ++others;
        }
    if (others > 0) {
        goal = acc / others;
    } else {
        goal = 0.5 * (scene.workspace_lo + scene.workspace_hi);
    }
    goal[2] = target->pose.translation[2];

    Rng rng(Rng::derive(seed, 0x9054, std::uint64_t(object_id)));
    Vec3 dir = goal - target->pose.translation;
    dir[2] = 0;
    if (dir.norm() < 1e-9) dir = Vec3(1, 0, 0);
    dir.normalize();
    double jitter = (2 * rng.uniform() - 1) * 15.0 * kPi / 180.0;
    dir = Quat(Eigen::AngleAxisd(jitter, Vec3::UnitZ())) * dir;
    double dist = 0.03 + rng.uniform() * 0.09;
    double yaw = (2 * rng.uniform() - 1) * 20.0 * kPi / 180.0;

    for (int shrink = 0; shrink < 12; ++shrink, dist *= 0.7) {
        if (dist < 0.005) break;
        Pose cand = target->pose;
        cand.translation += dist * dir;
        cand.rotation = (Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ())) * cand.rotation)
                            .normalized();
        if (!placement_ok(scene, lib, object_id, m, cand)) continue;
        for (auto& o : res.scene.objects)
            if (o.id == object_id) o.pose = cand;
        res.moved = true;
        break;
    }
    return res;
}

InteractionResult grasp_place(const Scene& scene, const ModelLibrary& lib, int object_id,
                              std::uint64_t seed, double p_grasp) {
    InteractionResult res{scene, false, false};
    const SceneObject* target = scene.find(object_id);
    if (!target) throw std::invalid_argument("grasp_place: no such object in scene");
    const ObjectModel& m = lib[target->model];

    Rng rng(Rng::derive(seed, 0x6a5b, std::uint64_t(object_id)));
    if (rng.bernoulli(p_grasp)) {
        res.grasped = true;
        for (int attempt = 0; attempt < 1000; ++attempt) {
            Pose cand = sample_resting_pose(m, scene.workspace_lo, scene.workspace_hi, rng);
            if (!placement_ok(scene, lib, object_id, m, cand)) continue;
            for (auto& o : res.scene.objects)
                if (o.id == object_id) o.pose = cand;
            res.moved = true;
            return res;
        }
        return res;  // no valid placement; scene unchanged
    }

    // slipped grasp: small in-place jitter
    for (int attempt = 0; attempt < 100; ++attempt) {
        double ang = rng.uniform() * 2 * kPi;
        double r = rng.uniform() * 0.02;
        double yaw = (2 * rng.uniform() - 1) * 10.0 * kPi / 180.0;
        Pose cand = target->pose;
        cand.translation += Vec3(r * std::cos(ang), r * std::sin(ang), 0);
        cand.rotation = (Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ())) * cand.rotation)
                            .normalized();
        if (!placement_ok(scene, lib, object_id, m, cand)) continue;
        for (auto& o : res.scene.objects)
            if (o.id == object_id) o.pose = cand;
        res.moved = true;
        break;
    }
    return res;
}

}  // namespace poseloop
