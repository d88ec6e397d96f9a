#include <doctest.h>

#include <cmath>

#include "poseloop/metrics.hpp"
#include "poseloop/refine.hpp"
#include "poseloop/render.hpp"
#include "test_support.hpp"

using namespace poseloop;

namespace {

const TriangleMesh& bracket_mesh() {
    static TriangleMesh mesh = make_l_bracket(0.1, 0.08, 0.02, 0.06);
    return mesh;
}

const SdfGrid& bracket_sdf() {
    static SdfGrid sdf = build_sdf(bracket_mesh(), 0.004);
    return sdf;
}

// noiseless camera-frame point cloud of the object at `pose`
std::vector<Vec3> cloud_at(const Pose& pose, int n = 1500, std::uint64_t seed = 7) {
    std::vector<Vec3> pts = sample_surface(bracket_mesh(), n, seed);
    for (Vec3& p : pts) p = transform_point(pose, p);
    return pts;
}

Pose nudge(const Pose& pose, double t_mag, double r_mag, Rng& rng) {
    Vec3 axis(rng.normal(), rng.normal(), rng.normal());
    axis.normalize();
    Vec3 dt(rng.normal(), rng.normal(), rng.normal());
    dt = dt.normalized() * t_mag;
    Pose p = pose;
    p.translation += dt;
    p.rotation = (Quat(Eigen::AngleAxisd(r_mag, axis)) * p.rotation).normalized();
    return p;
}

double add_error(const Pose& a, const Pose& b) {
    static std::vector<Vec3> pts = sample_surface(bracket_mesh(), 512, 0x5eed);
    return add_metric(pts, a, b);
}

}  // namespace

TEST_CASE("visibility keeps agreeing pixels and drops occluded ones") {
    DepthImage measured(20, 10, 0.5f);
    DepthImage rendered(20, 10, 0.5f);
    MaskImage all = visibility_mask(measured, rendered, 0.02);
    for (int v = 0; v < 10; ++v)
        for (int u = 0; u < 20; ++u) CHECK(all.at(u, v) == 1);

    DepthImage far = rendered;
    for (auto& d : far.data) d += 2.0f;
    MaskImage none = visibility_mask(measured, far, 0.02);
    for (int v = 0; v < 10; ++v)
        for (int u = 0; u < 20; ++u) CHECK(none.at(u, v) == 0);

    // left half blocked by something 10 cm in front of the render
    DepthImage half = measured;
    for (int v = 0; v < 10; ++v)
        for (int u = 0; u < 10; ++u) half.at(u, v) = 0.4f;
    MaskImage part = visibility_mask(half, rendered, 0.02);
    for (int v = 0; v < 10; ++v)
        for (int u = 0; u < 20; ++u) CHECK(part.at(u, v) == (u < 10 ? 0 : 1));

    // invalid depth on either side of the comparison never counts
    DepthImage holes = measured;
    holes.at(15, 5) = 0.0f;
    CHECK(visibility_mask(holes, rendered, 0.02).at(15, 5) == 0);
    CHECK_THROWS(visibility_mask(DepthImage(5, 5, 0.5f), rendered, 0.02));
}

TEST_CASE("object mask is the three-way intersection") {
    MaskImage predicted(8, 8, 0);
    MaskImage rendered(8, 8, 0);
    MaskImage visible(8, 8, 0);
    for (int v = 0; v < 8; ++v)
        for (int u = 0; u < 8; ++u) {
            if (u < 6) predicted.at(u, v) = 3;
            if (u >= 2) rendered.at(u, v) = 1;
            if (v < 4) visible.at(u, v) = 1;
        }
    MaskImage out = object_mask(predicted, rendered, visible);
    int on = 0;
    for (int v = 0; v < 8; ++v)
        for (int u = 0; u < 8; ++u) {
            bool expect = u >= 2 && u < 6 && v < 4;
            CHECK(out.at(u, v) == (expect ? 3 : 0));
            if (out.at(u, v)) ++on;
        }
    CHECK(on == 16);

    MaskImage same = object_mask(predicted, predicted, predicted);
    for (int v = 0; v < 8; ++v)
        for (int u = 0; u < 8; ++u) CHECK(same.at(u, v) == predicted.at(u, v));

    MaskImage empty(8, 8, 0);
    MaskImage none = object_mask(predicted, empty, visible);
    for (int v = 0; v < 8; ++v)
        for (int u = 0; u < 8; ++u) CHECK(none.at(u, v) == 0);
}

TEST_CASE("a perfect pose is a fixed point") {
    Pose truth = compose(Pose::translate(0.02, -0.01, 0.5),
                         Pose::rotate_axis(Vec3(1, 0.4, 0.2).normalized(), 0.9));
    auto pts = cloud_at(truth);
    RefineConfig cfg;
    RefineResult res = refine_pose(pts, bracket_sdf(), truth, cfg);
    CHECK(res.final_objective <= res.initial_objective);
    CHECK(add_error(res.pose, truth) < bracket_sdf().voxel_size);
}

TEST_CASE("small perturbations are pulled back onto the cloud") {
    Pose truth = compose(Pose::translate(0.01, 0.02, 0.45),
                         Pose::rotate_axis(Vec3(0.3, 1, -0.5).normalized(), 1.2));
    auto pts = cloud_at(truth);
    RefineConfig cfg;
    cfg.max_iters = 150;
    Rng rng(77);
    int hits = 0;
    for (int trial = 0; trial < 20; ++trial) {
        Pose start = nudge(truth, rng.uniform(0, 0.02), rng.uniform(0, 10 * 3.14159 / 180), rng);
        RefineResult res = refine_pose(pts, bracket_sdf(), start, cfg);
        if (add_error(res.pose, truth) < 0.005) ++hits;
        REQUIRE(!res.objective_trace.empty());
        for (std::size_t i = 1; i < res.objective_trace.size(); ++i)
            CHECK(res.objective_trace[i] <= res.objective_trace[i - 1] + 1e-12);
        CHECK(res.objective_trace.front() == doctest::Approx(res.initial_objective));
        CHECK(res.objective_trace.back() == doctest::Approx(res.final_objective));
    }
    CHECK(hits >= 19);
}

TEST_CASE("refinement is idempotent") {
    Pose truth = compose(Pose::translate(0, 0, 0.5),
                         Pose::rotate_axis(Vec3(0.2, 0.7, 1).normalized(), 0.6));
    auto pts = cloud_at(truth);
    RefineConfig cfg;
    Rng rng(79);
    Pose start = nudge(truth, 0.01, 0.05, rng);
    RefineResult once = refine_pose(pts, bracket_sdf(), start, cfg);
    RefineResult twice = refine_pose(pts, bracket_sdf(), once.pose, cfg);
    CHECK(twice.final_objective <= once.final_objective + 1e-12);
    CHECK(add_error(once.pose, twice.pose) < bracket_sdf().voxel_size);
}

TEST_CASE("a heavy anchor weight pins the translation") {
    Pose truth = Pose::translate(0, 0, 0.5);
    auto pts = cloud_at(truth);
    RefineConfig cfg;
    cfg.lambda = 1e6;
    Pose start = truth;
    start.translation += Vec3(0.01, -0.005, 0.008);
    RefineResult res = refine_pose(pts, bracket_sdf(), start, cfg);
    CHECK((res.pose.translation - start.translation).norm() < 1e-4);
}

TEST_CASE("tiny clouds are flagged and left alone") {
    Pose truth = Pose::translate(0, 0, 0.5);
    std::vector<Vec3> few = cloud_at(truth, 9, 3);
    RefineResult res = refine_pose(few, bracket_sdf(), truth, RefineConfig{});
    CHECK(res.insufficient_support);
    CHECK(rotation_angle(res.pose.rotation, truth.rotation) == 0.0);
    CHECK((res.pose.translation - truth.translation).norm() == 0.0);
}

TEST_CASE("a sphere forgives rotation but demands position") {
    TriangleMesh sphere = make_icosphere(0.05);
    SdfGrid sdf = build_sdf(sphere, 0.004);
    Pose truth = Pose::translate(0.01, 0.0, 0.4);
    std::vector<Vec3> pts = sample_surface(sphere, 1200, 5);
    for (Vec3& p : pts) p = transform_point(truth, p);
    Pose start = truth;
    start.translation += Vec3(0.008, -0.006, 0.01);
    RefineConfig cfg;
    cfg.max_iters = 150;
    RefineResult res = refine_pose(pts, sdf, start, cfg);
    CHECK((res.pose.translation - truth.translation).norm() < sdf.voxel_size);
}

TEST_CASE("descent direction matches a finite-difference probe") {
    Pose truth = compose(Pose::translate(0.005, -0.01, 0.5),
                         Pose::rotate_axis(Vec3(1, 0.2, 0.1).normalized(), 0.4));
    auto pts = cloud_at(truth, 800, 9);
    RefineConfig cfg;
    Rng rng(81);
    Pose probe = nudge(truth, 0.012, 0.06, rng);
    const double h = 1e-6;
    double base = refine_objective(pts, bracket_sdf(), probe, probe, cfg);
    CHECK(base > 0.0);
    for (int ax = 0; ax < 3; ++ax) {
        Pose plus = probe, minus = probe;
        plus.translation[ax] += h;
        minus.translation[ax] -= h;
        double fd = (refine_objective(pts, bracket_sdf(), plus, probe, cfg) -
                     refine_objective(pts, bracket_sdf(), minus, probe, cfg)) /
                    (2 * h);
        // central difference of a piecewise-smooth objective: compare against
        // a second probe displaced along the same axis to confirm linearity
        Pose far = probe;
        far.translation[ax] += 10 * h;
        double secant = (refine_objective(pts, bracket_sdf(), far, probe, cfg) - base) / (10 * h);
        CHECK(fd == doctest::Approx(secant).epsilon(0.05));
    }
}
