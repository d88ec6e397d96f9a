#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <string>

#include "poseloop/filter.hpp"
#include "poseloop/render.hpp"
#include "test_support.hpp"

using namespace poseloop;

namespace {

CameraIntrinsics small_K() { return default_intrinsics(160, 120); }

GridDims tiny_dims() { return GridDims{8, 4, 8}; }

const TriangleMesh& bracket_mesh() {
    static TriangleMesh mesh = make_l_bracket(0.1, 0.08, 0.02, 0.06);
    return mesh;
}

const Codebook& bracket_book() {
    static Codebook book = build_codebook(bracket_mesh(), small_K(), tiny_dims(), 0.5);
    return book;
}

// object alone at the canonical distance, matching the codebook's templates
RenderResult observe_cell(int cell, double z = 0.5) {
    static TriangleBvh bvh(bracket_mesh());
    RenderItem item;
    item.shape = &bvh;
    item.id = 1;
    item.albedo = palette_color(bracket_book().object_id);
    item.pose = Pose::from(RotationGrid::uniform(tiny_dims()).cell_quaternion(cell),
                           Vec3(0, 0, z));
    return render({item}, Pose::identity(), small_K());
}

FilterConfig quiet_config() {
    FilterConfig cfg;
    cfg.n_particles = 100;
    return cfg;
}

bool same_particles(const ParticleSet& a, const ParticleSet& b) {
    if (a.size() != b.size()) return false;
    for (int i = 0; i < a.size(); ++i) {
        const Particle &pa = a.particles[std::size_t(i)], &pb = b.particles[std::size_t(i)];
        if (pa.u != pb.u || pa.v != pb.v || pa.z != pb.z || pa.weight != pb.weight) return false;
        if ((pa.rotation.weights() - pb.rotation.weights()).norm() != 0.0) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("zero scatter collapses initialization onto the detection") {
    DepthImage depth(160, 120, 0.6f);
    FilterConfig cfg = quiet_config();
    cfg.sigma_u = cfg.sigma_v = cfg.sigma_z = 0.0;
    ParticleSet ps = init_particles(80.3, 60.7, depth, tiny_dims(), cfg, 1);
    REQUIRE(ps.size() == cfg.n_particles);
    for (const Particle& p : ps.particles) {
        CHECK(p.u == 80.3);
        CHECK(p.v == 60.7);
        CHECK(p.z == doctest::Approx(0.6).epsilon(1e-6));
        CHECK(p.weight == doctest::Approx(1.0 / cfg.n_particles).epsilon(1e-12));
        CHECK(p.rotation.weight(0) == doctest::Approx(1.0 / p.rotation.cells()).epsilon(1e-12));
    }
    CHECK(ps.weight_sum() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("initialization scatters with the configured spread") {
    DepthImage depth(160, 120, 0.6f);
    FilterConfig cfg = quiet_config();
    cfg.n_particles = 500;
    ParticleSet ps = init_particles(80, 60, depth, tiny_dims(), cfg, 99);
    double mu = 0, mv = 0;
    for (const Particle& p : ps.particles) {
        mu += p.u;
        mv += p.v;
        CHECK(p.z >= 0.6 - cfg.sigma_z - 1e-9);
        CHECK(p.z <= 0.6 + cfg.sigma_z + 1e-9);
    }
    mu /= ps.size();
    mv /= ps.size();
    double slack = 3 * cfg.sigma_u / std::sqrt(double(ps.size()));
    CHECK(std::abs(mu - 80) < slack);
    CHECK(std::abs(mv - 60) < slack);
}

TEST_CASE("detections over depth holes borrow the nearest valid pixel") {
    DepthImage depth(160, 120, 0.0f);
    depth.at(86, 60) = 0.7f;  // six pixels right of the detection
    FilterConfig cfg = quiet_config();
    cfg.sigma_u = cfg.sigma_v = cfg.sigma_z = 0.0;
    ParticleSet ps = init_particles(80, 60, depth, tiny_dims(), cfg, 2);
    for (const Particle& p : ps.particles) CHECK(p.z == doctest::Approx(0.7).epsilon(1e-6));

    DepthImage empty(160, 120, 0.0f);
    try {
        init_particles(80, 60, empty, tiny_dims(), cfg, 2);
        FAIL("expected a throw");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("depth hole") != std::string::npos);
    }
}

TEST_CASE("global initialization covers exactly the valid pixels") {
    DepthImage depth(160, 120, 0.0f);
    depth.at(40, 30) = 0.7f;
    ParticleSet ps = global_init(depth, tiny_dims(), quiet_config(), 5);
    for (const Particle& p : ps.particles) {
        CHECK(std::abs(p.u - 40) <= 1.0);
        CHECK(std::abs(p.v - 30) <= 1.0);
    }
    DepthImage empty(160, 120, 0.0f);
    CHECK_THROWS(global_init(empty, tiny_dims(), quiet_config(), 5));
}

TEST_CASE("a particle sitting on the rendered truth takes all the weight") {
    const int cell = 77;
    RenderResult obs = observe_cell(cell);
    CameraIntrinsics K = small_K();
    ParticleSet ps;
    ps.object_id = 1;
    Particle p;
    p.u = K.cx;
    p.v = K.cy;
    p.z = 0.5;
    p.rotation = RotationGrid::uniform(tiny_dims());
    p.weight = 1.0;
    ps.particles.push_back(p);
    UpdateResult res = update(ps, obs.rgb, obs.depth, K, bracket_book(), quiet_config());
    REQUIRE(res.particles.size() == 1);
    CHECK(res.particles.particles[0].weight == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(res.particles.particles[0].rotation.argmax() == cell);
    CHECK_FALSE(res.reinit_needed);
}

TEST_CASE("background particles lose to on-object ones") {
    RenderResult obs = observe_cell(42);
    CameraIntrinsics K = small_K();
    ParticleSet ps;
    ps.object_id = 1;
    Particle on;
    on.u = K.cx;
    on.v = K.cy;
    on.z = 0.5;
    on.rotation = RotationGrid::uniform(tiny_dims());
    on.weight = 0.5;
    Particle off = on;
    off.u = 8;
    off.v = 8;  // black corner
    ps.particles = {on, off};
    UpdateResult res = update(ps, obs.rgb, obs.depth, K, bracket_book(), quiet_config());
    CHECK(res.particles.particles[0].weight == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(res.particles.particles[1].weight == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(res.ess < 2.0);
}

TEST_CASE("an all-background frame asks for reinitialization") {
    CameraIntrinsics K = small_K();
    RgbImage flat(K.width, K.height, Eigen::Vector3f(0.5f, 0.5f, 0.5f));
    DepthImage depth(K.width, K.height, 0.6f);
    FilterConfig cfg = quiet_config();
    cfg.n_particles = 20;
    ParticleSet ps = init_particles(80, 60, depth, tiny_dims(), cfg, 3);
    UpdateResult res = update(ps, flat, depth, K, bracket_book(), cfg);
    CHECK(res.reinit_needed);
    for (const Particle& p : res.particles.particles)
        CHECK(p.weight == doctest::Approx(1.0 / cfg.n_particles).epsilon(1e-9));
}

TEST_CASE("noiseless propagation with no motion is the identity") {
    DepthImage depth(160, 120, 0.6f);
    ParticleSet ps = init_particles(80, 60, depth, tiny_dims(), quiet_config(), 11);
    ParticleSet moved = propagate(ps, Pose::identity(), small_K(), quiet_config(), 12, 0.0);
    CHECK(same_particles(ps, moved));
}

TEST_CASE("walking the camera forward brings particles closer") {
    DepthImage depth(160, 120, 0.6f);
    ParticleSet ps = init_particles(80, 60, depth, tiny_dims(), quiet_config(), 13);
    MotionDelta delta = relative_motion(Pose::identity(), Pose::translate(0, 0, 0.01));
    ParticleSet moved = propagate(ps, delta, small_K(), quiet_config(), 14, 0.0);
    for (int i = 0; i < ps.size(); ++i)
        CHECK(moved.particles[std::size_t(i)].z ==
              doctest::Approx(ps.particles[std::size_t(i)].z - 0.01).epsilon(1e-9));
}

TEST_CASE("a one-bin yaw delta permutes the rotation grids") {
    GridDims dims = tiny_dims();
    const double bin = 3.14159265358979323846 / dims.n_yaw;
    DepthImage depth(160, 120, 0.6f);
    FilterConfig cfg = quiet_config();
    cfg.n_particles = 4;
    ParticleSet ps = init_particles(80, 60, depth, dims, cfg, 15);
    int src = ps.particles[0].rotation.index(2, 1, 3);
    for (Particle& p : ps.particles) {
        p.rotation.weights().setZero();
        p.rotation.weights()[src] = 1.0;
    }
    MotionDelta delta = Pose::rotate_axis(Vec3::UnitY(), bin);
    ParticleSet moved = propagate(ps, delta, small_K(), cfg, 16, 0.0);
    int dst = ps.particles[0].rotation.index(2, 2, 3);
    for (const Particle& p : moved.particles)
        CHECK(p.rotation.weight(dst) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("estimates reduce to backprojection for trivial sets") {
    CameraIntrinsics K = small_K();
    GridDims dims = tiny_dims();
    ParticleSet one;
    one.object_id = 1;
    Particle p;
    p.u = 92;
    p.v = 47;
    p.z = 0.73;
    int cell = RotationGrid(dims).index(3, 2, 5);
    p.rotation = RotationGrid(dims);
    p.rotation.weights().setZero();
    p.rotation.weights()[cell] = 1.0;
    p.weight = 1.0;
    one.particles.push_back(p);
    Pose est = estimate(one, K);
    CHECK((est.translation - pixel_to_point(92, 47, 0.73, K)).norm() < 1e-9);
    CHECK(rotation_angle(est.rotation, p.rotation.cell_quaternion(cell)) < 1e-9);

    ParticleSet two = one;
    Particle q = p;
    q.u = 60;
    q.v = 80;
    q.z = 0.5;
    two.particles[0].weight = 0.5;
    q.weight = 0.5;
    two.particles.push_back(q);
    Pose mid = estimate(two, K);
    Vec3 expect = 0.5 * (pixel_to_point(92, 47, 0.73, K) + pixel_to_point(60, 80, 0.5, K));
    CHECK((mid.translation - expect).norm() < 1e-9);
}

TEST_CASE("effective sample size follows the inverse sum of squares") {
    ParticleSet ps;
    for (double w : {0.7, 0.1, 0.1, 0.1}) {
        Particle p;
        p.rotation = RotationGrid::uniform(tiny_dims());
        p.weight = w;
        ps.particles.push_back(p);
    }
    CHECK(effective_sample_size(ps) == doctest::Approx(1.0 / 0.52).epsilon(1e-9));
}

TEST_CASE("weights stay normalized through the whole loop") {
    RenderResult obs = observe_cell(10);
    CameraIntrinsics K = small_K();
    FilterConfig cfg = quiet_config();
    cfg.n_particles = 50;
    ParticleSet ps = init_particles(K.cx, K.cy, obs.depth, tiny_dims(), cfg, 21);
    for (int k = 0; k < 5; ++k) {
        ps = propagate(ps, Pose::identity(), K, cfg, Rng::derive(21, 1, k), 0.5);
        CHECK(std::abs(ps.weight_sum() - 1.0) < 1e-9);
        UpdateResult res = update(ps, obs.rgb, obs.depth, K, bracket_book(), cfg);
        ps = res.particles;
        CHECK(std::abs(ps.weight_sum() - 1.0) < 1e-9);
        for (const Particle& p : ps.particles)
            CHECK(std::abs(p.rotation.sum() - 1.0) < 1e-6);
    }
}

TEST_CASE("the whole loop is bit-reproducible") {
    RenderResult obs = observe_cell(33);
    CameraIntrinsics K = small_K();
    FilterConfig cfg = quiet_config();
    cfg.n_particles = 40;
    auto run = [&]() {
        ParticleSet ps = init_particles(K.cx, K.cy, obs.depth, tiny_dims(), cfg, 31);
        for (int k = 0; k < 3; ++k) {
            ps = propagate(ps, Pose::identity(), K, cfg, Rng::derive(31, 2, k), 0.7);
            ps = update(ps, obs.rgb, obs.depth, K, bracket_book(), cfg).particles;
        }
        return ps;
    };
    ParticleSet a = run(), b = run();
    CHECK(same_particles(a, b));
}

TEST_CASE("pure process noise does not drift the cloud") {
    DepthImage depth(160, 120, 0.6f);
    FilterConfig cfg = quiet_config();
    cfg.n_particles = 5000;
    cfg.sigma_u = cfg.sigma_v = cfg.sigma_z = 0.0;
    CameraIntrinsics K = small_K();
    ParticleSet ps = init_particles(80, 60, depth, tiny_dims(), cfg, 41);
    Vec3 start = estimate(ps, K).translation;
    for (int k = 0; k < 5; ++k) ps = propagate(ps, Pose::identity(), K, cfg, 100 + k);
    Vec3 end = estimate(ps, K).translation;
    CHECK((end - start).norm() < 2e-3);
}

TEST_CASE("repeated updates on one image pull the cloud onto the object") {
    const int cell = 77;
    RenderResult obs = observe_cell(cell);
    CameraIntrinsics K = small_K();
    FilterConfig cfg = quiet_config();
    cfg.n_particles = 100;
    cfg.k_steps = 20;
    ParticleSet ps = init_particles(K.cx + 8, K.cy - 6, obs.depth, tiny_dims(), cfg, 51);
    for (int k = 0; k < cfg.k_steps; ++k) {
        double scale = std::max(0.1, std::pow(0.85, k));
        ps = propagate(ps, Pose::identity(), K, cfg, Rng::derive(51, 3, k), scale);
        ps = update(ps, obs.rgb, obs.depth, K, bracket_book(), cfg).particles;
    }
    Pose est = estimate(ps, K);
    double u = 0, v = 0, ez = 0;
    point_to_pixel(est.translation, K, u, v, ez);
    CHECK(std::abs(u - K.cx) < 2.0);
    CHECK(std::abs(v - K.cy) < 2.0);
    CHECK(std::abs(est.translation[2] - 0.5) < 0.02);
}

TEST_CASE("particles pushed off the image clamp to the frustum") {
    DepthImage depth(160, 120, 0.6f);
    FilterConfig cfg = quiet_config();
    cfg.sigma_u = cfg.sigma_v = cfg.sigma_z = 0.0;
    CameraIntrinsics K = small_K();
    ParticleSet ps = init_particles(5, 60, depth, tiny_dims(), cfg, 61);
    // camera pans hard right: particles near the left edge would leave the view
    MotionDelta delta = relative_motion(Pose::identity(),
                                        Pose::rotate_axis(Vec3::UnitY(), 0.5));
    int clamped = 0;
    ParticleSet moved = propagate(ps, delta, K, cfg, 62, 0.0, &clamped);
    CHECK(clamped > 0);
    for (const Particle& p : moved.particles) {
        CHECK(p.u >= 0.0);
        CHECK(p.u <= double(K.width - 1));
        CHECK(p.z > 0.0);
    }
}
