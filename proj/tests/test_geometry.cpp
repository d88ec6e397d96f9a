#include <doctest.h>

#include <cmath>

#include "poseloop/geometry.hpp"
#include "test_support.hpp"

using namespace poseloop;
using testutil::random_pose;
using testutil::random_quat;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("compose identity and inverse") {
    Rng rng(7);
    for (int i = 0; i < 50; ++i) {
        Pose p = random_pose(rng);
        Pose ip = compose(Pose::identity(), p);
        CHECK(rotation_angle(ip.rotation, p.rotation) < 1e-12);
        CHECK((ip.translation - p.translation).norm() < 1e-12);

        Pose should_be_identity = compose(p, invert(p));
        CHECK(rotation_angle(should_be_identity.rotation, Quat::Identity()) < 1e-9);
        CHECK(should_be_identity.translation.norm() < 1e-9);
    }
}

TEST_CASE("two quarter turns about z make a half turn") {
    Pose quarter = Pose::rotate_axis(Vec3::UnitZ(), kPi / 2);
    Pose half = compose(quarter, quarter);
    CHECK(rotation_angle(half.rotation, Quat(Eigen::AngleAxisd(kPi, Vec3::UnitZ()))) < 1e-12);
}

TEST_CASE("transform_point basics") {
    CHECK((transform_point(Pose::identity(), Vec3(1, 2, 3)) - Vec3(1, 2, 3)).norm() == 0.0);
    CHECK((transform_point(Pose::translate(0, 0, 0.5), Vec3::Zero()) - Vec3(0, 0, 0.5))
              .norm() == 0.0);
    Pose rz = Pose::rotate_axis(Vec3::UnitZ(), kPi / 2);
    CHECK((transform_point(rz, Vec3(1, 0, 0)) - Vec3(0, 1, 0)).norm() < 1e-12);
}

TEST_CASE("composition is associative on random poses") {
    Rng rng(11);
    for (int i = 0; i < 1000; ++i) {
        Pose a = random_pose(rng), b = random_pose(rng), c = random_pose(rng);
        Vec3 x(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
        Vec3 left = transform_point(compose(compose(a, b), c), x);
        Vec3 right = transform_point(compose(a, compose(b, c)), x);
        CHECK((left - right).norm() < 1e-9);
        CHECK(std::abs(compose(a, b).rotation.norm() - 1.0) < 1e-12);
    }
}

TEST_CASE("relative motion maps previous camera frame into the current one") {
    Rng rng(13);
    for (int i = 0; i < 20; ++i) {
        Pose prev = random_pose(rng), cur = random_pose(rng);
        Vec3 world(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
        Vec3 in_prev = transform_point(invert(prev), world);
        Vec3 in_cur = transform_point(invert(cur), world);
        Pose delta = relative_motion(prev, cur);
        CHECK((transform_point(delta, in_prev) - in_cur).norm() < 1e-9);
    }
}

TEST_CASE("euler roundtrip and ranges") {
    Rng rng(17);
    for (int i = 0; i < 500; ++i) {
        Quat q = random_quat(rng);
        EulerAngles e = quat_to_euler(q);
        CHECK(e.pitch >= -kPi);
        CHECK(e.pitch < kPi);
        CHECK(e.roll >= -kPi);
        CHECK(e.roll < kPi);
        CHECK(e.yaw >= -kPi / 2 - 1e-12);
        CHECK(e.yaw <= kPi / 2 + 1e-12);
        CHECK(rotation_angle(euler_to_quat(e), q) < 1e-9);
    }
    // axis conventions: pitch about x, yaw about y, roll about z
    CHECK(rotation_angle(euler_to_quat({0.3, 0, 0}),
                         Quat(Eigen::AngleAxisd(0.3, Vec3::UnitX()))) < 1e-12);
    CHECK(rotation_angle(euler_to_quat({0, 0.3, 0}),
                         Quat(Eigen::AngleAxisd(0.3, Vec3::UnitY()))) < 1e-12);
    CHECK(rotation_angle(euler_to_quat({0, 0, 0.3}),
                         Quat(Eigen::AngleAxisd(0.3, Vec3::UnitZ()))) < 1e-12);
}

TEST_CASE("rotation grid cell mapping is self-consistent") {
    GridDims dims;  // 16 x 8 x 16
    RotationGrid g = RotationGrid::uniform(dims);
    CHECK(g.cells() == 2048);
    CHECK(std::abs(g.sum() - 1.0) < 1e-9);
    for (int c = 0; c < g.cells(); ++c) {
        CHECK(g.nearest_cell(g.cell_quaternion(c)) == c);
    }
}

TEST_CASE("delta grid concentrates all mass in one cell") {
    GridDims dims;
    Rng rng(23);
    for (int i = 0; i < 20; ++i) {
        Quat q = random_quat(rng);
        RotationGrid g = RotationGrid::delta(dims, q);
        int c = g.argmax();
        CHECK(g.weight(c) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(c == g.nearest_cell(q));
    }
}

TEST_CASE("shift by the identity leaves the grid untouched") {
    GridDims dims;
    RotationGrid g = testutil::bingham_grid(dims, Quat::Identity(), 4.0);
    RotationGrid s = shift_rotation_grid(g, Pose::identity());
    for (int c = 0; c < g.cells(); ++c)
        CHECK(s.weight(c) == doctest::Approx(g.weight(c)).epsilon(1e-12));
}

TEST_CASE("bin-aligned pitch shift is a circular permutation") {
    GridDims dims;
    const double bin = 2 * kPi / dims.n_pitch;
    Rng rng(29);
    RotationGrid g = testutil::bingham_grid(dims, random_quat(rng), 6.0);
    RotationGrid s = shift_rotation_grid(g, Pose::rotate_axis(Vec3::UnitX(), bin));
    RotationGrid s3 = shift_rotation_grid(
        g, Pose::rotate_axis(Vec3::UnitX(), 3 * bin));
    for (int ip = 0; ip < dims.n_pitch; ++ip)
        for (int iy = 0; iy < dims.n_yaw; ++iy)
            for (int ir = 0; ir < dims.n_roll; ++ir) {
                int from = g.index(ip, iy, ir);
                CHECK(s.weight(g.index((ip + 1) % dims.n_pitch, iy, ir)) ==
                      doctest::Approx(g.weight(from)).epsilon(1e-9));
                CHECK(s3.weight(g.index((ip + 3) % dims.n_pitch, iy, ir)) ==
                      doctest::Approx(g.weight(from)).epsilon(1e-9));
            }
}

TEST_CASE("half-bin shift splits a delta in two") {
    GridDims dims;
    int cell = RotationGrid(dims).index(5, 3, 7);
    RotationGrid g(dims);
    g.weights().setZero();
    g.weights()[cell] = 1.0;
    RotationGrid s =
        shift_rotation_grid(g, Pose::rotate_axis(Vec3::UnitX(), kPi / dims.n_pitch));
    CHECK(s.weight(s.index(5, 3, 7)) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(s.weight(s.index(6, 3, 7)) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(std::abs(s.sum() - 1.0) < 1e-9);
}

TEST_CASE("shift conserves mass and rejects unnormalized grids") {
    GridDims dims;
    Rng rng(31);
    for (int i = 0; i < 100; ++i) {
        RotationGrid g = testutil::bingham_grid(dims, random_quat(rng), 5.0);
        Pose d = Pose::from(random_quat(rng), Vec3::Zero());
        RotationGrid s = shift_rotation_grid(g, d);
        CHECK(std::abs(s.sum() - 1.0) < 1e-9);
        CHECK(s.weights().minCoeff() >= 0.0);
    }
    RotationGrid bad = RotationGrid::uniform(dims);
    bad.weights() *= 2.0;
    CHECK_THROWS(shift_rotation_grid(bad, Pose::identity()));
}

TEST_CASE("shift then unshift blurs less on finer grids") {
    const Quat ref = Quat(Eigen::AngleAxisd(0.4, Vec3(1, 2, 0.5).normalized()));
    const Pose d = Pose::from(
        Quat(Eigen::AngleAxisd(0.17, Vec3(0.3, -0.2, 0.9).normalized())), Vec3::Zero());
    auto roundtrip_kl = [&](int n) {
        GridDims dims{n, n, n};
        RotationGrid g = testutil::bingham_grid(dims, ref, 8.0);
        RotationGrid rt = shift_rotation_grid(shift_rotation_grid(g, d), invert(d));
        return testutil::kl_divergence(g, rt);
    };
    double kl8 = roundtrip_kl(8), kl16 = roundtrip_kl(16);
    CHECK(kl8 > kl16);
    CHECK(kl16 > 0.0);
}

TEST_CASE("expectation of a delta grid is the cell center") {
    GridDims dims;
    RotationGrid g(dims);
    g.weights().setZero();
    int cell = g.index(4, 2, 9);
    g.weights()[cell] = 1.0;
    CHECK(rotation_angle(grid_expectation(g), g.cell_quaternion(cell)) < 1e-12);
}

TEST_CASE("expectation of two adjacent cells lands near the midpoint") {
    GridDims dims;
    RotationGrid g(dims);
    g.weights().setZero();
    int a = g.index(5, 3, 7), b = g.index(6, 3, 7);
    g.weights()[a] = 0.5;
    g.weights()[b] = 0.5;
    Quat qa = g.cell_quaternion(a), qb = g.cell_quaternion(b);
    Quat mid = qa.slerp(0.5, qb);
    const double half_bin = kPi / dims.n_pitch;
    CHECK(rotation_angle(grid_expectation(g), mid) < half_bin);
}

TEST_CASE("expectation tracks a small roll shift within a bin width") {
    GridDims dims;
    RotationGrid g = RotationGrid::delta(dims, Quat::Identity());
    Quat before = grid_expectation(g);
    const double roll = 10.0 * kPi / 180.0;
    RotationGrid s = shift_rotation_grid(g, Pose::rotate_axis(Vec3::UnitZ(), roll));
    Quat after = grid_expectation(s);
    const double bin = 2 * kPi / dims.n_roll;
    // against the literal target rotation, and against the shifted start
    CHECK(rotation_angle(after, Quat(Eigen::AngleAxisd(roll, Vec3::UnitZ()))) < bin);
    Quat moved = (Quat(Eigen::AngleAxisd(roll, Vec3::UnitZ())) * before).normalized();
    CHECK(rotation_angle(after, moved) < bin / 2);
}

TEST_CASE("expectation is equivariant for bin-aligned shifts") {
    GridDims dims;
    const double bin = 2 * kPi / dims.n_pitch;
    RotationGrid g = RotationGrid::delta(dims, Quat::Identity());
    Quat before = grid_expectation(g);
    RotationGrid s = shift_rotation_grid(g, Pose::rotate_axis(Vec3::UnitX(), 2 * bin));
    // intrinsic x increment composes on the right
    Quat expected = (before * Quat(Eigen::AngleAxisd(2 * bin, Vec3::UnitX()))).normalized();
    CHECK(rotation_angle(grid_expectation(s), expected) < 1e-9);
}

TEST_CASE("degenerate grids are rejected") {
    RotationGrid g(GridDims{});
    g.weights().setZero();
    CHECK_THROWS(grid_expectation(g));
}

TEST_CASE("gaussian blur keeps grids normalized and is a no-op at zero width") {
    GridDims dims;
    RotationGrid g = testutil::bingham_grid(dims, Quat::Identity(), 6.0);
    RotationGrid b = blur_rotation_grid(g, 0.05);
    CHECK(std::abs(b.sum() - 1.0) < 1e-9);
    CHECK(b.weights().minCoeff() >= 0.0);
    RotationGrid same = blur_rotation_grid(g, 0.0);
    for (int c = 0; c < g.cells(); ++c) CHECK(same.weight(c) == g.weight(c));
    // blurring strictly flattens the mode
    CHECK(b.weights().maxCoeff() < g.weights().maxCoeff());
}
