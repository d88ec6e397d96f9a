#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "poseloop/sdf.hpp"
#include "test_support.hpp"

using namespace poseloop;

namespace {

double box_sdf(const Vec3& p, const Vec3& half) {
    Vec3 q = p.cwiseAbs() - half;
    Vec3 outside = q.cwiseMax(0.0);
    double inside = std::min(q.maxCoeff(), 0.0);
    return outside.norm() + inside;
}

}  // namespace

TEST_CASE("unit cube distances at landmark points") {
    TriangleMesh cube = make_box(1, 1, 1);
    SdfGrid g = build_sdf(cube, 0.05);
    CHECK(sample_sdf(g, Vec3::Zero()).value == doctest::Approx(-0.5).epsilon(0.02));
    CHECK(sample_sdf(g, Vec3(1, 0, 0)).value == doctest::Approx(0.5).epsilon(0.02));
    CHECK(sample_sdf(g, Vec3(0.4, 0, 0)).value == doctest::Approx(-0.1).epsilon(0.05));
    Vec3 grad = sample_sdf(g, Vec3(0.4, 0, 0)).gradient;
    CHECK((grad - Vec3(1, 0, 0)).norm() < 0.05);
}

TEST_CASE("sphere center distance equals the radius") {
    TriangleMesh sphere = make_icosphere(1.0);
    SdfGrid g = build_sdf(sphere, 0.1);
    // icosphere slightly under-approximates the sphere, so allow a few percent
    CHECK(sample_sdf(g, Vec3::Zero()).value == doctest::Approx(-1.0).epsilon(0.03));
}

TEST_CASE("interpolation is exact on voxel nodes and linear between them") {
    TriangleMesh cube = make_box(0.2, 0.3, 0.1);
    SdfGrid g = build_sdf(cube, 0.02);
    Rng rng(3);
    for (int n = 0; n < 200; ++n) {
        int i = int(rng.uniform_index(std::size_t(g.dims[0] - 1)));
        int j = int(rng.uniform_index(std::size_t(g.dims[1] - 1)));
        int k = int(rng.uniform_index(std::size_t(g.dims[2] - 1)));
        Vec3 node = g.origin + g.voxel_size * Vec3(i, j, k);
        CHECK(std::abs(sample_sdf(g, node).value - double(g.at(i, j, k))) < 1e-9);
        Vec3 mid = node + Vec3(g.voxel_size / 2, 0, 0);
        double expect = 0.5 * (double(g.at(i, j, k)) + double(g.at(i + 1, j, k)));
        CHECK(std::abs(sample_sdf(g, mid).value - expect) < 1e-9);
    }
}

TEST_CASE("grid values match the analytic box distance") {
    Vec3 half(0.1, 0.15, 0.05);
    TriangleMesh cube = make_box(2 * half[0], 2 * half[1], 2 * half[2]);
    SdfGrid g = build_sdf(cube, 0.01);
    Rng rng(5);
    double worst = 0.0;
    // stay on the grid: outside it the far-field approximation takes over
    const Vec3 lo = g.origin, hi = g.max_corner();
    for (int n = 0; n < 2000; ++n) {
        Vec3 p(rng.uniform(lo[0], hi[0]), rng.uniform(lo[1], hi[1]), rng.uniform(lo[2], hi[2]));
        double got = sample_sdf(g, p).value;
        worst = std::max(worst, std::abs(got - box_sdf(p, half)));
    }
    CHECK(worst < g.voxel_size);
}

TEST_CASE("gradient agrees with central differences away from creases") {
    TriangleMesh cube = make_box(0.2, 0.2, 0.2);
    SdfGrid g = build_sdf(cube, 0.01);
    Rng rng(7);
    const double h = g.voxel_size / 10;
    // keep the probe stencil strictly inside the grid
    const Vec3 lo = g.origin, hi = g.max_corner();
    int tested = 0;
    for (int n = 0; n < 5000 && tested < 300; ++n) {
        Vec3 p(rng.uniform(lo[0] + h, hi[0] - h), rng.uniform(lo[1] + h, hi[1] - h),
               rng.uniform(lo[2] + h, hi[2] - h));
        // stay away from the diagonal creases of the box distance and from
        // voxel-cell boundaries, where the interpolant kinks
        Vec3 a = p.cwiseAbs();
        double gap = std::abs(a[0] - a[1]);
        gap = std::min(gap, std::abs(a[0] - a[2]));
        gap = std::min(gap, std::abs(a[1] - a[2]));
        if (gap < 3 * g.voxel_size) continue;
        Vec3 cell = (p - g.origin) / g.voxel_size;
        bool near_face = false;
        for (int ax = 0; ax < 3; ++ax) {
            double f = cell[ax] - std::floor(cell[ax]);
            if (f < 0.15 || f > 0.85) near_face = true;
        }
        if (near_face) continue;
        ++tested;
        SdfSample s = sample_sdf(g, p);
        Vec3 fd;
        for (int ax = 0; ax < 3; ++ax) {
            Vec3 dp = Vec3::Zero();
            dp[ax] = h;
            fd[ax] = (sample_sdf(g, p + dp).value - sample_sdf(g, p - dp).value) / (2 * h);
        }
        CHECK((s.gradient - fd).norm() <= 0.05 * std::max(fd.norm(), 1e-6));
    }
    CHECK(tested >= 300);
}

TEST_CASE("surface samples sit within a voxel of the zero level set") {
    for (const TriangleMesh& mesh :
         {make_box(0.1, 0.12, 0.08), make_cylinder(0.05, 0.12), make_l_bracket(0.1, 0.08, 0.02, 0.06)}) {
        SdfGrid g = build_sdf(mesh, 0.005);
        auto pts = sample_surface(mesh, 500, 11);
        for (const Vec3& p : pts) CHECK(std::abs(sample_sdf(g, p).value) < g.voxel_size);
    }
}

TEST_CASE("centroid of a convex shape is inside") {
    for (const TriangleMesh& mesh :
         {make_box(0.1, 0.1, 0.1), make_cylinder(0.04, 0.1), make_icosphere(0.05)}) {
        SdfGrid g = build_sdf(mesh, 0.004);
        CHECK(sample_sdf(g, mesh.centroid()).value < 0.0);
    }
}

TEST_CASE("finer grids agree with coarser ones") {
    TriangleMesh mesh = make_l_bracket(0.1, 0.08, 0.02, 0.06);
    SdfGrid coarse = build_sdf(mesh, 0.008);
    SdfGrid fine = build_sdf(mesh, 0.004);
    Rng rng(13);
    // the coarse grid is padded wider; compare where both grids interpolate
    const Vec3 lo = fine.origin.cwiseMax(coarse.origin);
    const Vec3 hi = fine.max_corner().cwiseMin(coarse.max_corner());
    for (int n = 0; n < 500; ++n) {
        Vec3 p(rng.uniform(lo[0], hi[0]), rng.uniform(lo[1], hi[1]), rng.uniform(lo[2], hi[2]));
        double a = sample_sdf(coarse, p).value;
        double b = sample_sdf(fine, p).value;
        CHECK(std::abs(a - b) < coarse.voxel_size);
    }
}

TEST_CASE("out-of-grid queries report far field and point back at the grid") {
    TriangleMesh cube = make_box(0.1, 0.1, 0.1);
    SdfGrid g = build_sdf(cube, 0.01);
    Vec3 far = g.max_corner() + Vec3(0.5, 0, 0);
    SdfSample s = sample_sdf(g, far);
    CHECK(s.far_field);
    CHECK(s.value > 0.4);
    CHECK(s.gradient[0] > 0.0);  // outward along +x
    CHECK_FALSE(sample_sdf(g, Vec3::Zero()).far_field);
}

TEST_CASE("non-watertight meshes are refused with a pointer at the hole") {
    TriangleMesh open;
    open.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
    open.triangles = {{0, 1, 2}};
    std::string why;
    CHECK_FALSE(open.is_watertight(&why));
    CHECK(why.find("edge") != std::string::npos);
    CHECK_THROWS_AS(build_sdf(open, 0.1), std::runtime_error);
}

TEST_CASE("save and load round-trips the grid exactly") {
    TriangleMesh mesh = make_cylinder(0.04, 0.1);
    SdfGrid g = build_sdf(mesh, 0.01);
    std::string path = testutil::scratch_dir("sdf_io") + "/cyl.sdf";
    save_sdf(g, path);
    SdfGrid r = load_sdf(path);
    CHECK(r.dims == g.dims);
    CHECK(r.voxel_size == doctest::Approx(g.voxel_size).epsilon(1e-7));
    CHECK((r.origin - g.origin).norm() < 1e-6);
    REQUIRE(r.values.size() == g.values.size());
    for (std::size_t i = 0; i < g.values.size(); ++i) CHECK(r.values[i] == g.values[i]);
}

TEST_CASE("surface sampling covers shapes evenly") {
    TriangleMesh tri;
    tri.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
    tri.triangles = {{0, 1, 2}};
    auto one = sample_surface(tri, 1, 42);
    REQUIRE(one.size() == 1);
    // barycentric membership: x,y >= 0 and x + y <= 1 on the z=0 plane
    CHECK(one[0][2] == doctest::Approx(0.0));
    CHECK(one[0][0] >= 0.0);
    CHECK(one[0][1] >= 0.0);
    CHECK(one[0][0] + one[0][1] <= 1.0 + 1e-12);

    TriangleMesh sphere = make_icosphere(0.05);
    auto pts = sample_surface(sphere, 20000, 7);
    Vec3 mean = Vec3::Zero();
    for (const Vec3& p : pts) mean += p;
    mean /= double(pts.size());
    CHECK(mean.norm() < 0.01 * 0.05);
    for (int i = 0; i < 100; ++i)
        CHECK(pts[std::size_t(i)].norm() == doctest::Approx(0.05).epsilon(0.02));
}

TEST_CASE("mesh primitives report sane geometry") {
    TriangleMesh box = make_box(0.1, 0.2, 0.3);
    CHECK(box.is_watertight(nullptr));
    CHECK(box.diameter() == doctest::Approx(Vec3(0.1, 0.2, 0.3).norm()).epsilon(1e-9));
    CHECK(box.surface_area() == doctest::Approx(2 * (0.1 * 0.2 + 0.2 * 0.3 + 0.1 * 0.3)).epsilon(1e-9));
    Vec3 lo, hi;
    box.bounds(lo, hi);
    CHECK((lo - Vec3(-0.05, -0.1, -0.15)).norm() < 1e-12);
    CHECK((hi - Vec3(0.05, 0.1, 0.15)).norm() < 1e-12);
    for (const TriangleMesh& m :
         {make_cylinder(0.05, 0.1), make_icosphere(0.04), make_l_bracket(0.1, 0.08, 0.02, 0.06),
          make_mug(0.04, 0.09)}) {
        CHECK(m.is_watertight(nullptr));
        CHECK(m.diameter() > 0.0);
    }
}
