#include "poseloop/mesh.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace poseloop {

double TriangleMesh::diameter() const {
    double best = 0.0;
    for (size_t i = 0; i < vertices.size(); ++i)
        for (size_t j = i + 1; j < vertices.size(); ++j)
            best = std::max(best, (vertices[i] - vertices[j]).squaredNorm());
    return std::sqrt(best);
}

double TriangleMesh::surface_area() const {
    double a = 0.0;
    for (const auto& t : triangles) {
        Vec3 e1 = vertices[t[1]] - vertices[t[0]];
        Vec3 e2 = vertices[t[2]] - vertices[t[0]];
        a += 0.5 * e1.cross(e2).norm();
    }
    return a;
}

Vec3 TriangleMesh::centroid() const {
    Vec3 c = Vec3::Zero();
    for (const auto& v : vertices) c += v;
    return vertices.empty() ? c : Vec3(c / double(vertices.size()));
}

void TriangleMesh::bounds(Vec3& lo, Vec3& hi) const {
    lo = Vec3::Constant(1e30);
    hi = Vec3::Constant(-1e30);
    for (const auto& v : vertices) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
}

bool TriangleMesh::is_watertight(std::string* why) const {
    std::map<std::pair<int, int>, int> edge_count;
    for (const auto& t : triangles) {
        for (int k = 0; k < 3; ++k) {
            int a = t[k], b = t[(k + 1) % 3];
            edge_count[{std::min(a, b), std::max(a, b)}]++;
        }
    }
    for (const auto& [edge, count] : edge_count) {
        if (count != 2) {
            if (why) {
                std::ostringstream os;
                os << "edge (" << edge.first << "," << edge.second << ") shared by " << count
                   << " triangles";
                *why = os.str();
            }
            return false;
        }
    }
    return true;
}

TriangleMesh make_box(double sx, double sy, double sz) {
    TriangleMesh m;
    double hx = sx / 2, hy = sy / 2, hz = sz / 2;
    for (int i = 0; i < 8; ++i)
        m.vertices.push_back(
            Vec3(i & 1 ? hx : -hx, i & 2 ? hy : -hy, i & 4 ? hz : -hz));
    auto quad = [&](int a, int b, int c, int d) {
        m.triangles.push_back({a, b, c});
        m.triangles.push_back({a, c, d});
    };
    quad(0, 2, 3, 1);  // z-
    quad(4, 5, 7, 6);  // z+
    quad(0, 1, 5, 4);  // y-
    quad(2, 6, 7, 3);  // y+
    quad(0, 4, 6, 2);  // x-
    quad(1, 3, 7, 5);  // x+
    return m;
}

TriangleMesh make_cylinder(double radius, double height, int segments) {
    TriangleMesh m;
    double hz = height / 2;
    for (int i = 0; i < segments; ++i) {
        double a = 2.0 * M_PI * i / segments;
        m.vertices.push_back(Vec3(radius * std::cos(a), radius * std::sin(a), -hz));
        m.vertices.push_back(Vec3(radius * std::cos(a), radius * std::sin(a), hz));
    }
    int bot_c = int(m.vertices.size());
    m.vertices.push_back(Vec3(0, 0, -hz));
    int top_c = int(m.vertices.size());
    m.vertices.push_back(Vec3(0, 0, hz));
    for (int i = 0; i < segments; ++i) {
        int j = (i + 1) % segments;
        int b0 = 2 * i, t0 = 2 * i + 1, b1 = 2 * j, t1 = 2 * j + 1;
        m.triangles.push_back({b0, b1, t1});
        m.triangles.push_back({b0, t1, t0});
        m.triangles.push_back({bot_c, b1, b0});
        m.triangles.push_back({top_c, t0, t1});
    }
    return m;
}

TriangleMesh make_icosphere(double radius, int subdivisions) {
    // base icosahedron
    const double p = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> verts = {
        {-1, p, 0}, {1, p, 0}, {-1, -p, 0}, {1, -p, 0}, {0, -1, p}, {0, 1, p},
        {0, -1, -p}, {0, 1, -p}, {p, 0, -1}, {p, 0, 1}, {-p, 0, -1}, {-p, 0, 1}};
    std::vector<std::array<int, 3>> tris = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9},
        {5, 11, 4}, {11, 10, 2}, {10, 7, 6},  {7, 1, 8},  {3, 9, 4},   {3, 4, 2},
        {3, 2, 6},  {3, 6, 8},  {3, 8, 9},   {4, 9, 5},  {2, 4, 11},  {6, 2, 10},
        {8, 6, 7},  {9, 8, 1}};
    for (auto& v : verts) v.normalize();

    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            auto key = std::make_pair(std::min(a, b), std::max(a, b));
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            Vec3 v = (verts[a] + verts[b]).normalized();
            verts.push_back(v);
            int idx = int(verts.size()) - 1;
            midpoint[key] = idx;
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(tris.size() * 4);
        for (const auto& t : tris) {
            int ab = mid(t[0], t[1]), bc = mid(t[1], t[2]), ca = mid(t[2], t[0]);
            next.push_back({t[0], ab, ca});
            next.push_back({t[1], bc, ab});
            next.push_back({t[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        tris = std::move(next);
    }

    TriangleMesh m;
    for (const auto& v : verts) m.vertices.push_back(v * radius);
    m.triangles = tris;
    return m;
}

TriangleMesh make_l_bracket(double leg_a, double leg_b, double thickness, double depth) {
    // L cross-section in xy, star-shaped from the corner vertex, extruded in z.
    double a = leg_a, b = leg_b, t = thickness, d = depth;
    std::vector<Eigen::Vector2d> poly = {{0, 0}, {a, 0}, {a, t}, {t, t}, {t, b}, {0, b}};
    TriangleMesh m;
    int n = int(poly.size());
    for (int layer = 0; layer < 2; ++layer) {
        double z = layer == 0 ? 0.0 : d;
        for (const auto& p : poly) m.vertices.push_back(Vec3(p.x(), p.y(), z));
    }
    // caps: fan from vertex 0 (valid for this polygon)
    for (int i = 1; i + 1 < n; ++i) {
        m.triangles.push_back({0, i + 1, i});          // bottom, normal -z
        m.triangles.push_back({n, n + i, n + i + 1});  // top, normal +z
    }
    for (int i = 0; i < n; ++i) {
        int j = (i + 1) % n;
        m.triangles.push_back({i, j, n + j});
        m.triangles.push_back({i, n + j, n + i});
    }
    // center the bounding box on the origin
    Vec3 lo, hi;
    m.bounds(lo, hi);
    Vec3 c = 0.5 * (lo + hi);
    for (auto& v : m.vertices) v -= c;
    return m;
}

TriangleMesh make_mug(double radius, double height) {
    TriangleMesh m = make_cylinder(radius, height, 40);
    // torus handle in the xz plane, tube embedded into the body wall
    double ring_r = 0.62 * radius;
    double tube_r = 0.22 * radius;
    double cx = radius + ring_r - 0.35 * radius;
    int nu = 24, nv = 10;
    int base = int(m.vertices.size());
    for (int i = 0; i < nu; ++i) {
        double u = 2.0 * M_PI * i / nu;
        for (int j = 0; j < nv; ++j) {
            double v = 2.0 * M_PI * j / nv;
            double rr = ring_r + tube_r * std::cos(v);
            m.vertices.push_back(Vec3(cx + rr * std::cos(u), tube_r * std::sin(v),
                                      rr * std::sin(u)));
        }
    }
    for (int i = 0; i < nu; ++i) {
        int i2 = (i + 1) % nu;
        for (int j = 0; j < nv; ++j) {
            int j2 = (j + 1) % nv;
            int v00 = base + i * nv + j, v01 = base + i * nv + j2;
            int v10 = base + i2 * nv + j, v11 = base + i2 * nv + j2;
            m.triangles.push_back({v00, v10, v11});
            m.triangles.push_back({v00, v11, v01});
        }
    }
    return m;
}

std::vector<Vec3> sample_surface(const TriangleMesh& mesh, int m, std::uint64_t seed) {
    if (m < 1) throw std::invalid_argument("sample_surface: m must be >= 1");
    std::vector<double> cum;
    cum.reserve(mesh.triangles.size());
    double total = 0.0;
    for (const auto& t : mesh.triangles) {
        Vec3 e1 = mesh.vertices[t[1]] - mesh.vertices[t[0]];
        Vec3 e2 = mesh.vertices[t[2]] - mesh.vertices[t[0]];
        total += 0.5 * e1.cross(e2).norm();
        cum.push_back(total);
    }
    if (total <= 0.0) throw std::runtime_error("sample_surface: mesh has zero surface area");

    Rng rng(seed);
    std::vector<Vec3> out;
    out.reserve(m);
    for (int i = 0; i < m; ++i) {
        double r = rng.uniform() * total;
        size_t lo = std::lower_bound(cum.begin(), cum.end(), r) - cum.begin();
        if (lo >= cum.size()) lo = cum.size() - 1;
        const auto& t = mesh.triangles[lo];
        double u = rng.uniform(), v = rng.uniform();
        double su = std::sqrt(u);
        double b0 = 1.0 - su, b1 = su * (1.0 - v), b2 = su * v;
        out.push_back(b0 * mesh.vertices[t[0]] + b1 * mesh.vertices[t[1]] +
                      b2 * mesh.vertices[t[2]]);
    }
    return out;
}

TriangleMesh load_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open mesh file: " + path);
    TriangleMesh m;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "v") {
            double x, y, z;
            ss >> x >> y >> z;
            m.vertices.push_back(Vec3(x, y, z));
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string tok;
            while (ss >> tok) {
                // accept "i", "i/..", "i//.." forms
                idx.push_back(std::stoi(tok.substr(0, tok.find('/'))) - 1);
            }
            for (size_t k = 2; k < idx.size(); ++k)
                m.triangles.push_back({idx[0], int(idx[k - 1]), int(idx[k])});
        }
    }
    if (m.vertices.empty() || m.triangles.empty())
        throw std::runtime_error("mesh file has no v/f data: " + path);
    return m;
}

void save_obj(const TriangleMesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write mesh file: " + path);
    char buf[128];
    for (const auto& v : mesh.vertices) {
        std::snprintf(buf, sizeof(buf), "v %.9g %.9g %.9g\n", v.x(), v.y(), v.z());
        out << buf;
    }
    for (const auto& t : mesh.triangles)
        out << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
}

}  // namespace poseloop
