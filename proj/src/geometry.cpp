#include "poseloop/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace poseloop {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

double wrap_pi(double a) {
    a = std::fmod(a + kPi, kTwoPi);
    if (a < 0.0) a += kTwoPi;
    return a - kPi;
}
}  // namespace

Pose compose(const Pose& a, const Pose& b) {
    Pose out;
    out.rotation = (a.rotation * b.rotation).normalized();
    out.translation = a.rotation * b.translation + a.translation;
    return out;
}

Pose invert(const Pose& p) {
    Pose out;
    out.rotation = p.rotation.conjugate();
    out.translation = -(out.rotation * p.translation);
    return out;
}

Vec3 transform_point(const Pose& p, const Vec3& x) { return p.rotation * x + p.translation; }

Vec3 rotate_vector(const Pose& p, const Vec3& v) { return p.rotation * v; }

double rotation_angle(const Quat& a, const Quat& b) {
    double d = std::abs(a.dot(b));
    d = std::min(1.0, d);
    return 2.0 * std::acos(d);
}

Pose relative_motion(const Pose& prev, const Pose& cur) { return compose(invert(cur), prev); }

Quat euler_to_quat(const EulerAngles& e) {
    Quat qz(Eigen::AngleAxisd(e.roll, Vec3::UnitZ()));
    Quat qy(Eigen::AngleAxisd(e.yaw, Vec3::UnitY()));
    Quat qx(Eigen::AngleAxisd(e.pitch, Vec3::UnitX()));
    return (qz * qy * qx).normalized();
}

EulerAngles quat_to_euler(const Quat& q) {
    Eigen::Matrix3d r = q.normalized().toRotationMatrix();
    EulerAngles e;
    double sy = -r(2, 0);
    sy = std::max(-1.0, std::min(1.0, sy));
    e.yaw = std::asin(sy);
    if (std::abs(sy) > 1.0 - 1e-12) {
        // gimbal: pitch and roll are coupled, fix pitch = 0
        e.pitch = 0.0;
        e.roll = std::atan2(-r(0, 1), r(1, 1));
    } else {
        e.roll = std::atan2(r(1, 0), r(0, 0));
        e.pitch = std::atan2(r(2, 1), r(2, 2));
    }
    e.pitch = wrap_pi(e.pitch);
    e.roll = wrap_pi(e.roll);
    return e;
}

RotationGrid::RotationGrid(GridDims dims) : dims_(dims) {
    weights_ = Eigen::VectorXd::Zero(dims.cells());
}

RotationGrid RotationGrid::uniform(GridDims dims) {
    RotationGrid g(dims);
    g.weights_.setConstant(1.0 / dims.cells());
    return g;
}

RotationGrid RotationGrid::delta(GridDims dims, const Quat& q) {
    RotationGrid g(dims);
    g.weights_[g.nearest_cell(q)] = 1.0;
    return g;
}

EulerAngles RotationGrid::cell_center(int cell) const {
    int ir = cell % dims_.n_roll;
    int iy = (cell / dims_.n_roll) % dims_.n_yaw;
    int ip = cell / (dims_.n_roll * dims_.n_yaw);
    EulerAngles e;
    e.pitch = -kPi + (ip + 0.5) * kTwoPi / dims_.n_pitch;
    e.yaw = -kPi / 2.0 + (iy + 0.5) * kPi / dims_.n_yaw;
    e.roll = -kPi + (ir + 0.5) * kTwoPi / dims_.n_roll;
    return e;
}

Quat RotationGrid::cell_quaternion(int cell) const { return euler_to_quat(cell_center(cell)); }

int RotationGrid::nearest_cell(const Quat& q) const {
    EulerAngles e = quat_to_euler(q);
    auto bin = [](double v, double lo, double bin_w, int n, bool wrap) {
        int i = int(std::floor((v - lo) / bin_w));
        if (wrap) {
            i %= n;
            if (i < 0) i += n;
        } else {
            i = std::max(0, std::min(n - 1, i));
        }
        return i;
    };
    int ip = bin(e.pitch, -kPi, kTwoPi / dims_.n_pitch, dims_.n_pitch, true);
    int iy = bin(e.yaw, -kPi / 2.0, kPi / dims_.n_yaw, dims_.n_yaw, false);
    int ir = bin(e.roll, -kPi, kTwoPi / dims_.n_roll, dims_.n_roll, true);
    return index(ip, iy, ir);
}

void RotationGrid::normalize() {
    double s = weights_.sum();
    if (s <= 0.0) throw std::runtime_error("degenerate distribution: rotation grid sums to zero");
    weights_ /= s;
}

int RotationGrid::argmax() const {
    int best = 0;
    weights_.maxCoeff(&best);
    return best;
}

RotationGrid shift_rotation_grid(const RotationGrid& g, const MotionDelta& d) {
    if (std::abs(g.sum() - 1.0) > 1e-6)
        throw std::invalid_argument("shift_rotation_grid: input grid is not normalized");

    const GridDims& dims = g.dims();
    EulerAngles de = quat_to_euler(d.rotation);

    const double bp = kTwoPi / dims.n_pitch;
    const double by = kPi / dims.n_yaw;
    const double br = kTwoPi / dims.n_roll;

    // Fractional index offsets; source cell i maps to i + f along each axis.
    auto snap = [](double f) {
        double r = std::round(f);
        return (std::abs(f - r) < 1e-9) ? r : f;
    };
    const double fp = snap(de.pitch / bp);
    const double fy = snap(de.yaw / by);
    const double fr = snap(de.roll / br);

    RotationGrid out(dims);
    auto& w = out.weights();

    const int np = dims.n_pitch, ny = dims.n_yaw, nr = dims.n_roll;
    for (int ip = 0; ip < np; ++ip) {
        double tp = ip + fp;
        int p0 = int(std::floor(tp));
        double ap = tp - p0;
        for (int iy = 0; iy < ny; ++iy) {
            double ty = iy + fy;
            int y0 = int(std::floor(ty));
            double ay = ty - y0;
            // fold yaw mass that leaves [-pi/2, pi/2] into the boundary cell
            int y0c = y0, y1c = y0 + 1;
            double ay0 = 1.0 - ay, ay1 = ay;
            if (y0c < 0) { y0c = 0; }
            if (y0c > ny - 1) { y0c = ny - 1; }
            if (y1c < 0) { y1c = 0; }
            if (y1c > ny - 1) { y1c = ny - 1; }
            for (int ir = 0; ir < nr; ++ir) {
                double m = g.weight(g.index(ip, iy, ir));
                if (m == 0.0) continue;
                double tr = ir + fr;
                int r0 = int(std::floor(tr));
                double ar = tr - r0;

                int pa = ((p0 % np) + np) % np;
                int pb = (pa + 1) % np;
                int ra = ((r0 % nr) + nr) % nr;
                int rb = (ra + 1) % nr;

                const int pi_[2] = {pa, pb};
                const double pw[2] = {1.0 - ap, ap};
                const int yi_[2] = {y0c, y1c};
                const double yw[2] = {ay0, ay1};
                const int ri_[2] = {ra, rb};
                const double rw[2] = {1.0 - ar, ar};
                for (int a = 0; a < 2; ++a) {
                    if (pw[a] == 0.0) continue;
                    for (int b = 0; b < 2; ++b) {
                        if (yw[b] == 0.0) continue;
                        for (int c = 0; c < 2; ++c) {
                            if (rw[c] == 0.0) continue;
                            w[out.index(pi_[a], yi_[b], ri_[c])] += m * pw[a] * yw[b] * rw[c];
                        }
                    }
                }
            }
        }
    }
    out.normalize();
    return out;
}

namespace {

std::vector<double> gaussian_taps(double sigma_bins, int& radius) {
    radius = std::max(1, int(std::ceil(3.0 * sigma_bins)));
    std::vector<double> taps(2 * radius + 1);
    double s = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        double v = std::exp(-0.5 * (i * i) / (sigma_bins * sigma_bins));
        taps[i + radius] = v;
        s += v;
    }
    for (auto& t : taps) t /= s;
    return taps;
}

}  // namespace

RotationGrid blur_rotation_grid(const RotationGrid& g, double sigma_radians) {
    if (sigma_radians <= 0.0) return g;
    const GridDims& dims = g.dims();
    const int np = dims.n_pitch, ny = dims.n_yaw, nr = dims.n_roll;

    RotationGrid cur = g;
    RotationGrid nxt(dims);

    // pitch axis (wrap)
    {
        int rad;
        auto taps = gaussian_taps(sigma_radians / (kTwoPi / np), rad);
        auto& w = nxt.weights();
        w.setZero();
        for (int ip = 0; ip < np; ++ip)
            for (int iy = 0; iy < ny; ++iy)
                for (int ir = 0; ir < nr; ++ir) {
                    double m = cur.weight(cur.index(ip, iy, ir));
                    if (m == 0.0) continue;
                    for (int t = -rad; t <= rad; ++t) {
                        int j = ((ip + t) % np + np) % np;
                        w[nxt.index(j, iy, ir)] += m * taps[t + rad];
                    }
                }
        std::swap(cur, nxt);
    }
    // yaw axis (clamp-fold)
    {
        int rad;
        auto taps = gaussian_taps(sigma_radians / (kPi / ny), rad);
        auto& w = nxt.weights();
        w.setZero();
        for (int ip = 0; ip < np; ++ip)
            for (int iy = 0; iy < ny; ++iy)
                for (int ir = 0; ir < nr; ++ir) {
                    double m = cur.weight(cur.index(ip, iy, ir));
                    if (m == 0.0) continue;
                    for (int t = -rad; t <= rad; ++t) {
                        int j = std::max(0, std::min(ny - 1, iy + t));
                        w[nxt.index(ip, j, ir)] += m * taps[t + rad];
                    }
                }
        std::swap(cur, nxt);
    }
    // roll axis (wrap)
    {
        int rad;
        auto taps = gaussian_taps(sigma_radians / (kTwoPi / nr), rad);
        auto& w = nxt.weights();
        w.setZero();
        for (int ip = 0; ip < np; ++ip)
            for (int iy = 0; iy < ny; ++iy)
                for (int ir = 0; ir < nr; ++ir) {
                    double m = cur.weight(cur.index(ip, iy, ir));
                    if (m == 0.0) continue;
                    for (int t = -rad; t <= rad; ++t) {
                        int j = ((ir + t) % nr + nr) % nr;
                        w[nxt.index(ip, iy, j)] += m * taps[t + rad];
                    }
                }
        std::swap(cur, nxt);
    }
    cur.normalize();
    return cur;
}

Quat grid_expectation(const RotationGrid& g) {
    if (g.sum() <= 0.0)
        throw std::runtime_error("degenerate distribution: rotation grid sums to zero");

    const GridDims& dims = g.dims();
    int mode = g.argmax();
    int mr = mode % dims.n_roll;
    int my = (mode / dims.n_roll) % dims.n_yaw;
    int mp = mode / (dims.n_roll * dims.n_yaw);

    Quat ref = g.cell_quaternion(mode);
    Eigen::Vector4d acc = Eigen::Vector4d::Zero();
    for (int dp = -1; dp <= 1; ++dp)
        for (int dy = -1; dy <= 1; ++dy) {
            int iy = my + dy;
            if (iy < 0 || iy >= dims.n_yaw) continue;
            for (int dr = -1; dr <= 1; ++dr) {
                int ip = ((mp + dp) % dims.n_pitch + dims.n_pitch) % dims.n_pitch;
                int ir = ((mr + dr) % dims.n_roll + dims.n_roll) % dims.n_roll;
                int cell = g.index(ip, iy, ir);
                double m = g.weight(cell);
                if (m == 0.0) continue;
                Quat q = g.cell_quaternion(cell);
                if (q.dot(ref) < 0.0) q.coeffs() = -q.coeffs();
                acc += m * Eigen::Vector4d(q.w(), q.x(), q.y(), q.z());
            }
        }
    double n = acc.norm();
    if (n <= 0.0) throw std::runtime_error("degenerate distribution: empty mode neighborhood");
    return Quat(acc[0] / n, acc[1] / n, acc[2] / n, acc[3] / n);
}

}  // namespace poseloop
