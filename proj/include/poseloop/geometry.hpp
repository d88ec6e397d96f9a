#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <vector>

namespace poseloop {

using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;

/// Rigid transform: x_out = R * x + t. Rotation kept unit-norm.
struct Pose {
    Quat rotation{1.0, 0.0, 0.0, 0.0};
    Vec3 translation{0.0, 0.0, 0.0};

    static Pose identity() { return {}; }

    static Pose from(const Quat& q, const Vec3& t) { return {q.normalized(), t}; }

    static Pose translate(double x, double y, double z) {
        return {Quat::Identity(), Vec3(x, y, z)};
    }

    static Pose rotate_axis(const Vec3& axis, double angle) {
        return {Quat(Eigen::AngleAxisd(angle, axis.normalized())), Vec3::Zero()};
    }
};

Pose compose(const Pose& a, const Pose& b);
Pose invert(const Pose& p);
Vec3 transform_point(const Pose& p, const Vec3& x);
Vec3 rotate_vector(const Pose& p, const Vec3& v);

/// Rotation angle (radians) and translation distance between two poses.
double rotation_angle(const Quat& a, const Quat& b);

/// Relative camera-frame motion: maps coordinates in the frame of `prev` to
/// coordinates in the frame of `cur` (both are camera-in-world poses).
Pose relative_motion(const Pose& prev, const Pose& cur);

// Pose delta (dR, dt) applied to object-in-camera states during propagation.
using MotionDelta = Pose;

/// Intrinsic Z-Y-X Euler decomposition, R = Rz(roll) * Ry(yaw) * Rx(pitch).
/// pitch, roll in [-pi, pi); yaw in [-pi/2, pi/2].
struct EulerAngles {
    double pitch = 0.0;  // about x
    double yaw = 0.0;    // about y
    double roll = 0.0;   // about z
};

Quat euler_to_quat(const EulerAngles& e);
EulerAngles quat_to_euler(const Quat& q);

/// Discrete distribution over SO(3) on a pitch x yaw x roll grid.
/// Cell centers: pitch_i = -pi + (i+0.5)*2pi/n_pitch, yaw_j = -pi/2 +
/// (j+0.5)*pi/n_yaw, roll_k = -pi + (k+0.5)*2pi/n_roll. Weights are
/// non-negative and sum to 1 after any normalize/shift.
struct GridDims {
    int n_pitch = 16;
    int n_yaw = 8;
    int n_roll = 16;

    int cells() const { return n_pitch * n_yaw * n_roll; }
    bool operator==(const GridDims&) const = default;
};

class RotationGrid {
public:
    RotationGrid() = default;
    explicit RotationGrid(GridDims dims);

    static RotationGrid uniform(GridDims dims);
    /// All mass in the cell whose center is nearest to q.
    static RotationGrid delta(GridDims dims, const Quat& q);

    const GridDims& dims() const { return dims_; }
    int cells() const { return dims_.cells(); }

    double weight(int cell) const { return weights_[cell]; }
    Eigen::VectorXd& weights() { return weights_; }
    const Eigen::VectorXd& weights() const { return weights_; }

    int index(int ip, int iy, int ir) const {
        return (ip * dims_.n_yaw + iy) * dims_.n_roll + ir;
    }

    EulerAngles cell_center(int cell) const;
    Quat cell_quaternion(int cell) const;
    int nearest_cell(const Quat& q) const;

    double sum() const { return weights_.sum(); }
    void normalize();

    int argmax() const;

private:
    GridDims dims_;
    Eigen::VectorXd weights_;
};

/// Relocate each cell's mass by the Euler decomposition of d's rotation,
/// splitting across the 8 neighboring cells (multilinear). pitch/roll wrap;
/// yaw mass that would cross a pole folds into the boundary cell. Output is
/// renormalized. Throws if the input is not normalized (|sum-1| > 1e-6).
RotationGrid shift_rotation_grid(const RotationGrid& g, const MotionDelta& d);

/// Separable circular (pitch/roll) / folded (yaw) Gaussian blur with the given
/// width in radians. sigma == 0 returns the input unchanged.
RotationGrid blur_rotation_grid(const RotationGrid& g, double sigma_radians);

/// Expectation of the rotation: weighted quaternion mean (sign-aligned) over
/// the 3x3x3 neighborhood of the mode cell. Throws on an all-zero grid.
Quat grid_expectation(const RotationGrid& g);

}  // namespace poseloop
