#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

#include "magfim/geometry.hpp"

namespace magfim {

/// Distances below this make the point-dipole model meaningless.
inline constexpr double kDegenerateDistance = 1e-6;

/// 5-DOF magnet state: center position plus yaw/pitch of the magnetization axis.
struct Pose5 {
    Eigen::Vector3d p{0.0, 0.0, 0.0};  // m
    double psi = 0.0;                  // yaw, [0, 2pi)
    double theta = 0.0;                // pitch, [0, pi]

    Pose5() = default;
    /// Normalizes psi into [0, 2pi); throws NonFinite / InvariantViolation on
    /// bad position or theta outside [0, pi] (beyond 1e-12 slack).
    Pose5(const Eigen::Vector3d& position, double yaw, double pitch);
};

/// Dipole strength coefficient, uT*m^3. Folds permeability, magnet volume and
/// magnetization into one scalar.
struct MagnetModel {
    double b_t = 7.9666e-2;
};

/// Stacked triaxial readings in uT, sensor-major (s0:Bx,By,Bz, s1:...), plus
/// per-channel saturation flags.
struct FieldVector {
    Eigen::VectorXd b;
    std::vector<std::uint8_t> sat_mask;

    std::size_t channels() const { return static_cast<std::size_t>(b.size()); }
};

/// n(psi, theta) = [cos(psi)sin(theta), sin(psi)sin(theta), cos(theta)].
Eigen::Vector3d orientation_from_angles(double psi, double theta);

/// Inverse of orientation_from_angles; psi mapped to [0, 2pi), psi := 0 at the
/// poles (sin(theta) < 1e-9).
void angles_from_orientation(const Eigen::Vector3d& n, double& psi, double& theta);

/// Dipole field at one sensor, uT. Throws DegenerateDistance when the sensor
/// sits within kDegenerateDistance of the magnet center.
Eigen::Vector3d field_at(const Pose5& pose, const Eigen::Vector3d& sensor_pos, const MagnetModel& model);

/// Field with an explicit unit orientation vector (shared by the 6-parameter solver).
Eigen::Vector3d field_at_n(const Eigen::Vector3d& p, const Eigen::Vector3d& n,
                           const Eigen::Vector3d& sensor_pos, const MagnetModel& model);

/// Stacked field over the layout; sat_mask all false (no clipping here).
FieldVector field_array(const Pose5& pose, const SensorLayout& layout, const MagnetModel& model);

/// dB/dp (3x3) and dB/dn (3x3) of the dipole field at one sensor.
void field_gradients(const Eigen::Vector3d& p, const Eigen::Vector3d& n,
                     const Eigen::Vector3d& sensor_pos, const MagnetModel& model,
                     Eigen::Matrix3d& dB_dp, Eigen::Matrix3d& dB_dn);

/// Analytic 3N x 5 Jacobian of the stacked field w.r.t. (px, py, pz, psi, theta).
Eigen::MatrixXd jacobian(const Pose5& pose, const SensorLayout& layout, const MagnetModel& model);

/// One sensor's 3x5 Jacobian block. n, dn_dpsi, dn_dtheta are precomputed from the pose.
Eigen::Matrix<double, 3, 5> jacobian_block(const Eigen::Vector3d& p, const Eigen::Vector3d& n,
                                           const Eigen::Vector3d& dn_dpsi, const Eigen::Vector3d& dn_dtheta,
                                           const Eigen::Vector3d& sensor_pos, const MagnetModel& model);

/// Clamp every channel to [-b_clip, +b_clip]; mask true iff |input| >= b_clip.
FieldVector saturate(const FieldVector& field, double b_clip);

}  // namespace magfim
