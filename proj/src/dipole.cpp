#include "magfim/dipole.hpp"

#include <cmath>
#include <string>

#include "magfim/errors.hpp"

namespace magfim {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double wrap_2pi(double a) {
    double r = std::fmod(a, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    // fmod can land exactly on 2pi after the correction
    if (r >= kTwoPi) r = 0.0;
    return r;
}

}  // namespace

Pose5::Pose5(const Eigen::Vector3d& position, double yaw, double pitch) : p(position) {
    if (!p.allFinite() || !std::isfinite(yaw) || !std::isfinite(pitch))
        throw NonFinite("Pose5: non-finite component");
    constexpr double slack = 1e-12;
    if (pitch < -slack || pitch > M_PI + slack)
        throw InvariantViolation("Pose5: theta outside [0, pi]: " + std::to_string(pitch));
    theta = std::clamp(pitch, 0.0, M_PI);
    psi = wrap_2pi(yaw);
}

Eigen::Vector3d orientation_from_angles(double psi, double theta) {
    const double st = std::sin(theta);
    return {std::cos(psi) * st, std::sin(psi) * st, std::cos(theta)};
}

void angles_from_orientation(const Eigen::Vector3d& n, double& psi, double& theta) {
    theta = std::acos(std::clamp(n.z(), -1.0, 1.0));
    if (std::sin(theta) < 1e-9) {
        psi = 0.0;  // pole convention
        return;
    }
    psi = wrap_2pi(std::atan2(n.y(), n.x()));
}

Eigen::Vector3d field_at_n(const Eigen::Vector3d& p, const Eigen::Vector3d& n,
                           const Eigen::Vector3d& sensor_pos, const MagnetModel& model) {
    const Eigen::Vector3d d = sensor_pos - p;
    const double r = d.norm();
    if (r <= kDegenerateDistance)
        throw DegenerateDistance("field_at: sensor within 1e-6 m of magnet center");
    const double inv_r3 = 1.0 / (r * r * r);
    const double inv_r5 = inv_r3 / (r * r);
    return model.b_t * (3.0 * n.dot(d) * inv_r5 * d - inv_r3 * n);
}

Eigen::Vector3d field_at(const Pose5& pose, const Eigen::Vector3d& sensor_pos, const MagnetModel& model) {
    return field_at_n(pose.p, orientation_from_angles(pose.psi, pose.theta), sensor_pos, model);
}

FieldVector field_array(const Pose5& pose, const SensorLayout& layout, const MagnetModel& model) {
    if (layout.positions.empty()) throw InvariantViolation("field_array: empty layout");
    const Eigen::Vector3d n = orientation_from_angles(pose.psi, pose.theta);
    FieldVector out;
    out.b.resize(3 * static_cast<Eigen::Index>(layout.size()));
    out.sat_mask.assign(3 * layout.size(), 0);
    for (std::size_t i = 0; i < layout.size(); ++i) {
        try {
            out.b.segment<3>(3 * static_cast<Eigen::Index>(i)) = field_at_n(pose.p, n, layout.positions[i], model);
        } catch (const DegenerateDistance&) {
            throw DegenerateDistance("field_array: degenerate distance at sensor " + std::to_string(i));
        }
    }
    return out;
}

void field_gradients(const Eigen::Vector3d& p, const Eigen::Vector3d& n,
                     const Eigen::Vector3d& sensor_pos, const MagnetModel& model,
                     Eigen::Matrix3d& dB_dp, Eigen::Matrix3d& dB_dn) {
    const Eigen::Vector3d d = sensor_pos - p;
    const double r = d.norm();
    if (r <= kDegenerateDistance)
        throw DegenerateDistance("field_gradients: sensor within 1e-6 m of magnet center");
    const double r2 = r * r;
    const double inv_r3 = 1.0 / (r2 * r);
    const double inv_r5 = inv_r3 / r2;
    const double inv_r7 = inv_r5 / r2;
    const double nd = n.dot(d);

    // dB/dd of  b_t (3 (n.d) d / r^5 - n / r^3); dd/dp = -I
    Eigen::Matrix3d dB_dd = 3.0 * inv_r5 * (d * n.transpose() + nd * Eigen::Matrix3d::Identity())
                          - 15.0 * nd * inv_r7 * (d * d.transpose())
                          + 3.0 * inv_r5 * (n * d.transpose());
    dB_dd *= model.b_t;
    dB_dp = -dB_dd;

    dB_dn = model.b_t * (3.0 * inv_r5 * (d * d.transpose()) - inv_r3 * Eigen::Matrix3d::Identity());
}

Eigen::Matrix<double, 3, 5> jacobian_block(const Eigen::Vector3d& p, const Eigen::Vector3d& n,
                                           const Eigen::Vector3d& dn_dpsi, const Eigen::Vector3d& dn_dtheta,
                                           const Eigen::Vector3d& sensor_pos, const MagnetModel& model) {
    Eigen::Matrix3d dB_dp, dB_dn;
    field_gradients(p, n, sensor_pos, model, dB_dp, dB_dn);
    Eigen::Matrix<double, 3, 5> block;
    block.block<3, 3>(0, 0) = dB_dp;
    block.col(3) = dB_dn * dn_dpsi;
    block.col(4) = dB_dn * dn_dtheta;
    return block;
}

Eigen::MatrixXd jacobian(const Pose5& pose, const SensorLayout& layout, const MagnetModel& model) {
    if (layout.positions.empty()) throw InvariantViolation("jacobian: empty layout");
    const double sp = std::sin(pose.psi), cp = std::cos(pose.psi);
    const double st = std::sin(pose.theta), ct = std::cos(pose.theta);
    const Eigen::Vector3d n{cp * st, sp * st, ct};
    const Eigen::Vector3d dn_dpsi{-sp * st, cp * st, 0.0};
    const Eigen::Vector3d dn_dtheta{cp * ct, sp * ct, -st};

    Eigen::MatrixXd J(3 * static_cast<Eigen::Index>(layout.size()), 5);
    for (std::size_t i = 0; i < layout.size(); ++i) {
        try {
            J.block<3, 5>(3 * static_cast<Eigen::Index>(i), 0) =
                jacobian_block(pose.p, n, dn_dpsi, dn_dtheta, layout.positions[i], model);
        } catch (const DegenerateDistance&) {
            throw DegenerateDistance("jacobian: degenerate distance at sensor " + std::to_string(i));
        }
    }
    return J;
}

FieldVector saturate(const FieldVector& field, double b_clip) {
    if (!(b_clip > 0.0)) throw InvariantViolation("saturate: b_clip must be positive");
    FieldVector out = field;
    for (Eigen::Index i = 0; i < out.b.size(); ++i) {
        const double v = out.b[i];
        if (std::abs(v) >= b_clip) {
            out.b[i] = v >= 0.0 ? b_clip : -b_clip;
            out.sat_mask[static_cast<std::size_t>(i)] = 1;
        }
    }
    return out;
}

}  // namespace magfim
