#include <doctest.h>

#include <cmath>
#include <random>

#include "magfim/dipole.hpp"
#include "magfim/errors.hpp"
#include "magfim/geometry.hpp"
#include "magfim/rng.hpp"

using namespace magfim;

namespace {

/// Central finite-difference Jacobian of field_array, the independent oracle
/// for the analytic one.
Eigen::MatrixXd fd_jacobian(const Pose5& pose, const SensorLayout& layout, const MagnetModel& model,
                            double h = 1e-6) {
    const Eigen::Index rows = 3 * static_cast<Eigen::Index>(layout.size());
    Eigen::MatrixXd J(rows, 5);
    auto eval = [&](const Eigen::Vector3d& p, double psi, double theta) {
        FieldVector f;
        f.b.resize(rows);
        const Eigen::Vector3d n = orientation_from_angles(psi, theta);
        for (std::size_t i = 0; i < layout.size(); ++i)
            f.b.segment<3>(3 * static_cast<Eigen::Index>(i)) =
                field_at_n(p, n, layout.positions[i], model);
        return f.b;
    };
    for (int k = 0; k < 3; ++k) {
        Eigen::Vector3d dp = Eigen::Vector3d::Zero();
        dp[k] = h;
        J.col(k) = (eval(pose.p + dp, pose.psi, pose.theta) - eval(pose.p - dp, pose.psi, pose.theta)) /
                   (2.0 * h);
    }
    J.col(3) = (eval(pose.p, pose.psi + h, pose.theta) - eval(pose.p, pose.psi - h, pose.theta)) / (2.0 * h);
    J.col(4) = (eval(pose.p, pose.psi, pose.theta + h) - eval(pose.p, pose.psi, pose.theta - h)) / (2.0 * h);
    return J;
}

Pose5 random_interior_pose(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ux(-0.05, 0.05), uz(0.05, 0.15),
        upsi(0.0, 2.0 * M_PI), uth(0.05, M_PI - 0.05);
    return Pose5({ux(rng), ux(rng), uz(rng)}, upsi(rng), uth(rng));
}

}  // namespace

TEST_CASE("orientation_from_angles axis cases") {
    CHECK((orientation_from_angles(0.0, M_PI / 2) - Eigen::Vector3d(1, 0, 0)).norm() < 1e-15);
    CHECK((orientation_from_angles(M_PI / 2, M_PI / 2) - Eigen::Vector3d(0, 1, 0)).norm() < 1e-15);
    CHECK((orientation_from_angles(1.234, 0.0) - Eigen::Vector3d(0, 0, 1)).norm() < 1e-15);
}

TEST_CASE("orientation unit norm over the full angle range") {
    std::mt19937_64 rng = make_engine(11);
    std::uniform_real_distribution<double> upsi(0.0, 2.0 * M_PI), uth(0.0, M_PI);
    for (int i = 0; i < 1000; ++i)
        CHECK(std::abs(orientation_from_angles(upsi(rng), uth(rng)).norm() - 1.0) < 1e-12);
}

TEST_CASE("angles_from_orientation conventions and round trip") {
    double psi, theta;
    angles_from_orientation({0, 0, 1}, psi, theta);
    CHECK(psi == 0.0);
    CHECK(theta == doctest::Approx(0.0));
    angles_from_orientation({1, 0, 0}, psi, theta);
    CHECK(psi == doctest::Approx(0.0));
    CHECK(theta == doctest::Approx(M_PI / 2));
    angles_from_orientation({0, -1, 0}, psi, theta);
    CHECK(psi == doctest::Approx(3 * M_PI / 2));
    CHECK(theta == doctest::Approx(M_PI / 2));

    std::mt19937_64 rng = make_engine(12);
    std::uniform_real_distribution<double> upsi(0.0, 2.0 * M_PI), uth(1e-3, M_PI - 1e-3);
    for (int i = 0; i < 500; ++i) {
        const double psi0 = upsi(rng), theta0 = uth(rng);
        angles_from_orientation(orientation_from_angles(psi0, theta0), psi, theta);
        CHECK(std::abs(theta - theta0) < 1e-9);
        double dpsi = std::abs(psi - psi0);
        dpsi = std::min(dpsi, 2.0 * M_PI - dpsi);
        CHECK(dpsi < 1e-9);
    }
}

TEST_CASE("field_at closed-form on-axis and equatorial values") {
    const MagnetModel model;  // b_t = 7.9666e-2
    const Pose5 pose({0, 0, 0}, 0.0, 0.0);  // n = +z
    // on-axis: 2 b_t / d^3 along n
    const Eigen::Vector3d on_axis = field_at(pose, {0, 0, 0.1}, model);
    CHECK(on_axis.x() == doctest::Approx(0.0));
    CHECK(on_axis.y() == doctest::Approx(0.0));
    CHECK(on_axis.z() == doctest::Approx(2.0 * model.b_t / 1e-3).epsilon(1e-12));
    CHECK(on_axis.z() == doctest::Approx(159.332).epsilon(1e-9));
    // equatorial: -b_t / d^3 along n
    const Eigen::Vector3d equatorial = field_at(pose, {0.1, 0, 0}, model);
    CHECK(equatorial.z() == doctest::Approx(-79.666).epsilon(1e-9));
    CHECK(equatorial.head<2>().norm() == doctest::Approx(0.0));
}

TEST_CASE("field_at is odd in the orientation") {
    const MagnetModel model;
    std::mt19937_64 rng = make_engine(13);
    for (int i = 0; i < 50; ++i) {
        const Pose5 pose = random_interior_pose(rng);
        const Pose5 flipped(pose.p, pose.psi + M_PI, M_PI - pose.theta);  // n -> -n
        const Eigen::Vector3d s{0.03, -0.02, 0.02};
        CHECK((field_at(pose, s, model) + field_at(flipped, s, model)).norm() <
              1e-9 * field_at(pose, s, model).norm());
    }
}

TEST_CASE("field_at inverse-cube decay on axis") {
    const MagnetModel model;
    const Pose5 pose({0, 0, 0}, 0.0, 0.0);
    for (double d : {0.05, 0.08, 0.11}) {
        const double near = field_at(pose, {0, 0, d}, model).norm();
        const double far = field_at(pose, {0, 0, 2 * d}, model).norm();
        CHECK(near / far == doctest::Approx(8.0).epsilon(1e-9));
    }
}

TEST_CASE("field_at degenerate distance") {
    CHECK_THROWS_AS(field_at(Pose5({0, 0, 0}, 0, 0), {0, 0, 0}, MagnetModel{}), DegenerateDistance);
    CHECK_THROWS_AS(field_at(Pose5({0, 0, 0}, 0, 0), {0, 0, 1e-9}, MagnetModel{}), DegenerateDistance);
}

TEST_CASE("field_array stacks per-sensor fields in layout order") {
    const MagnetModel model;
    const SensorLayout layout = build_planar();
    std::mt19937_64 rng = make_engine(14);
    const Pose5 pose = random_interior_pose(rng);
    const FieldVector f = field_array(pose, layout, model);
    REQUIRE(f.b.size() == 48);
    for (std::size_t i = 0; i < layout.size(); ++i) {
        CHECK((f.b.segment<3>(3 * static_cast<Eigen::Index>(i)) -
               field_at(pose, layout.positions[i], model))
                  .norm() == 0.0);
        CHECK(f.sat_mask[3 * i] == 0);
    }

    // permuting the layout permutes the 3-blocks identically
    SensorLayout reversed = layout;
    std::reverse(reversed.positions.begin(), reversed.positions.end());
    const FieldVector g = field_array(pose, reversed, model);
    for (std::size_t i = 0; i < layout.size(); ++i)
        CHECK((g.b.segment<3>(3 * static_cast<Eigen::Index>(i)) -
               f.b.segment<3>(3 * static_cast<Eigen::Index>(layout.size() - 1 - i)))
                  .norm() == 0.0);
}

TEST_CASE("jacobian matches central finite differences") {
    const MagnetModel model;
    std::mt19937_64 rng = make_engine(15);
    for (const auto& layout : {build_planar(), build_single_split(), build_staggered_split()}) {
        for (int trial = 0; trial < 50; ++trial) {
            const Pose5 pose = random_interior_pose(rng);
            const Eigen::MatrixXd J = jacobian(pose, layout, model);
            const Eigen::MatrixXd Jfd = fd_jacobian(pose, layout, model);
            for (int c = 0; c < 5; ++c) {
                const double scale = std::max(J.col(c).norm(), 1e-12);
                CHECK((J.col(c) - Jfd.col(c)).norm() / scale < 1e-5);
            }
        }
    }
}

TEST_CASE("jacobian psi column vanishes at theta = 0") {
    const Pose5 pose({0.01, -0.02, 0.08}, 1.0, 0.0);
    const Eigen::MatrixXd J = jacobian(pose, build_staggered_split(), MagnetModel{});
    CHECK(J.col(3).norm() == 0.0);
}

TEST_CASE("jacobian is translation invariant") {
    const MagnetModel model;
    std::mt19937_64 rng = make_engine(16);
    const Pose5 pose = random_interior_pose(rng);
    const Eigen::Vector3d shift{0.31, -0.12, 0.07};
    SensorLayout layout = build_planar();
    const Eigen::MatrixXd J0 = jacobian(pose, layout, model);
    for (auto& p : layout.positions) p += shift;
    const Pose5 shifted(pose.p + shift, pose.psi, pose.theta);
    const Eigen::MatrixXd J1 = jacobian(shifted, layout, model);
    CHECK((J0 - J1).norm() < 1e-12 * J0.norm());
}

TEST_CASE("spatial field gradient is trace-free") {
    const MagnetModel model;
    std::mt19937_64 rng = make_engine(17);
    for (int i = 0; i < 100; ++i) {
        const Pose5 pose = random_interior_pose(rng);
        Eigen::Matrix3d dB_dp, dB_dn;
        field_gradients(pose.p, orientation_from_angles(pose.psi, pose.theta), {0.04, 0.01, 0.18},
                        model, dB_dp, dB_dn);
        CHECK(std::abs(dB_dp.trace()) < 1e-6 * dB_dp.norm());
    }
}

TEST_CASE("saturate clamps, masks, and is idempotent") {
    FieldVector f;
    f.b.resize(4);
    f.b << 2500.0, -1899.9, 1900.0, -2500.0;
    f.sat_mask.assign(4, 0);
    const FieldVector s = saturate(f, 1900.0);
    CHECK(s.b[0] == 1900.0);
    CHECK(s.sat_mask[0] == 1);
    CHECK(s.b[1] == -1899.9);
    CHECK(s.sat_mask[1] == 0);
    CHECK(s.b[2] == 1900.0);  // boundary inclusive
    CHECK(s.sat_mask[2] == 1);
    CHECK(s.b[3] == -1900.0);
    CHECK(s.sat_mask[3] == 1);

    const FieldVector twice = saturate(s, 1900.0);
    CHECK(twice.b == s.b);
    CHECK(twice.sat_mask == s.sat_mask);
}

TEST_CASE("Pose5 normalizes yaw and rejects bad pitch") {
    const Pose5 pose({0, 0, 0}, -1.0, 0.5);
    CHECK(pose.psi == doctest::Approx(2.0 * M_PI - 1.0));
    CHECK_THROWS_AS(Pose5({0, 0, 0}, 0.0, 3.5), InvariantViolation);
    CHECK_THROWS_AS(Pose5({0, 0, std::nan("")}, 0.0, 0.5), NonFinite);
}
