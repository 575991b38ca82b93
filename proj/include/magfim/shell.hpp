#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <vector>

#include "magfim/dipole.hpp"
#include "magfim/geometry.hpp"
#include "magfim/observability.hpp"

namespace magfim {

/// Axis-aligned cubic shell; sensors live on its six outer faces.
struct ShellSpec {
    Eigen::Vector3d center{0.0, 0.0, 0.100};
    double side = 0.16;

    void validate() const;
};

/// Face ids 0..5: +x, -x, +y, -y, +z, -z.
struct FacePlacement {
    int face_id = 0;
    double u = 0.0, v = 0.0;  // in-face coordinates, each in [-side/2, +side/2]
};

/// World position of an in-face point; the on-face coordinate is exactly
/// center[axis] +/- side/2.
Eigen::Vector3d face_point(const ShellSpec& shell, const FacePlacement& fp);

/// Inverse of face_point; throws OffShell when the position is not on any face
/// within 1e-9 m.
FacePlacement face_of(const ShellSpec& shell, const Eigen::Vector3d& pos);

struct PlacementResult {
    SensorLayout layout;
    std::vector<double> objective_trace;
    std::optional<SweepReport> final_report;
};

/// Log-det regularization for rank-deficient intermediate layouts.
inline constexpr double kLogDetEps = 1e-12;

/// Mean over poses of log det(F + eps*tr(F)/5*I); the D-optimality objective.
double placement_objective(const SensorLayout& layout, const std::vector<Pose5>& poses,
                           const MagnetModel& model, const NoiseModel& noise);

/// Greedy D-optimal initialization over a uniform candidate grid on each face.
/// Ties break toward the lowest candidate index; deterministic.
PlacementResult greedy_place(const ShellSpec& shell, std::size_t k, std::size_t candidates_per_face,
                             const std::vector<Pose5>& poses, const MagnetModel& model,
                             const NoiseModel& noise, std::uint64_t seed);

struct RefineConfig {
    double step0 = 0.0;      // 0 -> side/16
    double min_step = 1e-4;  // m
    int max_cycles = 10;
    double rel_tol = 1e-6;
};

/// Cyclic coordinate descent with per-sensor pattern search on (u, v); face
/// assignment fixed; accepts only improvements.
PlacementResult refine_place(const SensorLayout& initial, const ShellSpec& shell,
                             const std::vector<Pose5>& poses, const MagnetModel& model,
                             const NoiseModel& noise, const RefineConfig& config = {});

}  // namespace magfim
