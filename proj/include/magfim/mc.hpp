#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

#include "magfim/dataset.hpp"
#include "magfim/dipole.hpp"
#include "magfim/geometry.hpp"
#include "magfim/lm.hpp"
#include "magfim/observability.hpp"

namespace magfim {

/// Position error, mm.
double e_pos(const Eigen::Vector3d& p_hat, const Eigen::Vector3d& p);

/// Angular error between orientation vectors, degrees; cosine clamped before acos.
double e_ori(const Eigen::Vector3d& n_hat, const Eigen::Vector3d& n);

struct MetricStats {
    double mean = 0.0;
    double std = 0.0;   // population
    double rmse = 0.0;  // rmse^2 = mean^2 + var
    double max = 0.0;
    double p95 = 0.0;
};

struct ErrorStats {
    MetricStats pos;  // mm
    MetricStats ori;  // deg
    std::size_t n_trials = 0;
    std::size_t n_converged = 0;
    double mean_wall_ms = 0.0;
};

MetricStats metric_stats(std::vector<double> values);

struct LayerProfile {
    std::vector<double> z_levels;  // m, ascending
    std::vector<ErrorStats> stats;
};

struct TrialSpec {
    WorkspaceSpec workspace;  // ground-truth pose sampling
    std::size_t n_trials = 1000;
    std::uint64_t seed = 0;
    double init_dp = 0.020;  // m, per position component
    double init_dn = 0.3;    // per orientation-vector component
    bool exclude_nonconverged = false;
};

/// Per trial: LHS pose -> clip+noise record -> perturbed init -> LM -> errors.
/// Non-converged solves are included unless the spec excludes them.
ErrorStats run_mc(const SensorLayout& layout, const MagnetModel& model, double b_clip,
                  const NoiseSpec& noise, const LmConfig& solver, const TrialSpec& trials);

/// run_mc at fixed z levels ((x, y, psi, cos theta) via LHS).
LayerProfile layer_profile(const SensorLayout& layout, const MagnetModel& model, double b_clip,
                           const NoiseSpec& noise, const LmConfig& solver,
                           const std::vector<double>& z_levels, std::size_t trials_per_level,
                           std::uint64_t seed);

struct CrlbComparison {
    double mc_rmse_pos = 0.0;  // mm
    double crlb_pos = 0.0;     // mm
    double mc_rmse_ori = 0.0;  // deg
    double crlb_ori = 0.0;     // deg, axis-angle bound: sqrt(C_tt + sin^2(theta) C_pp)
    double ratio_pos = 0.0;
    double ratio_ori = 0.0;
    std::size_t n_trials = 0;
};

/// Fixed-pose repeated-noise Monte Carlo of the LM solver against crlb_metrics.
CrlbComparison compare_crlb(const SensorLayout& layout, const MagnetModel& model, double sigma,
                            const Pose5& pose, std::size_t n_trials = 1000, std::uint64_t seed = 0,
                            const LmConfig& solver = {});

}  // namespace magfim
