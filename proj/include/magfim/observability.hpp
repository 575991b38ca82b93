#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include "magfim/dipole.hpp"
#include "magfim/geometry.hpp"

namespace magfim {

/// i.i.d. additive Gaussian channel noise, uT.
struct NoiseModel {
    double sigma = 10.0;
};

/// Relative spectral cutoff below which the FIM is treated as singular.
inline constexpr double kRankTol = 1e-12;

struct FimReport {
    Eigen::Matrix<double, 5, 5> fim;
    Eigen::Matrix<double, 5, 1> eigenvalues;  // ascending
    double pos_bound_mm = 0.0;
    double ori_bound_deg = 0.0;
    double lambda_min = 0.0;
    double kappa = 0.0;
    double logdet = 0.0;
    bool degenerate = false;
};

/// Axis-aligned workspace box plus LHS sampling controls. Orientation is
/// sampled uniformly on the sphere (psi, cos(theta)) with a polar margin
/// keeping the FIM invertible.
struct WorkspaceSpec {
    double x_min = -0.050, x_max = 0.050;
    double y_min = -0.050, y_max = 0.050;
    double z_min = 0.050, z_max = 0.150;
    std::size_t n_samples = 200000;
    std::uint64_t seed = 0;
    double theta_margin = 0.05;  // rad

    void validate() const;
};

struct QuantileStats {
    double median = 0.0;
    double mean = 0.0;
    double p25 = 0.0, p75 = 0.0;
    double p5 = 0.0, p95 = 0.0;
};

struct SweepReport {
    std::string layout_name;
    WorkspaceSpec spec;
    double sigma = 0.0;
    double b_t = 0.0;
    QuantileStats pos_bound_mm;
    QuantileStats ori_bound_deg;
    QuantileStats lambda_min;
    QuantileStats kappa;
    QuantileStats logdet;
    std::size_t n_valid = 0;
    std::size_t n_degenerate = 0;
};

/// F = J^T J / sigma^2 from the analytic (unclipped) Jacobian.
Eigen::Matrix<double, 5, 5> build_fim(const Pose5& pose, const SensorLayout& layout,
                                      const MagnetModel& model, const NoiseModel& noise);

/// CRLB metrics from an eigen-decomposition of F. Rank-deficient inputs are
/// flagged degenerate with infinite bounds rather than raised.
FimReport crlb_metrics(const Eigen::Matrix<double, 5, 5>& fim);

/// Standard 5-D Latin hypercube over (x, y, z, psi, cos theta); one sample per
/// stratum per dimension, deterministic given spec.seed.
std::vector<Pose5> lhs_sample(const WorkspaceSpec& spec);

/// Poses with a fixed z level; (x, y, psi, cos theta) stratified as in lhs_sample.
std::vector<Pose5> lhs_sample_fixed_z(const WorkspaceSpec& spec, double z);

/// Full workspace sweep: build_fim + crlb_metrics at every LHS pose, quantiles
/// over non-degenerate poses. Bit-identical for any thread count.
SweepReport sweep_workspace(const SensorLayout& layout, const WorkspaceSpec& spec,
                            const MagnetModel& model, const NoiseModel& noise, unsigned threads = 0);

/// Quantile with linear interpolation between order statistics; data must be sorted.
double quantile_sorted(const std::vector<double>& sorted, double q);

}  // namespace magfim
