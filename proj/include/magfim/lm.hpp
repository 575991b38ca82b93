#pragma once

#include <Eigen/Core>

#include <vector>

#include "magfim/dipole.hpp"
#include "magfim/geometry.hpp"

namespace magfim {

/// Marquardt scheduling and stopping controls. The paper's protocol fixes only
/// the initialization; these are conventional defaults.
struct LmConfig {
    double lambda0 = 1e-3;
    double lambda_up = 10.0;
    double lambda_down = 0.1;
    int max_iters = 100;
    double step_tol = 1e-9;    // mixed-unit step norm (position scaled by 1/0.1 m)
    double resid_tol = 1e-10;  // relative cost change
    bool use_sat_mask = false;

    void validate() const;
};

/// 6-parameter solver state: position plus an unnormalized orientation vector.
/// The residual always uses m / ||m||.
struct LmState6 {
    Eigen::Vector3d p{0.0, 0.0, 0.0};
    Eigen::Vector3d m{0.0, 0.0, 1.0};
};

struct LmEstimate {
    Eigen::Vector3d p_hat{0.0, 0.0, 0.0};
    Eigen::Vector3d n_hat{0.0, 0.0, 1.0};
    double residual_rms = 0.0;  // uT
    int iters = 0;
    bool converged = false;
    double wall_time = 0.0;  // s
    std::vector<double> accepted_costs;  // strictly decreasing
};

/// The benchmark initialization: ground truth shifted by dp on every position
/// component and dn on every orientation-vector component.
LmState6 perturbed_init(const Pose5& gt_pose, double dp = 0.020, double dn = 0.3);

/// Damped Gauss-Newton fit of (p, m) to a field measurement. Non-convergence
/// is reported in the estimate, not raised.
LmEstimate lm_solve(const FieldVector& meas, const SensorLayout& layout, const MagnetModel& model,
                    const LmState6& init, const LmConfig& config = {});

/// Cost 0.5 ||meas - y(p, m/||m||)||^2 with the same saturation-mask handling
/// as lm_solve; exposed for the sign-ambiguity and monotonicity checks.
double lm_cost(const FieldVector& meas, const SensorLayout& layout, const MagnetModel& model,
               const LmState6& state, bool use_sat_mask = false);

}  // namespace magfim
