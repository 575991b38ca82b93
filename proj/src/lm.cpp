#include "magfim/lm.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "magfim/errors.hpp"

namespace magfim {

namespace {

constexpr double kPosScale = 1.0 / 0.1;  // position step measured in units of 0.1 m

/// Residual r = meas - y(p, n) over the unmasked channels and, on request, the
/// 3N x 6 chain-rule Jacobian of y w.r.t. (p, m).
void residual_and_jacobian(const FieldVector& meas, const SensorLayout& layout, const MagnetModel& model,
                           const LmState6& state, bool use_sat_mask, Eigen::VectorXd& r,
                           Eigen::MatrixXd* J) {
    const double m_norm = state.m.norm();
    if (m_norm <= 1e-6) throw NonFinite("lm: orientation vector collapsed");
    const Eigen::Vector3d n = state.m / m_norm;
    // dn/dm = (I - n n^T) / ||m||
    const Eigen::Matrix3d dn_dm = (Eigen::Matrix3d::Identity() - n * n.transpose()) / m_norm;

    const std::size_t ns = layout.size();
    r.resize(3 * static_cast<Eigen::Index>(ns));
    if (J) J->resize(3 * static_cast<Eigen::Index>(ns), 6);
    for (std::size_t i = 0; i < ns; ++i) {
        const Eigen::Index row = 3 * static_cast<Eigen::Index>(i);
        const Eigen::Vector3d y = field_at_n(state.p, n, layout.positions[i], model);
        r.segment<3>(row) = meas.b.segment<3>(row) - y;
        if (J) {
            Eigen::Matrix3d dB_dp, dB_dn;
            field_gradients(state.p, n, layout.positions[i], model, dB_dp, dB_dn);
            J->block<3, 3>(row, 0) = dB_dp;
            J->block<3, 3>(row, 3) = dB_dn * dn_dm;
        }
    }
    if (use_sat_mask) {
        for (std::size_t c = 0; c < meas.sat_mask.size(); ++c) {
            if (meas.sat_mask[c]) {
                r[static_cast<Eigen::Index>(c)] = 0.0;
                if (J) J->row(static_cast<Eigen::Index>(c)).setZero();
            }
        }
    }
}

double scaled_step_norm(const Eigen::Matrix<double, 6, 1>& delta) {
    Eigen::Matrix<double, 6, 1> s = delta;
    s.head<3>() *= kPosScale;
    return s.norm();
}

}  // namespace

void LmConfig::validate() const {
    if (!(lambda0 > 0.0) || !(lambda_up > 1.0) || !(lambda_down > 0.0) || !(lambda_down < 1.0) ||
        max_iters < 1)
        throw InvariantViolation("LmConfig: invalid scheduling constants");
}

LmState6 perturbed_init(const Pose5& gt_pose, double dp, double dn) {
    LmState6 s;
    s.p = gt_pose.p + Eigen::Vector3d::Constant(dp);
    s.m = orientation_from_angles(gt_pose.psi, gt_pose.theta) + Eigen::Vector3d::Constant(dn);
    return s;
}

double lm_cost(const FieldVector& meas, const SensorLayout& layout, const MagnetModel& model,
               const LmState6& state, bool use_sat_mask) {
    Eigen::VectorXd r;
    residual_and_jacobian(meas, layout, model, state, use_sat_mask, r, nullptr);
    return 0.5 * r.squaredNorm();
}

LmEstimate lm_solve(const FieldVector& meas, const SensorLayout& layout, const MagnetModel& model,
                    const LmState6& init, const LmConfig& config) {
    config.validate();
    layout.validate();
    if (meas.b.size() != 3 * static_cast<Eigen::Index>(layout.size()))
        throw InvariantViolation("lm_solve: measurement length does not match layout");
    if (!meas.b.allFinite()) throw NonFinite("lm_solve: NaN in measurement");

    const auto t0 = std::chrono::steady_clock::now();

    LmState6 state = init;
    Eigen::VectorXd r;
    Eigen::MatrixXd J;
    residual_and_jacobian(meas, layout, model, state, config.use_sat_mask, r, &J);
    double cost = 0.5 * r.squaredNorm();

    LmEstimate est;
    est.accepted_costs.push_back(cost);
    double lambda = config.lambda0;
    bool converged = false;
    int iter = 0;

    while (iter < config.max_iters) {
        ++iter;
        const Eigen::Matrix<double, 6, 6> jtj = J.transpose() * J;
        const Eigen::Matrix<double, 6, 1> jtr = J.transpose() * r;

        Eigen::Matrix<double, 6, 6> A = jtj;
        A.diagonal() += lambda * jtj.diagonal();
        Eigen::LDLT<Eigen::Matrix<double, 6, 6>> ldlt(A);
        Eigen::Matrix<double, 6, 1> delta;
        bool ok = ldlt.info() == Eigen::Success;
        if (ok) {
            delta = ldlt.solve(jtr);
            ok = delta.allFinite();
        }
        if (!ok) {
            // identity-damped fallback
            A = jtj;
            A.diagonal().array() += lambda * std::max(jtj.trace() / 6.0, 1e-30);
            Eigen::LDLT<Eigen::Matrix<double, 6, 6>> ldlt2(A);
            if (ldlt2.info() != Eigen::Success)
                throw SingularNormalEquations("lm_solve: normal equations singular");
            delta = ldlt2.solve(jtr);
            if (!delta.allFinite())
                throw SingularNormalEquations("lm_solve: non-finite step");
        }

        if (scaled_step_norm(delta) < config.step_tol) {
            converged = true;
            break;
        }

        LmState6 trial = state;
        trial.p += delta.head<3>();
        trial.m += delta.tail<3>();
        double trial_cost;
        try {
            Eigen::VectorXd r_trial;
            residual_and_jacobian(meas, layout, model, trial, config.use_sat_mask, r_trial, nullptr);
            trial_cost = 0.5 * r_trial.squaredNorm();
        } catch (const DegenerateDistance&) {
            trial_cost = std::numeric_limits<double>::infinity();
        } catch (const NonFinite&) {
            trial_cost = std::numeric_limits<double>::infinity();
        }

        if (trial_cost < cost) {
            const double rel_change = (cost - trial_cost) / std::max(cost, 1e-300);
            state = trial;
            cost = trial_cost;
            est.accepted_costs.push_back(cost);
            lambda = std::max(lambda * config.lambda_down, 1e-15);
            residual_and_jacobian(meas, layout, model, state, config.use_sat_mask, r, &J);
            if (rel_change < config.resid_tol || cost == 0.0) {
                converged = true;
                break;
            }
        } else {
            lambda *= config.lambda_up;
            if (lambda > 1e15) break;  // stalled
        }
    }

    est.p_hat = state.p;
    est.n_hat = state.m.normalized();
    est.residual_rms = std::sqrt(2.0 * cost / static_cast<double>(meas.b.size()));
    est.iters = iter == 0 ? 1 : iter;
    est.converged = converged;
    est.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return est;
}

}  // namespace magfim
