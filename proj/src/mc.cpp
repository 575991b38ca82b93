#include "magfim/mc.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "magfim/errors.hpp"
#include "magfim/rng.hpp"

namespace magfim {

namespace {
constexpr double kRadToDeg = 57.295779513082320876798154814105;
}

double e_pos(const Eigen::Vector3d& p_hat, const Eigen::Vector3d& p) {
    if (!p_hat.allFinite() || !p.allFinite()) throw NonFinite("e_pos: non-finite input");
    return (p_hat - p).norm() * 1000.0;
}

double e_ori(const Eigen::Vector3d& n_hat, const Eigen::Vector3d& n) {
    const double denom = n_hat.norm() * n.norm();
    if (!(denom > 0.0)) throw NonFinite("e_ori: zero-length orientation vector");
    const double c = std::clamp(n_hat.dot(n) / denom, -1.0, 1.0);
    return std::acos(c) * kRadToDeg;
}

MetricStats metric_stats(std::vector<double> values) {
    MetricStats s;
    if (values.empty()) return s;
    const double n = static_cast<double>(values.size());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double var = 0.0, sq = 0.0;
    for (double v : values) {
        var += (v - s.mean) * (v - s.mean);
        sq += v * v;
    }
    var /= n;
    s.std = std::sqrt(var);
    s.rmse = std::sqrt(sq / n);
    std::sort(values.begin(), values.end());
    s.max = values.back();
    s.p95 = quantile_sorted(values, 0.95);
    return s;
}

ErrorStats run_mc(const SensorLayout& layout, const MagnetModel& model, double b_clip,
                  const NoiseSpec& noise, const LmConfig& solver, const TrialSpec& trials) {
    layout.validate();
    noise.validate();
    WorkspaceSpec ws = trials.workspace;
    ws.n_samples = trials.n_trials;
    ws.seed = trials.seed;
    const std::vector<Pose5> poses = lhs_sample(ws);

    std::vector<double> pos_err, ori_err, wall_ms;
    pos_err.reserve(poses.size());
    ori_err.reserve(poses.size());
    std::size_t n_converged = 0;

    // warm-up solve excluded from timing
    bool warmed = false;
    for (std::size_t i = 0; i < poses.size(); ++i) {
        const DatasetRecord rec =
            simulate_record(poses[i], layout, model, b_clip, noise, trials.seed, i);
        const LmState6 init = perturbed_init(rec.pose, trials.init_dp, trials.init_dn);
        if (!warmed) {
            (void)lm_solve(rec.fields, layout, model, init, solver);
            warmed = true;
        }
        const LmEstimate est = lm_solve(rec.fields, layout, model, init, solver);
        if (est.converged) ++n_converged;
        if (trials.exclude_nonconverged && !est.converged) continue;
        pos_err.push_back(e_pos(est.p_hat, rec.pose.p));
        ori_err.push_back(e_ori(est.n_hat, rec.n));
        wall_ms.push_back(est.wall_time * 1000.0);
    }

    ErrorStats stats;
    stats.pos = metric_stats(pos_err);
    stats.ori = metric_stats(ori_err);
    stats.n_trials = pos_err.size();
    stats.n_converged = n_converged;
    stats.mean_wall_ms = wall_ms.empty()
                             ? 0.0
                             : std::accumulate(wall_ms.begin(), wall_ms.end(), 0.0) /
                                   static_cast<double>(wall_ms.size());
    return stats;
}

LayerProfile layer_profile(const SensorLayout& layout, const MagnetModel& model, double b_clip,
                           const NoiseSpec& noise, const LmConfig& solver,
                           const std::vector<double>& z_levels, std::size_t trials_per_level,
                           std::uint64_t seed) {
    LayerProfile profile;
    profile.z_levels = z_levels;
    std::sort(profile.z_levels.begin(), profile.z_levels.end());
    for (std::size_t lev = 0; lev < profile.z_levels.size(); ++lev) {
        const double z = profile.z_levels[lev];
        WorkspaceSpec ws;
        ws.n_samples = trials_per_level;
        ws.seed = stream_key(seed, lev, 0x1a7e);
        const std::vector<Pose5> poses = lhs_sample_fixed_z(ws, z);

        std::vector<double> pos_err, ori_err, wall_ms;
        std::size_t n_converged = 0;
        bool warmed = false;
        for (std::size_t i = 0; i < poses.size(); ++i) {
            const DatasetRecord rec = simulate_record(poses[i], layout, model, b_clip, noise, ws.seed, i);
            const LmState6 init = perturbed_init(rec.pose, 0.020, 0.3);
            if (!warmed) {
                (void)lm_solve(rec.fields, layout, model, init, solver);
                warmed = true;
            }
            const LmEstimate est = lm_solve(rec.fields, layout, model, init, solver);
            if (est.converged) ++n_converged;
            pos_err.push_back(e_pos(est.p_hat, rec.pose.p));
            ori_err.push_back(e_ori(est.n_hat, rec.n));
            wall_ms.push_back(est.wall_time * 1000.0);
        }
        ErrorStats stats;
        stats.pos = metric_stats(pos_err);
        stats.ori = metric_stats(ori_err);
        stats.n_trials = pos_err.size();
        stats.n_converged = n_converged;
        stats.mean_wall_ms =
            std::accumulate(wall_ms.begin(), wall_ms.end(), 0.0) / static_cast<double>(wall_ms.size());
        profile.stats.push_back(stats);
    }
    return profile;
}

CrlbComparison compare_crlb(const SensorLayout& layout, const MagnetModel& model, double sigma,
                            const Pose5& pose, std::size_t n_trials, std::uint64_t seed,
                            const LmConfig& solver) {
    const Eigen::Matrix<double, 5, 5> F = build_fim(pose, layout, model, NoiseModel{sigma});
    const FimReport fim = crlb_metrics(F);
    if (fim.degenerate) throw AllDegenerate("compare_crlb: pose is degenerate");
    const Eigen::Matrix<double, 5, 5> C = F.inverse();

    const FieldVector clean = field_array(pose, layout, model);
    const Eigen::Vector3d n_gt = orientation_from_angles(pose.psi, pose.theta);

    std::vector<double> pos_err, ori_err;
    pos_err.reserve(n_trials);
    for (std::size_t t = 0; t < n_trials; ++t) {
        FieldVector meas = clean;
        std::mt19937_64 rng = make_engine(seed, t, 0xC41B);
        std::normal_distribution<double> gauss(0.0, sigma);
        for (Eigen::Index c = 0; c < meas.b.size(); ++c) meas.b[c] += gauss(rng);
        const LmEstimate est = lm_solve(meas, layout, model, perturbed_init(pose), solver);
        pos_err.push_back(e_pos(est.p_hat, pose.p));
        ori_err.push_back(e_ori(est.n_hat, n_gt));
    }

    CrlbComparison cmp;
    cmp.n_trials = n_trials;
    cmp.mc_rmse_pos = metric_stats(pos_err).rmse;
    cmp.mc_rmse_ori = metric_stats(ori_err).rmse;
    cmp.crlb_pos = fim.pos_bound_mm;
    // e_ori is the angle between unit axes; linearized on the sphere that is
    // dtheta^2 + sin^2(theta) dpsi^2, so the matching bound weights the psi
    // variance by sin^2(theta) instead of using the raw (psi, theta) trace
    const double st = std::sin(pose.theta);
    cmp.crlb_ori = kRadToDeg * std::sqrt(C(4, 4) + st * st * C(3, 3));
    cmp.ratio_pos = cmp.mc_rmse_pos / cmp.crlb_pos;
    cmp.ratio_ori = cmp.mc_rmse_ori / cmp.crlb_ori;
    return cmp;
}

}  // namespace magfim
