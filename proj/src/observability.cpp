#include "magfim/observability.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "magfim/errors.hpp"
#include "magfim/parallel.hpp"
#include "magfim/rng.hpp"

namespace magfim {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kRadToDeg = 57.295779513082320876798154814105;

QuantileStats stats_of(std::vector<double>& values) {
    std::sort(values.begin(), values.end());
    QuantileStats s;
    s.median = quantile_sorted(values, 0.5);
    s.p25 = quantile_sorted(values, 0.25);
    s.p75 = quantile_sorted(values, 0.75);
    s.p5 = quantile_sorted(values, 0.05);
    s.p95 = quantile_sorted(values, 0.95);
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    return s;
}

}  // namespace

void WorkspaceSpec::validate() const {
    if (!(x_min < x_max) || !(y_min < y_max) || !(z_min < z_max))
        throw InvariantViolation("WorkspaceSpec: degenerate range");
    if (n_samples < 1) throw InvariantViolation("WorkspaceSpec: n_samples must be >= 1");
    if (!(theta_margin > 0.0) || !(theta_margin < M_PI / 2.0))
        throw InvariantViolation("WorkspaceSpec: theta_margin outside (0, pi/2)");
}

Eigen::Matrix<double, 5, 5> build_fim(const Pose5& pose, const SensorLayout& layout,
                                      const MagnetModel& model, const NoiseModel& noise) {
    const Eigen::MatrixXd J = jacobian(pose, layout, model);
    Eigen::Matrix<double, 5, 5> F = J.transpose() * J / (noise.sigma * noise.sigma);
    // enforce exact symmetry against accumulation-order roundoff
    F = 0.5 * (F + F.transpose()).eval();
    return F;
}

FimReport crlb_metrics(const Eigen::Matrix<double, 5, 5>& fim) {
    if (!fim.allFinite()) throw NonFinite("crlb_metrics: non-finite FIM entry");
    FimReport rep;
    rep.fim = fim;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 5, 5>> es(fim);
    rep.eigenvalues = es.eigenvalues();  // ascending
    const double lmin = rep.eigenvalues[0];
    const double lmax = rep.eigenvalues[4];
    rep.lambda_min = lmin;
    if (lmin <= kRankTol * lmax || !(lmax > 0.0)) {
        rep.degenerate = true;
        rep.pos_bound_mm = std::numeric_limits<double>::infinity();
        rep.ori_bound_deg = std::numeric_limits<double>::infinity();
        rep.kappa = std::numeric_limits<double>::infinity();
        rep.logdet = -std::numeric_limits<double>::infinity();
        return rep;
    }
    rep.kappa = lmax / lmin;
    // F^{-1} from the same spectrum keeps the degeneracy test and the inverse consistent.
    const Eigen::Matrix<double, 5, 5> finv =
        es.eigenvectors() * rep.eigenvalues.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
    rep.pos_bound_mm = 1000.0 * std::sqrt(finv.topLeftCorner<3, 3>().trace());
    rep.ori_bound_deg = kRadToDeg * std::sqrt(finv.bottomRightCorner<2, 2>().trace());
    rep.logdet = rep.eigenvalues.array().log().sum();
    return rep;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
    if (sorted.size() == 1) return sorted[0];
    const double h = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double w = h - static_cast<double>(lo);
    return sorted[lo] * (1.0 - w) + sorted[hi] * w;
}

namespace {

/// Shared LHS core over an arbitrary dimension count; dims are (lo, hi) pairs
/// in sample space. Returns n x d matrix of stratified uniforms.
std::vector<std::array<double, 5>> lhs_raw(std::size_t n, std::uint64_t seed,
                                           const std::array<std::pair<double, double>, 5>& ranges,
                                           const std::array<bool, 5>& active) {
    std::mt19937_64 rng = make_engine(seed, 0, 0x1b5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::array<double, 5>> out(n);
    std::vector<std::uint32_t> perm(n);
    for (std::size_t d = 0; d < 5; ++d) {
        if (!active[d]) {
            for (std::size_t i = 0; i < n; ++i) out[i][d] = ranges[d].first;
            continue;
        }
        std::iota(perm.begin(), perm.end(), 0u);
        std::shuffle(perm.begin(), perm.end(), rng);
        const double lo = ranges[d].first, hi = ranges[d].second;
        for (std::size_t i = 0; i < n; ++i) {
            const double u = (static_cast<double>(perm[i]) + unit(rng)) / static_cast<double>(n);
            out[i][d] = lo + u * (hi - lo);
        }
    }
    return out;
}

std::vector<Pose5> lhs_poses(const WorkspaceSpec& spec, bool fix_z, double z_fixed) {
    spec.validate();
    const double cos_max = std::cos(spec.theta_margin);
    const std::array<std::pair<double, double>, 5> ranges = {{
        {spec.x_min, spec.x_max},
        {spec.y_min, spec.y_max},
        {fix_z ? z_fixed : spec.z_min, fix_z ? z_fixed : spec.z_max},
        {0.0, kTwoPi},
        {-cos_max, cos_max},
    }};
    const std::array<bool, 5> active = {true, true, !fix_z, true, true};
    const auto raw = lhs_raw(spec.n_samples, spec.seed, ranges, active);
    std::vector<Pose5> poses;
    poses.reserve(raw.size());
    for (const auto& s : raw) {
        const double theta = std::acos(std::clamp(s[4], -1.0, 1.0));
        poses.emplace_back(Eigen::Vector3d(s[0], s[1], s[2]), s[3], theta);
    }
    return poses;
}

}  // namespace

std::vector<Pose5> lhs_sample(const WorkspaceSpec& spec) { return lhs_poses(spec, false, 0.0); }

std::vector<Pose5> lhs_sample_fixed_z(const WorkspaceSpec& spec, double z) {
    return lhs_poses(spec, true, z);
}

SweepReport sweep_workspace(const SensorLayout& layout, const WorkspaceSpec& spec,
                            const MagnetModel& model, const NoiseModel& noise, unsigned threads) {
    layout.validate();
    const std::vector<Pose5> poses = lhs_sample(spec);
    const std::size_t n = poses.size();

    struct Row {
        double pos, ori, lmin, kap, ld;
        std::uint8_t valid;
    };
    std::vector<Row> rows(n);
    parallel_for(n, [&](std::size_t i) {
        const auto F = build_fim(poses[i], layout, model, noise);
        const FimReport r = crlb_metrics(F);
        rows[i] = {r.pos_bound_mm, r.ori_bound_deg, r.lambda_min, r.kappa, r.logdet,
                   static_cast<std::uint8_t>(r.degenerate ? 0 : 1)};
    }, threads);

    SweepReport rep;
    rep.layout_name = layout.name;
    rep.spec = spec;
    rep.sigma = noise.sigma;
    rep.b_t = model.b_t;

    std::vector<double> pos, ori, lmin, kap, ld;
    pos.reserve(n);
    for (const Row& r : rows) {
        if (!r.valid) {
            ++rep.n_degenerate;
            continue;
        }
        pos.push_back(r.pos);
        ori.push_back(r.ori);
        lmin.push_back(r.lmin);
        kap.push_back(r.kap);
        ld.push_back(r.ld);
    }
    rep.n_valid = pos.size();
    if (rep.n_valid == 0) throw AllDegenerate("sweep_workspace: every pose degenerate");
    rep.pos_bound_mm = stats_of(pos);
    rep.ori_bound_deg = stats_of(ori);
    rep.lambda_min = stats_of(lmin);
    rep.kappa = stats_of(kap);
    rep.logdet = stats_of(ld);
    return rep;
}

}  // namespace magfim
