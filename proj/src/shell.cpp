#include "magfim/shell.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "magfim/errors.hpp"

namespace magfim {

namespace {

using Mat5 = Eigen::Matrix<double, 5, 5>;

struct PoseCtx {
    Eigen::Vector3d p, n, dn_dpsi, dn_dtheta;
};

std::vector<PoseCtx> make_contexts(const std::vector<Pose5>& poses) {
    std::vector<PoseCtx> ctx(poses.size());
    for (std::size_t i = 0; i < poses.size(); ++i) {
        const Pose5& q = poses[i];
        const double sp = std::sin(q.psi), cp = std::cos(q.psi);
        const double st = std::sin(q.theta), ct = std::cos(q.theta);
        ctx[i] = {q.p,
                  {cp * st, sp * st, ct},
                  {-sp * st, cp * st, 0.0},
                  {cp * ct, sp * ct, -st}};
    }
    return ctx;
}

/// One sensor's rank-3 FIM increment at one pose.
Mat5 fim_increment(const PoseCtx& c, const Eigen::Vector3d& sensor_pos, const MagnetModel& model,
                   double inv_sigma2) {
    const Eigen::Matrix<double, 3, 5> block =
        jacobian_block(c.p, c.n, c.dn_dpsi, c.dn_dtheta, sensor_pos, model);
    return inv_sigma2 * (block.transpose() * block);
}

/// log det(F + eps*tr(F)/5 * I); -inf when F is exactly zero.
double regularized_logdet(const Mat5& F) {
    const double reg = kLogDetEps * F.trace() / 5.0;
    if (!(reg > 0.0)) return -std::numeric_limits<double>::infinity();
    Mat5 A = F;
    A.diagonal().array() += reg;
    Eigen::LLT<Mat5> llt(A);
    if (llt.info() == Eigen::Success) {
        double ld = 0.0;
        for (int i = 0; i < 5; ++i) ld += std::log(llt.matrixLLT()(i, i));
        return 2.0 * ld;
    }
    // near-singular fallback: spectrum with eigenvalues floored at the regularizer
    Eigen::SelfAdjointEigenSolver<Mat5> es(A);
    double ld = 0.0;
    for (int i = 0; i < 5; ++i) ld += std::log(std::max(es.eigenvalues()[i], reg));
    return ld;
}

struct ObjectiveState {
    std::vector<Mat5> fims;  // per pose, current layout

    double objective() const {
        double sum = 0.0;
        for (const Mat5& F : fims) sum += regularized_logdet(F);
        return sum / static_cast<double>(fims.size());
    }
};

constexpr std::array<int, 6> kFaceAxis = {0, 0, 1, 1, 2, 2};
constexpr std::array<double, 6> kFaceSign = {1.0, -1.0, 1.0, -1.0, 1.0, -1.0};

}  // namespace

void ShellSpec::validate() const {
    if (!(side > 0.0)) throw InvariantViolation("ShellSpec: side must be positive");
    if (!center.allFinite()) throw InvariantViolation("ShellSpec: non-finite center");
}

Eigen::Vector3d face_point(const ShellSpec& shell, const FacePlacement& fp) {
    if (fp.face_id < 0 || fp.face_id > 5) throw InvariantViolation("face_point: face_id out of range");
    const double h = shell.side / 2.0;
    if (std::abs(fp.u) > h + 1e-12 || std::abs(fp.v) > h + 1e-12)
        throw InvariantViolation("face_point: in-face coordinate outside the face");
    const int axis = kFaceAxis[static_cast<std::size_t>(fp.face_id)];
    Eigen::Vector3d pos = shell.center;
    pos[axis] += kFaceSign[static_cast<std::size_t>(fp.face_id)] * h;
    const int ua = axis == 0 ? 1 : 0;
    const int va = axis == 2 ? 1 : 2;
    pos[ua] += fp.u;
    pos[va] += fp.v;
    return pos;
}

FacePlacement face_of(const ShellSpec& shell, const Eigen::Vector3d& pos) {
    const double h = shell.side / 2.0;
    const Eigen::Vector3d rel = pos - shell.center;
    for (int face = 0; face < 6; ++face) {
        const int axis = kFaceAxis[static_cast<std::size_t>(face)];
        if (std::abs(rel[axis] - kFaceSign[static_cast<std::size_t>(face)] * h) > 1e-9) continue;
        const int ua = axis == 0 ? 1 : 0;
        const int va = axis == 2 ? 1 : 2;
        if (std::abs(rel[ua]) <= h + 1e-9 && std::abs(rel[va]) <= h + 1e-9)
            return {face, rel[ua], rel[va]};
    }
    throw OffShell("sensor not on any shell face: (" + std::to_string(pos.x()) + ", " +
                   std::to_string(pos.y()) + ", " + std::to_string(pos.z()) + ")");
}

double placement_objective(const SensorLayout& layout, const std::vector<Pose5>& poses,
                           const MagnetModel& model, const NoiseModel& noise) {
    layout.validate();
    if (poses.empty()) throw InvariantViolation("placement_objective: no poses");
    const auto ctx = make_contexts(poses);
    const double inv_sigma2 = 1.0 / (noise.sigma * noise.sigma);
    double sum = 0.0;
    std::size_t finite = 0;
    for (const PoseCtx& c : ctx) {
        Mat5 F = Mat5::Zero();
        for (const auto& r : layout.positions) F += fim_increment(c, r, model, inv_sigma2);
        const double ld = regularized_logdet(F);
        if (std::isfinite(ld)) {
            sum += ld;
            ++finite;
        }
    }
    if (finite == 0) throw AllDegenerate("placement_objective: no pose yields a finite objective");
    if (finite != poses.size())
        throw AllDegenerate("placement_objective: zero information matrix at some pose");
    return sum / static_cast<double>(poses.size());
}

PlacementResult greedy_place(const ShellSpec& shell, std::size_t k, std::size_t candidates_per_face,
                             const std::vector<Pose5>& poses, const MagnetModel& model,
                             const NoiseModel& noise, std::uint64_t seed) {
    shell.validate();
    if (k < 5) throw InvariantViolation("greedy_place: need k >= 5 sensors for an invertible FIM");
    if (poses.empty()) throw InvariantViolation("greedy_place: no evaluation poses");
    const std::size_t g = candidates_per_face;
    if (g < 1) throw InvariantViolation("greedy_place: candidates_per_face must be >= 1");
    if (6 * g * g < k)
        throw InsufficientCandidates("greedy_place: " + std::to_string(6 * g * g) +
                                     " candidates for k=" + std::to_string(k));
    (void)seed;  // grid and tie-breaking are already deterministic; seed recorded by callers

    // cell-centered grid on every face
    std::vector<FacePlacement> candidates;
    candidates.reserve(6 * g * g);
    const double h = shell.side / 2.0;
    for (int face = 0; face < 6; ++face)
        for (std::size_t iu = 0; iu < g; ++iu)
            for (std::size_t iv = 0; iv < g; ++iv)
                candidates.push_back({face,
                                      -h + (static_cast<double>(iu) + 0.5) * shell.side / static_cast<double>(g),
                                      -h + (static_cast<double>(iv) + 0.5) * shell.side / static_cast<double>(g)});
    std::vector<Eigen::Vector3d> cand_pos(candidates.size());
    for (std::size_t c = 0; c < candidates.size(); ++c) cand_pos[c] = face_point(shell, candidates[c]);

    const auto ctx = make_contexts(poses);
    const double inv_sigma2 = 1.0 / (noise.sigma * noise.sigma);

    ObjectiveState state;
    state.fims.assign(poses.size(), Mat5::Zero());
    std::vector<bool> used(candidates.size(), false);

    PlacementResult result;
    result.layout.name = "shell-greedy";
    result.objective_trace.reserve(k);

    for (std::size_t pick = 0; pick < k; ++pick) {
        double best_obj = -std::numeric_limits<double>::infinity();
        std::size_t best_c = candidates.size();
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            if (used[c]) continue;
            double sum = 0.0;
            for (std::size_t pi = 0; pi < ctx.size(); ++pi) {
                const Mat5 F = state.fims[pi] + fim_increment(ctx[pi], cand_pos[c], model, inv_sigma2);
                sum += regularized_logdet(F);
            }
            const double obj = sum / static_cast<double>(ctx.size());
            if (obj > best_obj) {  // strict: ties keep the lowest index
                best_obj = obj;
                best_c = c;
            }
        }
        if (best_c == candidates.size())
            throw InsufficientCandidates("greedy_place: no usable candidate left");
        used[best_c] = true;
        for (std::size_t pi = 0; pi < ctx.size(); ++pi)
            state.fims[pi] += fim_increment(ctx[pi], cand_pos[best_c], model, inv_sigma2);
        result.layout.positions.push_back(cand_pos[best_c]);
        result.objective_trace.push_back(best_obj);
    }
    result.layout.validate();
    return result;
}

PlacementResult refine_place(const SensorLayout& initial, const ShellSpec& shell,
                             const std::vector<Pose5>& poses, const MagnetModel& model,
                             const NoiseModel& noise, const RefineConfig& config) {
    shell.validate();
    initial.validate();
    if (poses.empty()) throw InvariantViolation("refine_place: no evaluation poses");
    const double h = shell.side / 2.0;
    const double step0 = config.step0 > 0.0 ? config.step0 : shell.side / 16.0;

    std::vector<FacePlacement> placements;
    placements.reserve(initial.size());
    for (const auto& pos : initial.positions) placements.push_back(face_of(shell, pos));

    const auto ctx = make_contexts(poses);
    const double inv_sigma2 = 1.0 / (noise.sigma * noise.sigma);
    const std::size_t np = poses.size();
    const std::size_t ns = placements.size();

    auto increment_at = [&](std::size_t pi, const Eigen::Vector3d& pos) {
        return fim_increment(ctx[pi], pos, model, inv_sigma2);
    };
    auto rebuild = [&](std::vector<Mat5>& fims) {
        fims.assign(np, Mat5::Zero());
        for (std::size_t pi = 0; pi < np; ++pi)
            for (std::size_t j = 0; j < ns; ++j)
                fims[pi] += increment_at(pi, face_point(shell, placements[j]));
    };
    auto objective_of = [&](const std::vector<Mat5>& fims) {
        double sum = 0.0;
        for (const Mat5& F : fims) sum += regularized_logdet(F);
        return sum / static_cast<double>(np);
    };

    std::vector<Mat5> fims;
    rebuild(fims);
    double obj = objective_of(fims);

    PlacementResult result;
    result.layout.name = initial.name.empty() ? "shell-refined" : initial.name + "-refined";
    result.objective_trace.push_back(obj);

    std::vector<Mat5> base(np), trial_inc(np);
    for (int cycle = 0; cycle < config.max_cycles; ++cycle) {
        const double cycle_start = obj;
        for (std::size_t j = 0; j < ns; ++j) {
            // F without sensor j, rebuilt exactly to avoid drift from repeated subtraction
            for (std::size_t pi = 0; pi < np; ++pi)
                base[pi] = fims[pi] - increment_at(pi, face_point(shell, placements[j]));

            auto eval_uv = [&](double u, double v) {
                FacePlacement fp = placements[j];
                fp.u = u;
                fp.v = v;
                const Eigen::Vector3d pos = face_point(shell, fp);
                for (std::size_t o = 0; o < ns; ++o)  // keep sensors pairwise distinct
                    if (o != j && (face_point(shell, placements[o]) - pos).norm() < 1e-6)
                        return -std::numeric_limits<double>::infinity();
                double sum = 0.0;
                for (std::size_t pi = 0; pi < np; ++pi)
                    sum += regularized_logdet(base[pi] + increment_at(pi, pos));
                return sum / static_cast<double>(np);
            };

            double u = placements[j].u, v = placements[j].v;
            double step = step0;
            while (step >= config.min_step) {
                double cand_obj = obj;
                double cand_u = u, cand_v = v;
                const double moves[4][2] = {{step, 0.0}, {-step, 0.0}, {0.0, step}, {0.0, -step}};
                for (const auto& mv : moves) {
                    const double tu = std::clamp(u + mv[0], -h, h);
                    const double tv = std::clamp(v + mv[1], -h, h);
                    if (tu == u && tv == v) continue;
                    const double o = eval_uv(tu, tv);
                    if (o > cand_obj) {
                        cand_obj = o;
                        cand_u = tu;
                        cand_v = tv;
                    }
                }
                if (cand_obj > obj) {
                    u = cand_u;
                    v = cand_v;
                    obj = cand_obj;
                } else {
                    step *= 0.5;
                }
            }
            placements[j].u = u;
            placements[j].v = v;
            for (std::size_t pi = 0; pi < np; ++pi)
                fims[pi] = base[pi] + increment_at(pi, face_point(shell, placements[j]));
            // appends are clamped monotone against roundoff in the incremental updates
            result.objective_trace.push_back(std::max(obj, result.objective_trace.back()));
        }
        rebuild(fims);
        obj = std::max(objective_of(fims), result.objective_trace.back());
        const double denom = std::max(std::abs(cycle_start), 1e-12);
        if ((obj - cycle_start) / denom < config.rel_tol) break;
    }

    result.layout.positions.clear();
    for (const auto& fp : placements) result.layout.positions.push_back(face_point(shell, fp));
    result.layout.validate();
    return result;
}

}  // namespace magfim
