// magfim: observability analysis and pose-estimation experiments for
// magnetometer arrays. Lengths are meters except --sigma (uT); report bounds
// are mm / degrees.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "magfim/dataset.hpp"
#include "magfim/errors.hpp"
#include "magfim/geometry.hpp"
#include "magfim/lm.hpp"
#include "magfim/mc.hpp"
#include "magfim/observability.hpp"
#include "magfim/serialize.hpp"
#include "magfim/shell.hpp"

namespace {

using namespace magfim;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

struct LayoutArg {
    std::string spec = "staggered";

    SensorLayout resolve(RunManifest& manifest) const {
        if (spec == "planar" || spec == "single-split" || spec == "staggered")
            return build_named(spec);
        manifest.input_digests[spec] = digest_file(spec);
        return load_layout(spec);
    }
};

std::string join_args(int argc, char** argv) {
    std::string s;
    for (int i = 0; i < argc; ++i) {
        if (i) s += ' ';
        s += argv[i];
    }
    return s;
}

void print_sweep_table(const SweepReport& rep) {
    std::printf("layout: %s   (n_valid=%zu, n_degenerate=%zu)\n", rep.layout_name.c_str(),
                rep.n_valid, rep.n_degenerate);
    std::printf("  %-16s %12s %12s\n", "metric", "median", "mean");
    std::printf("  %-16s %12.4f %12.4f\n", "pos_bound [mm]", rep.pos_bound_mm.median, rep.pos_bound_mm.mean);
    std::printf("  %-16s %12.4f %12.4f\n", "ori_bound [deg]", rep.ori_bound_deg.median, rep.ori_bound_deg.mean);
    std::printf("  %-16s %12.4g %12.4g\n", "lambda_min", rep.lambda_min.median, rep.lambda_min.mean);
    std::printf("  %-16s %12.4g %12.4g\n", "kappa", rep.kappa.median, rep.kappa.mean);
    std::printf("  %-16s %12.4f %12.4f\n", "logdet", rep.logdet.median, rep.logdet.mean);
}

std::vector<double> parse_z_range(const std::string& text) {
    // "start:stop:step", meters
    double a, b, s;
    if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &a, &b, &s) != 3 || !(s > 0.0) || b < a)
        throw ParseError("bad z profile spec '" + text + "' (expected start:stop:step)");
    std::vector<double> levels;
    for (double z = a; z <= b + 1e-12; z += s) levels.push_back(z);
    return levels;
}

int run(int argc, char** argv) {
    CLI::App app{"Fisher-information observability toolkit for magnetometer arrays"};
    app.require_subcommand(1);

    unsigned threads = 0;
    app.add_option("--threads", threads, "worker thread cap (default: MAGFIM_THREADS or hardware)");

    RunManifest manifest;
    manifest.command = join_args(argc, argv);
    manifest.tool_version = kToolVersion;
    manifest.started = iso_timestamp_now();
    manifest.input_digests = nlohmann::json::object();

    auto finish_manifest = [&](std::uint64_t seed, nlohmann::json params) {
        manifest.seed = seed;
        manifest.parameters = std::move(params);
        manifest.finished = iso_timestamp_now();
    };

    // ---- geometry eval | show -------------------------------------------
    auto* geometry = app.add_subcommand("geometry", "benchmark layout observability");
    auto* geo_eval = geometry->add_subcommand("eval", "LHS workspace sweep of CRLB metrics");
    LayoutArg geo_layout;
    std::size_t geo_samples = 200000;
    double geo_sigma = 10.0, geo_bt = 7.9666e-2;
    std::uint64_t geo_seed = 0;
    WorkspaceSpec geo_ws;
    std::string geo_out;
    geo_eval->add_option("--layout", geo_layout.spec, "planar|single-split|staggered or JSON file")
        ->capture_default_str();
    geo_eval->add_option("--samples", geo_samples, "LHS sample count")->capture_default_str();
    geo_eval->add_option("--sigma", geo_sigma, "channel noise std [uT]")->capture_default_str();
    geo_eval->add_option("--bt", geo_bt, "magnet strength coefficient [uT*m^3]")->capture_default_str();
    geo_eval->add_option("--seed", geo_seed, "RNG seed")->capture_default_str();
    geo_eval->add_option("--zmin", geo_ws.z_min, "workspace z min [m]")->capture_default_str();
    geo_eval->add_option("--zmax", geo_ws.z_max, "workspace z max [m]")->capture_default_str();
    geo_eval->add_option("--out", geo_out, "write SweepReport JSON here");

    auto* geo_show = geometry->add_subcommand("show", "print a layout as geometry JSON");
    LayoutArg show_layout;
    geo_show->add_option("--layout", show_layout.spec, "builder name or JSON file")->capture_default_str();

    // ---- shell optimize --------------------------------------------------
    auto* shell_cmd = app.add_subcommand("shell", "shell-constrained sensor placement");
    auto* shell_opt = shell_cmd->add_subcommand("optimize", "greedy + pattern-search refinement");
    double shell_side = 0.16;
    std::vector<double> shell_center = {0.0, 0.0, 0.100};
    std::size_t shell_k = 16, shell_grid = 15, shell_poses = 2000, shell_eval_samples = 200000;
    std::uint64_t shell_seed = 0;
    double shell_sigma = 10.0, shell_bt = 7.9666e-2;
    bool skip_refine = false;
    std::string shell_out, shell_out_layout;
    shell_opt->add_option("--side", shell_side, "cube side [m]")->capture_default_str();
    shell_opt->add_option("--center", shell_center, "shell center x y z [m]")->expected(3);
    shell_opt->add_option("--sensors", shell_k, "sensor count k")->capture_default_str();
    shell_opt->add_option("--candidates", shell_grid, "greedy grid resolution per face side")
        ->capture_default_str();
    shell_opt->add_option("--opt-poses", shell_poses, "LHS poses for the objective")->capture_default_str();
    shell_opt->add_option("--eval-samples", shell_eval_samples, "final sweep sample count")
        ->capture_default_str();
    shell_opt->add_option("--sigma", shell_sigma, "channel noise std [uT]")->capture_default_str();
    shell_opt->add_option("--bt", shell_bt, "magnet strength coefficient [uT*m^3]")->capture_default_str();
    shell_opt->add_option("--seed", shell_seed, "RNG seed")->capture_default_str();
    shell_opt->add_flag("--skip-refine", skip_refine, "emit the greedy layout only");
    shell_opt->add_option("--out", shell_out, "write PlacementResult JSON here");
    shell_opt->add_option("--out-layout", shell_out_layout, "write optimized geometry JSON here");

    // ---- dataset gen -----------------------------------------------------
    auto* dataset_cmd = app.add_subcommand("dataset", "synthetic dataset generation");
    auto* ds_gen = dataset_cmd->add_subcommand("gen", "LHS poses -> clip -> noise -> file");
    LayoutArg ds_layout;
    std::size_t ds_count = 100000;
    std::uint64_t ds_seed = 0;
    std::string ds_noise = "none", ds_clip = "1900", ds_out = "dataset.csv";
    double ds_bt = 7.9666e-2, ds_zmin = 0.045, ds_zmax = 0.155;
    bool ds_binary = false;
    ds_gen->add_option("--layout", ds_layout.spec, "builder name or JSON file")->capture_default_str();
    ds_gen->add_option("--count", ds_count, "record count")->capture_default_str();
    ds_gen->add_option("--noise", ds_noise, "none|absolute:SIGMA|relative:FRACTION")->capture_default_str();
    ds_gen->add_option("--clip", ds_clip, "saturation threshold [uT], or 'none'")->capture_default_str();
    ds_gen->add_option("--zmin", ds_zmin, "workspace z min [m]")->capture_default_str();
    ds_gen->add_option("--zmax", ds_zmax, "workspace z max [m]")->capture_default_str();
    ds_gen->add_option("--bt", ds_bt, "magnet strength coefficient [uT*m^3]")->capture_default_str();
    ds_gen->add_option("--seed", ds_seed, "RNG seed")->capture_default_str();
    ds_gen->add_flag("--binary", ds_binary, "write the MAGD binary variant instead of CSV");
    ds_gen->add_option("--out", ds_out, "output file")->capture_default_str();

    // ---- solve -----------------------------------------------------------
    auto* solve_cmd = app.add_subcommand("solve", "LM pose fit for one dataset row");
    LayoutArg solve_layout;
    std::string solve_input;
    std::size_t solve_row = 0;
    double solve_dp = 0.020, solve_dn = 0.3;
    solve_cmd->add_option("--layout", solve_layout.spec, "builder name or JSON file")->capture_default_str();
    solve_cmd->add_option("--input", solve_input, "dataset CSV")->required();
    solve_cmd->add_option("--row", solve_row, "record index")->capture_default_str();
    solve_cmd->add_option("--dp", solve_dp, "init position offset per component [m]")->capture_default_str();
    solve_cmd->add_option("--dn", solve_dn, "init orientation offset per component")->capture_default_str();

    // ---- mc eval ---------------------------------------------------------
    auto* mc_cmd = app.add_subcommand("mc", "Monte-Carlo solver evaluation");
    auto* mc_eval = mc_cmd->add_subcommand("eval", "LM error statistics vs CRLB");
    LayoutArg mc_layout;
    std::size_t mc_trials = 1000;
    std::uint64_t mc_seed = 0;
    double mc_sigma = 10.0, mc_bt = 7.9666e-2;
    std::string mc_clip = "1900", mc_profile, mc_out, mc_csv;
    mc_eval->add_option("--layout", mc_layout.spec, "builder name or JSON file")->capture_default_str();
    mc_eval->add_option("--sigma", mc_sigma, "channel noise std [uT]; 0 disables noise")
        ->capture_default_str();
    mc_eval->add_option("--clip", mc_clip, "saturation threshold [uT], or 'none'")->capture_default_str();
    mc_eval->add_option("--trials", mc_trials, "trial count (per level when profiling)")
        ->capture_default_str();
    mc_eval->add_option("--bt", mc_bt, "magnet strength coefficient [uT*m^3]")->capture_default_str();
    mc_eval->add_option("--seed", mc_seed, "RNG seed")->capture_default_str();
    mc_eval->add_option("--profile-z", mc_profile, "layer profile start:stop:step [m]");
    mc_eval->add_option("--out", mc_out, "write JSON here");
    mc_eval->add_option("--csv", mc_csv, "write a per-level CSV table here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (geo_eval->parsed()) {
        const SensorLayout layout = geo_layout.resolve(manifest);
        geo_ws.n_samples = geo_samples;
        geo_ws.seed = geo_seed;
        const SweepReport rep =
            sweep_workspace(layout, geo_ws, MagnetModel{geo_bt}, NoiseModel{geo_sigma}, threads);
        print_sweep_table(rep);
        if (!geo_out.empty()) {
            finish_manifest(geo_seed, {{"layout", geo_layout.spec},
                                       {"samples", geo_samples},
                                       {"sigma", geo_sigma},
                                       {"bt", geo_bt}});
            nlohmann::json doc = to_json(rep, layout);
            doc["manifest"] = to_json(manifest);
            write_json(doc, geo_out);
        }
        return kExitOk;
    }

    if (geo_show->parsed()) {
        const SensorLayout layout = show_layout.resolve(manifest);
        std::cout << to_json(layout).dump(2) << "\n";
        return kExitOk;
    }

    if (shell_opt->parsed()) {
        if (shell_k < 5) throw InvariantViolation("--sensors must be >= 5");
        ShellSpec shell;
        shell.center = Eigen::Vector3d(shell_center[0], shell_center[1], shell_center[2]);
        shell.side = shell_side;
        const MagnetModel model{shell_bt};
        const NoiseModel noise{shell_sigma};
        WorkspaceSpec opt_ws;
        opt_ws.n_samples = shell_poses;
        opt_ws.seed = shell_seed;
        const std::vector<Pose5> poses = lhs_sample(opt_ws);

        PlacementResult result = greedy_place(shell, shell_k, shell_grid, poses, model, noise, shell_seed);
        std::printf("greedy objective: %.4f\n", result.objective_trace.back());
        if (!skip_refine) {
            PlacementResult refined = refine_place(result.layout, shell, poses, model, noise);
            // stitch the two traces: greedy growth then refinement improvements
            refined.objective_trace.insert(refined.objective_trace.begin(),
                                           result.objective_trace.begin(), result.objective_trace.end() - 1);
            result = std::move(refined);
            std::printf("refined objective: %.4f\n", result.objective_trace.back());
        }

        WorkspaceSpec eval_ws;
        eval_ws.n_samples = shell_eval_samples;
        eval_ws.seed = shell_seed;
        result.final_report = sweep_workspace(result.layout, eval_ws, model, noise, threads);
        print_sweep_table(*result.final_report);

        if (!shell_out_layout.empty()) save_layout(result.layout, shell_out_layout);
        if (!shell_out.empty()) {
            finish_manifest(shell_seed, {{"side", shell_side},
                                         {"center", shell_center},
                                         {"sensors", shell_k},
                                         {"candidates", shell_grid},
                                         {"opt_poses", shell_poses},
                                         {"eval_samples", shell_eval_samples},
                                         {"sigma", shell_sigma},
                                         {"bt", shell_bt},
                                         {"skip_refine", skip_refine}});
            nlohmann::json doc = to_json(result);
            doc["manifest"] = to_json(manifest);
            write_json(doc, shell_out);
        }
        return kExitOk;
    }

    if (ds_gen->parsed()) {
        DatasetSpec spec;
        spec.layout = ds_layout.resolve(manifest);
        spec.workspace.z_min = ds_zmin;
        spec.workspace.z_max = ds_zmax;
        spec.model = MagnetModel{ds_bt};
        spec.b_clip = ds_clip == "none" ? std::numeric_limits<double>::infinity() : std::stod(ds_clip);
        spec.noise = NoiseSpec::parse(ds_noise);
        spec.count = ds_count;
        spec.seed = ds_seed;
        const Dataset ds = generate(spec);
        if (ds_binary)
            write_binary(ds.records, ds_out);
        else
            write_csv(ds.records, ds_out);
        std::printf("wrote %zu records to %s (%zu degenerate poses resampled)\n", ds.records.size(),
                    ds_out.c_str(), ds.n_resampled);
        return kExitOk;
    }

    if (solve_cmd->parsed()) {
        const SensorLayout layout = solve_layout.resolve(manifest);
        const auto records = read_csv(solve_input);
        if (solve_row >= records.size())
            throw ParseError("--row " + std::to_string(solve_row) + " out of range (dataset has " +
                             std::to_string(records.size()) + " records)");
        const DatasetRecord& rec = records[solve_row];
        const LmEstimate est =
            lm_solve(rec.fields, layout, MagnetModel{}, perturbed_init(rec.pose, solve_dp, solve_dn));
        std::printf("p_hat   = (%.6f, %.6f, %.6f) m\n", est.p_hat.x(), est.p_hat.y(), est.p_hat.z());
        std::printf("n_hat   = (%.6f, %.6f, %.6f)\n", est.n_hat.x(), est.n_hat.y(), est.n_hat.z());
        std::printf("E_pos   = %.6f mm\nE_ori   = %.6f deg\n", e_pos(est.p_hat, rec.pose.p),
                    e_ori(est.n_hat, rec.n));
        std::printf("residual_rms = %.6g uT, iters = %d, converged = %s\n", est.residual_rms, est.iters,
                    est.converged ? "yes" : "no");
        return kExitOk;
    }

    if (mc_eval->parsed()) {
        const SensorLayout layout = mc_layout.resolve(manifest);
        const MagnetModel model{mc_bt};
        const double b_clip =
            mc_clip == "none" ? std::numeric_limits<double>::infinity() : std::stod(mc_clip);
        const NoiseSpec noise = mc_sigma > 0.0 ? NoiseSpec::absolute(mc_sigma) : NoiseSpec::none();
        const LmConfig solver;

        nlohmann::json doc;
        if (!mc_profile.empty()) {
            const std::vector<double> levels = parse_z_range(mc_profile);
            const LayerProfile profile =
                layer_profile(layout, model, b_clip, noise, solver, levels, mc_trials, mc_seed);
            std::printf("%8s %12s %12s %12s %12s\n", "z [m]", "pos mean", "pos rmse", "ori mean", "ori rmse");
            for (std::size_t i = 0; i < profile.z_levels.size(); ++i)
                std::printf("%8.3f %12.4f %12.4f %12.4f %12.4f\n", profile.z_levels[i],
                            profile.stats[i].pos.mean, profile.stats[i].pos.rmse,
                            profile.stats[i].ori.mean, profile.stats[i].ori.rmse);
            doc = to_json(profile);
            if (!mc_csv.empty()) {
                std::ofstream csv(mc_csv);
                if (!csv) throw IoError("cannot write: " + mc_csv);
                csv << "z_m,pos_mean_mm,pos_std_mm,pos_rmse_mm,pos_max_mm,pos_p95_mm,"
                       "ori_mean_deg,ori_std_deg,ori_rmse_deg,ori_max_deg,ori_p95_deg,"
                       "n_trials,n_converged,mean_wall_ms\n";
                for (std::size_t i = 0; i < profile.z_levels.size(); ++i) {
                    const ErrorStats& s = profile.stats[i];
                    char line[512];
                    std::snprintf(line, sizeof(line),
                                  "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%zu,%zu,%.17g\n",
                                  profile.z_levels[i], s.pos.mean, s.pos.std, s.pos.rmse, s.pos.max,
                                  s.pos.p95, s.ori.mean, s.ori.std, s.ori.rmse, s.ori.max, s.ori.p95,
                                  s.n_trials, s.n_converged, s.mean_wall_ms);
                    csv << line;
                }
            }
        } else {
            TrialSpec trials;
            trials.n_trials = mc_trials;
            trials.seed = mc_seed;
            const ErrorStats stats = run_mc(layout, model, b_clip, noise, solver, trials);
            std::printf("E_pos [mm]:  mean %.4f  std %.4f  rmse %.4f  max %.4f\n", stats.pos.mean,
                        stats.pos.std, stats.pos.rmse, stats.pos.max);
            std::printf("E_ori [deg]: mean %.4f  std %.4f  rmse %.4f  max %.4f\n", stats.ori.mean,
                        stats.ori.std, stats.ori.rmse, stats.ori.max);
            std::printf("converged %zu / %zu, mean solve time %.3f ms\n", stats.n_converged,
                        stats.n_trials, stats.mean_wall_ms);
            doc = to_json(stats);
        }
        if (!mc_out.empty()) {
            finish_manifest(mc_seed, {{"layout", mc_layout.spec},
                                      {"sigma", mc_sigma},
                                      {"clip", mc_clip},
                                      {"trials", mc_trials},
                                      {"profile_z", mc_profile}});
            doc["manifest"] = to_json(manifest);
            write_json(doc, mc_out);
        }
        return kExitOk;
    }

    std::cerr << app.help();
    return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const AllDegenerate& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const NonFinite& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const SingularNormalEquations& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const InvariantViolation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}
