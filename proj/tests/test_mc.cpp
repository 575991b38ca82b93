#include <doctest.h>

#include <cmath>
#include <limits>

#include "magfim/mc.hpp"
#include "magfim/rng.hpp"

using namespace magfim;

TEST_CASE("e_pos basics") {
    CHECK(e_pos({1, 2, 3}, {1, 2, 3}) == 0.0);
    CHECK(e_pos({0.001, 0, 0}, {0, 0, 0}) == doctest::Approx(1.0));
    CHECK(e_pos({0.003, 0.004, 0}, {0, 0, 0}) == doctest::Approx(5.0));
}

TEST_CASE("e_ori basics") {
    CHECK(e_ori({0, 0, 1}, {0, 0, 1}) == doctest::Approx(0.0));
    CHECK(e_ori({1, 0, 0}, {0, 1, 0}) == doctest::Approx(90.0));
    CHECK(e_ori({0, 0, 1}, {0, 0, -1}) == doctest::Approx(180.0));
    // clamping guards against roundoff above |cos| = 1
    CHECK(e_ori({2, 0, 0}, {1, 0, 0}) == doctest::Approx(0.0));
}

TEST_CASE("metric_stats satisfies rmse^2 = mean^2 + var") {
    std::mt19937_64 rng = make_engine(41);
    std::lognormal_distribution<double> dist(0.0, 1.0);
    std::vector<double> values;
    for (int i = 0; i < 500; ++i) values.push_back(dist(rng));
    const MetricStats s = metric_stats(values);
    CHECK(s.rmse * s.rmse ==
          doctest::Approx(s.mean * s.mean + s.std * s.std).epsilon(1e-9));
    CHECK(s.max >= s.p95);
    CHECK(s.p95 >= s.mean);

    // permutation invariance
    std::vector<double> shuffled = values;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const MetricStats s2 = metric_stats(shuffled);
    CHECK(s.mean == doctest::Approx(s2.mean).epsilon(1e-13));
    CHECK(s.rmse == doctest::Approx(s2.rmse).epsilon(1e-13));
    CHECK(s.p95 == s2.p95);  // quantiles sort, so order cannot matter
}

TEST_CASE("run_mc: noiseless unclipped trials are exact") {
    TrialSpec trials;
    trials.workspace.z_min = 0.060;
    trials.workspace.z_max = 0.140;
    trials.n_trials = 50;
    trials.seed = 5;
    const ErrorStats stats = run_mc(build_staggered_split(), MagnetModel{},
                                    std::numeric_limits<double>::infinity(), NoiseSpec::none(),
                                    LmConfig{}, trials);
    CHECK(stats.n_trials == 50);
    CHECK(stats.pos.mean < 1e-4);
    CHECK(stats.ori.mean < 1e-4);
    CHECK(stats.n_converged == 50);
}

TEST_CASE("run_mc is deterministic given its seed") {
    TrialSpec trials;
    trials.n_trials = 30;
    trials.seed = 8;
    const NoiseSpec noise = NoiseSpec::absolute(10.0);
    const ErrorStats a = run_mc(build_staggered_split(), MagnetModel{}, 1900.0, noise, LmConfig{}, trials);
    const ErrorStats b = run_mc(build_staggered_split(), MagnetModel{}, 1900.0, noise, LmConfig{}, trials);
    CHECK(a.pos.mean == b.pos.mean);
    CHECK(a.ori.rmse == b.ori.rmse);
    CHECK(a.pos.max == b.pos.max);
}

TEST_CASE("run_mc at sigma=10 stays above the sweep-median CRLB") {
    WorkspaceSpec ws;
    ws.n_samples = 2000;
    const SweepReport sweep = sweep_workspace(build_staggered_split(), ws, MagnetModel{}, NoiseModel{10.0}, 1);

    TrialSpec trials;
    trials.n_trials = 300;
    trials.seed = 12;
    const ErrorStats stats = run_mc(build_staggered_split(), MagnetModel{},
                                    std::numeric_limits<double>::infinity(),
                                    NoiseSpec::absolute(10.0), LmConfig{}, trials);
    CHECK(stats.pos.rmse >= sweep.pos_bound_mm.median);
}

TEST_CASE("layer_profile covers the requested heights in order") {
    std::vector<double> levels;
    for (int i = 0; i <= 10; ++i) levels.push_back(0.050 + 0.010 * i);
    const LayerProfile profile = layer_profile(build_planar(), MagnetModel{}, 1900.0,
                                               NoiseSpec::absolute(10.0), LmConfig{}, levels, 40, 3);
    REQUIRE(profile.z_levels.size() == 11);
    CHECK(profile.z_levels.front() == doctest::Approx(0.050));
    CHECK(profile.z_levels.back() == doctest::Approx(0.150));
    CHECK(std::is_sorted(profile.z_levels.begin(), profile.z_levels.end()));
    for (const auto& s : profile.stats) CHECK(s.n_trials == 40);
}

TEST_CASE("planar CRLB grows with height; staggered stays flatter") {
    const MagnetModel model;
    const NoiseModel noise{10.0};
    auto fixed_z_median = [&](const SensorLayout& layout, double z) {
        WorkspaceSpec ws;
        ws.n_samples = 400;
        ws.seed = 17;
        std::vector<double> bounds;
        for (const Pose5& q : lhs_sample_fixed_z(ws, z)) {
            const FimReport r = crlb_metrics(build_fim(q, layout, model, noise));
            if (!r.degenerate) bounds.push_back(r.pos_bound_mm);
        }
        std::sort(bounds.begin(), bounds.end());
        return quantile_sorted(bounds, 0.5);
    };

    const double planar_low = fixed_z_median(build_planar(), 0.070);
    const double planar_high = fixed_z_median(build_planar(), 0.150);
    CHECK(planar_high > planar_low);

    const double stag_low = fixed_z_median(build_staggered_split(), 0.070);
    const double stag_high = fixed_z_median(build_staggered_split(), 0.150);
    const double planar_ratio = planar_high / planar_low;
    const double stag_ratio = std::max(stag_high, stag_low) / std::min(stag_high, stag_low);
    CHECK(stag_ratio < planar_ratio);
}

TEST_CASE("compare_crlb: near-efficiency at small noise") {
    const Pose5 pose({0.015, -0.01, 0.095}, 0.9, 1.2);
    const CrlbComparison cmp =
        compare_crlb(build_staggered_split(), MagnetModel{}, 0.1, pose, 300, 21);
    CHECK(cmp.ratio_pos >= 0.9);
    CHECK(cmp.ratio_pos <= 1.5);
    CHECK(cmp.ratio_ori >= 0.9);
    CHECK(cmp.ratio_ori <= 1.5);
}
