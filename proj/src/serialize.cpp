#include "magfim/serialize.hpp"

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "magfim/errors.hpp"

namespace magfim {

std::string iso_timestamp_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string digest_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for digest: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return fnv1a_hex(ss.str());
}

nlohmann::json to_json(const QuantileStats& s) {
    return {{"median", s.median}, {"mean", s.mean}, {"p25", s.p25},
            {"p75", s.p75},       {"p5", s.p5},     {"p95", s.p95}};
}

nlohmann::json to_json(const WorkspaceSpec& s) {
    return {{"x_range_m", {s.x_min, s.x_max}},
            {"y_range_m", {s.y_min, s.y_max}},
            {"z_range_m", {s.z_min, s.z_max}},
            {"n_samples", s.n_samples},
            {"seed", s.seed},
            {"theta_margin_rad", s.theta_margin}};
}

nlohmann::json to_json(const SensorLayout& layout) {
    nlohmann::json positions = nlohmann::json::array();
    for (const auto& p : layout.positions) positions.push_back({p.x(), p.y(), p.z()});
    return {{"name", layout.name}, {"positions_m", positions}};
}

nlohmann::json to_json(const SweepReport& r, const SensorLayout& layout) {
    return {{"layout", to_json(layout)},
            {"workspace", to_json(r.spec)},
            {"sigma_uT", r.sigma},
            {"b_t_uTm3", r.b_t},
            {"pos_bound_mm", to_json(r.pos_bound_mm)},
            {"ori_bound_deg", to_json(r.ori_bound_deg)},
            {"lambda_min", to_json(r.lambda_min)},
            {"kappa", to_json(r.kappa)},
            {"logdet", to_json(r.logdet)},
            {"n_valid", r.n_valid},
            {"n_degenerate", r.n_degenerate}};
}

nlohmann::json to_json(const MetricStats& s) {
    return {{"mean", s.mean}, {"std", s.std}, {"rmse", s.rmse}, {"max", s.max}, {"p95", s.p95}};
}

nlohmann::json to_json(const ErrorStats& s) {
    return {{"pos_mm", to_json(s.pos)},
            {"ori_deg", to_json(s.ori)},
            {"n_trials", s.n_trials},
            {"n_converged", s.n_converged},
            {"mean_wall_ms", s.mean_wall_ms}};
}

nlohmann::json to_json(const LayerProfile& p) {
    nlohmann::json levels = nlohmann::json::array();
    for (std::size_t i = 0; i < p.z_levels.size(); ++i)
        levels.push_back({{"z_m", p.z_levels[i]}, {"stats", to_json(p.stats[i])}});
    return {{"levels", levels}};
}

nlohmann::json to_json(const CrlbComparison& c) {
    return {{"mc_rmse_pos_mm", c.mc_rmse_pos}, {"crlb_pos_mm", c.crlb_pos},
            {"mc_rmse_ori_deg", c.mc_rmse_ori}, {"crlb_ori_deg", c.crlb_ori},
            {"ratio_pos", c.ratio_pos},         {"ratio_ori", c.ratio_ori},
            {"n_trials", c.n_trials}};
}

nlohmann::json to_json(const PlacementResult& r) {
    nlohmann::json doc = {{"layout", to_json(r.layout)}, {"objective_trace", r.objective_trace}};
    if (r.final_report) doc["final_sweep"] = to_json(*r.final_report, r.layout);
    return doc;
}

nlohmann::json to_json(const RunManifest& m) {
    return {{"command", m.command},   {"parameters", m.parameters},
            {"seed", m.seed},         {"tool_version", m.tool_version},
            {"started", m.started},   {"finished", m.finished},
            {"input_digests", m.input_digests}};
}

void write_json(const nlohmann::json& doc, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write: " + path);
    out << doc.dump(2) << "\n";
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace magfim
