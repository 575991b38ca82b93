#pragma once

#include <json.hpp>

#include <string>
#include <vector>

#include "magfim/geometry.hpp"
#include "magfim/mc.hpp"
#include "magfim/observability.hpp"
#include "magfim/shell.hpp"

namespace magfim {

/// Provenance block embedded in every report JSON; re-running the recorded
/// command reproduces the numeric payload bit-exactly (timestamps aside).
struct RunManifest {
    std::string command;
    nlohmann::json parameters;
    std::uint64_t seed = 0;
    std::string tool_version;
    std::string started;
    std::string finished;
    nlohmann::json input_digests;  // path -> fnv1a hex
};

inline constexpr const char* kToolVersion = "0.1.0";

std::string iso_timestamp_now();
std::string fnv1a_hex(const std::string& bytes);
std::string digest_file(const std::string& path);

nlohmann::json to_json(const QuantileStats& s);
nlohmann::json to_json(const WorkspaceSpec& s);
nlohmann::json to_json(const SweepReport& r, const SensorLayout& layout);
nlohmann::json to_json(const SensorLayout& layout);
nlohmann::json to_json(const MetricStats& s);
nlohmann::json to_json(const ErrorStats& s);
nlohmann::json to_json(const LayerProfile& p);
nlohmann::json to_json(const CrlbComparison& c);
nlohmann::json to_json(const PlacementResult& r);
nlohmann::json to_json(const RunManifest& m);

void write_json(const nlohmann::json& doc, const std::string& path);

}  // namespace magfim
