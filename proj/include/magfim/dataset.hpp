#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "magfim/dipole.hpp"
#include "magfim/geometry.hpp"
#include "magfim/observability.hpp"

namespace magfim {

enum class NoiseMode { None, Absolute, Relative };

/// Noise applied after clipping: absolute sigma in uT, or per-channel sigma as
/// a fraction of the (post-clip) signal magnitude.
struct NoiseSpec {
    NoiseMode mode = NoiseMode::None;
    double value = 0.0;  // sigma (uT) or fraction

    void validate() const;
    static NoiseSpec none() { return {NoiseMode::None, 0.0}; }
    static NoiseSpec absolute(double sigma) { return {NoiseMode::Absolute, sigma}; }
    static NoiseSpec relative(double fraction) { return {NoiseMode::Relative, fraction}; }
    /// Parse "none" | "absolute:SIGMA" | "relative:FRACTION".
    static NoiseSpec parse(const std::string& text);
    std::string to_string() const;
};

struct DatasetSpec {
    WorkspaceSpec workspace;
    SensorLayout layout;
    MagnetModel model;
    double b_clip = 1900.0;  // uT; +inf disables clipping
    NoiseSpec noise;
    std::size_t count = 0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct DatasetRecord {
    Pose5 pose;
    Eigen::Vector3d n;
    FieldVector fields;  // post-clip, post-noise; sat_mask reflects the clip event only
};

struct Dataset {
    std::vector<DatasetRecord> records;
    std::size_t n_resampled = 0;  // degenerate poses replaced deterministically
};

/// Pipeline per record: LHS pose -> clean field -> clip (mask) -> noise.
/// Deterministic given spec.seed, independent of evaluation order.
Dataset generate(const DatasetSpec& spec);

/// Apply the clip-then-noise pipeline to one pose with a per-record RNG stream.
DatasetRecord simulate_record(const Pose5& pose, const SensorLayout& layout, const MagnetModel& model,
                              double b_clip, const NoiseSpec& noise, std::uint64_t seed,
                              std::uint64_t record_index);

/// CSV: header, then px,py,pz,nx,ny,nz, per-sensor Bx,By,Bz, then 0/1 sat flags.
void write_csv(const std::vector<DatasetRecord>& records, const std::string& path);
std::vector<DatasetRecord> read_csv(const std::string& path);

/// Length-prefixed binary variant: magic "MAGD", version u16, N u16, count u64,
/// packed little-endian doubles in CSV field order.
void write_binary(const std::vector<DatasetRecord>& records, const std::string& path);
std::vector<DatasetRecord> read_binary(const std::string& path);

}  // namespace magfim
