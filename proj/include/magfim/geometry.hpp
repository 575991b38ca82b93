#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

namespace magfim {

/// Ordered set of triaxial magnetometer positions, meters.
struct SensorLayout {
    std::string name;
    std::vector<Eigen::Vector3d> positions;

    std::size_t size() const { return positions.size(); }

    /// Throws InvariantViolation on empty layouts, non-finite coordinates,
    /// or sensors closer than 1e-6 m to each other.
    void validate() const;
};

/// 4x4 grid over the 100x100 mm aperture, all sensors at z = 20 mm.
SensorLayout build_planar();

/// Same footprint; outer x-columns at z = 20 mm, inner x-columns at z = 0.
SensorLayout build_single_split();

/// Same footprint; outer x-columns at z = 20 mm, inner x-columns at z = 180 mm.
SensorLayout build_staggered_split();

/// Builder lookup by name ("planar" | "single-split" | "staggered"); throws
/// InvariantViolation on unknown names.
SensorLayout build_named(const std::string& name);

/// JSON geometry file: {"name": str, "positions_m": [[x,y,z], ...]}.
/// Coordinates are written as decimal strings at full double precision so the
/// round trip is bit-exact.
SensorLayout load_layout(const std::string& path);
void save_layout(const SensorLayout& layout, const std::string& path);

}  // namespace magfim
