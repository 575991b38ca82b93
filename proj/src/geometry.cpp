#include "magfim/geometry.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "magfim/errors.hpp"

namespace magfim {

namespace {

constexpr double kHalfAperture = 0.050;  // 100 x 100 mm footprint
constexpr double kZLow = 0.020;
constexpr double kZHigh = 0.180;

const std::array<double, 4> kGridCoords = {
    -kHalfAperture, -kHalfAperture / 3.0, kHalfAperture / 3.0, kHalfAperture};

bool is_outer_column(int ix) { return ix == 0 || ix == 3; }

SensorLayout build_grid(const std::string& name, double z_outer, double z_inner) {
    SensorLayout layout;
    layout.name = name;
    layout.positions.reserve(16);
    for (int ix = 0; ix < 4; ++ix) {
        for (int iy = 0; iy < 4; ++iy) {
            const double z = is_outer_column(ix) ? z_outer : z_inner;
            layout.positions.emplace_back(kGridCoords[ix], kGridCoords[iy], z);
        }
    }
    return layout;
}

}  // namespace

void SensorLayout::validate() const {
    if (positions.empty()) throw InvariantViolation("layout '" + name + "': no sensors");
    for (std::size_t i = 0; i < positions.size(); ++i) {
        if (!positions[i].allFinite())
            throw InvariantViolation("layout '" + name + "': non-finite sensor " + std::to_string(i));
        for (std::size_t j = 0; j < i; ++j) {
            if ((positions[i] - positions[j]).norm() < 1e-6)
                throw InvariantViolation("layout '" + name + "': sensors " + std::to_string(j) + " and " +
                                         std::to_string(i) + " coincide");
        }
    }
}

SensorLayout build_planar() { return build_grid("planar", kZLow, kZLow); }

SensorLayout build_single_split() { return build_grid("single-split", kZLow, 0.0); }

SensorLayout build_staggered_split() { return build_grid("staggered", kZLow, kZHigh); }

SensorLayout build_named(const std::string& name) {
    if (name == "planar") return build_planar();
    if (name == "single-split") return build_single_split();
    if (name == "staggered") return build_staggered_split();
    throw InvariantViolation("unknown layout name '" + name + "' (expected planar|single-split|staggered)");
}

SensorLayout load_layout(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open layout file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("layout '" + path + "': " + e.what());
    }
    SensorLayout layout;
    try {
        layout.name = doc.at("name").get<std::string>();
        for (const auto& row : doc.at("positions_m")) {
            if (!row.is_array() || row.size() != 3)
                throw ParseError("layout '" + path + "': each position must be [x, y, z]");
            layout.positions.emplace_back(row[0].get<double>(), row[1].get<double>(), row[2].get<double>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("layout '" + path + "': " + e.what());
    }
    layout.validate();
    return layout;
}

void save_layout(const SensorLayout& layout, const std::string& path) {
    layout.validate();
    std::ofstream out(path);
    if (!out) throw IoError("cannot write layout file: " + path);
    // Write coordinates by hand at 17 significant digits so load/save round-trips exactly.
    out << "{\n  \"name\": " << nlohmann::json(layout.name).dump() << ",\n  \"positions_m\": [\n";
    char buf[96];
    for (std::size_t i = 0; i < layout.positions.size(); ++i) {
        const auto& p = layout.positions[i];
        std::snprintf(buf, sizeof(buf), "    [%.17g, %.17g, %.17g]%s\n", p.x(), p.y(), p.z(),
                      i + 1 < layout.positions.size() ? "," : "");
        out << buf;
    }
    out << "  ]\n}\n";
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace magfim
