#include "magfim/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "magfim/errors.hpp"
#include "magfim/rng.hpp"

namespace magfim {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

bool pose_degenerate(const Pose5& pose, const SensorLayout& layout) {
    for (const auto& r : layout.positions)
        if ((r - pose.p).norm() <= kDegenerateDistance) return true;
    return false;
}

}  // namespace

void NoiseSpec::validate() const {
    if (mode == NoiseMode::Absolute && !(value > 0.0))
        throw InvariantViolation("NoiseSpec: absolute sigma must be positive");
    if (mode == NoiseMode::Relative && !(value >= 0.0 && value < 1.0))
        throw InvariantViolation("NoiseSpec: relative fraction must be in [0, 1)");
}

NoiseSpec NoiseSpec::parse(const std::string& text) {
    if (text == "none") return none();
    const auto colon = text.find(':');
    if (colon != std::string::npos) {
        const std::string kind = text.substr(0, colon);
        const std::string arg = text.substr(colon + 1);
        try {
            if (kind == "absolute") return absolute(std::stod(arg));
            if (kind == "relative") return relative(std::stod(arg));
        } catch (const std::exception&) {
            throw ParseError("noise spec: bad number in '" + text + "'");
        }
    }
    throw ParseError("noise spec: expected none|absolute:SIGMA|relative:FRACTION, got '" + text + "'");
}

std::string NoiseSpec::to_string() const {
    char buf[48];
    switch (mode) {
        case NoiseMode::None: return "none";
        case NoiseMode::Absolute: std::snprintf(buf, sizeof(buf), "absolute:%g", value); return buf;
        case NoiseMode::Relative: std::snprintf(buf, sizeof(buf), "relative:%g", value); return buf;
    }
    return "none";
}

void DatasetSpec::validate() const {
    workspace.validate();
    layout.validate();
    noise.validate();
    if (count < 1) throw InvariantViolation("DatasetSpec: count must be >= 1");
    if (!(b_clip > 0.0)) throw InvariantViolation("DatasetSpec: b_clip must be positive");
    if (!(model.b_t > 0.0)) throw InvariantViolation("DatasetSpec: b_t must be positive");
}

DatasetRecord simulate_record(const Pose5& pose, const SensorLayout& layout, const MagnetModel& model,
                              double b_clip, const NoiseSpec& noise, std::uint64_t seed,
                              std::uint64_t record_index) {
    DatasetRecord rec;
    rec.pose = pose;
    rec.n = orientation_from_angles(pose.psi, pose.theta);
    FieldVector clean = field_array(pose, layout, model);
    rec.fields = std::isfinite(b_clip) ? saturate(clean, b_clip) : clean;
    if (noise.mode != NoiseMode::None && noise.value > 0.0) {
        std::mt19937_64 rng = make_engine(seed, record_index, 0xA07);
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (Eigen::Index c = 0; c < rec.fields.b.size(); ++c) {
            const double sigma = noise.mode == NoiseMode::Absolute
                                     ? noise.value
                                     : noise.value * std::abs(rec.fields.b[c]);
            rec.fields.b[c] += sigma * gauss(rng);
        }
    }
    return rec;
}

Dataset generate(const DatasetSpec& spec) {
    spec.validate();
    WorkspaceSpec ws = spec.workspace;
    ws.n_samples = spec.count;
    ws.seed = spec.seed;
    std::vector<Pose5> poses = lhs_sample(ws);

    Dataset ds;
    ds.records.resize(spec.count);
    for (std::size_t i = 0; i < spec.count; ++i) {
        Pose5 pose = poses[i];
        std::uint64_t attempt = 0;
        while (pose_degenerate(pose, spec.layout)) {
            // deterministic uniform redraw keyed by (seed, index, attempt)
            std::mt19937_64 rng = make_engine(spec.seed, i, 0xF00D + attempt);
            std::uniform_real_distribution<double> ux(ws.x_min, ws.x_max), uy(ws.y_min, ws.y_max),
                uz(ws.z_min, ws.z_max), upsi(0.0, kTwoPi),
                uct(-std::cos(ws.theta_margin), std::cos(ws.theta_margin));
            pose = Pose5({ux(rng), uy(rng), uz(rng)}, upsi(rng), std::acos(std::clamp(uct(rng), -1.0, 1.0)));
            ++attempt;
            ++ds.n_resampled;
        }
        ds.records[i] = simulate_record(pose, spec.layout, spec.model, spec.b_clip, spec.noise,
                                        spec.seed, i);
    }
    return ds;
}

namespace {

void write_header(std::ostream& out, std::size_t n_sensors) {
    out << "px,py,pz,nx,ny,nz";
    for (std::size_t s = 0; s < n_sensors; ++s)
        out << ",s" << s << "_bx,s" << s << "_by,s" << s << "_bz";
    for (std::size_t s = 0; s < n_sensors; ++s)
        out << ",s" << s << "_sat_x,s" << s << "_sat_y,s" << s << "_sat_z";
    out << "\n";
}

}  // namespace

void write_csv(const std::vector<DatasetRecord>& records, const std::string& path) {
    if (records.empty()) throw InvariantViolation("write_csv: no records");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write dataset: " + path);
    const std::size_t n_sensors = records[0].fields.channels() / 3;
    write_header(out, n_sensors);
    char buf[32];
    auto put = [&](double v, char sep) {
        std::snprintf(buf, sizeof(buf), "%.17g%c", v, sep);
        out << buf;
    };
    for (const auto& rec : records) {
        put(rec.pose.p.x(), ','); put(rec.pose.p.y(), ','); put(rec.pose.p.z(), ',');
        put(rec.n.x(), ','); put(rec.n.y(), ','); put(rec.n.z(), ',');
        for (Eigen::Index c = 0; c < rec.fields.b.size(); ++c) put(rec.fields.b[c], ',');
        for (std::size_t c = 0; c < rec.fields.sat_mask.size(); ++c)
            out << int(rec.fields.sat_mask[c]) << (c + 1 < rec.fields.sat_mask.size() ? ',' : '\n');
    }
    if (!out) throw IoError("write failed: " + path);
}

std::vector<DatasetRecord> read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": missing header");
    const std::size_t n_cols = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
    if (n_cols < 12 || (n_cols - 6) % 6 != 0)
        throw ParseError(path + ": header has " + std::to_string(n_cols) + " columns, expected 6 + 6N");
    const std::size_t n_sensors = (n_cols - 6) / 6;

    std::vector<DatasetRecord> records;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::vector<double> vals;
        vals.reserve(n_cols);
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                vals.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ParseError(path + ": row " + std::to_string(row) + ", column " +
                                 std::to_string(vals.size() + 1) + ": bad number '" + cell + "'");
            }
        }
        if (vals.size() != n_cols)
            throw ParseError(path + ": row " + std::to_string(row) + " has " + std::to_string(vals.size()) +
                             " columns, expected " + std::to_string(n_cols));
        DatasetRecord rec;
        double psi, theta;
        rec.n = Eigen::Vector3d(vals[3], vals[4], vals[5]);
        angles_from_orientation(rec.n.normalized(), psi, theta);
        rec.pose = Pose5({vals[0], vals[1], vals[2]}, psi, theta);
        rec.fields.b.resize(3 * static_cast<Eigen::Index>(n_sensors));
        rec.fields.sat_mask.resize(3 * n_sensors);
        for (std::size_t c = 0; c < 3 * n_sensors; ++c) {
            rec.fields.b[static_cast<Eigen::Index>(c)] = vals[6 + c];
            rec.fields.sat_mask[c] = vals[6 + 3 * n_sensors + c] != 0.0 ? 1 : 0;
        }
        records.push_back(std::move(rec));
    }
    return records;
}

void write_binary(const std::vector<DatasetRecord>& records, const std::string& path) {
    if (records.empty()) throw InvariantViolation("write_binary: no records");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write dataset: " + path);
    const std::uint16_t version = 1;
    const std::uint16_t n_sensors = static_cast<std::uint16_t>(records[0].fields.channels() / 3);
    const std::uint64_t count = records.size();
    out.write("MAGD", 4);
    out.write(reinterpret_cast<const char*>(&version), 2);
    out.write(reinterpret_cast<const char*>(&n_sensors), 2);
    out.write(reinterpret_cast<const char*>(&count), 8);
    auto put = [&](double v) { out.write(reinterpret_cast<const char*>(&v), 8); };
    for (const auto& rec : records) {
        put(rec.pose.p.x()); put(rec.pose.p.y()); put(rec.pose.p.z());
        put(rec.n.x()); put(rec.n.y()); put(rec.n.z());
        for (Eigen::Index c = 0; c < rec.fields.b.size(); ++c) put(rec.fields.b[c]);
        for (std::size_t c = 0; c < rec.fields.sat_mask.size(); ++c) put(double(rec.fields.sat_mask[c]));
    }
    if (!out) throw IoError("write failed: " + path);
}

std::vector<DatasetRecord> read_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset: " + path);
    char magic[4];
    std::uint16_t version = 0, n_sensors = 0;
    std::uint64_t count = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), 2);
    in.read(reinterpret_cast<char*>(&n_sensors), 2);
    in.read(reinterpret_cast<char*>(&count), 8);
    if (!in || std::memcmp(magic, "MAGD", 4) != 0) throw ParseError(path + ": bad magic");
    if (version != 1) throw ParseError(path + ": unsupported version");
    std::vector<DatasetRecord> records(count);
    auto get = [&]() {
        double v;
        in.read(reinterpret_cast<char*>(&v), 8);
        return v;
    };
    for (auto& rec : records) {
        Eigen::Vector3d p, n;
        for (int k = 0; k < 3; ++k) p[k] = get();
        for (int k = 0; k < 3; ++k) n[k] = get();
        rec.n = n;
        double psi, theta;
        angles_from_orientation(rec.n.normalized(), psi, theta);
        rec.pose = Pose5(p, psi, theta);
        rec.fields.b.resize(3 * static_cast<Eigen::Index>(n_sensors));
        rec.fields.sat_mask.resize(3 * static_cast<std::size_t>(n_sensors));
        for (Eigen::Index c = 0; c < rec.fields.b.size(); ++c) rec.fields.b[c] = get();
        for (std::size_t c = 0; c < rec.fields.sat_mask.size(); ++c) rec.fields.sat_mask[c] = get() != 0.0;
        if (!in) throw ParseError(path + ": truncated record");
    }
    return records;
}

}  // namespace magfim
