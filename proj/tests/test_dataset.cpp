#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "magfim/dataset.hpp"
#include "magfim/errors.hpp"

using namespace magfim;

namespace {

DatasetSpec base_spec(std::size_t count, std::uint64_t seed = 0) {
    DatasetSpec spec;
    spec.workspace.z_min = 0.045;
    spec.workspace.z_max = 0.155;
    spec.layout = build_staggered_split();
    spec.count = count;
    spec.seed = seed;
    return spec;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return s;
}

}  // namespace

TEST_CASE("identity pipeline: no noise, no clipping") {
    DatasetSpec spec = base_spec(50);
    spec.b_clip = std::numeric_limits<double>::infinity();
    const Dataset ds = generate(spec);
    REQUIRE(ds.records.size() == 50);
    CHECK(ds.n_resampled == 0);
    for (const auto& rec : ds.records) {
        const FieldVector clean = field_array(rec.pose, spec.layout, spec.model);
        CHECK((rec.fields.b - clean.b).norm() == 0.0);
        for (auto m : rec.fields.sat_mask) CHECK(m == 0);
        CHECK((rec.n - orientation_from_angles(rec.pose.psi, rec.pose.theta)).norm() == 0.0);
    }
}

TEST_CASE("near-field poses saturate channels at the 1900 uT clip") {
    // magnet 30 mm below an inner top-layer sensor of the staggered layout
    const SensorLayout layout = build_staggered_split();
    const Pose5 pose({0.050 / 3.0, 0.050 / 3.0, 0.150}, 0.0, 0.0);
    const DatasetRecord rec = simulate_record(pose, layout, MagnetModel{}, 1900.0, NoiseSpec::none(), 0, 0);
    int masked = 0;
    for (std::size_t c = 0; c < rec.fields.sat_mask.size(); ++c) {
        if (rec.fields.sat_mask[c]) {
            ++masked;
            CHECK(std::abs(rec.fields.b[static_cast<Eigen::Index>(c)]) == 1900.0);
        } else {
            CHECK(std::abs(rec.fields.b[static_cast<Eigen::Index>(c)]) <= 1900.0);
        }
    }
    CHECK(masked >= 1);
    // direct field check: the on-axis channel exceeds the threshold before the clip
    const FieldVector clean = field_array(pose, layout, MagnetModel{});
    CHECK(clean.b.cwiseAbs().maxCoeff() > 1900.0);
}

TEST_CASE("relative noise matches the 2% convention statistically") {
    DatasetSpec spec = base_spec(20000, 4);
    spec.b_clip = std::numeric_limits<double>::infinity();
    spec.noise = NoiseSpec::relative(0.02);
    const Dataset ds = generate(spec);
    double sum_sq = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        const FieldVector clean = field_array(ds.records[i].pose, spec.layout, spec.model);
        for (Eigen::Index c = 0; c < clean.b.size(); ++c) {
            if (std::abs(clean.b[c]) < 1e-6) continue;
            const double rel = (ds.records[i].fields.b[c] - clean.b[c]) / std::abs(clean.b[c]);
            sum_sq += rel * rel;
            ++n;
        }
    }
    CHECK(sum_sq / static_cast<double>(n) == doctest::Approx(4e-4).epsilon(0.05));
}

TEST_CASE("generation is deterministic per seed") {
    const DatasetSpec spec = base_spec(64, 9);
    const Dataset a = generate(spec);
    const Dataset b = generate(spec);
    for (std::size_t i = 0; i < a.records.size(); ++i)
        CHECK((a.records[i].fields.b - b.records[i].fields.b).norm() == 0.0);

    write_csv(a.records, "ds_a.csv");
    write_csv(b.records, "ds_b.csv");
    CHECK(slurp("ds_a.csv") == slurp("ds_b.csv"));  // byte identical
    std::remove("ds_a.csv");
    std::remove("ds_b.csv");
}

TEST_CASE("CSV round trip and schema") {
    DatasetSpec spec = base_spec(100, 2);
    spec.noise = NoiseSpec::absolute(10.0);
    const Dataset ds = generate(spec);
    write_csv(ds.records, "ds_rt.csv");

    {
        std::ifstream in("ds_rt.csv");
        std::string header;
        std::getline(in, header);
        CHECK(std::count(header.begin(), header.end(), ',') + 1 == 6 + 6 * 16);
    }

    const auto loaded = read_csv("ds_rt.csv");
    REQUIRE(loaded.size() == ds.records.size());
    double max_dev = 0.0;
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        max_dev = std::max(max_dev, (loaded[i].fields.b - ds.records[i].fields.b).cwiseAbs().maxCoeff());
        max_dev = std::max(max_dev, (loaded[i].pose.p - ds.records[i].pose.p).cwiseAbs().maxCoeff());
        CHECK(loaded[i].fields.sat_mask == ds.records[i].fields.sat_mask);
    }
    CHECK(max_dev < 1e-12);
    std::remove("ds_rt.csv");
}

TEST_CASE("truncated CSV rows are reported with their location") {
    {
        std::ofstream out("ds_trunc.csv");
        out << "px,py,pz,nx,ny,nz,s0_bx,s0_by,s0_bz,s0_sat_x,s0_sat_y,s0_sat_z\n";
        out << "0,0,0.1,0,0,1,1,2,3,0,0,0\n";
        out << "0,0,0.1,0,0\n";
    }
    CHECK_THROWS_WITH_AS(read_csv("ds_trunc.csv"), doctest::Contains("row 3"), ParseError);
    std::remove("ds_trunc.csv");
}

TEST_CASE("binary variant round-trips") {
    DatasetSpec spec = base_spec(40, 6);
    spec.noise = NoiseSpec::absolute(5.0);
    const Dataset ds = generate(spec);
    write_binary(ds.records, "ds.magd");
    const auto loaded = read_binary("ds.magd");
    REQUIRE(loaded.size() == ds.records.size());
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        CHECK((loaded[i].fields.b - ds.records[i].fields.b).norm() == 0.0);
        CHECK(loaded[i].fields.sat_mask == ds.records[i].fields.sat_mask);
        CHECK(loaded[i].pose.p == ds.records[i].pose.p);
    }
    std::remove("ds.magd");
}

TEST_CASE("noise spec parsing") {
    CHECK(NoiseSpec::parse("none").mode == NoiseMode::None);
    CHECK(NoiseSpec::parse("absolute:10").value == 10.0);
    CHECK(NoiseSpec::parse("relative:0.02").value == 0.02);
    CHECK_THROWS_AS(NoiseSpec::parse("gaussian:1"), ParseError);
    CHECK_THROWS_AS(NoiseSpec::parse("relative:abc"), ParseError);
    CHECK_THROWS_AS(NoiseSpec::relative(1.5).validate(), InvariantViolation);
}
