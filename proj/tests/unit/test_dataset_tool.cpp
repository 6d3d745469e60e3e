// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <unistd.h>

#include "panosplat/dataset_tool.hpp"
#include "panosplat/image_io.hpp"
#include "panosplat/metrics.hpp"

using namespace panosplat;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name)
        : path(fs::temp_directory_path() / ("panosplat_" + name + "_" + std::to_string(::getpid()))) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

double mean(const Image& img) {
    double s = 0.0;
    for (double v : img.data()) s += v;
    return s / static_cast<double>(img.size());
}

// One shared 41-frame box_room sample at H = 64 keeps the suite fast.
const fs::path& box_sample() {
    static TempDir dir("dataset_box");
    static const GenerateResult result =
        generate_pair(synth_fixture_scene(FixtureKind::BoxRoom, 3), ErpGrid(64, 128), dir.path / "s");
    REQUIRE(result.written);
    static const fs::path path = dir.path / "s";
    return path;
}

}  // namespace

TEST_CASE("fixture kinds round trip through their names") {
    for (FixtureKind k : {FixtureKind::BoxRoom, FixtureKind::Corridor, FixtureKind::Cluttered})
        CHECK(parse_fixture_kind(fixture_name(k)) == k);
    CHECK_THROWS_AS(parse_fixture_kind("atrium"), Error);
}

TEST_CASE("fixtures are deterministic per seed") {
    for (FixtureKind k : {FixtureKind::BoxRoom, FixtureKind::Corridor, FixtureKind::Cluttered}) {
        const SceneSpec a = synth_fixture_scene(k, 11);
        const SceneSpec b = synth_fixture_scene(k, 11);
        CHECK(serialize(a.gt_scene) == serialize(b.gt_scene));
        CHECK(a.room_bounds.min == b.room_bounds.min);
        CHECK(a.room_bounds.max == b.room_bounds.max);
        CHECK_FALSE(synth_fixture_scene(k, 12).gt_scene == a.gt_scene);
    }
}

TEST_CASE("fixture rooms sit between the floor and ceiling planes") {
    const SceneSpec s = synth_fixture_scene(FixtureKind::Cluttered, 5);
    CHECK(s.room_bounds.min.y() == kFloorY);
    CHECK(s.room_bounds.max.y() == kCeilingY);
    for (const Gaussian& g : s.gt_scene.gaussians)
        for (int a = 0; a < 3; ++a) {
            CHECK(g.mu[a] >= s.room_bounds.min[a] - 1e-5);
            CHECK(g.mu[a] <= s.room_bounds.max[a] + 1e-5);
        }
    // furniture adds Gaussians on top of the same shell
    CHECK(s.gt_scene.size() > synth_fixture_scene(FixtureKind::BoxRoom, 5).gt_scene.size());
}

TEST_CASE("every fixture passes the closed-room check") {
    for (FixtureKind k : {FixtureKind::BoxRoom, FixtureKind::Corridor, FixtureKind::Cluttered}) {
        const SceneSpec s = synth_fixture_scene(k, 2);
        CAPTURE(fixture_name(k));
        CHECK(is_closed_room(s));
        CHECK(closed_room_fraction(s.gt_scene, ErpGrid(32, 64)) >= kClosedRoomFraction);
    }
    // an open fixture: only the floor sheet survives
    SceneSpec open = synth_fixture_scene(FixtureKind::BoxRoom, 2);
    std::erase_if(open.gt_scene.gaussians, [](const Gaussian& g) { return g.mu[1] > kFloorY + 1e-4; });
    CHECK_FALSE(is_closed_room(open));
}

TEST_CASE("scene spec validation") {
    SceneSpec s = synth_fixture_scene(FixtureKind::BoxRoom, 1);
    CHECK_NOTHROW(s.validate());
    SceneSpec empty = s;
    empty.gt_scene.gaussians.clear();
    CHECK_THROWS_AS(empty.validate(), Error);
    SceneSpec outside = s;
    outside.room_bounds.min.x() = 0.5;
    CHECK_THROWS_AS(outside.validate(), Error);
}

TEST_CASE("corridor trajectory follows the long axis") {
    TempDir dir("dataset_corridor");
    DatasetOptions opt;
    opt.n_frames = 1;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const SceneSpec s = synth_fixture_scene(FixtureKind::Corridor, seed);
        const GenerateResult r = generate_pair(s, ErpGrid(64, 128), dir.path / std::to_string(seed), opt);
        REQUIRE(r.written);
        const Eigen::Vector2d d = r.trajectory.end - r.trajectory.start;
        CAPTURE(seed);
        CHECK(std::abs(d.x()) / d.norm() > std::cos(15.0 * std::numbers::pi / 180.0));
        // anchors reach within clearance + one lattice step of both end walls
        const double hx = s.room_bounds.max.x();
        CHECK(d.norm() >= 2.0 * (hx - opt.nav.clearance - opt.nav.cell_size - opt.anchor_spacing));
        CHECK(d.norm() <= 2.0 * hx);
    }
}

TEST_CASE("box room sample passes verify") {
    const fs::path& dir = box_sample();
    const VerifyReport report = verify_sample(dir);
    for (const auto& p : report.problems) MESSAGE(p);
    CHECK(report.ok());

    const SampleManifest m = read_manifest(dir / "manifest.json");
    CHECK(m.n_frames == 41);
    CHECK(m.height == 64);
    CHECK(m.width == 128);
    CHECK(m.gt.size() == 41);
    CHECK(m.fps == 10.0);
    CHECK(m.speed == 1.0);
    CHECK(m.camera_height == 1.6);
    CHECK(m.gt[7] == "gt/00007.png");
    CHECK(slurp(dir / "anchor.png") == slurp(dir / "gt/00000.png"));
}

TEST_CASE("GT and degraded pose files are bit-identical") {
    const fs::path& dir = box_sample();
    const std::string traj = slurp(dir / "trajectory.txt");
    CHECK_FALSE(traj.empty());
    CHECK(slurp(dir / "gt/poses.txt") == traj);
    CHECK(slurp(dir / "degraded/poses.txt") == traj);
    const auto poses = load_poses(dir / "trajectory.txt");
    REQUIRE(poses.size() == 41);
    for (const auto& p : poses) CHECK(p.position.y() == 0.0);
    // 1 m/s at 10 fps
    CHECK((poses[1].position - poses[0].position).norm() == doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("degraded frame 0 alpha is full on valid depth") {
    const fs::path& dir = box_sample();
    const Image depth0 = read_pfm(dir / "depth0.pfm");
    const Image alpha0 = read_png(dir / "alpha/00000.png");
    REQUIRE(alpha0.same_shape(depth0));
    std::size_t valid = 0, full = 0;
    for (std::size_t i = 0; i < depth0.size(); ++i) {
        if (!(depth0.data()[i] > 0.0)) continue;
        ++valid;
        if (alpha0.data()[i] == 1.0) ++full;
    }
    CHECK(valid == depth0.size());
    CHECK(full == valid);
}

TEST_CASE("mean degraded alpha does not increase along the box room trajectory") {
    const fs::path& dir = box_sample();
    std::vector<double> alpha;
    for (int k = 0; k < 41; ++k) {
        char name[32];
        std::snprintf(name, sizeof name, "alpha/%05d.png", k);
        alpha.push_back(mean(read_png(dir / name)));
    }
    // Frame to frame the mean wobbles by a few thousandths near the far corner,
    // where the lifted sphere lattice aliases against the render grid. Half a
    // meter apart the decrease is strict.
    constexpr std::size_t lag = 5;
    for (std::size_t k = 1; k < alpha.size(); ++k) {
        CAPTURE(k);
        CHECK(alpha[k] <= alpha[k - 1] + 0.01);
        if (k >= lag) CHECK(alpha[k] < alpha[k - lag]);
    }
    CHECK(alpha.back() < alpha.front() - 0.05);
}

TEST_CASE("single-frame sample reproduces GT frame 0") {
    TempDir dir("dataset_single");
    DatasetOptions opt;
    opt.n_frames = 1;
    const ErpGrid grid(128, 256);
    const GenerateResult r = generate_pair(synth_fixture_scene(FixtureKind::BoxRoom, 4), grid, dir.path, opt);
    REQUIRE(r.written);
    CHECK(verify_sample(dir.path).ok());
    const Image gt = read_png(dir.path / "gt/00000.png");
    const Image deg = read_png(dir.path / "degraded/00000.png");
    const Image alpha = read_png(dir.path / "alpha/00000.png");
    CHECK(ws_psnr(deg, gt, grid) >= 30.0);
    CHECK(mean(alpha) == 1.0);
    CHECK_FALSE(fs::exists(dir.path / "gt/00001.png"));
}

TEST_CASE("a blocked navigation map skips the sample") {
    TempDir dir("dataset_skip");
    DatasetOptions opt;
    opt.nav.clearance = 10.0;
    const GenerateResult r =
        generate_pair(synth_fixture_scene(FixtureKind::BoxRoom, 1), ErpGrid(32, 64), dir.path / "s", opt);
    CHECK_FALSE(r.written);
    CHECK(r.skip_reason.find("navigable") != std::string::npos);
    CHECK_FALSE(fs::exists(dir.path / "s"));
}

TEST_CASE("verify reports damaged samples") {
    TempDir dir("dataset_damage");
    DatasetOptions opt;
    opt.n_frames = 3;
    const ErpGrid grid(32, 64);
    auto fresh = [&](const std::string& name) {
        const fs::path p = dir.path / name;
        REQUIRE(generate_pair(synth_fixture_scene(FixtureKind::BoxRoom, 9), grid, p, opt).written);
        REQUIRE(verify_sample(p).ok());
        return p;
    };
    auto mentions = [](const VerifyReport& r, const std::string& needle) {
        for (const auto& p : r.problems)
            if (p.find(needle) != std::string::npos) return true;
        return false;
    };

    const fs::path missing = fresh("missing");
    fs::remove(missing / "degraded/00002.png");
    CHECK(mentions(verify_sample(missing), "degraded/00002.png"));

    const fs::path poses = fresh("poses");
    {
        std::ofstream out(poses / "degraded/poses.txt", std::ios::app);
        out << "\n";
    }
    CHECK(mentions(verify_sample(poses), "degraded/poses.txt"));

    const fs::path alpha = fresh("alpha");
    Image a = read_png(alpha / "alpha/00000.png");
    a.at(5, 5) = 0.0;
    write_png(alpha / "alpha/00000.png", a);
    CHECK(mentions(verify_sample(alpha), "alpha below 1"));

    const fs::path shape = fresh("shape");
    write_png(shape / "gt/00001.png", Image(16, 32, 3));
    CHECK(mentions(verify_sample(shape), "gt/00001.png"));

    const fs::path count = fresh("count");
    SampleManifest m = read_manifest(count / "manifest.json");
    m.n_frames = 4;
    write_manifest(count / "manifest.json", m);
    CHECK(mentions(verify_sample(count), "files listed"));

    const fs::path broken = fresh("broken");
    {
        std::ofstream out(broken / "manifest.json");
        out << "{\"schema_version\": 1";
    }
    CHECK(mentions(verify_sample(broken), "manifest"));
    CHECK_THROWS_AS(read_manifest(broken / "manifest.json"), Error);
}

TEST_CASE("manifest round trip") {
    SampleManifest m;
    m.height = 8;
    m.width = 16;
    m.n_frames = 2;
    m.seed = 0xFFFFFFFFFFFFull;
    m.start = {-1.5, 0.25};
    m.end = {2.0, -0.75};
    m.gt = {"gt/00000.png", "gt/00001.png"};
    m.degraded = {"degraded/00000.png", "degraded/00001.png"};
    m.alpha = {"alpha/00000.png", "alpha/00001.png"};
    m.pose_files = {"gt/poses.txt"};
    TempDir dir("dataset_manifest");
    write_manifest(dir.path / "manifest.json", m);
    const SampleManifest r = read_manifest(dir.path / "manifest.json");
    CHECK(r.height == 8);
    CHECK(r.width == 16);
    CHECK(r.seed == m.seed);
    CHECK(r.start == m.start);
    CHECK(r.end == m.end);
    CHECK(r.gt == m.gt);
    CHECK(r.degraded == m.degraded);
    CHECK(r.alpha == m.alpha);
    CHECK(r.pose_files == m.pose_files);
    CHECK(r.trajectory == "trajectory.txt");
}

TEST_CASE("parallel dataset generation matches per-sample generation") {
    TempDir dir("dataset_batch");
    DatasetOptions opt;
    opt.n_frames = 2;
    const ErpGrid grid(32, 64);
    const std::vector<SceneSpec> specs = {synth_fixture_scene(FixtureKind::BoxRoom, 1),
                                          synth_fixture_scene(FixtureKind::Cluttered, 2)};
    const auto results = generate_dataset(specs, grid, dir.path / "batch", opt);
    REQUIRE(results.size() == 2);
    REQUIRE(generate_pair(specs[1], grid, dir.path / "single", opt).written);
    for (const char* f : {"manifest.json", "gt/00001.png", "degraded/00001.png", "alpha/00001.png", "depth0.pfm"})
        CHECK(slurp(dir.path / "batch/sample_00001" / f) == slurp(dir.path / "single" / f));
    CHECK(verify_sample(dir.path / "batch/sample_00000").ok());
}
