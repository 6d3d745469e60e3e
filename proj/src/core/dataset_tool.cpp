// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "panosplat/dataset_tool.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "panosplat/error.hpp"
#include "panosplat/image_io.hpp"
#include "panosplat/panorama.hpp"
#include "panosplat/parallel.hpp"
#include "panosplat/restorer.hpp"

namespace panosplat {

namespace fs = std::filesystem;

namespace {

constexpr double kSheetSigma = 0.8;

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * unit_uniform(rng); }

// Smooth color field: base color plus two low-frequency plane waves per channel.
struct Texture {
    Eigen::Vector3d base;
    std::array<Eigen::Vector3d, 2> freq;
    std::array<Eigen::Vector3d, 2> phase;
    double amplitude = 0.1;

    static Texture random(std::mt19937_64& rng) {
        Texture t;
        t.base = {uniform(rng, 0.35, 0.65), uniform(rng, 0.35, 0.65), uniform(rng, 0.35, 0.65)};
        for (int k = 0; k < 2; ++k) {
            const double theta = uniform(rng, 0.0, 2.0 * std::numbers::pi);
            const double elev = uniform(rng, -0.5, 0.5);
            const double f = uniform(rng, 0.2, 0.5) * 2.0 * std::numbers::pi;
            t.freq[k] = f * Eigen::Vector3d(std::cos(elev) * std::cos(theta), std::sin(elev),
                                            std::cos(elev) * std::sin(theta));
            t.phase[k] = {uniform(rng, 0.0, 6.3), uniform(rng, 0.0, 6.3), uniform(rng, 0.0, 6.3)};
        }
        return t;
    }

    std::array<float, 3> at(const Eigen::Vector3d& p) const {
        std::array<float, 3> c{};
        for (int ch = 0; ch < 3; ++ch) {
            double v = base[ch];
            for (int k = 0; k < 2; ++k) v += amplitude * std::sin(freq[k].dot(p) + phase[k][ch]);
            c[ch] = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
        return c;
    }
};

// Axis-aligned rectangle with constant coordinate `level` on axis `normal`.
// u and v are the two in-plane axes.
void add_sheet(GaussianScene& scene, int normal, double level, double u0, double u1, double v0, double v1,
               double spacing, const Texture& tex) {
    const int u_axis = normal == 0 ? 1 : 0;
    const int v_axis = normal == 2 ? 1 : 2;
    const int nu = std::max(1, static_cast<int>(std::ceil((u1 - u0) / spacing))) + 1;
    const int nv = std::max(1, static_cast<int>(std::ceil((v1 - v0) / spacing))) + 1;
    const float in_plane = static_cast<float>(std::log(kSheetSigma * spacing));
    const float thin = static_cast<float>(std::log(0.05 * spacing));
    const float opacity = static_cast<float>(logit(0.99));
    for (int i = 0; i < nu; ++i) {
        for (int j = 0; j < nv; ++j) {
            Eigen::Vector3d p;
            p[normal] = level;
            p[u_axis] = u0 + (u1 - u0) * i / (nu - 1);
            p[v_axis] = v0 + (v1 - v0) * j / (nv - 1);
            Gaussian g;
            g.mu = {static_cast<float>(p.x()), static_cast<float>(p.y()), static_cast<float>(p.z())};
            g.log_scale = {in_plane, in_plane, in_plane};
            g.log_scale[normal] = thin;
            g.opacity_logit = opacity;
            g.color = tex.at(p);
            scene.gaussians.push_back(g);
        }
    }
}

void add_box(GaussianScene& scene, const Eigen::Vector3d& lo, const Eigen::Vector3d& hi, double spacing,
             const Texture& tex) {
    add_sheet(scene, 1, hi.y(), lo.x(), hi.x(), lo.z(), hi.z(), spacing, tex);
    add_sheet(scene, 0, lo.x(), lo.y(), hi.y(), lo.z(), hi.z(), spacing, tex);
    add_sheet(scene, 0, hi.x(), lo.y(), hi.y(), lo.z(), hi.z(), spacing, tex);
    add_sheet(scene, 2, lo.z(), lo.x(), hi.x(), lo.y(), hi.y(), spacing, tex);
    add_sheet(scene, 2, hi.z(), lo.x(), hi.x(), lo.y(), hi.y(), spacing, tex);
}

void add_room_shell(GaussianScene& scene, const RoomBounds& b, double spacing, std::mt19937_64& rng) {
    const Texture floor = Texture::random(rng);
    const Texture ceiling = Texture::random(rng);
    const Texture walls = Texture::random(rng);
    add_sheet(scene, 1, b.min.y(), b.min.x(), b.max.x(), b.min.z(), b.max.z(), spacing, floor);
    add_sheet(scene, 1, b.max.y(), b.min.x(), b.max.x(), b.min.z(), b.max.z(), spacing, ceiling);
    add_sheet(scene, 0, b.min.x(), b.min.y(), b.max.y(), b.min.z(), b.max.z(), spacing, walls);
    add_sheet(scene, 0, b.max.x(), b.min.y(), b.max.y(), b.min.z(), b.max.z(), spacing, walls);
    add_sheet(scene, 2, b.min.z(), b.min.x(), b.max.x(), b.min.y(), b.max.y(), spacing, walls);
    add_sheet(scene, 2, b.max.z(), b.min.x(), b.max.x(), b.min.y(), b.max.y(), spacing, walls);
}

std::string frame_name(const char* dir, int k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s/%05d.png", dir, k);
    return buf;
}

std::string read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_bytes(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << bytes;
    if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
}

}  // namespace

void SceneSpec::validate() const {
    require(!gt_scene.empty(), ErrorCode::InvalidArgument, "scene spec has an empty GT scene");
    require((room_bounds.max.array() > room_bounds.min.array()).all(), ErrorCode::InvalidArgument,
            "room bounds must have positive extent");
    require((room_bounds.min.array() < 0.0).all() && (room_bounds.max.array() > 0.0).all(),
            ErrorCode::InvalidArgument, "room bounds must contain the capture origin");
}

const char* fixture_name(FixtureKind kind) {
    switch (kind) {
    case FixtureKind::BoxRoom: return "box_room";
    case FixtureKind::Corridor: return "corridor";
    case FixtureKind::Cluttered: return "cluttered";
    }
    return "unknown";
}

FixtureKind parse_fixture_kind(std::string_view name) {
    for (FixtureKind k : {FixtureKind::BoxRoom, FixtureKind::Corridor, FixtureKind::Cluttered})
        if (name == fixture_name(k)) return k;
    fail(ErrorCode::InvalidArgument, "unknown fixture kind: " + std::string(name));
}

SceneSpec synth_fixture_scene(FixtureKind kind, std::uint64_t seed, const FixtureOptions& options) {
    require(options.sheet_spacing > 0.0, ErrorCode::InvalidArgument, "sheet spacing must be positive");
    std::mt19937_64 rng(seed ^ (static_cast<std::uint64_t>(kind) + 1) * 0x9E3779B97F4A7C15ull);
    SceneSpec spec;
    spec.seed = seed;

    double hx = 0.0, hz = 0.0;
    switch (kind) {
    case FixtureKind::BoxRoom:
        hx = uniform(rng, 2.5, 3.0);
        hz = uniform(rng, 2.0, 2.5);
        break;
    case FixtureKind::Corridor:
        hx = uniform(rng, 4.0, 5.0);
        hz = uniform(rng, 0.8, 0.9);
        break;
    case FixtureKind::Cluttered:
        hx = uniform(rng, 3.0, 3.5);
        hz = uniform(rng, 2.5, 3.0);
        break;
    }
    spec.room_bounds.min = {-hx, kFloorY, -hz};
    spec.room_bounds.max = {hx, kCeilingY, hz};
    add_room_shell(spec.gt_scene, spec.room_bounds, options.sheet_spacing, rng);

    if (kind == FixtureKind::Cluttered) {
        // furniture standing on the floor, kept clear of the walls and of the capture point
        const int count = 3 + static_cast<int>(rng() % 3);
        int placed = 0;
        for (int attempt = 0; attempt < 200 && placed < count; ++attempt) {
            const double sx = uniform(rng, 0.2, 0.5), sz = uniform(rng, 0.2, 0.5);
            const double height = uniform(rng, 0.5, 1.0);
            const double cx = uniform(rng, -hx + 0.4 + sx, hx - 0.4 - sx);
            const double cz = uniform(rng, -hz + 0.4 + sz, hz - 0.4 - sz);
            if (std::max(std::abs(cx) - sx, std::abs(cz) - sz) < 1.2) continue;
            const Texture tex = Texture::random(rng);
            add_box(spec.gt_scene, {cx - sx, kFloorY, cz - sz}, {cx + sx, kFloorY + height, cz + sz},
                    options.sheet_spacing, tex);
            ++placed;
        }
    }
    return spec;
}

double closed_room_fraction(const GaussianScene& scene, const ErpGrid& grid, const RenderOptions& render) {
    const RenderOutput out = render_erp(scene, Eigen::Vector3d::Zero(), grid, render);
    std::size_t covered = 0;
    for (double a : out.alpha.data())
        if (a >= kClosedRoomAlpha) ++covered;
    return static_cast<double>(covered) / static_cast<double>(out.alpha.size());
}

bool is_closed_room(const SceneSpec& spec, const ErpGrid& grid) {
    return closed_room_fraction(spec.gt_scene, grid) >= kClosedRoomFraction;
}

void write_manifest(const fs::path& path, const SampleManifest& m) {
    nlohmann::json j;
    j["schema_version"] = m.schema_version;
    j["grid"] = {{"height", m.height}, {"width", m.width}};
    j["n_frames"] = m.n_frames;
    j["fps"] = m.fps;
    j["speed"] = m.speed;
    j["camera_height"] = m.camera_height;
    j["seed"] = m.seed;
    j["trajectory_segment"] = {{"start", {m.start.x(), m.start.y()}}, {"end", {m.end.x(), m.end.y()}}};
    j["files"] = {{"gt", m.gt},
                  {"degraded", m.degraded},
                  {"alpha", m.alpha},
                  {"anchor", m.anchor},
                  {"depth0", m.depth0},
                  {"trajectory", m.trajectory},
                  {"poses", m.pose_files}};
    write_bytes(path, j.dump(2) + "\n");
}

SampleManifest read_manifest(const fs::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_bytes(path));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::Parse, path.string() + ": " + e.what());
    }
    SampleManifest m;
    try {
        m.schema_version = j.at("schema_version").get<int>();
        m.height = j.at("grid").at("height").get<int>();
        m.width = j.at("grid").at("width").get<int>();
        m.n_frames = j.at("n_frames").get<int>();
        m.fps = j.at("fps").get<double>();
        m.speed = j.at("speed").get<double>();
        m.camera_height = j.at("camera_height").get<double>();
        m.seed = j.at("seed").get<std::uint64_t>();
        const auto& seg = j.at("trajectory_segment");
        m.start = {seg.at("start").at(0).get<double>(), seg.at("start").at(1).get<double>()};
        m.end = {seg.at("end").at(0).get<double>(), seg.at("end").at(1).get<double>()};
        const auto& f = j.at("files");
        m.gt = f.at("gt").get<std::vector<std::string>>();
        m.degraded = f.at("degraded").get<std::vector<std::string>>();
        m.alpha = f.at("alpha").get<std::vector<std::string>>();
        m.anchor = f.at("anchor").get<std::string>();
        m.depth0 = f.at("depth0").get<std::string>();
        m.trajectory = f.at("trajectory").get<std::string>();
        m.pose_files = f.at("poses").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::Parse, path.string() + ": " + e.what());
    }
    return m;
}

GenerateResult generate_pair(const SceneSpec& spec, const ErpGrid& grid, const fs::path& out_dir,
                             const DatasetOptions& opt) {
    spec.validate();
    require(opt.n_frames >= 1, ErrorCode::InvalidArgument, "n_frames must be at least 1");
    require(opt.speed > 0.0 && opt.fps > 0.0, ErrorCode::InvalidArgument, "speed and fps must be positive");
    GenerateResult result;

    // depth at the capture origin drives the navigation map
    const RenderOutput origin = render_erp(spec.gt_scene, Eigen::Vector3d::Zero(), grid, opt.render);
    Image origin_depth = origin.depth;
    for (std::size_t i = 0; i < origin_depth.size(); ++i)
        if (origin.alpha.data()[i] < kHoleThreshold) origin_depth.data()[i] = 0.0;
    NavMap nav;
    try {
        nav = build_nav_map(Panorama::from_images(origin.rgb, origin_depth), opt.nav);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::Domain) throw;
        result.skip_reason = std::string("navigation map: ") + e.what();
        return result;
    }
    Trajectory traj = longest_linear_segment(nav, opt.anchor_spacing);
    traj.speed = opt.speed;
    traj.fps = opt.fps;
    result.trajectory = traj;
    if (!(traj.length() > 0.0)) {
        result.skip_reason = nav.navigable_count() == 0 ? "navigation map has no navigable cell"
                                                        : "longest linear segment has zero length";
        return result;
    }
    const std::vector<CameraPose> poses = trajectory_to_poses(traj, opt.n_frames);

    const int n = opt.n_frames;
    std::vector<RenderOutput> gt(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) gt[k] = render_erp(spec.gt_scene, poses[k].position, grid, opt.render);

    Image depth0 = gt[0].depth;
    for (std::size_t i = 0; i < depth0.size(); ++i)
        if (gt[0].alpha.data()[i] < kHoleThreshold) depth0.data()[i] = 0.0;

    // coarse scene from frame 0, lifted in camera coordinates and moved to the frame-0 pose
    GaussianScene coarse = lift_panorama(Panorama::from_images(gt[0].rgb, depth0), opt.lift);
    const Eigen::Vector3f offset = poses[0].position.cast<float>();
    for (Gaussian& g : coarse.gaussians)
        for (int a = 0; a < 3; ++a) g.mu[a] += offset[a];

    fs::create_directories(out_dir / "gt");
    fs::create_directories(out_dir / "degraded");
    fs::create_directories(out_dir / "alpha");

    SampleManifest& m = result.manifest;
    m.height = grid.height;
    m.width = grid.width;
    m.n_frames = n;
    m.fps = opt.fps;
    m.speed = opt.speed;
    m.camera_height = opt.nav.camera_height;
    m.seed = spec.seed;
    m.start = traj.start;
    m.end = traj.end;
    m.trajectory = "trajectory.txt";
    m.pose_files = {"gt/poses.txt", "degraded/poses.txt"};

    for (int k = 0; k < n; ++k) {
        const RenderOutput deg = render_erp(coarse, poses[k].position, grid, opt.render);
        m.gt.push_back(frame_name("gt", k));
        m.degraded.push_back(frame_name("degraded", k));
        m.alpha.push_back(frame_name("alpha", k));
        write_png(out_dir / m.gt.back(), gt[k].rgb);
        write_png(out_dir / m.degraded.back(), deg.rgb);
        write_png(out_dir / m.alpha.back(), deg.alpha);
    }
    write_png(out_dir / m.anchor, gt[0].rgb);
    write_pfm(out_dir / m.depth0, depth0);

    std::ostringstream poses_text;
    write_poses(poses_text, poses);
    write_bytes(out_dir / m.trajectory, poses_text.str());
    for (const std::string& p : m.pose_files) write_bytes(out_dir / p, poses_text.str());

    write_manifest(out_dir / "manifest.json", m);
    result.written = true;
    return result;
}

std::vector<GenerateResult> generate_dataset(const std::vector<SceneSpec>& specs, const ErpGrid& grid,
                                             const fs::path& root, const DatasetOptions& options) {
    std::vector<GenerateResult> results(specs.size());
    parallel_for(specs.size(), [&](std::size_t i) {
        char name[32];
        std::snprintf(name, sizeof name, "sample_%05zu", i);
        results[i] = generate_pair(specs[i], grid, root / name, options);
    });
    return results;
}

VerifyReport verify_sample(const fs::path& dir) {
    VerifyReport report;
    auto problem = [&](std::string msg) { report.problems.push_back(std::move(msg)); };

    SampleManifest m;
    try {
        m = read_manifest(dir / "manifest.json");
    } catch (const Error& e) {
        problem(std::string("manifest: ") + e.what());
        return report;
    }
    if (m.schema_version != kDatasetSchemaVersion)
        problem("manifest: unsupported schema_version " + std::to_string(m.schema_version));
    if (m.height <= 0 || m.width != 2 * m.height)
        problem("manifest: grid must be 2:1 with positive height");
    if (m.n_frames < 1) problem("manifest: n_frames must be at least 1");
    if (!(m.fps > 0.0) || !(m.speed > 0.0) || !(m.camera_height > 0.0))
        problem("manifest: fps, speed and camera_height must be positive");
    if (!report.ok()) return report;

    auto check_list = [&](const char* label, const std::vector<std::string>& files, int channels) {
        if (static_cast<int>(files.size()) != m.n_frames) {
            problem(std::string(label) + ": " + std::to_string(files.size()) + " files listed, manifest has " +
                    std::to_string(m.n_frames) + " frames");
            return;
        }
        for (const std::string& f : files) {
            try {
                const Image img = read_png(dir / f);
                if (img.height() != m.height || img.width() != m.width || img.channels() != channels)
                    problem(f + ": shape does not match the manifest");
            } catch (const Error& e) {
                problem(f + ": " + e.what());
            }
        }
    };
    check_list("gt", m.gt, 3);
    check_list("degraded", m.degraded, 3);
    check_list("alpha", m.alpha, 1);

    if (const fs::path gt_dir = dir / "gt"; fs::is_directory(gt_dir)) {
        int pngs = 0;
        for (const auto& entry : fs::directory_iterator(gt_dir))
            if (entry.path().extension() == ".png") ++pngs;
        if (pngs != m.n_frames) problem("gt/: directory holds " + std::to_string(pngs) + " frames");
    }

    try {
        const Image anchor = read_png(dir / m.anchor);
        if (anchor.height() != m.height || anchor.width() != m.width || anchor.channels() != 3)
            problem(m.anchor + ": shape does not match the manifest");
        else if (!m.gt.empty() && fs::exists(dir / m.gt[0]) && !(anchor == read_png(dir / m.gt[0])))
            problem(m.anchor + ": differs from GT frame 0");
    } catch (const Error& e) {
        problem(m.anchor + ": " + e.what());
    }

    Image depth0;
    try {
        depth0 = read_pfm(dir / m.depth0);
        if (depth0.height() != m.height || depth0.width() != m.width || depth0.channels() != 1) {
            problem(m.depth0 + ": shape does not match the manifest");
            depth0 = Image();
        }
    } catch (const Error& e) {
        problem(m.depth0 + ": " + e.what());
    }

    try {
        const std::vector<CameraPose> poses = load_poses(dir / m.trajectory);
        if (static_cast<int>(poses.size()) != m.n_frames)
            problem(m.trajectory + ": " + std::to_string(poses.size()) + " poses for " + std::to_string(m.n_frames) +
                    " frames");
        const double step = m.speed / m.fps;
        for (std::size_t k = 1; k < poses.size(); ++k)
            if ((poses[k].position - poses[k - 1].position).norm() > step * (1.0 + 1e-9) + 1e-12) {
                problem(m.trajectory + ": pose " + std::to_string(k) + " moves faster than speed / fps");
                break;
            }
        const std::string reference = read_bytes(dir / m.trajectory);
        for (const std::string& p : m.pose_files) {
            if (!fs::exists(dir / p))
                problem(p + ": missing");
            else if (read_bytes(dir / p) != reference)
                problem(p + ": differs from " + m.trajectory);
        }
    } catch (const Error& e) {
        problem(m.trajectory + ": " + e.what());
    }

    if (!depth0.empty() && !m.alpha.empty()) {
        try {
            const Image alpha0 = read_png(dir / m.alpha[0]);
            if (alpha0.same_shape(depth0)) {
                std::size_t uncovered = 0;
                for (std::size_t i = 0; i < depth0.size(); ++i)
                    if (depth0.data()[i] > 0.0 && alpha0.data()[i] != 1.0) ++uncovered;
                if (uncovered > 0)
                    problem(m.alpha[0] + ": " + std::to_string(uncovered) + " valid-depth pixels have alpha below 1");
            }
        } catch (const Error& e) {
            problem(m.alpha[0] + ": " + e.what());
        }
    }
    return report;
}

}  // namespace panosplat
