// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "panosplat/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "panosplat/error.hpp"
#include "panosplat/image_io.hpp"
#include "panosplat/log.hpp"
#include "panosplat/metrics.hpp"
#include "panosplat/pano_init.hpp"
#include "panosplat/panorama.hpp"
#include "panosplat/rasterizer.hpp"
#include "panosplat/restorer.hpp"

namespace panosplat {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string numbered(const char* pattern, std::size_t k) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, k);
    return buf;
}

json read_json(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::NotFound, "cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        fail(ErrorCode::Parse, path.string() + ": " + e.what());
    }
}

json vec3(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

// Image sequences on disk are read back through 8-bit PNG, so every stage sees
// exactly what was written.
std::vector<fs::path> trajectory_files(const fs::path& run) {
    const fs::path dir = run / "plan" / "trajectories";
    std::vector<fs::path> files;
    if (fs::is_directory(dir))
        for (const auto& e : fs::directory_iterator(dir))
            if (e.path().extension() == ".txt") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) fail(ErrorCode::Pipeline, "no trajectory files under " + dir.string());
    return files;
}

std::vector<Image> read_sequence(const fs::path& dir, std::size_t n) {
    std::vector<Image> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) out.push_back(read_png(dir / numbered("%05zu.png", k)));
    return out;
}

void write_sequence(const fs::path& dir, const std::vector<Image>& frames) {
    fs::create_directories(dir);
    for (std::size_t k = 0; k < frames.size(); ++k) write_png(dir / numbered("%05zu.png", k), frames[k]);
}

Image contact_sheet(const std::vector<Image>& views, int columns) {
    const int h = views.front().height(), w = views.front().width();
    const int rows = (static_cast<int>(views.size()) + columns - 1) / columns;
    Image sheet(rows * h, columns * w, 3);
    for (std::size_t i = 0; i < views.size(); ++i) {
        const int r = static_cast<int>(i) / columns, c = static_cast<int>(i) % columns;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                for (int ch = 0; ch < 3; ++ch) sheet.at(r * h + y, c * w + x, ch) = views[i].at(y, x, ch);
    }
    return sheet;
}

Image zero_invalid_depth(const RenderOutput& out) {
    Image depth = out.depth;
    for (std::size_t i = 0; i < depth.size(); ++i)
        if (out.alpha.data()[i] < kHoleThreshold) depth.data()[i] = 0.0;
    return depth;
}

const fs::path kRunFile = "run.json";

}  // namespace

const char* stage_name(Stage s) {
    switch (s) {
    case Stage::Init: return "init";
    case Stage::Plan: return "plan";
    case Stage::RenderDegraded: return "render-degraded";
    case Stage::Restore: return "restore";
    case Stage::Refine: return "refine";
    case Stage::Eval: return "eval";
    }
    return "unknown";
}

int frames_for(const Trajectory& traj, const FramesConfig& frames) {
    const double step = frames.speed / frames.fps;
    const double steps = std::floor(traj.length() / step + 1e-9);
    return static_cast<int>(std::min<double>(frames.n_frames, steps + 1.0));
}

Pipeline::Pipeline(fs::path run_dir, PipelineConfig cfg) : dir_(std::move(run_dir)), cfg_(std::move(cfg)) {
    cfg_.validate();
}

namespace {

json load_run(const fs::path& dir) {
    if (!fs::exists(dir / kRunFile)) return json{{"schema_version", kRunSchemaVersion}, {"stages", json::object()}};
    json run = read_json(dir / kRunFile);
    if (!run.is_object() || run.value("schema_version", 0) != kRunSchemaVersion || !run.contains("stages"))
        fail(ErrorCode::Pipeline, (dir / kRunFile).string() + ": not a run manifest of schema version " +
                                      std::to_string(kRunSchemaVersion));
    return run;
}

const char* stage_dir(Stage s) {
    switch (s) {
    case Stage::Init: return "init";
    case Stage::Plan: return "plan";
    case Stage::RenderDegraded: return "degraded";
    case Stage::Restore: return "restored";
    case Stage::Refine: return "refine";
    case Stage::Eval: return "eval";
    }
    return "";
}

}  // namespace

bool Pipeline::completed(Stage s) const {
    if (!fs::exists(dir_ / kRunFile)) return false;
    const json run = load_run(dir_);
    return run["stages"].contains(stage_name(s)) && fs::is_directory(dir_ / stage_dir(s));
}

void Pipeline::require_stage(Stage s) const {
    if (!completed(s))
        fail(ErrorCode::Pipeline, std::string("stage '") + stage_name(s) + "' has not completed in " + dir_.string());
}

void Pipeline::begin_stage(Stage s) {
    for (Stage prior : kStages) {
        if (prior == s) break;
        require_stage(prior);
    }
    json run = load_run(dir_);
    bool later = false;
    for (Stage t : kStages) {
        if (t == s) later = true;
        if (!later) continue;
        run["stages"].erase(stage_name(t));
        fs::remove_all(dir_ / stage_dir(t));
    }
    fs::create_directories(dir_ / stage_dir(s));
    write_file_atomic(dir_ / kRunFile, run.dump(2) + "\n");
}

void Pipeline::finish_stage(Stage s, const std::string& summary_json) {
    json run = load_run(dir_);
    run["stages"][stage_name(s)] = {{"seed", cfg_.seed}, {"config", json::parse(serialize_config(cfg_))},
                                    {"summary", json::parse(summary_json)}};
    write_file_atomic(dir_ / kRunFile, run.dump(2) + "\n");
    log_info(std::string(stage_name(s)) + ": done");
}

std::string Pipeline::init(const fs::path& pano_png, const fs::path& depth_pfm) {
    // read inputs before touching the run directory so a bad path leaves it intact
    Image rgb = read_png(pano_png);
    Image depth = read_pfm(depth_pfm);
    if (rgb.height() != depth.height() || rgb.width() != depth.width())
        fail(ErrorCode::InvalidArgument, "depth " + depth_pfm.string() + " does not match panorama " +
                                             pano_png.string() + " in size");
    Panorama pano = Panorama::from_images(std::move(rgb), std::move(depth));
    apply_depth_scale(pano, cfg_.init.depth_scale);

    begin_stage(Stage::Init);
    const GaussianScene scene = lift_panorama(pano, cfg_.init.lift);
    save_scene(scene, dir_ / "init" / "scene.gsb");
    write_png(dir_ / "init" / "pano.png", pano.rgb);
    write_pfm(dir_ / "init" / "depth.pfm", pano.depth);

    const SceneBounds b = scene_bounds(scene);
    log_info("init: K=" + std::to_string(scene.size()));
    json s = {{"K", scene.size()},
              {"bounds", {{"min", vec3(b.min)}, {"max", vec3(b.max)}}},
              {"height", pano.grid.height},
              {"width", pano.grid.width}};
    finish_stage(Stage::Init, s.dump());
    return s.dump(2);
}

namespace {

Panorama load_init_pano(const fs::path& run) {
    return Panorama::from_images(read_png(run / "init" / "pano.png"), read_pfm(run / "init" / "depth.pfm"));
}

}  // namespace

std::string Pipeline::plan() {
    begin_stage(Stage::Plan);
    const Panorama pano = load_init_pano(dir_);
    const NavMap nav = build_nav_map(pano, cfg_.nav);
    const RadialPlan rp = plan_radial(nav, cfg_.plan);
    const fs::path tdir = dir_ / "plan" / "trajectories";
    fs::create_directories(tdir);

    json trajs = json::array();
    for (std::size_t i = 0; i < rp.trajectories.size(); ++i) {
        Trajectory t = rp.trajectories[i];
        t.speed = cfg_.frames.speed;
        t.fps = cfg_.frames.fps;
        const int n = frames_for(t, cfg_.frames);
        save_poses(tdir / numbered("traj_%02zu.txt", i), trajectory_to_poses(t, n));
        trajs.push_back({{"start", {t.start.x(), t.start.y()}},
                         {"end", {t.end.x(), t.end.y()}},
                         {"range", rp.ranges[i]},
                         {"frames", n}});
    }
    json s = {{"tau", cfg_.plan.tau},
              {"psi", rp.psi},
              {"total_range", rp.total_range},
              {"navigable_cells", nav.navigable_count()},
              {"trajectories", trajs}};
    write_file_atomic(dir_ / "plan" / "plan.json", s.dump(2) + "\n");
    log_info("plan: tau=" + std::to_string(cfg_.plan.tau) + " total range " + std::to_string(rp.total_range) + " m");
    finish_stage(Stage::Plan, s.dump());
    return s.dump(2);
}

std::string Pipeline::render_degraded() {
    begin_stage(Stage::RenderDegraded);
    const GaussianScene scene = load_scene(dir_ / "init" / "scene.gsb");
    const Image pano = read_png(dir_ / "init" / "pano.png");
    const ErpGrid grid(pano.height(), pano.width());

    json per = json::array();
    std::size_t total = 0;
    const auto files = trajectory_files(dir_);
    for (std::size_t i = 0; i < files.size(); ++i) {
        const auto poses = load_poses(files[i]);
        const fs::path out = dir_ / "degraded" / numbered("traj_%02zu", i);
        fs::create_directories(out / "rgb");
        fs::create_directories(out / "alpha");
        double alpha_sum = 0.0;
        for (std::size_t k = 0; k < poses.size(); ++k) {
            const RenderOutput r = render_erp(scene, poses[k].position, grid, cfg_.render);
            write_png(out / "rgb" / numbered("%05zu.png", k), r.rgb);
            write_png(out / "alpha" / numbered("%05zu.png", k), r.alpha);
            for (double a : r.alpha.data()) alpha_sum += a;
        }
        total += poses.size();
        per.push_back({{"frames", poses.size()},
                       {"mean_alpha", alpha_sum / static_cast<double>(poses.size() * grid.height * grid.width)}});
    }
    json s = {{"trajectories", per}, {"frames", total}};
    finish_stage(Stage::RenderDegraded, s.dump());
    return s.dump(2);
}

std::string Pipeline::restore() {
    begin_stage(Stage::Restore);
    const Image anchor = read_png(dir_ / "init" / "pano.png");
    const ErpGrid grid(anchor.height(), anchor.width());
    GaussianScene reference;
    if (cfg_.restore.backend == RestoreBackend::Oracle) reference = load_scene(cfg_.restore.reference_scene);

    json per = json::array();
    std::string provenance;
    const auto files = trajectory_files(dir_);
    for (std::size_t i = 0; i < files.size(); ++i) {
        const auto poses = load_poses(files[i]);
        const std::string id = numbered("traj_%02zu", i);
        const fs::path in = dir_ / "degraded" / id;
        std::vector<Image> restored;
        if (cfg_.restore.backend == RestoreBackend::Oracle) {
            const int s = cfg_.restore.target_scale;
            const ErpGrid big(grid.height * s, grid.width * s);
            for (const CameraPose& p : poses) restored.push_back(render_erp(reference, p.position, big, cfg_.render).rgb);
            provenance = "oracle";
        } else {
            RestoreRequest req;
            req.degraded.grid = grid;
            req.degraded.frames = read_sequence(in / "rgb", poses.size());
            req.degraded.alpha = read_sequence(in / "alpha", poses.size());
            req.anchor = anchor;
            req.scene_id = id;
            req.target_scale = cfg_.restore.target_scale;
            RestoreResult r;
            switch (cfg_.restore.backend) {
            case RestoreBackend::Identity: r = restore_identity(req); break;
            case RestoreBackend::PushPull: r = restore_pushpull(req); break;
            case RestoreBackend::External: r = restore_external(req, cfg_.restore.external); break;
            case RestoreBackend::Oracle: break;
            }
            restored = std::move(r.frames);
            provenance = r.provenance;
        }
        write_sequence(dir_ / "restored" / id, restored);
        per.push_back({{"id", id}, {"frames", restored.size()}});
    }
    json s = {{"backend", backend_name(cfg_.restore.backend)},
              {"provenance", provenance},
              {"target_scale", cfg_.restore.target_scale},
              {"trajectories", per}};
    finish_stage(Stage::Restore, s.dump());
    return s.dump(2);
}

std::string Pipeline::refine(const RefineObserver& observer) {
    begin_stage(Stage::Refine);
    const GaussianScene scene = load_scene(dir_ / "init" / "scene.gsb");
    std::vector<Image> frames;
    std::vector<Eigen::Vector3d> positions;
    for (std::size_t i = 0; const fs::path& f : trajectory_files(dir_)) {
        const auto poses = load_poses(f);
        auto seq = read_sequence(dir_ / "restored" / numbered("traj_%02zu", i++), poses.size());
        for (std::size_t k = 0; k < poses.size(); ++k) {
            frames.push_back(std::move(seq[k]));
            positions.push_back(poses[k].position);
        }
    }
    const PseudoGtSet gt =
        build_pseudo_gt(frames, positions, cfg_.refine.views_per_frame, cfg_.refine.fov, cfg_.refine.view_size);
    frames.clear();

    RefineConfig rc = cfg_.refine.refine;
    rc.render = cfg_.render;
    rc.checkpoint_dir = dir_ / "refine" / "checkpoints";
    const RefineResult result = refine_scene(scene, gt, rc, cfg_.seed, observer);
    save_scene(result.scene, dir_ / "refine" / "scene.gsb");
    {
        std::ostringstream log;
        write_loss_log(log, result.log);
        write_file_atomic(dir_ / "refine" / "loss_log.jsonl", log.str());
    }
    const LossRecord& first = result.log.front();
    const LossRecord& last = result.log.back();
    log_info("refine: " + std::to_string(result.log.size()) + " iterations, K=" + std::to_string(result.scene.size()));
    json s = {{"iters", result.log.size()},
              {"pseudo_gt_views", gt.size()},
              {"K_init", scene.size()},
              {"K", result.scene.size()},
              {"densify_events", result.densify_events},
              {"loss_first", first.total},
              {"loss_last", last.total}};
    finish_stage(Stage::Refine, s.dump());
    return s.dump(2);
}

std::string Pipeline::eval(const fs::path& reference_scene) {
    GaussianScene reference;
    const bool scored = !reference_scene.empty();
    if (scored) reference = load_scene(reference_scene);
    begin_stage(Stage::Eval);

    const Panorama pano = load_init_pano(dir_);
    const NavMap nav = build_nav_map(pano, cfg_.nav);
    const auto points = fps_eval_cameras(nav, cfg_.eval.n_cameras, cfg_.eval.pool_size, cfg_.seed);
    const int v = cfg_.eval.views_per_camera;
    PerspectiveIntrinsics intr;
    intr.fov_y = cfg_.eval.fov;
    intr.width = intr.height = cfg_.eval.view_size;

    std::vector<CameraPose> views;
    for (const Eigen::Vector2d& p : points)
        for (int k = 0; k < v; ++k) {
            CameraPose pose;
            pose.position = {p.x(), 0.0, p.y()};
            pose.orientation = yaw_rotation(2.0 * std::numbers::pi * k / v);
            views.push_back(pose);
        }
    save_poses(dir_ / "eval" / "cameras.txt", views);

    struct Named {
        const char* name;
        GaussianScene scene;
    };
    std::vector<Named> scenes = {{"init", load_scene(dir_ / "init" / "scene.gsb")},
                                 {"refined", load_scene(dir_ / "refine" / "scene.gsb")}};
    if (scored) scenes.push_back({"reference", std::move(reference)});

    fs::create_directories(dir_ / "eval" / "views");
    std::vector<std::vector<Image>> rendered(scenes.size()), panos(scenes.size());
    const bool ws = std::any_of(cfg_.eval.metrics.begin(), cfg_.eval.metrics.end(),
                                [](Metric m) { return m == Metric::WsPsnr || m == Metric::WsSsim; });
    for (std::size_t s = 0; s < scenes.size(); ++s) {
        for (std::size_t i = 0; i < views.size(); ++i) {
            Image img = quantize_8bit(render_perspective(scenes[s].scene, views[i], intr, cfg_.render).rgb);
            write_png(dir_ / "eval" / "views" / (std::string(scenes[s].name) + numbered("_%02zu.png", i)), img);
            rendered[s].push_back(std::move(img));
        }
        write_png(dir_ / "eval" / (std::string("contact_") + scenes[s].name + ".png"), contact_sheet(rendered[s], v));
        if (scored && ws)
            for (const Eigen::Vector2d& p : points)
                panos[s].push_back(
                    quantize_8bit(render_erp(scenes[s].scene, {p.x(), 0.0, p.y()}, pano.grid, cfg_.render).rgb));
    }

    json s = {{"cameras", points.size()}, {"views", views.size()}};
    if (scored) {
        std::ostringstream report;
        json scores = json::object();
        const std::size_t ref = scenes.size() - 1;
        for (std::size_t k = 0; k < 2; ++k) {
            MetricReport view_report;
            view_report.frames = views.size();
            json sc = json::object();
            for (Metric m : cfg_.eval.metrics) {
                if (m != Metric::Psnr && m != Metric::Ssim) continue;
                MetricSeries series{m, {}, 0.0};
                for (std::size_t i = 0; i < views.size(); ++i)
                    series.per_frame.push_back(m == Metric::Psnr ? psnr(rendered[k][i], rendered[ref][i])
                                                                 : ssim(rendered[k][i], rendered[ref][i]));
                for (double x : series.per_frame) series.mean += x;
                series.mean /= static_cast<double>(series.per_frame.size());
                sc[metric_name(m)] = series.mean;
                view_report.series.push_back(std::move(series));
            }
            if (!view_report.series.empty()) {
                report << "## " << scenes[k].name << " vs reference, perspective views\n";
                write_report(report, view_report);
            }
            std::vector<Metric> wsm;
            for (Metric m : cfg_.eval.metrics)
                if (m == Metric::WsPsnr || m == Metric::WsSsim) wsm.push_back(m);
            if (!wsm.empty()) {
                const MetricReport pr = evaluate(panos[k], panos[ref], pano.grid, wsm);
                for (Metric m : wsm) sc[metric_name(m)] = pr.mean(m);
                report << "## " << scenes[k].name << " vs reference, panoramas\n";
                write_report(report, pr);
            }
            scores[scenes[k].name] = sc;
        }
        write_file_atomic(dir_ / "eval" / "report.txt", report.str());
        s["scores"] = scores;
        if (scores["init"].contains("psnr"))
            s["psnr_gain"] = scores["refined"]["psnr"].get<double>() - scores["init"]["psnr"].get<double>();
    }
    finish_stage(Stage::Eval, s.dump());
    return s.dump(2);
}

FixtureInputs write_fixture_inputs(const SceneSpec& spec, const ErpGrid& grid, const fs::path& dir,
                                   const RenderOptions& render) {
    spec.validate();
    fs::create_directories(dir);
    FixtureInputs in{dir / "gt.gsb", dir / "pano.png", dir / "depth.pfm"};
    const RenderOutput out = render_erp(spec.gt_scene, Eigen::Vector3d::Zero(), grid, render);
    save_scene(spec.gt_scene, in.scene);
    write_png(in.pano, out.rgb);
    write_pfm(in.depth, zero_invalid_depth(out));
    return in;
}

DatasetOptions dataset_options(const PipelineConfig& cfg) {
    DatasetOptions o;
    o.n_frames = cfg.dataset.n_frames;
    o.anchor_spacing = cfg.dataset.anchor_spacing;
    o.speed = cfg.frames.speed;
    o.fps = cfg.frames.fps;
    o.nav = cfg.nav;
    o.lift = cfg.init.lift;
    o.lift.scale_gain = cfg.dataset.scale_gain;
    o.render = cfg.render;
    return o;
}

}  // namespace panosplat
