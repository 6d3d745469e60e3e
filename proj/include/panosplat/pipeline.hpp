// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <string>

#include "panosplat/config.hpp"
#include "panosplat/dataset_tool.hpp"
#include "panosplat/refine.hpp"

namespace panosplat {

enum class Stage { Init = 0, Plan, RenderDegraded, Restore, Refine, Eval };

inline constexpr std::array<Stage, 6> kStages = {Stage::Init,    Stage::Plan,   Stage::RenderDegraded,
                                                 Stage::Restore, Stage::Refine, Stage::Eval};

const char* stage_name(Stage s);

inline constexpr int kRunSchemaVersion = 1;

/// Frames rendered along a trajectory: one per speed / fps step of travel,
/// capped at frames.n_frames.
int frames_for(const Trajectory& traj, const FramesConfig& frames);

/// One run directory. Each stage reads the artifacts of the stages before it
/// and records itself in run.json; running a stage discards the records and
/// outputs of every later stage.
///
///   init/            scene.gsb, pano.png, depth.pfm
///   plan/            plan.json, trajectories/traj_%02d.txt
///   degraded/traj_%02d/   rgb/%05d.png, alpha/%05d.png
///   restored/traj_%02d/   %05d.png
///   refine/          scene.gsb, loss_log.jsonl, checkpoints/
///   eval/            cameras.txt, views/, contact_*.png, report.txt
class Pipeline {
public:
    Pipeline(std::filesystem::path run_dir, PipelineConfig cfg);

    const std::filesystem::path& dir() const noexcept { return dir_; }
    const PipelineConfig& config() const noexcept { return cfg_; }

    bool completed(Stage s) const;

    // Each stage returns a JSON summary of what it produced.
    std::string init(const std::filesystem::path& pano_png, const std::filesystem::path& depth_pfm);
    std::string plan();
    std::string render_degraded();
    std::string restore();
    std::string refine(const RefineObserver& observer = {});
    /// Renders the evaluation cameras. With a reference scene, also scores the
    /// coarse and refined scenes against it.
    std::string eval(const std::filesystem::path& reference_scene = {});

private:
    std::filesystem::path dir_;
    PipelineConfig cfg_;

    void require_stage(Stage s) const;
    void begin_stage(Stage s);
    void finish_stage(Stage s, const std::string& summary_json);
};

struct FixtureInputs {
    std::filesystem::path scene;  // gt.gsb
    std::filesystem::path pano;   // pano.png
    std::filesystem::path depth;  // depth.pfm
};

/// GT scene plus the RGB-D panorama rendered at its origin, ready for `init`.
FixtureInputs write_fixture_inputs(const SceneSpec& spec, const ErpGrid& grid, const std::filesystem::path& dir,
                                   const RenderOptions& render = {});

/// Dataset options derived from the pipeline config.
DatasetOptions dataset_options(const PipelineConfig& cfg);

}  // namespace panosplat
