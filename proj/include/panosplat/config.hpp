// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "panosplat/metrics.hpp"
#include "panosplat/pano_init.hpp"
#include "panosplat/rasterizer.hpp"
#include "panosplat/refine.hpp"
#include "panosplat/restorer.hpp"
#include "panosplat/trajectory.hpp"

namespace panosplat {

struct InitConfig {
    LiftOptions lift;
    double depth_scale = 1.0;  // multiplies every valid depth sample
};

struct FramesConfig {
    int n_frames = 41;   // upper bound per trajectory
    double fps = 10.0;
    double speed = 1.0;  // m/s
};

enum class RestoreBackend { Identity, PushPull, External, Oracle };

const char* backend_name(RestoreBackend b);
RestoreBackend parse_backend(std::string_view name);

struct RestoreConfig {
    RestoreBackend backend = RestoreBackend::PushPull;
    int target_scale = 1;
    ExternalOptions external;
    /// Ground-truth scene rendered in place of restoration by the oracle
    /// backend. Only used for evaluation fixtures.
    std::filesystem::path reference_scene;
};

struct RefineStageConfig {
    RefineConfig refine;
    int views_per_frame = 4;
    double fov = 1.5707963267948966;
    int view_size = 0;  // 0 = restored frame height / 2
};

struct EvalConfig {
    int n_cameras = 5;
    int views_per_camera = 4;
    int pool_size = 2000;
    double fov = 1.5707963267948966;
    int view_size = 128;
    /// psnr / ssim are computed on the perspective views, ws_psnr / ws_ssim on
    /// ERP panoramas rendered at the camera locations.
    std::vector<Metric> metrics = {Metric::Psnr, Metric::Ssim, Metric::WsPsnr, Metric::WsSsim};
};

struct DatasetConfig {
    int height = 128;
    int n_frames = 41;
    double anchor_spacing = 0.5;
    double scale_gain = 0.85;
    double sheet_spacing = 0.08;
};

struct PipelineConfig {
    std::uint64_t seed = 0;
    InitConfig init;
    NavMapOptions nav;
    RadialOptions plan;
    FramesConfig frames;
    RenderOptions render;
    RestoreConfig restore;
    RefineStageConfig refine;
    EvalConfig eval;
    DatasetConfig dataset;

    void validate() const;
};

Metric parse_metric(std::string_view name);

/// Pretty-printed JSON holding every field.
std::string serialize_config(const PipelineConfig& cfg);
/// Missing keys keep their defaults; unknown keys raise Parse naming the key path.
PipelineConfig parse_config(std::string_view json);

PipelineConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const PipelineConfig& cfg);

/// Sets one dotted key ("refine.refine.iters", "plan.tau") from a JSON literal.
/// A bare word that is not valid JSON is taken as a string. Only the type is
/// checked; call validate() once all overrides are applied.
void apply_override(PipelineConfig& cfg, std::string_view key, std::string_view value);

}  // namespace panosplat
