// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "panosplat/camera.hpp"
#include "panosplat/image.hpp"
#include "panosplat/rasterizer.hpp"
#include "panosplat/scene_model.hpp"

namespace panosplat {

struct PseudoGtView {
    CameraPose pose;
    PerspectiveIntrinsics intrinsics;
    Image image;  // H x W x 3
};

using PseudoGtSet = std::vector<PseudoGtView>;

/// Perspective views of each restored ERP frame at evenly spaced yaws
/// (2 pi k / views_per_frame), pitch 0. view_size 0 picks H/2 of the frame.
PseudoGtSet build_pseudo_gt(const std::vector<Image>& frames, const std::vector<Eigen::Vector3d>& positions,
                            int views_per_frame = 4, double fov = 1.5707963267948966, int view_size = 0);

struct LearningRates {
    double mu = 1.6e-4;
    double mu_final_factor = 0.01;  // exponential decay over the run
    double log_scale = 5e-3;
    double rot = 1e-3;
    double opacity_logit = 5e-2;
    double color = 2.5e-3;
};

struct RefineConfig {
    int iters = 15000;
    LearningRates lr;
    double lambda_ssim = 0.2;
    int densify_interval = 100;
    int densify_from = 500;
    int densify_until = 7500;
    double densify_grad_threshold = 2e-4;
    /// Gaussians whose largest scale exceeds this fraction of the scene extent
    /// are split; smaller ones are cloned.
    double percent_dense = 0.01;
    double prune_opacity = 0.005;
    std::size_t max_gaussians = 2'000'000;
    int views_per_iter = 1;
    int checkpoint_interval = 1000;
    std::filesystem::path checkpoint_dir;  // empty disables checkpoints
    RenderOptions render;

    void validate() const;
};

struct LossRecord {
    int iter = 0;
    double l1 = 0.0;
    double ssim_term = 0.0;  // 1 - SSIM
    double total = 0.0;
    std::size_t gaussians = 0;
};

struct RefineResult {
    GaussianScene scene;
    std::vector<LossRecord> log;
    int densify_events = 0;
};

/// Called after every iteration; returning false stops the run early.
using RefineObserver = std::function<bool(const LossRecord&)>;

RefineResult refine_scene(const GaussianScene& scene, const PseudoGtSet& gt, const RefineConfig& cfg,
                          std::uint64_t seed, const RefineObserver& observer = {});

/// (1 - lambda) L1 + lambda (1 - SSIM) and its gradient with respect to `render`.
LossRecord photometric_loss(const Image& render, const Image& target, double lambda_ssim, Image* grad);

/// One line per record: {"iter":..,"l1":..,"ssim_term":..,"total":..,"K":..}.
void write_loss_log(std::ostream& os, const std::vector<LossRecord>& log);

// Adam over flat parameter vectors. `step` is the 1-based update count used
// for bias correction.
inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-15;

void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m, std::span<double> v,
                 double lr, int step);

}  // namespace panosplat
