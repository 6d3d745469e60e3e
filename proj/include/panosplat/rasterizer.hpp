// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <memory>
#include <vector>

#include "panosplat/camera.hpp"
#include "panosplat/image.hpp"
#include "panosplat/scene_model.hpp"
#include "panosplat/sphere_geom.hpp"

namespace panosplat {

struct RenderOptions {
    /// Screen-space dilation in pixels; aa_dilation^2 is added to the projected
    /// covariance diagonal and opacity is scaled by sqrt(det S / det(S + aa^2 I)).
    double aa_dilation = 0.3;
    double z_near = 0.01;
    double alpha_min = 1.0 / 255.0;
    /// Mahalanobis footprint cutoff in standard deviations.
    double sigma_cutoff = 3.0;
    /// Blending stops once transmittance falls below this value.
    double transmittance_min = 1e-4;

    /// Options with every cutoff disabled, which makes the image a smooth
    /// function of the parameters (used for finite-difference checks).
    static RenderOptions smooth(double aa_dilation = 0.3) {
        RenderOptions o;
        o.aa_dilation = aa_dilation;
        o.alpha_min = 0.0;
        o.sigma_cutoff = std::numeric_limits<double>::infinity();
        o.transmittance_min = 0.0;
        return o;
    }
};

struct RenderOutput {
    Image rgb;    // H x W x 3, premultiplied over a black background
    Image alpha;  // H x W x 1, accumulated opacity 1 - prod(1 - alpha_i)
    Image depth;  // H x W x 1, alpha-normalized expected depth, 0 where alpha = 0
};

struct GaussianGrad {
    std::array<double, 3> mu{};
    std::array<double, 3> log_scale{};
    std::array<double, 4> rot{};
    double opacity_logit = 0.0;
    std::array<double, 3> color{};
};

struct SceneGradients {
    std::vector<GaussianGrad> grads;
    /// |dL/d(mean2d)| in normalized device units, per Gaussian.
    std::vector<double> screen_grad_norm;
    /// 1 where the Gaussian survived culling and touched the image.
    std::vector<std::uint32_t> hit_count;
};

/// Forward pass that keeps what the backward pass needs. The scene must stay
/// alive and unchanged while the pass is used.
class RenderPass {
public:
    RenderPass(const GaussianScene& scene, const CameraPose& pose, const PerspectiveIntrinsics& intr,
               const RenderOptions& options = {});
    ~RenderPass();
    RenderPass(RenderPass&&) noexcept;
    RenderPass& operator=(RenderPass&&) noexcept;

    const RenderOutput& output() const;

    /// Gradients of L = sum over pixels of <grad_rgb, rgb>.
    SceneGradients backward(const Image& grad_rgb) const;

private:
    struct State;
    std::unique_ptr<State> state_;
};

RenderOutput render_perspective(const GaussianScene& scene, const CameraPose& pose,
                                const PerspectiveIntrinsics& intr, const RenderOptions& options = {});

SceneGradients render_backward(const GaussianScene& scene, const CameraPose& pose,
                               const PerspectiveIntrinsics& intr, const Image& grad_rgb,
                               const RenderOptions& options = {});

/// Panoramic render at `position`: six world-aligned 90 degree cube faces of
/// size grid.height composited into ERP. Depth is radial distance.
RenderOutput render_erp(const GaussianScene& scene, const Eigen::Vector3d& position, const ErpGrid& grid,
                        const RenderOptions& options = {});

}  // namespace panosplat
