// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "panosplat/pano_init.hpp"

#include <cmath>
#include <numbers>

namespace panosplat {

namespace {

bool valid_depth(double d) { return std::isfinite(d) && d > 0.0; }

}  // namespace

GaussianScene lift_panorama(const Panorama& pano, const LiftOptions& options) {
    require(pano.has_depth(), ErrorCode::InvalidArgument, "panorama has no depth map");
    require(options.stride >= 1, ErrorCode::InvalidArgument, "stride must be >= 1");
    require(options.scale_gain > 0.0, ErrorCode::InvalidArgument, "scale gain must be positive");
    const double opacity_logit = logit(options.opacity_init);
    const ErpGrid& grid = pano.grid;
    const double angular_step = 2.0 * std::numbers::pi * options.stride / grid.width;

    GaussianScene scene;
    for (int y = 0; y < grid.height; y += options.stride) {
        for (int x = 0; x < grid.width; x += options.stride) {
            const double d = pano.depth.at(y, x);
            if (!valid_depth(d)) continue;
            const Eigen::Vector3d mu = d * pixel_to_dir(y + 0.5, x + 0.5, grid).vec();
            const auto log_s = static_cast<float>(std::log(options.scale_gain * d * angular_step));
            Gaussian g;
            g.mu = {static_cast<float>(mu.x()), static_cast<float>(mu.y()), static_cast<float>(mu.z())};
            g.log_scale = {log_s, log_s, log_s};
            g.rot = {1.0f, 0.0f, 0.0f, 0.0f};
            g.opacity_logit = static_cast<float>(opacity_logit);
            g.color = {static_cast<float>(pano.rgb.at(y, x, 0)), static_cast<float>(pano.rgb.at(y, x, 1)),
                       static_cast<float>(pano.rgb.at(y, x, 2))};
            scene.gaussians.push_back(g);
        }
    }
    require(!scene.empty(), ErrorCode::Domain, "empty scene: no pixel has valid depth");
    return scene;
}

void apply_depth_scale(Panorama& pano, double scale) {
    require(std::isfinite(scale) && scale > 0.0, ErrorCode::InvalidArgument, "depth scale must be positive");
    if (scale == 1.0) return;
    for (double& d : pano.depth.data()) {
        if (valid_depth(d)) d *= scale;
    }
}

}  // namespace panosplat
