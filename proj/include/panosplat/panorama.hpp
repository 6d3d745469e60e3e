// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "panosplat/image.hpp"
#include "panosplat/sphere_geom.hpp"

namespace panosplat {

/// Equirectangular RGB image with an optional aligned metric depth map.
/// Depth holds radial distance along the pixel ray; 0 marks invalid pixels.
struct Panorama {
    Image rgb;    // H x W x 3
    Image depth;  // H x W x 1, or empty
    ErpGrid grid;

    bool has_depth() const noexcept { return !depth.empty(); }

    /// Validates shapes and builds the grid from the RGB image.
    static Panorama from_images(Image rgb, Image depth = {});
};

}  // namespace panosplat
