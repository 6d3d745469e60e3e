// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "panosplat/panorama.hpp"

namespace panosplat {

Panorama Panorama::from_images(Image rgb, Image depth) {
    require(rgb.channels() == 3, ErrorCode::InvalidArgument, "panorama rgb must have 3 channels");
    Panorama p;
    p.grid = ErpGrid(rgb.height(), rgb.width());
    if (!depth.empty()) {
        require(depth.channels() == 1 && depth.height() == rgb.height() && depth.width() == rgb.width(),
                ErrorCode::InvalidArgument, "depth map must be single channel and match the rgb size");
    }
    p.rgb = std::move(rgb);
    p.depth = std::move(depth);
    return p;
}

}  // namespace panosplat
