// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "panosplat/panorama.hpp"
#include "panosplat/scene_model.hpp"

namespace panosplat {

struct LiftOptions {
    int stride = 1;
    /// Isotropic scale = scale_gain * depth * (2 pi stride / W).
    double scale_gain = 0.7;
    /// Stand-in for full opacity; exactly 1 has no finite logit.
    double opacity_init = 0.99;
};

/// Lifts every `stride`-th pixel with valid depth into an opaque isotropic
/// Gaussian at depth * ray direction. Output order is row-major.
GaussianScene lift_panorama(const Panorama& pano, const LiftOptions& options = {});

/// Multiplies valid depth samples by `scale`; used for the dataset-specific
/// depth-to-meters factor.
void apply_depth_scale(Panorama& pano, double scale);

}  // namespace panosplat
