// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "panosplat/image.hpp"
#include "panosplat/sphere_geom.hpp"

namespace panosplat {

struct VideoSequence {
    std::vector<Image> frames;  // T x (H x W x 3)
    std::vector<Image> alpha;   // T x (H x W x 1)
    ErpGrid grid{2, 4};

    std::size_t length() const noexcept { return frames.size(); }
    void validate() const;
};

struct StreamPair {
    std::vector<Image> background;  // V * (1 - M)
    std::vector<Image> foreground;  // V * M
};

StreamPair decompose(const VideoSequence& video);

/// Maps one frame to its latent; the default is the identity.
using FrameEncoder = std::function<Image(const Image&)>;
Image identity_encoder(const Image& frame);

/// Slice 0 is the anchor; each slice stacks background channels then
/// foreground channels.
struct ConditionTensor {
    std::vector<Image> slices;
    std::size_t length() const noexcept { return slices.size(); }
};

ConditionTensor assemble_condition(const Image& anchor, const VideoSequence& video,
                                   const FrameEncoder& encoder = identity_encoder);

struct NoiseSchedule {
    std::vector<double> alpha_bar;  // alpha_bar[0] = 1, non-increasing

    std::size_t steps() const noexcept { return alpha_bar.size(); }
    /// Linear alpha_bar from `first` to `last` over n steps.
    static NoiseSchedule linear(std::size_t n = 1000, double first = 1.0, double last = 0.01);
    void validate() const;
};

/// z_t = sqrt(alpha_bar_t) z0 + sqrt(1 - alpha_bar_t) eps.
Image forward_noise(const Image& z0, std::size_t t, const NoiseSchedule& sched, const Image& eps);

/// Nearest-neighbour source column of the latitude warp for output pixel x in
/// row y, wrapped into [0, W).
int warp_source_column(int x, int y, const ErpGrid& grid);

/// out(y, x) = eps(y, warp_source_column(x, y)), every channel.
Image warp_noise(const Image& eps, const ErpGrid& grid);

/// lambda + (1 - lambda) cos(phi(y + 0.5)), H x W x 1.
Image decay_weights(const ErpGrid& grid, double lambda);

/// Sum w (pred - target)^2 / sum w over every channel; weights are H x W x 1
/// (broadcast over channels) or the full shape.
double weighted_loss(const Image& pred, const Image& target, const Image& weights);

}  // namespace panosplat
