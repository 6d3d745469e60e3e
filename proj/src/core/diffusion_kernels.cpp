// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "panosplat/diffusion_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "panosplat/error.hpp"

namespace panosplat {

void VideoSequence::validate() const {
    require(!frames.empty(), ErrorCode::InvalidArgument, "video has no frames");
    require(alpha.size() == frames.size(), ErrorCode::InvalidArgument, "video alpha and frame counts differ");
    for (std::size_t t = 0; t < frames.size(); ++t) {
        require(frames[t].height() == grid.height && frames[t].width() == grid.width && frames[t].channels() == 3,
                ErrorCode::InvalidArgument, "frame " + std::to_string(t) + " does not match the video grid");
        require(alpha[t].height() == grid.height && alpha[t].width() == grid.width && alpha[t].channels() == 1,
                ErrorCode::InvalidArgument, "alpha " + std::to_string(t) + " does not match the video grid");
    }
}

StreamPair decompose(const VideoSequence& video) {
    video.validate();
    StreamPair out;
    for (std::size_t t = 0; t < video.length(); ++t) {
        const Image& v = video.frames[t];
        const Image& m = video.alpha[t];
        Image bg(v.height(), v.width(), 3), fg(v.height(), v.width(), 3);
        for (int y = 0; y < v.height(); ++y) {
            for (int x = 0; x < v.width(); ++x) {
                const double a = m.at(y, x);
                for (int c = 0; c < 3; ++c) {
                    const double value = v.at(y, x, c);
                    // second subtraction is exact, so bg + fg reproduces value bit for bit
                    bg.at(y, x, c) = value - value * a;
                    fg.at(y, x, c) = value - bg.at(y, x, c);
                }
            }
        }
        out.background.push_back(std::move(bg));
        out.foreground.push_back(std::move(fg));
    }
    return out;
}

Image identity_encoder(const Image& frame) { return frame; }

namespace {

Image stack_channels(const Image& a, const Image& b) {
    Image out(a.height(), a.width(), a.channels() + b.channels());
    for (int y = 0; y < a.height(); ++y) {
        for (int x = 0; x < a.width(); ++x) {
            for (int c = 0; c < a.channels(); ++c) out.at(y, x, c) = a.at(y, x, c);
            for (int c = 0; c < b.channels(); ++c) out.at(y, x, a.channels() + c) = b.at(y, x, c);
        }
    }
    return out;
}

}  // namespace

ConditionTensor assemble_condition(const Image& anchor, const VideoSequence& video, const FrameEncoder& encoder) {
    video.validate();
    require(anchor.height() == video.grid.height && anchor.width() == video.grid.width && anchor.channels() == 3,
            ErrorCode::InvalidArgument, "anchor shape does not match the video frames");
    const StreamPair streams = decompose(video);

    auto encode = [&](const Image& frame, const Image* reference) {
        Image z = encoder(frame);
        if (reference) {
            require(z.same_shape(*reference), ErrorCode::InvalidArgument, "encoder output shape changed between frames");
        }
        return z;
    };

    // the anchor is a fully observed frame: background zero, foreground = anchor
    const Image anchor_fg = encode(anchor, nullptr);
    const Image anchor_bg = encode(Image(anchor.height(), anchor.width(), 3), &anchor_fg);
    ConditionTensor out;
    out.slices.push_back(stack_channels(anchor_bg, anchor_fg));
    for (std::size_t t = 0; t < video.length(); ++t) {
        const Image bg = encode(streams.background[t], &anchor_fg);
        const Image fg = encode(streams.foreground[t], &anchor_fg);
        out.slices.push_back(stack_channels(bg, fg));
    }
    return out;
}

NoiseSchedule NoiseSchedule::linear(std::size_t n, double first, double last) {
    require(n >= 1, ErrorCode::InvalidArgument, "schedule needs at least one step");
    require(first <= 1.0 && last > 0.0 && last <= first, ErrorCode::InvalidArgument, "schedule must lie in (0, 1] and not increase");
    NoiseSchedule s;
    s.alpha_bar.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        s.alpha_bar[t] = n == 1 ? first : first + (last - first) * static_cast<double>(t) / static_cast<double>(n - 1);
    }
    return s;
}

void NoiseSchedule::validate() const {
    require(!alpha_bar.empty(), ErrorCode::InvalidArgument, "empty noise schedule");
    for (std::size_t t = 0; t < alpha_bar.size(); ++t) {
        require(alpha_bar[t] > 0.0 && alpha_bar[t] <= 1.0, ErrorCode::InvalidArgument, "alpha_bar outside (0, 1]");
        require(t == 0 || alpha_bar[t] <= alpha_bar[t - 1], ErrorCode::InvalidArgument, "alpha_bar must not increase");
    }
}

Image forward_noise(const Image& z0, std::size_t t, const NoiseSchedule& sched, const Image& eps) {
    if (t >= sched.steps()) fail(ErrorCode::Domain, "timestep " + std::to_string(t) + " outside the schedule");
    require(z0.same_shape(eps), ErrorCode::InvalidArgument, "noise shape does not match the latent");
    const double ab = sched.alpha_bar[t];
    if (ab == 1.0) return z0;
    const double a = std::sqrt(ab), b = std::sqrt(1.0 - ab);
    Image out = z0;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = a * z0.data()[i] + b * eps.data()[i];
    return out;
}

int warp_source_column(int x, int y, const ErpGrid& grid) {
    const int col = static_cast<int>(std::floor(warp_coords(x + 0.5, y + 0.5, grid)));
    return ((col % grid.width) + grid.width) % grid.width;
}

Image warp_noise(const Image& eps, const ErpGrid& grid) {
    require(eps.height() == grid.height && eps.width() == grid.width, ErrorCode::InvalidArgument,
            "noise field does not match the grid");
    Image out(eps.height(), eps.width(), eps.channels());
    std::vector<int> src(static_cast<std::size_t>(grid.width));
    for (int y = 0; y < grid.height; ++y) {
        for (int x = 0; x < grid.width; ++x) src[x] = warp_source_column(x, y, grid);
        for (int x = 0; x < grid.width; ++x) {
            const auto from = eps.pixel(y, src[x]);
            std::copy(from.begin(), from.end(), out.pixel(y, x).begin());
        }
    }
    return out;
}

Image decay_weights(const ErpGrid& grid, double lambda) {
    require(lambda >= 0.0 && lambda <= 1.0, ErrorCode::Domain, "decay lambda must lie in [0, 1]");
    Image w(grid.height, grid.width, 1);
    for (int y = 0; y < grid.height; ++y) {
        const double value = lambda == 1.0 ? 1.0 : lambda + (1.0 - lambda) * std::cos(latitude_of_row(y + 0.5, grid));
        for (int x = 0; x < grid.width; ++x) w.at(y, x) = value;
    }
    return w;
}

double weighted_loss(const Image& pred, const Image& target, const Image& weights) {
    require(pred.same_shape(target), ErrorCode::InvalidArgument, "prediction and target shapes differ");
    const bool broadcast = weights.channels() == 1;
    require(weights.height() == pred.height() && weights.width() == pred.width() &&
                (broadcast || weights.channels() == pred.channels()),
            ErrorCode::InvalidArgument, "weights do not broadcast to the prediction");
    double num = 0.0, den = 0.0;
    for (int y = 0; y < pred.height(); ++y) {
        for (int x = 0; x < pred.width(); ++x) {
            for (int c = 0; c < pred.channels(); ++c) {
                const double w = weights.at(y, x, broadcast ? 0 : c);
                const double d = pred.at(y, x, c) - target.at(y, x, c);
                num += w * d * d;
                den += w;
            }
        }
    }
    require(den > 0.0, ErrorCode::Domain, "weights sum to zero");
    return num / den;
}

}  // namespace panosplat
