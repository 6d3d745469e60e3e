// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "panosplat/error.hpp"

namespace panosplat {

/// Row-major interleaved image with double-precision samples. RGB images are
/// linear values in [0, 1]; single-channel images hold alpha or metric depth.
class Image {
public:
    Image() = default;
    Image(int height, int width, int channels, double fill = 0.0)
        : height_(height), width_(width), channels_(channels) {
        require(height >= 0 && width >= 0 && channels >= 1, ErrorCode::InvalidArgument,
                "image dimensions must be non-negative with at least one channel");
        data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
    }

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    int channels() const noexcept { return channels_; }
    bool empty() const noexcept { return data_.empty(); }
    std::size_t size() const noexcept { return data_.size(); }

    bool same_shape(const Image& other) const noexcept {
        return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
    }

    double& at(int y, int x, int c = 0) noexcept { return data_[index(y, x, c)]; }
    double at(int y, int x, int c = 0) const noexcept { return data_[index(y, x, c)]; }

    std::span<double> pixel(int y, int x) noexcept {
        return {data_.data() + index(y, x, 0), static_cast<std::size_t>(channels_)};
    }
    std::span<const double> pixel(int y, int x) const noexcept {
        return {data_.data() + index(y, x, 0), static_cast<std::size_t>(channels_)};
    }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    bool operator==(const Image& other) const = default;

private:
    std::size_t index(int y, int x, int c) const noexcept {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }

    int height_ = 0;
    int width_ = 0;
    int channels_ = 0;
    std::vector<double> data_;
};

}  // namespace panosplat
