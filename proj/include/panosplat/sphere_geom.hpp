// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <utility>

#include <Eigen/Core>

#include "panosplat/camera.hpp"
#include "panosplat/image.hpp"

namespace panosplat {

// Equirectangular conventions. World frame is Y-up with +Z forward at
// longitude 0; longitude grows to the right of the image toward +X. Pixel (i, j)
// covers [i, i+1) x [j, j+1), so its center is at (i + 0.5, j + 0.5). Sampling
// wraps in longitude and clamps in latitude.

struct ErpGrid {
    int height = 0;
    int width = 0;

    ErpGrid() = default;
    ErpGrid(int h, int w);

    /// Grid with the conventional 2:1 aspect.
    static ErpGrid with_height(int h) { return ErpGrid(h, 2 * h); }

    bool operator==(const ErpGrid&) const = default;
};

/// Viewing direction with unit Euclidean norm.
class UnitDir {
public:
    UnitDir() = default;
    /// Normalizes `v`; throws on a zero or non-finite vector.
    explicit UnitDir(const Eigen::Vector3d& v);

    double dx() const noexcept { return v_.x(); }
    double dy() const noexcept { return v_.y(); }
    double dz() const noexcept { return v_.z(); }
    const Eigen::Vector3d& vec() const noexcept { return v_; }

private:
    Eigen::Vector3d v_ = Eigen::Vector3d::UnitZ();
};

struct PixelCoord {
    double y = 0.0;
    double x = 0.0;
};

/// Latitude of continuous row coordinate y: (0.5 - y/H) * pi.
double latitude_of_row(double y, const ErpGrid& grid);

/// Longitude of continuous column coordinate x: (x/W - 0.5) * 2pi.
double longitude_of_col(double x, const ErpGrid& grid);

UnitDir pixel_to_dir(double y, double x, const ErpGrid& grid);

/// Inverse of pixel_to_dir; x wraps into [0, W). Exact poles return x = 0.
PixelCoord dir_to_pixel(const UnitDir& d, const ErpGrid& grid);

/// WS-PSNR row weight: cosine of the latitude at the row's pixel center.
double erp_weight_row(int y, const ErpGrid& grid);

/// Latitude-aware noise coordinate: x_c + (x - x_c) * cos(latitude(y)), x_c = W/2.
double warp_coords(double x, double y, const ErpGrid& grid);

/// Bilinear sample of an ERP image at continuous (y, x); wraps horizontally,
/// clamps vertically. Writes `image.channels()` values to `out`.
void sample_erp_bilinear(const Image& erp, double y, double x, std::span<double> out);

/// Resamples an ERP image (any channel count) into a perspective view.
Image erp_to_perspective(const Image& erp, const CameraPose& pose, double fov, int out_w, int out_h);

/// Cubemap faces in `kCubeFaces` order, each square with a 90 degree field of view.
using CubeFaces = std::array<Image, 6>;

/// Composes six cube faces into an ERP image. Each ERP pixel samples exactly
/// one face, chosen by `cube_face_for`.
Image perspective_to_erp(const CubeFaces& faces, const ErpGrid& grid);

/// Renders the six cube faces of an ERP image at the given resolution.
CubeFaces erp_to_cubemap(const Image& erp, int face_size);

}  // namespace panosplat
