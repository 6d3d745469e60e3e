// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "panosplat/sphere_geom.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "panosplat/parallel.hpp"

namespace panosplat {

namespace {

constexpr double kPi = std::numbers::pi;

int wrap_index(int i, int n) {
    const int r = i % n;
    return r < 0 ? r + n : r;
}

int clamp_index(int i, int n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); }

// a + t * (b - a) reproduces a bit-exactly when a == b.
double lerp(double a, double b, double t) { return a + t * (b - a); }

void sample_face_bilinear(const Image& face, double v, double u, std::span<double> out) {
    const double fy = v - 0.5;
    const double fx = u - 0.5;
    const int y0 = static_cast<int>(std::floor(fy));
    const int x0 = static_cast<int>(std::floor(fx));
    const double ty = fy - y0;
    const double tx = fx - x0;
    const int ya = clamp_index(y0, face.height());
    const int yb = clamp_index(y0 + 1, face.height());
    const int xa = clamp_index(x0, face.width());
    const int xb = clamp_index(x0 + 1, face.width());
    for (int c = 0; c < face.channels(); ++c) {
        const double top = lerp(face.at(ya, xa, c), face.at(ya, xb, c), tx);
        const double bottom = lerp(face.at(yb, xa, c), face.at(yb, xb, c), tx);
        out[c] = lerp(top, bottom, ty);
    }
}

}  // namespace

ErpGrid::ErpGrid(int h, int w) : height(h), width(w) {
    if (!(h >= 2 && w >= 2 && w % 2 == 0))
        fail(ErrorCode::InvalidArgument, "ERP grid needs H >= 2 and an even W >= 2 (got " + std::to_string(h) + "x" + std::to_string(w) + ")");
}

UnitDir::UnitDir(const Eigen::Vector3d& v) {
    const double n = v.norm();
    require(std::isfinite(n) && n > 0.0, ErrorCode::Domain, "direction must be finite and non-zero");
    v_ = v / n;
}

double latitude_of_row(double y, const ErpGrid& grid) {
    if (!(y >= 0.0 && y <= grid.height))
        fail(ErrorCode::Domain, "row coordinate " + std::to_string(y) + " outside [0, " + std::to_string(grid.height) + "]");
    return (0.5 - y / grid.height) * kPi;
}

double longitude_of_col(double x, const ErpGrid& grid) {
    if (!(x >= 0.0 && x <= grid.width))
        fail(ErrorCode::Domain, "column coordinate " + std::to_string(x) + " outside [0, " + std::to_string(grid.width) + "]");
    return (x / grid.width - 0.5) * 2.0 * kPi;
}

UnitDir pixel_to_dir(double y, double x, const ErpGrid& grid) {
    const double lat = latitude_of_row(y, grid);
    const double lon = longitude_of_col(x, grid);
    const double c = std::cos(lat);
    return UnitDir(Eigen::Vector3d(c * std::sin(lon), std::sin(lat), c * std::cos(lon)));
}

PixelCoord dir_to_pixel(const UnitDir& d, const ErpGrid& grid) {
    const double horizontal = std::hypot(d.dx(), d.dz());
    const double lat = std::atan2(d.dy(), horizontal);
    PixelCoord p;
    p.y = grid.height * (0.5 - lat / kPi);
    if (horizontal == 0.0) {
        p.x = 0.0;
        return p;
    }
    const double lon = std::atan2(d.dx(), d.dz());
    double x = grid.width * (lon / (2.0 * kPi) + 0.5);
    if (x >= grid.width) x -= grid.width;
    if (x < 0.0) x += grid.width;
    p.x = x;
    return p;
}

double erp_weight_row(int y, const ErpGrid& grid) {
    require(y >= 0 && y < grid.height, ErrorCode::Domain, "row index outside grid");
    return std::cos(latitude_of_row(y + 0.5, grid));
}

double warp_coords(double x, double y, const ErpGrid& grid) {
    require(x >= 0.0 && x <= grid.width, ErrorCode::Domain, "column coordinate outside grid");
    const double center = 0.5 * grid.width;
    return center + (x - center) * std::cos(latitude_of_row(y, grid));
}

void sample_erp_bilinear(const Image& erp, double y, double x, std::span<double> out) {
    const double fy = y - 0.5;
    const double fx = x - 0.5;
    const int y0 = static_cast<int>(std::floor(fy));
    const int x0 = static_cast<int>(std::floor(fx));
    const double ty = fy - y0;
    const double tx = fx - x0;
    const int ya = clamp_index(y0, erp.height());
    const int yb = clamp_index(y0 + 1, erp.height());
    const int xa = wrap_index(x0, erp.width());
    const int xb = wrap_index(x0 + 1, erp.width());
    for (int c = 0; c < erp.channels(); ++c) {
        const double top = lerp(erp.at(ya, xa, c), erp.at(ya, xb, c), tx);
        const double bottom = lerp(erp.at(yb, xa, c), erp.at(yb, xb, c), tx);
        out[c] = lerp(top, bottom, ty);
    }
}

Image erp_to_perspective(const Image& erp, const CameraPose& pose, double fov, int out_w, int out_h) {
    require(!erp.empty(), ErrorCode::InvalidArgument, "panorama is empty");
    PerspectiveIntrinsics intr{fov, out_w, out_h};
    intr.validate();
    const ErpGrid grid(erp.height(), erp.width());
    const double f = intr.focal();
    const Eigen::Matrix3d rot = pose.orientation.normalized().toRotationMatrix();

    Image out(out_h, out_w, erp.channels());
    parallel_for(static_cast<std::size_t>(out_h), [&](std::size_t row) {
        const int r = static_cast<int>(row);
        for (int c = 0; c < out_w; ++c) {
            const Eigen::Vector3d ray((c + 0.5 - 0.5 * out_w) / f, -(r + 0.5 - 0.5 * out_h) / f, 1.0);
            const PixelCoord p = dir_to_pixel(UnitDir(rot * ray), grid);
            sample_erp_bilinear(erp, p.y, p.x, out.pixel(r, c));
        }
    });
    return out;
}

CubeFaces erp_to_cubemap(const Image& erp, int face_size) {
    CubeFaces faces;
    for (std::size_t i = 0; i < kCubeFaces.size(); ++i) {
        CameraPose pose;
        pose.orientation = cube_face_orientation(kCubeFaces[i]);
        faces[i] = erp_to_perspective(erp, pose, kPi / 2.0, face_size, face_size);
    }
    return faces;
}

Image perspective_to_erp(const CubeFaces& faces, const ErpGrid& grid) {
    const int size = faces[0].height();
    const int channels = faces[0].channels();
    require(size >= 1, ErrorCode::InvalidArgument, "cube faces are empty");
    for (const Image& face : faces) {
        require(face.height() == size && face.width() == size && face.channels() == channels,
                ErrorCode::InvalidArgument, "cube faces must be square and share one size and channel count");
    }
    std::array<Eigen::Matrix3d, 6> camera_from_world;
    for (std::size_t i = 0; i < kCubeFaces.size(); ++i) {
        camera_from_world[i] = cube_face_orientation(kCubeFaces[i]).toRotationMatrix().transpose();
    }
    const double f = 0.5 * size;

    Image out(grid.height, grid.width, channels);
    parallel_for(static_cast<std::size_t>(grid.height), [&](std::size_t row) {
        const int y = static_cast<int>(row);
        for (int x = 0; x < grid.width; ++x) {
            const UnitDir d = pixel_to_dir(y + 0.5, x + 0.5, grid);
            const auto face = static_cast<std::size_t>(cube_face_for(d.vec()));
            const Eigen::Vector3d cam = camera_from_world[face] * d.vec();
            const double u = 0.5 * size + f * cam.x() / cam.z();
            const double v = 0.5 * size - f * cam.y() / cam.z();
            sample_face_bilinear(faces[face], v, u, out.pixel(y, x));
        }
    });
    return out;
}

}  // namespace panosplat
