// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

// Shared test fixtures and oracles. Nothing here calls into the code paths it
// is used to check.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include <Eigen/Core>

#include "panosplat/image.hpp"
#include "panosplat/scene_model.hpp"

namespace fixtures {

using panosplat::Image;

/// Smooth color field on the sphere, continuous across the seam and poles.
inline Eigen::Vector3d smooth_color(const Eigen::Vector3d& d) {
    return {0.5 + 0.25 * d.x() + 0.1 * std::sin(3.0 * d.y() + 1.0),
            0.5 + 0.2 * d.y() + 0.15 * std::cos(2.0 * d.z() + d.x()),
            0.5 + 0.3 * d.z() * d.x() + 0.1 * d.y()};
}

/// ERP direction at continuous (y, x), computed directly from the documented
/// convention.
inline Eigen::Vector3d erp_dir(double y, double x, int h, int w) {
    const double lat = (0.5 - y / h) * std::numbers::pi;
    const double lon = (x / w - 0.5) * 2.0 * std::numbers::pi;
    return {std::cos(lat) * std::sin(lon), std::sin(lat), std::cos(lat) * std::cos(lon)};
}

/// Same field plus band-limited detail (angular frequency 12).
inline Eigen::Vector3d detailed_color(const Eigen::Vector3d& d) {
    Eigen::Vector3d c = smooth_color(d);
    c[0] += 0.12 * std::sin(12.0 * d.x() + 3.0 * d.y());
    c[1] += 0.12 * std::cos(12.0 * d.z() - 2.0 * d.x());
    c[2] += 0.1 * std::sin(10.0 * d.y() + 6.0 * d.z());
    return c;
}

inline Image detailed_erp(int h) {
    Image img(h, 2 * h, 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < 2 * h; ++x) {
            const Eigen::Vector3d c = detailed_color(erp_dir(y + 0.5, x + 0.5, h, 2 * h));
            for (int k = 0; k < 3; ++k) img.at(y, x, k) = c[k];
        }
    return img;
}

inline Image smooth_erp(int h) {
    Image img(h, 2 * h, 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < 2 * h; ++x) {
            const Eigen::Vector3d c = smooth_color(erp_dir(y + 0.5, x + 0.5, h, 2 * h));
            for (int k = 0; k < 3; ++k) img.at(y, x, k) = c[k];
        }
    return img;
}

inline double mse(const Image& a, const Image& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        s += d * d;
    }
    return s / static_cast<double>(a.size());
}

inline double psnr(const Image& a, const Image& b) { return 10.0 * std::log10(1.0 / mse(a, b)); }

inline double mean(const Image& a) {
    double s = 0.0;
    for (double v : a.data()) s += v;
    return s / static_cast<double>(a.size());
}

/// Depth panorama of an axis-aligned box room seen from the origin, by ray
/// casting six planes. floor_y < 0 < ceil_y; walls at x = +-half_x, z = +-half_z.
inline Image box_room_depth(int h, double half_x, double half_z, double floor_y = -1.6, double ceil_y = 1.0) {
    Image depth(h, 2 * h, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < 2 * h; ++x) {
            const Eigen::Vector3d d = erp_dir(y + 0.5, x + 0.5, h, 2 * h);
            double t = 1e30;
            if (d.x() != 0.0) t = std::min(t, half_x / std::abs(d.x()));
            if (d.z() != 0.0) t = std::min(t, half_z / std::abs(d.z()));
            if (d.y() > 0.0) t = std::min(t, ceil_y / d.y());
            if (d.y() < 0.0) t = std::min(t, floor_y / d.y());
            depth.at(y, x) = t;
        }
    return depth;
}

/// Cylindrical room of radius r around the vertical axis through the origin.
inline Image round_room_depth(int h, double r, double floor_y = -1.6, double ceil_y = 1.0) {
    Image depth(h, 2 * h, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < 2 * h; ++x) {
            const Eigen::Vector3d d = erp_dir(y + 0.5, x + 0.5, h, 2 * h);
            const double horiz = std::hypot(d.x(), d.z());
            double t = horiz > 0.0 ? r / horiz : 1e30;
            if (d.y() > 0.0) t = std::min(t, ceil_y / d.y());
            if (d.y() < 0.0) t = std::min(t, floor_y / d.y());
            depth.at(y, x) = t;
        }
    return depth;
}

}  // namespace fixtures
