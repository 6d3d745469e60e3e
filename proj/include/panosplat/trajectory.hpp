// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "panosplat/camera.hpp"
#include "panosplat/panorama.hpp"

namespace panosplat {

/// Floor-plane occupancy grid. Planar coordinates are (x, z) in meters on the
/// camera-height plane; row r covers z, column c covers x, and cell centers sit
/// at ((c - origin_col) * cell_size, (r - origin_row) * cell_size).
struct NavMap {
    int rows = 0;
    int cols = 0;
    double cell_size = 0.05;
    int origin_row = 0;
    int origin_col = 0;
    std::vector<std::uint8_t> cells;  // 1 = navigable

    NavMap() = default;
    NavMap(int rows, int cols, double cell_size, int origin_row, int origin_col);

    bool in_bounds(int r, int c) const noexcept { return r >= 0 && r < rows && c >= 0 && c < cols; }
    bool navigable(int r, int c) const noexcept { return in_bounds(r, c) && cells[std::size_t(r) * cols + c] != 0; }
    void set(int r, int c, bool value) { cells[std::size_t(r) * cols + c] = value ? 1 : 0; }

    /// Cell containing a planar point (nearest center).
    std::pair<int, int> cell_of(const Eigen::Vector2d& p) const;
    Eigen::Vector2d cell_center(int r, int c) const;
    bool navigable_at(const Eigen::Vector2d& p) const;
    std::size_t navigable_count() const;
};

struct NavMapOptions {
    double camera_height = 1.6;
    double clearance = 0.3;
    double cell_size = 0.05;
    double band_low = 0.2;   // obstacle band above the floor, meters
    double band_high = 1.8;
};

NavMap build_nav_map(const Panorama& pano, const NavMapOptions& options = {});

struct Trajectory {
    Eigen::Vector2d start = Eigen::Vector2d::Zero();
    Eigen::Vector2d end = Eigen::Vector2d::Zero();
    double speed = 1.0;  // m/s
    double fps = 10.0;

    double length() const { return (end - start).norm(); }
};

/// True when samples every 0.5 * cell_size along [a, b], both ends included,
/// are navigable.
bool segment_navigable(const NavMap& nav, const Eigen::Vector2d& a, const Eigen::Vector2d& b);

/// Planar heading: (x, z) = (sin psi, cos psi), matching ERP longitude.
Eigen::Vector2d heading(double psi);

/// Farthest navigable distance along a heading from the origin, in whole
/// half-cell steps, capped at max_range.
double ray_range(const NavMap& nav, double psi, double max_range);

struct RadialPlan {
    double psi = 0.0;
    std::size_t offset_index = 0;
    std::vector<double> ranges;
    std::vector<Trajectory> trajectories;
    double total_range = 0.0;
};

struct RadialOptions {
    int tau = 4;
    int n_offsets = 32;
    double max_range = 10.0;
};

RadialPlan plan_radial(const NavMap& nav, const RadialOptions& options = {});

Trajectory longest_linear_segment(const NavMap& nav, double anchor_spacing = 0.5);

/// Seeded uniform sample of points inside navigable cells.
std::vector<Eigen::Vector2d> sample_navigable_points(const NavMap& nav, int count, std::uint64_t seed);

/// Greedy farthest-point selection seeded with `first`; returns n points
/// including `first`. Ties go to the lowest pool index.
std::vector<Eigen::Vector2d> farthest_point_sampling(const std::vector<Eigen::Vector2d>& pool,
                                                     const Eigen::Vector2d& first, int n);

std::vector<Eigen::Vector2d> fps_eval_cameras(const NavMap& nav, int n_total, int pool_size, std::uint64_t seed);

/// Poses on the camera-height plane (world y = 0), world-aligned.
std::vector<CameraPose> trajectory_to_poses(const Trajectory& traj, int n_frames);

void write_poses(std::ostream& out, const std::vector<CameraPose>& poses);
std::vector<CameraPose> read_poses(std::istream& in);
void save_poses(const std::filesystem::path& path, const std::vector<CameraPose>& poses);
std::vector<CameraPose> load_poses(const std::filesystem::path& path);

}  // namespace panosplat
