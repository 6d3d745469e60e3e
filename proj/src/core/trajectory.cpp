// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "panosplat/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <tuple>

#include "panosplat/error.hpp"
#include "panosplat/sphere_geom.hpp"

namespace panosplat {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Whole half-cell steps from the origin before leaving the navigable set.
long ray_steps(const NavMap& nav, double psi, double max_range) {
    const double step = 0.5 * nav.cell_size;
    const Eigen::Vector2d dir = heading(psi);
    const long max_steps = static_cast<long>(std::floor(max_range / step + 1e-9));
    long k = 0;
    while (k < max_steps && nav.navigable_at(dir * (step * static_cast<double>(k + 1)))) ++k;
    return k;
}

}  // namespace

NavMap::NavMap(int rows_, int cols_, double cell_size_, int origin_row_, int origin_col_)
    : rows(rows_), cols(cols_), cell_size(cell_size_), origin_row(origin_row_), origin_col(origin_col_) {
    require(rows > 0 && cols > 0, ErrorCode::InvalidArgument, "nav map needs a positive size");
    require(cell_size > 0.0, ErrorCode::InvalidArgument, "nav map cell size must be positive");
    cells.assign(static_cast<std::size_t>(rows) * cols, 0);
}

std::pair<int, int> NavMap::cell_of(const Eigen::Vector2d& p) const {
    const double c = std::floor(p.x() / cell_size + 0.5) + origin_col;
    const double r = std::floor(p.y() / cell_size + 0.5) + origin_row;
    constexpr double lim = 1e9;
    return {static_cast<int>(std::clamp(r, -lim, lim)), static_cast<int>(std::clamp(c, -lim, lim))};
}

Eigen::Vector2d NavMap::cell_center(int r, int c) const {
    return {(c - origin_col) * cell_size, (r - origin_row) * cell_size};
}

bool NavMap::navigable_at(const Eigen::Vector2d& p) const {
    const auto [r, c] = cell_of(p);
    return navigable(r, c);
}

std::size_t NavMap::navigable_count() const {
    return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), std::uint8_t{1}));
}

NavMap build_nav_map(const Panorama& pano, const NavMapOptions& opt) {
    require(pano.has_depth(), ErrorCode::InvalidArgument, "navigation map needs a depth panorama");
    require(opt.camera_height > 0.0, ErrorCode::InvalidArgument, "camera height must be positive");
    require(opt.cell_size > 0.0 && opt.clearance >= 0.0, ErrorCode::InvalidArgument, "invalid nav map options");
    const ErpGrid& grid = pano.grid;

    struct FloorPoint {
        double x, z, height;
    };
    std::vector<FloorPoint> points;
    std::vector<double> hull(static_cast<std::size_t>(grid.width), 0.0);
    double extent = 0.0;
    for (int y = 0; y < grid.height; ++y) {
        for (int x = 0; x < grid.width; ++x) {
            const double d = pano.depth.at(y, x);
            if (!(d > 0.0) || !std::isfinite(d)) continue;
            const Eigen::Vector3d p = d * pixel_to_dir(y + 0.5, x + 0.5, grid).vec();
            const double radius = std::hypot(p.x(), p.z());
            hull[x] = std::max(hull[x], radius);
            extent = std::max(extent, radius);
            points.push_back({p.x(), p.z(), p.y() + opt.camera_height});
        }
    }

    const int half = static_cast<int>(std::ceil(std::min(extent, 1e4) / opt.cell_size)) + 1;
    NavMap nav(2 * half + 1, 2 * half + 1, opt.cell_size, half, half);
    std::vector<std::uint8_t> obstructed(nav.cells.size(), 0);
    for (const FloorPoint& p : points) {
        if (p.height < opt.band_low || p.height > opt.band_high) continue;
        const auto [r, c] = nav.cell_of({p.x, p.z});
        if (nav.in_bounds(r, c)) obstructed[std::size_t(r) * nav.cols + c] = 1;
    }

    // clearance: block every cell whose center is within `clearance` of an obstructed center
    const int reach = static_cast<int>(std::floor(opt.clearance / opt.cell_size + 1e-9));
    std::vector<std::pair<int, int>> disk;
    for (int dr = -reach; dr <= reach; ++dr)
        for (int dc = -reach; dc <= reach; ++dc)
            if ((dr * dr + dc * dc) * opt.cell_size * opt.cell_size <= opt.clearance * opt.clearance + 1e-12)
                disk.emplace_back(dr, dc);
    std::vector<std::uint8_t> blocked(nav.cells.size(), 0);
    for (int r = 0; r < nav.rows; ++r) {
        for (int c = 0; c < nav.cols; ++c) {
            if (!obstructed[std::size_t(r) * nav.cols + c]) continue;
            for (const auto& [dr, dc] : disk)
                if (nav.in_bounds(r + dr, c + dc)) blocked[std::size_t(r + dr) * nav.cols + (c + dc)] = 1;
        }
    }

    std::vector<std::uint8_t> free(nav.cells.size(), 0);
    for (int r = 0; r < nav.rows; ++r) {
        for (int c = 0; c < nav.cols; ++c) {
            const std::size_t i = std::size_t(r) * nav.cols + c;
            if (blocked[i]) continue;
            const Eigen::Vector2d p = nav.cell_center(r, c);
            const double radius = p.norm();
            double theta = std::atan2(p.x(), p.y());
            int col = static_cast<int>(std::floor((theta / kTwoPi + 0.5) * grid.width));
            col = ((col % grid.width) + grid.width) % grid.width;
            if (radius <= hull[col]) free[i] = 1;
        }
    }

    const std::size_t origin = std::size_t(nav.origin_row) * nav.cols + nav.origin_col;
    require(free[origin] != 0, ErrorCode::Domain, "origin blocked: no navigable space at the camera position");
    std::deque<std::pair<int, int>> queue{{nav.origin_row, nav.origin_col}};
    nav.set(nav.origin_row, nav.origin_col, true);
    constexpr int kDr[4] = {-1, 1, 0, 0};
    constexpr int kDc[4] = {0, 0, -1, 1};
    while (!queue.empty()) {
        const auto [r, c] = queue.front();
        queue.pop_front();
        for (int k = 0; k < 4; ++k) {
            const int nr = r + kDr[k], nc = c + kDc[k];
            if (!nav.in_bounds(nr, nc) || nav.navigable(nr, nc) || !free[std::size_t(nr) * nav.cols + nc]) continue;
            nav.set(nr, nc, true);
            queue.emplace_back(nr, nc);
        }
    }
    return nav;
}

bool segment_navigable(const NavMap& nav, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    const double len = (b - a).norm();
    const double step = 0.5 * nav.cell_size;
    const long n = static_cast<long>(std::ceil(len / step));
    for (long k = 0; k <= n; ++k) {
        const double t = n == 0 ? 0.0 : static_cast<double>(k) / static_cast<double>(n);
        if (!nav.navigable_at(a + t * (b - a))) return false;
    }
    return true;
}

Eigen::Vector2d heading(double psi) { return {std::sin(psi), std::cos(psi)}; }

double ray_range(const NavMap& nav, double psi, double max_range) {
    if (!nav.navigable(nav.origin_row, nav.origin_col)) return 0.0;
    return std::min(static_cast<double>(ray_steps(nav, psi, max_range)) * 0.5 * nav.cell_size, max_range);
}

RadialPlan plan_radial(const NavMap& nav, const RadialOptions& opt) {
    require(opt.tau >= 1 && opt.n_offsets >= 1, ErrorCode::InvalidArgument, "tau and n_offsets must be positive");
    require(opt.max_range > 0.0, ErrorCode::InvalidArgument, "max_range must be positive");
    require(nav.navigable(nav.origin_row, nav.origin_col), ErrorCode::Domain, "origin blocked");
    const double delta = kTwoPi / (static_cast<double>(opt.tau) * opt.n_offsets);

    // integer step totals make the argmax and its tie-break exact
    long best_total = -1;
    std::size_t best = 0;
    std::vector<long> best_steps;
    for (int j = 0; j < opt.n_offsets; ++j) {
        const double psi = j * delta;
        std::vector<long> steps(static_cast<std::size_t>(opt.tau));
        long total = 0;
        for (int i = 0; i < opt.tau; ++i) {
            steps[i] = ray_steps(nav, psi + kTwoPi * i / opt.tau, opt.max_range);
            total += steps[i];
        }
        if (total > best_total) {
            best_total = total;
            best = static_cast<std::size_t>(j);
            best_steps = std::move(steps);
        }
    }
    require(best_total > 0, ErrorCode::Domain, "every radial direction is blocked at the origin");

    RadialPlan plan;
    plan.offset_index = best;
    plan.psi = static_cast<double>(best) * delta;
    const double step = 0.5 * nav.cell_size;
    for (int i = 0; i < opt.tau; ++i) {
        const double range = std::min(static_cast<double>(best_steps[i]) * step, opt.max_range);
        Trajectory t;
        t.end = heading(plan.psi + kTwoPi * i / opt.tau) * range;
        plan.ranges.push_back(range);
        plan.trajectories.push_back(t);
    }
    plan.total_range = static_cast<double>(best_total) * step;
    return plan;
}

Trajectory longest_linear_segment(const NavMap& nav, double anchor_spacing) {
    require(anchor_spacing > 0.0, ErrorCode::InvalidArgument, "anchor spacing must be positive");
    const double half_x = std::max(nav.origin_col, nav.cols - 1 - nav.origin_col) * nav.cell_size;
    const double half_z = std::max(nav.origin_row, nav.rows - 1 - nav.origin_row) * nav.cell_size;
    const int ni = static_cast<int>(std::ceil(half_x / anchor_spacing)) + 1;
    const int nj = static_cast<int>(std::ceil(half_z / anchor_spacing)) + 1;

    struct Anchor {
        int i, j;  // lattice coordinates along x and z
    };
    std::vector<Anchor> anchors;  // lexicographic by (x, z)
    for (int i = -ni; i <= ni; ++i)
        for (int j = -nj; j <= nj; ++j)
            if (nav.navigable_at({i * anchor_spacing, j * anchor_spacing})) anchors.push_back({i, j});

    struct Pair {
        long long len2;
        std::uint32_t a, b;
    };
    std::vector<Pair> pairs;
    pairs.reserve(anchors.size() * (anchors.size() > 0 ? anchors.size() - 1 : 0) / 2);
    for (std::size_t a = 0; a < anchors.size(); ++a) {
        for (std::size_t b = a + 1; b < anchors.size(); ++b) {
            const long long di = anchors[b].i - anchors[a].i, dj = anchors[b].j - anchors[a].j;
            pairs.push_back({di * di + dj * dj, static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)});
        }
    }
    // anchors are already lexicographic, so index order is endpoint order
    std::sort(pairs.begin(), pairs.end(), [](const Pair& l, const Pair& r) {
        return std::tie(r.len2, l.a, l.b) < std::tie(l.len2, r.a, r.b);
    });
    Trajectory out;
    for (const Pair& p : pairs) {
        const Eigen::Vector2d s(anchors[p.a].i * anchor_spacing, anchors[p.a].j * anchor_spacing);
        const Eigen::Vector2d e(anchors[p.b].i * anchor_spacing, anchors[p.b].j * anchor_spacing);
        if (segment_navigable(nav, s, e)) {
            out.start = s;
            out.end = e;
            return out;
        }
    }
    return out;
}

std::vector<Eigen::Vector2d> sample_navigable_points(const NavMap& nav, int count, std::uint64_t seed) {
    require(count >= 0, ErrorCode::InvalidArgument, "sample count must be non-negative");
    std::vector<std::pair<int, int>> free;
    for (int r = 0; r < nav.rows; ++r)
        for (int c = 0; c < nav.cols; ++c)
            if (nav.navigable(r, c)) free.emplace_back(r, c);
    require(!free.empty(), ErrorCode::Domain, "navigation map has no navigable cells");
    std::mt19937_64 rng(seed);
    std::vector<Eigen::Vector2d> pool;
    pool.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        const auto idx = static_cast<std::size_t>(unit_uniform(rng) * static_cast<double>(free.size()));
        const auto [r, c] = free[std::min(idx, free.size() - 1)];
        const double ox = (unit_uniform(rng) - 0.5) * 0.999 * nav.cell_size;
        const double oz = (unit_uniform(rng) - 0.5) * 0.999 * nav.cell_size;
        pool.push_back(nav.cell_center(r, c) + Eigen::Vector2d(ox, oz));
    }
    return pool;
}

std::vector<Eigen::Vector2d> farthest_point_sampling(const std::vector<Eigen::Vector2d>& pool,
                                                     const Eigen::Vector2d& first, int n) {
    require(n >= 1, ErrorCode::InvalidArgument, "farthest point sampling needs n >= 1");
    require(pool.size() + 1 >= static_cast<std::size_t>(n), ErrorCode::InvalidArgument, "pool too small");
    std::vector<Eigen::Vector2d> chosen{first};
    std::vector<double> dist(pool.size());
    for (std::size_t k = 0; k < pool.size(); ++k) dist[k] = (pool[k] - first).norm();
    while (chosen.size() < static_cast<std::size_t>(n)) {
        const auto it = std::max_element(dist.begin(), dist.end());
        const Eigen::Vector2d next = pool[static_cast<std::size_t>(it - dist.begin())];
        chosen.push_back(next);
        for (std::size_t k = 0; k < pool.size(); ++k) dist[k] = std::min(dist[k], (pool[k] - next).norm());
    }
    return chosen;
}

std::vector<Eigen::Vector2d> fps_eval_cameras(const NavMap& nav, int n_total, int pool_size, std::uint64_t seed) {
    require(n_total >= 1, ErrorCode::InvalidArgument, "need at least one evaluation camera");
    require(pool_size >= n_total, ErrorCode::InvalidArgument, "sample pool smaller than the requested camera count");
    require(nav.navigable(nav.origin_row, nav.origin_col), ErrorCode::Domain, "origin blocked");
    require(nav.navigable_count() >= static_cast<std::size_t>(n_total), ErrorCode::Domain,
            "navigable region too small for " + std::to_string(n_total) + " distinct cameras");
    return farthest_point_sampling(sample_navigable_points(nav, pool_size, seed), Eigen::Vector2d::Zero(), n_total);
}

std::vector<CameraPose> trajectory_to_poses(const Trajectory& traj, int n_frames) {
    require(n_frames >= 1, ErrorCode::InvalidArgument, "n_frames must be at least 1");
    require(traj.speed > 0.0 && traj.fps > 0.0, ErrorCode::InvalidArgument, "speed and fps must be positive");
    const double len = traj.length();
    const double spacing = traj.speed / traj.fps;
    std::vector<CameraPose> poses(static_cast<std::size_t>(n_frames));
    for (int k = 0; k < n_frames; ++k) {
        const double travel = std::min(spacing * k, len);
        const Eigen::Vector2d p = len > 0.0 ? Eigen::Vector2d(traj.start + (traj.end - traj.start) * (travel / len))
                                            : traj.start;
        poses[k].position = Eigen::Vector3d(p.x(), 0.0, p.y());
    }
    poses[0].position = Eigen::Vector3d(traj.start.x(), 0.0, traj.start.y());
    return poses;
}

void write_poses(std::ostream& out, const std::vector<CameraPose>& poses) {
    out << "# frame px py pz qw qx qy qz\n";
    char line[256];
    for (std::size_t k = 0; k < poses.size(); ++k) {
        const auto& p = poses[k].position;
        const auto& q = poses[k].orientation;
        std::snprintf(line, sizeof line, "%zu %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n", k, p.x(), p.y(), p.z(),
                      q.w(), q.x(), q.y(), q.z());
        out << line;
    }
}

std::vector<CameraPose> read_poses(std::istream& in) {
    std::vector<CameraPose> poses;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream fields(line);
        std::size_t frame = 0;
        double v[7];
        fields >> frame;
        for (double& x : v) fields >> x;
        require(static_cast<bool>(fields), ErrorCode::Parse, "poses line " + std::to_string(line_no) + ": expected 8 fields");
        require(frame == poses.size(), ErrorCode::Parse, "poses line " + std::to_string(line_no) + ": frame index out of sequence");
        CameraPose p;
        p.position = Eigen::Vector3d(v[0], v[1], v[2]);
        p.orientation = Eigen::Quaterniond(v[3], v[4], v[5], v[6]);
        poses.push_back(p);
    }
    return poses;
}

void save_poses(const std::filesystem::path& path, const std::vector<CameraPose>& poses) {
    std::ofstream out(path, std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + path.string());
    write_poses(out, poses);
    require(static_cast<bool>(out), ErrorCode::Io, "failed writing " + path.string());
}

std::vector<CameraPose> load_poses(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::NotFound, "poses file not found: " + path.string());
    try {
        return read_poses(in);
    } catch (const Error& e) {
        fail(e.code(), path.string() + ": " + e.what());
    }
}

}  // namespace panosplat
