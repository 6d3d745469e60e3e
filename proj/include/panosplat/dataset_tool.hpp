// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "panosplat/pano_init.hpp"
#include "panosplat/rasterizer.hpp"
#include "panosplat/scene_model.hpp"
#include "panosplat/sphere_geom.hpp"
#include "panosplat/trajectory.hpp"

namespace panosplat {

struct RoomBounds {
    Eigen::Vector3d min = Eigen::Vector3d::Zero();
    Eigen::Vector3d max = Eigen::Vector3d::Zero();

    Eigen::Vector3d extent() const { return max - min; }
};

struct SceneSpec {
    GaussianScene gt_scene;
    RoomBounds room_bounds;
    std::uint64_t seed = 0;

    void validate() const;
};

enum class FixtureKind { BoxRoom, Corridor, Cluttered };

const char* fixture_name(FixtureKind kind);
FixtureKind parse_fixture_kind(std::string_view name);

// Floor and ceiling heights relative to the camera plane (y = 0).
inline constexpr double kFloorY = -1.6;
inline constexpr double kCeilingY = 1.0;

struct FixtureOptions {
    /// Grid pitch of the wall, floor and ceiling sheets, meters.
    double sheet_spacing = 0.08;
};

/// Procedural closed room built from flat Gaussian sheets. Dimensions, surface
/// colors and furniture placement depend only on (kind, seed).
SceneSpec synth_fixture_scene(FixtureKind kind, std::uint64_t seed, const FixtureOptions& options = {});

inline constexpr double kClosedRoomAlpha = 0.95;
inline constexpr double kClosedRoomFraction = 0.90;

/// Fraction of origin ERP pixels with alpha >= kClosedRoomAlpha.
double closed_room_fraction(const GaussianScene& scene, const ErpGrid& grid, const RenderOptions& render = {});
bool is_closed_room(const SceneSpec& spec, const ErpGrid& grid = ErpGrid(64, 128));

struct DatasetOptions {
    int n_frames = 41;
    double anchor_spacing = 0.5;
    double speed = 1.0;  // m/s
    double fps = 10.0;
    NavMapOptions nav;
    /// Wider than the LiftOptions default so frame 0 of the degraded video
    /// reaches alpha 255 after 8-bit quantization on every lifted pixel.
    LiftOptions lift{.stride = 1, .scale_gain = 0.85};
    RenderOptions render;
};

inline constexpr int kDatasetSchemaVersion = 1;

struct SampleManifest {
    int schema_version = kDatasetSchemaVersion;
    int height = 0;
    int width = 0;
    int n_frames = 0;
    double fps = 10.0;
    double speed = 1.0;
    double camera_height = 1.6;
    std::uint64_t seed = 0;
    Eigen::Vector2d start = Eigen::Vector2d::Zero();
    Eigen::Vector2d end = Eigen::Vector2d::Zero();
    std::vector<std::string> gt;        // paths relative to the sample directory
    std::vector<std::string> degraded;
    std::vector<std::string> alpha;
    std::string anchor = "anchor.png";
    std::string depth0 = "depth0.pfm";
    std::string trajectory = "trajectory.txt";
    std::vector<std::string> pose_files;
};

void write_manifest(const std::filesystem::path& path, const SampleManifest& manifest);
SampleManifest read_manifest(const std::filesystem::path& path);

struct GenerateResult {
    bool written = false;
    std::string skip_reason;  // set when written is false
    Trajectory trajectory;
    SampleManifest manifest;
};

/// Renders a GT / degraded pair along the longest straight navigable segment
/// of the room and writes it to out_dir. A zero-length segment skips the
/// sample and reports why instead of throwing.
GenerateResult generate_pair(const SceneSpec& spec, const ErpGrid& grid, const std::filesystem::path& out_dir,
                             const DatasetOptions& options = {});

/// Independent samples sample_%05d under root, generated in parallel.
std::vector<GenerateResult> generate_dataset(const std::vector<SceneSpec>& specs, const ErpGrid& grid,
                                             const std::filesystem::path& root, const DatasetOptions& options = {});

struct VerifyReport {
    std::vector<std::string> problems;

    bool ok() const noexcept { return problems.empty(); }
};

/// Checks a sample directory against its manifest: file lists, image shapes,
/// pose files, and frame-0 alpha coverage on valid depth.
VerifyReport verify_sample(const std::filesystem::path& dir);

}  // namespace panosplat
