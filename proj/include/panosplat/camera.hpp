// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace panosplat {

// Camera frame: +X right, +Y up, +Z forward. With an identity orientation the
// camera frame coincides with the world frame, so the identity camera looks
// along the panorama's forward direction (longitude 0) with world +Y up.
// Image rows grow downward: v = cy - f * y / z, u = cx + f * x / z.

/// Rigid camera pose; `orientation` maps camera-frame vectors to world frame.
struct CameraPose {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
};

struct PerspectiveIntrinsics {
    double fov_y = 1.5707963267948966;
    int width = 0;
    int height = 0;

    /// Focal length in pixels (square pixels, principal point at the center).
    double focal() const;
    void validate() const;
};

/// Rotation about world +Y by `yaw` radians; yaw 0 looks along +Z and positive
/// yaw turns toward +X (increasing panorama longitude).
Eigen::Quaterniond yaw_rotation(double yaw);

enum class CubeFace { PosX = 0, NegX, PosY, NegY, PosZ, NegZ };

inline constexpr std::array<CubeFace, 6> kCubeFaces = {CubeFace::PosX, CubeFace::NegX, CubeFace::PosY,
                                                       CubeFace::NegY, CubeFace::PosZ, CubeFace::NegZ};

/// World-from-camera orientation whose forward axis is the given face axis.
Eigen::Quaterniond cube_face_orientation(CubeFace face);

/// Face whose axis has the largest absolute component of `dir`; ties resolve
/// in the order X, Y, Z.
CubeFace cube_face_for(const Eigen::Vector3d& dir);

}  // namespace panosplat
