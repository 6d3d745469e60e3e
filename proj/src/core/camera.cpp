// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "panosplat/camera.hpp"

#include <cmath>
#include <numbers>

#include "panosplat/error.hpp"

namespace panosplat {

double PerspectiveIntrinsics::focal() const {
    return 0.5 * height / std::tan(0.5 * fov_y);
}

void PerspectiveIntrinsics::validate() const {
    require(std::isfinite(fov_y) && fov_y > 0.0 && fov_y < std::numbers::pi, ErrorCode::Domain,
            "field of view must lie in (0, pi)");
    require(width >= 1 && height >= 1, ErrorCode::InvalidArgument, "intrinsics need a positive image size");
}

Eigen::Quaterniond yaw_rotation(double yaw) {
    return Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitY()));
}

Eigen::Quaterniond cube_face_orientation(CubeFace face) {
    constexpr double half_pi = std::numbers::pi / 2.0;
    switch (face) {
        case CubeFace::PosX: return yaw_rotation(half_pi);
        case CubeFace::NegX: return yaw_rotation(-half_pi);
        case CubeFace::PosY: return Eigen::Quaterniond(Eigen::AngleAxisd(-half_pi, Eigen::Vector3d::UnitX()));
        case CubeFace::NegY: return Eigen::Quaterniond(Eigen::AngleAxisd(half_pi, Eigen::Vector3d::UnitX()));
        case CubeFace::PosZ: return Eigen::Quaterniond::Identity();
        case CubeFace::NegZ: return yaw_rotation(std::numbers::pi);
    }
    return Eigen::Quaterniond::Identity();
}

CubeFace cube_face_for(const Eigen::Vector3d& dir) {
    const double ax = std::abs(dir.x());
    const double ay = std::abs(dir.y());
    const double az = std::abs(dir.z());
    if (ax >= ay && ax >= az) return dir.x() >= 0.0 ? CubeFace::PosX : CubeFace::NegX;
    if (ay >= az) return dir.y() >= 0.0 ? CubeFace::PosY : CubeFace::NegY;
    return dir.z() >= 0.0 ? CubeFace::PosZ : CubeFace::NegZ;
}

}  // namespace panosplat
