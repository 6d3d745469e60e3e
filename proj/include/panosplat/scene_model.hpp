// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace panosplat {

/// One anisotropic 3D Gaussian. Scales live in log space and opacity in logit
/// space so unconstrained optimizer steps stay inside the valid domain.
/// Color is view-independent (spherical-harmonics degree 0), linear RGB.
struct Gaussian {
    std::array<float, 3> mu{0.0f, 0.0f, 0.0f};
    std::array<float, 3> log_scale{0.0f, 0.0f, 0.0f};
    std::array<float, 4> rot{1.0f, 0.0f, 0.0f, 0.0f};  // w, x, y, z
    float opacity_logit = 0.0f;
    std::array<float, 3> color{0.0f, 0.0f, 0.0f};

    bool operator==(const Gaussian&) const = default;
};

/// Ordered primitive list; the index is the depth-sort tie-break key.
struct GaussianScene {
    std::vector<Gaussian> gaussians;

    std::size_t size() const noexcept { return gaussians.size(); }
    bool empty() const noexcept { return gaussians.empty(); }
    bool operator==(const GaussianScene&) const = default;
};

double sigmoid(double x);
double logit(double p);

/// Rotation matrix of a quaternion (w, x, y, z). Quaternions within 1e-3 of
/// unit norm are renormalized; anything further off throws.
Eigen::Matrix3d rotation_matrix(const std::array<float, 4>& q);

/// Sigma = R S S^T R^T with S = diag(exp(log_scale)).
Eigen::Matrix3d covariance(const Gaussian& g);

/// exp(-1/2 (p - mu)^T Sigma^-1 (p - mu)); throws when Sigma is singular.
double eval_density(const Gaussian& g, const Eigen::Vector3d& p);

struct SceneBounds {
    Eigen::Vector3d min = Eigen::Vector3d::Zero();
    Eigen::Vector3d max = Eigen::Vector3d::Zero();
};

/// Axis-aligned bounds of the centers; zero box for an empty scene.
SceneBounds scene_bounds(const GaussianScene& scene);

// `.gsb` container: "GSBINV01", u32 K, u32 sh_degree (0), then K records of
// 14 little-endian float32 values: mu[3], log_scale[3], rot[4] (w x y z),
// opacity_logit, color[3].
inline constexpr std::size_t kGsbHeaderSize = 16;
inline constexpr std::size_t kGsbRecordSize = 14 * sizeof(float);

std::vector<std::uint8_t> serialize(const GaussianScene& scene);
/// Throws Error(Parse) naming the byte offset of the first problem.
GaussianScene deserialize(std::span<const std::uint8_t> bytes);

void save_scene(const GaussianScene& scene, const std::filesystem::path& path);
GaussianScene load_scene(const std::filesystem::path& path);

}  // namespace panosplat
