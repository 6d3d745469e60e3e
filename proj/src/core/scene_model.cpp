// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "panosplat/scene_model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include <Eigen/LU>

#include "panosplat/error.hpp"

namespace panosplat {

namespace {

constexpr char kMagic[8] = {'G', 'S', 'B', 'I', 'N', 'V', '0', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xffu));
}

void put_f32(std::vector<std::uint8_t>& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[offset + i]) << (8 * i);
    return v;
}

[[noreturn]] void parse_fail(std::size_t offset, const std::string& what) {
    fail(ErrorCode::Parse, "gsb: " + what + " at byte offset " + std::to_string(offset));
}

}  // namespace

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double logit(double p) {
    require(p > 0.0 && p < 1.0, ErrorCode::Domain, "logit argument must lie in (0, 1)");
    return std::log(p / (1.0 - p));
}

Eigen::Matrix3d rotation_matrix(const std::array<float, 4>& q) {
    double w = q[0], x = q[1], y = q[2], z = q[3];
    const double n = std::sqrt(w * w + x * x + y * y + z * z);
    if (!(std::isfinite(n) && std::abs(n - 1.0) <= 1e-3))
        fail(ErrorCode::Domain, "quaternion norm " + std::to_string(n) + " deviates from 1 by more than 1e-3");
    w /= n;
    x /= n;
    y /= n;
    z /= n;
    Eigen::Matrix3d r;
    r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
        2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
        2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return r;
}

Eigen::Matrix3d covariance(const Gaussian& g) {
    const Eigen::Matrix3d r = rotation_matrix(g.rot);
    const Eigen::Vector3d s(std::exp(double(g.log_scale[0])), std::exp(double(g.log_scale[1])),
                            std::exp(double(g.log_scale[2])));
    const Eigen::Matrix3d m = r * s.asDiagonal();
    return m * m.transpose();
}

double eval_density(const Gaussian& g, const Eigen::Vector3d& p) {
    const Eigen::Matrix3d sigma = covariance(g);
    Eigen::FullPivLU<Eigen::Matrix3d> lu(sigma);
    require(lu.isInvertible() && std::abs(sigma.determinant()) > 1e-300, ErrorCode::Domain,
            "covariance is singular");
    const Eigen::Vector3d d = p - Eigen::Vector3d(g.mu[0], g.mu[1], g.mu[2]);
    return std::exp(-0.5 * d.dot(lu.solve(d)));
}

SceneBounds scene_bounds(const GaussianScene& scene) {
    SceneBounds b;
    if (scene.empty()) return b;
    b.min = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
    b.max = -b.min;
    for (const Gaussian& g : scene.gaussians) {
        const Eigen::Vector3d mu(g.mu[0], g.mu[1], g.mu[2]);
        b.min = b.min.cwiseMin(mu);
        b.max = b.max.cwiseMax(mu);
    }
    return b;
}

std::vector<std::uint8_t> serialize(const GaussianScene& scene) {
    std::vector<std::uint8_t> out;
    out.reserve(kGsbHeaderSize + scene.size() * kGsbRecordSize);
    for (char c : kMagic) out.push_back(static_cast<std::uint8_t>(c));
    put_u32(out, static_cast<std::uint32_t>(scene.size()));
    put_u32(out, 0u);
    for (const Gaussian& g : scene.gaussians) {
        for (float v : g.mu) put_f32(out, v);
        for (float v : g.log_scale) put_f32(out, v);
        for (float v : g.rot) put_f32(out, v);
        put_f32(out, g.opacity_logit);
        for (float v : g.color) put_f32(out, v);
    }
    return out;
}

GaussianScene deserialize(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < sizeof(kMagic)) parse_fail(bytes.size(), "truncated magic");
    if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) parse_fail(0, "bad magic or version");
    if (bytes.size() < kGsbHeaderSize) parse_fail(bytes.size(), "truncated header");
    const std::uint32_t count = get_u32(bytes, 8);
    const std::uint32_t sh_degree = get_u32(bytes, 12);
    if (sh_degree != 0) parse_fail(12, "unsupported sh_degree " + std::to_string(sh_degree));
    const std::size_t expected = kGsbHeaderSize + static_cast<std::size_t>(count) * kGsbRecordSize;
    if (bytes.size() < expected) {
        const std::size_t whole = (bytes.size() - kGsbHeaderSize) / kGsbRecordSize;
        parse_fail(kGsbHeaderSize + whole * kGsbRecordSize,
                   "truncated record " + std::to_string(whole) + " of " + std::to_string(count));
    }
    if (bytes.size() > expected) parse_fail(expected, "trailing bytes after last record");

    GaussianScene scene;
    scene.gaussians.resize(count);
    std::size_t offset = kGsbHeaderSize;
    auto next = [&]() {
        const float v = std::bit_cast<float>(get_u32(bytes, offset));
        offset += 4;
        return v;
    };
    for (Gaussian& g : scene.gaussians) {
        for (float& v : g.mu) v = next();
        for (float& v : g.log_scale) v = next();
        for (float& v : g.rot) v = next();
        g.opacity_logit = next();
        for (float& v : g.color) v = next();
    }
    return scene;
}

void save_scene(const GaussianScene& scene, const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = serialize(scene);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    require(static_cast<bool>(out), ErrorCode::Io, "failed writing " + path.string());
}

GaussianScene load_scene(const std::filesystem::path& path) {
    require(std::filesystem::exists(path), ErrorCode::NotFound, "scene file not found: " + path.string());
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path.string());
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return deserialize(bytes);
    } catch (const Error& e) {
        fail(e.code(), path.string() + ": " + e.what());
    }
}

}  // namespace panosplat
