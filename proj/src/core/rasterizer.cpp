// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "panosplat/rasterizer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "panosplat/error.hpp"
#include "panosplat/parallel.hpp"

namespace panosplat {

namespace {

constexpr int kTile = 16;
constexpr double kGuardBand = 1.3;

struct View {
    Eigen::Matrix3d cam_from_world;
    Eigen::Vector3d position;
    double fx = 0.0, fy = 0.0, cx = 0.0, cy = 0.0;
    int width = 0, height = 0;
};

View make_view(const CameraPose& pose, const PerspectiveIntrinsics& intr) {
    intr.validate();
    const double qn = pose.orientation.norm();
    require(std::abs(qn - 1.0) <= 1e-6, ErrorCode::InvalidArgument, "camera orientation must be a unit quaternion");
    View v;
    v.cam_from_world = pose.orientation.normalized().toRotationMatrix().transpose();
    v.position = pose.position;
    v.fy = intr.focal();
    v.fx = v.fy;
    v.cx = 0.5 * intr.width;
    v.cy = 0.5 * intr.height;
    v.width = intr.width;
    v.height = intr.height;
    return v;
}

// Per-Gaussian data read by the per-pixel blending loop.
struct Splat {
    double u = 0.0, v = 0.0;
    double a = 0.0, b = 0.0, c = 0.0;  // conic: inverse of the dilated 2D covariance
    double opacity = 0.0;              // sigmoid(logit) * antialiasing compensation
    double z = 0.0;
    std::array<double, 3> color{};
    bool visible = false;
    int x_min = 0, x_max = -1, y_min = 0, y_max = -1;  // pixel rect, inclusive
};

// Intermediate quantities of the EWA projection kept for the backward pass.
struct Projection {
    Eigen::Vector3d p_cam = Eigen::Vector3d::Zero();
    Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();  // normalized R(q)
    Eigen::Vector3d scale = Eigen::Vector3d::Ones();
    Eigen::Matrix3d sigma_cam = Eigen::Matrix3d::Zero();
    Eigen::Matrix<double, 2, 3> jac = Eigen::Matrix<double, 2, 3>::Zero();
    Eigen::Matrix2d sigma2d = Eigen::Matrix2d::Zero();
    Eigen::Matrix2d conic = Eigen::Matrix2d::Zero();
    double sig = 0.0;
    double comp = 1.0;
};

bool project(const Gaussian& g, const View& view, const RenderOptions& opt, Splat& splat, Projection& proj) {
    splat = Splat{};
    const Eigen::Vector3d mu(g.mu[0], g.mu[1], g.mu[2]);
    proj.p_cam = view.cam_from_world * (mu - view.position);
    const double x = proj.p_cam.x(), y = proj.p_cam.y(), z = proj.p_cam.z();
    if (!(z > opt.z_near)) return false;
    // The local affine approximation diverges far outside the view; centers
    // beyond a 30% guard band are dropped.
    if (std::abs(x / z) > kGuardBand * 0.5 * view.width / view.fx ||
        std::abs(y / z) > kGuardBand * 0.5 * view.height / view.fy)
        return false;

    proj.rot = rotation_matrix(g.rot);
    proj.scale = Eigen::Vector3d(std::exp(double(g.log_scale[0])), std::exp(double(g.log_scale[1])),
                                 std::exp(double(g.log_scale[2])));
    const Eigen::Matrix3d m = proj.rot * proj.scale.asDiagonal();
    const Eigen::Matrix3d sigma = m * m.transpose();
    proj.sigma_cam = view.cam_from_world * sigma * view.cam_from_world.transpose();

    const double iz = 1.0 / z;
    proj.jac << view.fx * iz, 0.0, -view.fx * x * iz * iz, 0.0, -view.fy * iz, view.fy * y * iz * iz;
    proj.sigma2d = proj.jac * proj.sigma_cam * proj.jac.transpose();
    proj.sigma2d(0, 1) = proj.sigma2d(1, 0) = 0.5 * (proj.sigma2d(0, 1) + proj.sigma2d(1, 0));

    const double dil = opt.aa_dilation * opt.aa_dilation;
    const Eigen::Matrix2d dilated = proj.sigma2d + dil * Eigen::Matrix2d::Identity();
    const double det_raw = proj.sigma2d.determinant();
    const double det = dilated.determinant();
    if (!(det > 1e-12) || !std::isfinite(det)) return false;
    if (dil > 0.0) {
        if (!(det_raw > 0.0)) return false;
        proj.comp = std::sqrt(det_raw / det);
    } else {
        proj.comp = 1.0;
    }
    proj.conic << dilated(1, 1) / det, -dilated(0, 1) / det, -dilated(0, 1) / det, dilated(0, 0) / det;
    proj.sig = sigmoid(g.opacity_logit);

    splat.u = view.cx + view.fx * x * iz;
    splat.v = view.cy - view.fy * y * iz;
    splat.a = proj.conic(0, 0);
    splat.b = proj.conic(0, 1);
    splat.c = proj.conic(1, 1);
    splat.opacity = proj.sig * proj.comp;
    splat.z = z;
    for (int k = 0; k < 3; ++k) splat.color[k] = std::clamp(double(g.color[k]), 0.0, 1.0);

    if (std::isfinite(opt.sigma_cutoff)) {
        const double mid = 0.5 * (dilated(0, 0) + dilated(1, 1));
        const double lambda_max = mid + std::sqrt(std::max(0.0, mid * mid - det));
        const double r = opt.sigma_cutoff * std::sqrt(lambda_max);
        splat.x_min = std::max(0, static_cast<int>(std::ceil(splat.u - r - 0.5)));
        splat.x_max = std::min(view.width - 1, static_cast<int>(std::floor(splat.u + r - 0.5)));
        splat.y_min = std::max(0, static_cast<int>(std::ceil(splat.v - r - 0.5)));
        splat.y_max = std::min(view.height - 1, static_cast<int>(std::floor(splat.v + r - 0.5)));
        if (!std::isfinite(splat.u) || !std::isfinite(splat.v)) return false;
        if (splat.x_min > splat.x_max || splat.y_min > splat.y_max) return false;
    } else {
        splat.x_min = 0;
        splat.x_max = view.width - 1;
        splat.y_min = 0;
        splat.y_max = view.height - 1;
    }
    splat.visible = true;
    return true;
}

// dR/dq_k for a unit quaternion (w, x, y, z), contracted with G.
std::array<double, 4> rotation_grad(const Eigen::Matrix3d& grad_r, double w, double x, double y, double z) {
    Eigen::Matrix3d dw, dx, dy, dz;
    dw << 0, -2 * z, 2 * y, 2 * z, 0, -2 * x, -2 * y, 2 * x, 0;
    dx << 0, 2 * y, 2 * z, 2 * y, -4 * x, -2 * w, 2 * z, 2 * w, -4 * x;
    dy << -4 * y, 2 * x, 2 * w, 2 * x, 0, 2 * z, -2 * w, 2 * z, -4 * y;
    dz << -4 * z, -2 * w, 2 * x, 2 * w, -4 * z, 2 * y, 2 * x, 2 * y, 0;
    return {grad_r.cwiseProduct(dw).sum(), grad_r.cwiseProduct(dx).sum(), grad_r.cwiseProduct(dy).sum(),
            grad_r.cwiseProduct(dz).sum()};
}

// Screen-space gradient accumulators for one Gaussian.
struct SplatGrad {
    double u = 0.0, v = 0.0;
    double a = 0.0, b = 0.0, c = 0.0;
    double opacity = 0.0;
    std::array<double, 3> color{};

    void add(const SplatGrad& o) {
        u += o.u;
        v += o.v;
        a += o.a;
        b += o.b;
        c += o.c;
        opacity += o.opacity;
        for (int k = 0; k < 3; ++k) color[k] += o.color[k];
    }
};

}  // namespace

struct RenderPass::State {
    const GaussianScene* scene = nullptr;
    View view;
    RenderOptions options;
    std::vector<Splat> splats;
    std::vector<std::uint32_t> order;  // visible Gaussians sorted by (depth, index)
    int tiles_x = 0, tiles_y = 0;
    std::vector<std::vector<std::uint32_t>> tile_lists;
    std::vector<double> final_t;
    std::vector<std::uint32_t> n_processed;
    RenderOutput out;

    void forward();
    void blend_tile(std::size_t tile);
};

void RenderPass::State::forward() {
    const std::size_t n = scene->size();
    splats.assign(n, Splat{});
    parallel_for(n, [&](std::size_t i) {
        Projection proj;
        project(scene->gaussians[i], view, options, splats[i], proj);
    });

    order.clear();
    for (std::size_t i = 0; i < n; ++i) {
        if (splats[i].visible) order.push_back(static_cast<std::uint32_t>(i));
    }
    std::sort(order.begin(), order.end(), [&](std::uint32_t l, std::uint32_t r) {
        if (splats[l].z != splats[r].z) return splats[l].z < splats[r].z;
        return l < r;
    });

    tiles_x = (view.width + kTile - 1) / kTile;
    tiles_y = (view.height + kTile - 1) / kTile;
    tile_lists.assign(static_cast<std::size_t>(tiles_x) * tiles_y, {});
    std::vector<std::uint32_t> counts(tile_lists.size(), 0);
    for (std::uint32_t g : order) {
        const Splat& s = splats[g];
        for (int ty = s.y_min / kTile; ty <= s.y_max / kTile; ++ty)
            for (int tx = s.x_min / kTile; tx <= s.x_max / kTile; ++tx) ++counts[ty * tiles_x + tx];
    }
    for (std::size_t t = 0; t < tile_lists.size(); ++t) tile_lists[t].reserve(counts[t]);
    for (std::uint32_t g : order) {
        const Splat& s = splats[g];
        for (int ty = s.y_min / kTile; ty <= s.y_max / kTile; ++ty)
            for (int tx = s.x_min / kTile; tx <= s.x_max / kTile; ++tx) tile_lists[ty * tiles_x + tx].push_back(g);
    }

    const std::size_t pixels = static_cast<std::size_t>(view.width) * view.height;
    final_t.assign(pixels, 1.0);
    n_processed.assign(pixels, 0);
    out.rgb = Image(view.height, view.width, 3);
    out.alpha = Image(view.height, view.width, 1);
    out.depth = Image(view.height, view.width, 1);
    parallel_for(tile_lists.size(), [&](std::size_t t) { blend_tile(t); });
}

void RenderPass::State::blend_tile(std::size_t tile) {
    const std::vector<std::uint32_t>& list = tile_lists[tile];
    const int tx = static_cast<int>(tile % tiles_x);
    const int ty = static_cast<int>(tile / tiles_x);
    const double cutoff2 = options.sigma_cutoff * options.sigma_cutoff;
    const int y_end = std::min(view.height, (ty + 1) * kTile);
    const int x_end = std::min(view.width, (tx + 1) * kTile);
    for (int py = ty * kTile; py < y_end; ++py) {
        for (int px = tx * kTile; px < x_end; ++px) {
            const double fx = px + 0.5, fy = py + 0.5;
            double t = 1.0;
            double rgb[3] = {0.0, 0.0, 0.0};
            double depth = 0.0;
            std::uint32_t processed = 0;
            for (std::size_t j = 0; j < list.size(); ++j) {
                const Splat& s = splats[list[j]];
                processed = static_cast<std::uint32_t>(j + 1);
                const double dx = fx - s.u, dy = fy - s.v;
                const double q = s.a * dx * dx + 2.0 * s.b * dx * dy + s.c * dy * dy;
                if (q > cutoff2) continue;
                const double alpha = s.opacity * std::exp(-0.5 * q);
                if (alpha < options.alpha_min) continue;
                const double w = alpha * t;
                for (int k = 0; k < 3; ++k) rgb[k] += s.color[k] * w;
                depth += s.z * w;
                t *= 1.0 - alpha;
                if (t < options.transmittance_min) break;
            }
            const std::size_t p = static_cast<std::size_t>(py) * view.width + px;
            final_t[p] = t;
            n_processed[p] = processed;
            for (int k = 0; k < 3; ++k) out.rgb.at(py, px, k) = rgb[k];
            const double acc = 1.0 - t;
            out.alpha.at(py, px) = acc;
            out.depth.at(py, px) = acc > 0.0 ? depth / acc : 0.0;
        }
    }
}

RenderPass::RenderPass(const GaussianScene& scene, const CameraPose& pose, const PerspectiveIntrinsics& intr,
                       const RenderOptions& options)
    : state_(std::make_unique<State>()) {
    require(!scene.empty(), ErrorCode::InvalidArgument, "cannot render an empty scene");
    state_->scene = &scene;
    state_->view = make_view(pose, intr);
    state_->options = options;
    state_->forward();
}

RenderPass::~RenderPass() = default;
RenderPass::RenderPass(RenderPass&&) noexcept = default;
RenderPass& RenderPass::operator=(RenderPass&&) noexcept = default;

const RenderOutput& RenderPass::output() const { return state_->out; }

SceneGradients RenderPass::backward(const Image& grad_rgb) const {
    const State& st = *state_;
    const View& view = st.view;
    require(grad_rgb.height() == view.height && grad_rgb.width() == view.width && grad_rgb.channels() == 3,
            ErrorCode::InvalidArgument, "grad_rgb shape does not match the rendered image");

    const double cutoff2 = st.options.sigma_cutoff * st.options.sigma_cutoff;
    std::vector<std::vector<SplatGrad>> tile_grads(st.tile_lists.size());
    parallel_for(st.tile_lists.size(), [&](std::size_t tile) {
        const std::vector<std::uint32_t>& list = st.tile_lists[tile];
        std::vector<SplatGrad>& acc = tile_grads[tile];
        acc.assign(list.size(), SplatGrad{});
        const int tx = static_cast<int>(tile % st.tiles_x);
        const int ty = static_cast<int>(tile / st.tiles_x);
        const int y_end = std::min(view.height, (ty + 1) * kTile);
        const int x_end = std::min(view.width, (tx + 1) * kTile);
        for (int py = ty * kTile; py < y_end; ++py) {
            for (int px = tx * kTile; px < x_end; ++px) {
                const std::size_t p = static_cast<std::size_t>(py) * view.width + px;
                const double g[3] = {grad_rgb.at(py, px, 0), grad_rgb.at(py, px, 1), grad_rgb.at(py, px, 2)};
                if (g[0] == 0.0 && g[1] == 0.0 && g[2] == 0.0) continue;
                const double fx = px + 0.5, fy = py + 0.5;
                double t = st.final_t[p];
                double behind[3] = {0.0, 0.0, 0.0};
                for (std::size_t j = st.n_processed[p]; j-- > 0;) {
                    const Splat& s = st.splats[list[j]];
                    const double dx = fx - s.u, dy = fy - s.v;
                    const double q = s.a * dx * dx + 2.0 * s.b * dx * dy + s.c * dy * dy;
                    if (q > cutoff2) continue;
                    const double gauss = std::exp(-0.5 * q);
                    const double alpha = s.opacity * gauss;
                    if (alpha < st.options.alpha_min) continue;
                    const double t_before = t / (1.0 - alpha);
                    SplatGrad& a = acc[j];
                    double d_alpha = 0.0;
                    for (int k = 0; k < 3; ++k) {
                        a.color[k] += g[k] * alpha * t_before;
                        d_alpha += g[k] * (s.color[k] - behind[k]);
                        behind[k] = s.color[k] * alpha + (1.0 - alpha) * behind[k];
                    }
                    d_alpha *= t_before;
                    t = t_before;
                    a.opacity += d_alpha * gauss;
                    const double d_q = -0.5 * alpha * d_alpha;
                    a.a += d_q * dx * dx;
                    a.b += d_q * 2.0 * dx * dy;
                    a.c += d_q * dy * dy;
                    a.u += -d_q * 2.0 * (s.a * dx + s.b * dy);
                    a.v += -d_q * 2.0 * (s.b * dx + s.c * dy);
                }
            }
        }
    });

    const std::size_t n = st.scene->size();
    std::vector<SplatGrad> screen(n);
    for (std::size_t tile = 0; tile < st.tile_lists.size(); ++tile) {
        const auto& list = st.tile_lists[tile];
        for (std::size_t j = 0; j < list.size(); ++j) screen[list[j]].add(tile_grads[tile][j]);
    }

    SceneGradients out;
    out.grads.assign(n, GaussianGrad{});
    out.screen_grad_norm.assign(n, 0.0);
    out.hit_count.assign(n, 0);
    const double dil = st.options.aa_dilation * st.options.aa_dilation;

    parallel_for(n, [&](std::size_t i) {
        if (!st.splats[i].visible) return;
        out.hit_count[i] = 1;
        const Gaussian& g = st.scene->gaussians[i];
        const SplatGrad& sg = screen[i];
        Splat splat;
        Projection pr;
        project(g, view, st.options, splat, pr);
        GaussianGrad& gg = out.grads[i];

        out.screen_grad_norm[i] = std::hypot(sg.u * 0.5 * view.width, sg.v * 0.5 * view.height);

        for (int k = 0; k < 3; ++k) {
            const double c = g.color[k];
            gg.color[k] = (c >= 0.0 && c <= 1.0) ? sg.color[k] : 0.0;
        }
        gg.opacity_logit = sg.opacity * pr.comp * pr.sig * (1.0 - pr.sig);
        const double d_comp = sg.opacity * pr.sig;

        Eigen::Matrix2d g_conic;
        g_conic << sg.a, 0.5 * sg.b, 0.5 * sg.b, sg.c;
        Eigen::Matrix2d g_sigma2d = -pr.conic * g_conic * pr.conic;
        if (dil > 0.0) g_sigma2d += d_comp * pr.comp * 0.5 * (pr.sigma2d.inverse() - pr.conic);

        const Eigen::Matrix3d g_sigma_cam = pr.jac.transpose() * g_sigma2d * pr.jac;
        const Eigen::Matrix<double, 2, 3> g_jac = 2.0 * g_sigma2d * pr.jac * pr.sigma_cam;
        const Eigen::Matrix3d g_sigma = view.cam_from_world.transpose() * g_sigma_cam * view.cam_from_world;
        const Eigen::Matrix3d m = pr.rot * pr.scale.asDiagonal();
        const Eigen::Matrix3d g_m = 2.0 * g_sigma * m;
        const Eigen::Matrix3d rt_gm = pr.rot.transpose() * g_m;
        for (int k = 0; k < 3; ++k) gg.log_scale[k] = rt_gm(k, k) * pr.scale[k];
        const Eigen::Matrix3d g_rot = g_m * pr.scale.asDiagonal();

        double w = g.rot[0], x = g.rot[1], y = g.rot[2], z = g.rot[3];
        const double qn = std::sqrt(w * w + x * x + y * y + z * z);
        w /= qn;
        x /= qn;
        y /= qn;
        z /= qn;
        const std::array<double, 4> g_qn = rotation_grad(g_rot, w, x, y, z);
        const double qhat[4] = {w, x, y, z};
        double dot = 0.0;
        for (int k = 0; k < 4; ++k) dot += qhat[k] * g_qn[k];
        for (int k = 0; k < 4; ++k) gg.rot[k] = (g_qn[k] - qhat[k] * dot) / qn;

        const double px = pr.p_cam.x(), py = pr.p_cam.y(), pz = pr.p_cam.z();
        const double iz = 1.0 / pz, iz2 = iz * iz, iz3 = iz2 * iz;
        const double fx = view.fx, fy = view.fy;
        Eigen::Vector3d g_p;
        g_p.x() = sg.u * fx * iz + g_jac(0, 2) * (-fx * iz2);
        g_p.y() = sg.v * (-fy * iz) + g_jac(1, 2) * (fy * iz2);
        g_p.z() = sg.u * (-fx * px * iz2) + sg.v * (fy * py * iz2) + g_jac(0, 0) * (-fx * iz2) +
                  g_jac(0, 2) * (2.0 * fx * px * iz3) + g_jac(1, 1) * (fy * iz2) + g_jac(1, 2) * (-2.0 * fy * py * iz3);
        const Eigen::Vector3d g_mu = view.cam_from_world.transpose() * g_p;
        for (int k = 0; k < 3; ++k) gg.mu[k] = g_mu[k];
    });
    return out;
}

RenderOutput render_perspective(const GaussianScene& scene, const CameraPose& pose,
                                const PerspectiveIntrinsics& intr, const RenderOptions& options) {
    RenderPass pass(scene, pose, intr, options);
    return pass.output();
}

SceneGradients render_backward(const GaussianScene& scene, const CameraPose& pose,
                               const PerspectiveIntrinsics& intr, const Image& grad_rgb,
                               const RenderOptions& options) {
    RenderPass pass(scene, pose, intr, options);
    return pass.backward(grad_rgb);
}

RenderOutput render_erp(const GaussianScene& scene, const Eigen::Vector3d& position, const ErpGrid& grid,
                        const RenderOptions& options) {
    const int size = grid.height;
    const PerspectiveIntrinsics intr{std::numbers::pi / 2.0, size, size};
    const double f = intr.focal();
    CubeFaces rgb, alpha, depth;
    for (std::size_t i = 0; i < kCubeFaces.size(); ++i) {
        CameraPose pose;
        pose.position = position;
        pose.orientation = cube_face_orientation(kCubeFaces[i]);
        RenderOutput face = render_perspective(scene, pose, intr, options);
        // planar depth -> distance along the pixel ray
        for (int y = 0; y < size; ++y) {
            const double ry = (y + 0.5 - 0.5 * size) / f;
            for (int x = 0; x < size; ++x) {
                const double rx = (x + 0.5 - 0.5 * size) / f;
                face.depth.at(y, x) *= std::sqrt(1.0 + rx * rx + ry * ry);
            }
        }
        rgb[i] = std::move(face.rgb);
        alpha[i] = std::move(face.alpha);
        depth[i] = std::move(face.depth);
    }
    RenderOutput out;
    out.rgb = perspective_to_erp(rgb, grid);
    out.alpha = perspective_to_erp(alpha, grid);
    out.depth = perspective_to_erp(depth, grid);
    return out;
}

}  // namespace panosplat
