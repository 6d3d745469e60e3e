// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "panosplat/refine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <random>
#include <string>

#include "panosplat/error.hpp"
#include "panosplat/metrics.hpp"
#include "panosplat/sphere_geom.hpp"

namespace panosplat {

PseudoGtSet build_pseudo_gt(const std::vector<Image>& frames, const std::vector<Eigen::Vector3d>& positions,
                            int views_per_frame, double fov, int view_size) {
    require(!frames.empty(), ErrorCode::InvalidArgument, "no restored frames");
    require(frames.size() == positions.size(), ErrorCode::InvalidArgument,
            "got " + std::to_string(frames.size()) + " frames but " + std::to_string(positions.size()) + " poses");
    require(views_per_frame >= 1, ErrorCode::InvalidArgument, "views_per_frame must be at least 1");
    require(fov > 0.0 && fov < std::numbers::pi, ErrorCode::InvalidArgument, "fov must lie in (0, pi)");
    PseudoGtSet out;
    for (std::size_t t = 0; t < frames.size(); ++t) {
        const Image& f = frames[t];
        require(f.height() >= 2 && f.width() == 2 * f.height() && f.channels() == 3, ErrorCode::InvalidArgument,
                "restored frame " + std::to_string(t) + " is not a 2:1 RGB panorama");
        const int size = view_size > 0 ? view_size : std::max(1, f.height() / 2);
        for (int k = 0; k < views_per_frame; ++k) {
            PseudoGtView v;
            v.pose.position = positions[t];
            v.pose.orientation = yaw_rotation(2.0 * std::numbers::pi * k / views_per_frame);
            v.intrinsics = PerspectiveIntrinsics{fov, size, size};
            v.image = erp_to_perspective(f, v.pose, fov, size, size);
            out.push_back(std::move(v));
        }
    }
    return out;
}

void RefineConfig::validate() const {
    require(iters >= 1, ErrorCode::InvalidArgument, "iters must be at least 1");
    require(lr.mu > 0 && lr.log_scale > 0 && lr.rot > 0 && lr.opacity_logit > 0 && lr.color > 0,
            ErrorCode::InvalidArgument, "learning rates must be positive");
    require(lr.mu_final_factor > 0 && lr.mu_final_factor <= 1, ErrorCode::InvalidArgument, "mu_final_factor must lie in (0, 1]");
    require(lambda_ssim >= 0 && lambda_ssim <= 1, ErrorCode::InvalidArgument, "lambda_ssim must lie in [0, 1]");
    require(densify_interval >= 1, ErrorCode::InvalidArgument, "densify_interval must be at least 1");
    require(densify_grad_threshold >= 0, ErrorCode::InvalidArgument, "densify_grad_threshold must be non-negative");
    require(percent_dense > 0, ErrorCode::InvalidArgument, "percent_dense must be positive");
    require(prune_opacity >= 0 && prune_opacity <= 1, ErrorCode::InvalidArgument, "prune_opacity must lie in [0, 1]");
    require(views_per_iter >= 1, ErrorCode::InvalidArgument, "views_per_iter must be at least 1");
    require(checkpoint_interval >= 1, ErrorCode::InvalidArgument, "checkpoint_interval must be at least 1");
    require(max_gaussians >= 1, ErrorCode::InvalidArgument, "max_gaussians must be at least 1");
}

void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m, std::span<double> v,
                 double lr, int step) {
    const double c1 = 1.0 - std::pow(kAdamBeta1, step);
    const double c2 = 1.0 - std::pow(kAdamBeta2, step);
    for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * grads[i];
        v[i] = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * grads[i] * grads[i];
        params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + kAdamEps);
    }
}

LossRecord photometric_loss(const Image& render, const Image& target, double lambda_ssim, Image* grad) {
    require(render.same_shape(target), ErrorCode::InvalidArgument, "render and target shapes differ");
    const double n = static_cast<double>(render.size());
    double l1 = 0.0;
    for (std::size_t i = 0; i < render.size(); ++i) l1 += std::abs(render.data()[i] - target.data()[i]);
    l1 /= n;

    Image ssim_grad;
    const double s = ssim_with_grad(render, target, {}, grad ? &ssim_grad : nullptr);
    LossRecord rec;
    rec.l1 = l1;
    rec.ssim_term = 1.0 - s;
    rec.total = (1.0 - lambda_ssim) * l1 + lambda_ssim * rec.ssim_term;
    if (grad) {
        *grad = Image(render.height(), render.width(), render.channels());
        const double k = (1.0 - lambda_ssim) / n;
        for (std::size_t i = 0; i < render.size(); ++i) {
            const double d = render.data()[i] - target.data()[i];
            const double sign = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
            grad->data()[i] = k * sign - lambda_ssim * ssim_grad.data()[i];
        }
    }
    return rec;
}

void write_loss_log(std::ostream& os, const std::vector<LossRecord>& log) {
    char buf[192];
    for (const LossRecord& r : log) {
        std::snprintf(buf, sizeof buf, "{\"iter\":%d,\"l1\":%.9g,\"ssim_term\":%.9g,\"total\":%.9g,\"K\":%zu}\n", r.iter, r.l1,
                      r.ssim_term, r.total, r.gaussians);
        os << buf;
    }
}

namespace {

constexpr int kParams = 14;
using ParamVec = std::array<double, kParams>;

// Layout: mu 0-2, log_scale 3-5, rot 6-9, opacity 10, color 11-13.
ParamVec pack(const Gaussian& g) {
    ParamVec p{};
    for (int i = 0; i < 3; ++i) p[i] = g.mu[i];
    for (int i = 0; i < 3; ++i) p[3 + i] = g.log_scale[i];
    for (int i = 0; i < 4; ++i) p[6 + i] = g.rot[i];
    p[10] = g.opacity_logit;
    for (int i = 0; i < 3; ++i) p[11 + i] = g.color[i];
    return p;
}

void unpack(const ParamVec& p, Gaussian& g) {
    for (int i = 0; i < 3; ++i) g.mu[i] = static_cast<float>(p[i]);
    for (int i = 0; i < 3; ++i) g.log_scale[i] = static_cast<float>(p[3 + i]);
    const double n = std::sqrt(p[6] * p[6] + p[7] * p[7] + p[8] * p[8] + p[9] * p[9]);
    if (n > 0.0 && std::isfinite(n)) {
        for (int i = 0; i < 4; ++i) g.rot[i] = static_cast<float>(p[6 + i] / n);
    } else {
        g.rot = {1.0f, 0.0f, 0.0f, 0.0f};
    }
    g.opacity_logit = static_cast<float>(p[10]);
    for (int i = 0; i < 3; ++i) g.color[i] = static_cast<float>(p[11 + i]);
}

ParamVec flatten(const GaussianGrad& d) {
    ParamVec p{};
    for (int i = 0; i < 3; ++i) p[i] = d.mu[i];
    for (int i = 0; i < 3; ++i) p[3 + i] = d.log_scale[i];
    for (int i = 0; i < 4; ++i) p[6 + i] = d.rot[i];
    p[10] = d.opacity_logit;
    for (int i = 0; i < 3; ++i) p[11 + i] = d.color[i];
    return p;
}

struct Slot {
    Gaussian g;
    ParamVec m{}, v{};
    double grad_sum = 0.0;  // screen-space gradient norms
    int hits = 0;
    std::array<double, 3> mu_grad_sum{};
};

double scene_extent(const GaussianScene& scene) {
    const SceneBounds b = scene_bounds(scene);
    const double e = 0.5 * (b.max - b.min).norm();
    return e > 0.0 ? e : 1.0;
}

struct Optimizer {
    const RefineConfig& cfg;
    std::vector<Slot> slots;
    double extent;
    std::mt19937_64 rng;

    GaussianScene scene() const {
        GaussianScene s;
        s.gaussians.reserve(slots.size());
        for (const Slot& sl : slots) s.gaussians.push_back(sl.g);
        return s;
    }

    void step(const std::vector<ParamVec>& grads, double lr_mu, int t) {
        const double group_lr[5] = {lr_mu, cfg.lr.log_scale, cfg.lr.rot, cfg.lr.opacity_logit, cfg.lr.color};
        const int begin[6] = {0, 3, 6, 10, 11, 14};
        for (std::size_t i = 0; i < slots.size(); ++i) {
            Slot& s = slots[i];
            ParamVec p = pack(s.g);
            for (int gi = 0; gi < 5; ++gi) {
                const auto off = static_cast<std::size_t>(begin[gi]);
                const auto len = static_cast<std::size_t>(begin[gi + 1] - begin[gi]);
                adam_update(std::span<double>(p).subspan(off, len), std::span<const double>(grads[i]).subspan(off, len),
                            std::span<double>(s.m).subspan(off, len), std::span<double>(s.v).subspan(off, len),
                            group_lr[gi], t);
            }
            unpack(p, s.g);
        }
    }

    void densify(double lr_mu) {
        std::vector<Slot> next;
        next.reserve(slots.size());
        std::vector<Slot> added;
        const double small_limit = cfg.percent_dense * extent;
        std::normal_distribution<double> normal(0.0, 1.0);
        const bool room = slots.size() < cfg.max_gaussians;
        for (Slot& s : slots) {
            const double mean_grad = s.hits > 0 ? s.grad_sum / s.hits : 0.0;
            if (!room || mean_grad <= cfg.densify_grad_threshold) {
                next.push_back(s);
                continue;
            }
            const double max_scale =
                std::exp(static_cast<double>(*std::max_element(s.g.log_scale.begin(), s.g.log_scale.end())));
            if (max_scale <= small_limit) {
                Slot clone;
                clone.g = s.g;
                for (int k = 0; k < 3; ++k)
                    clone.g.mu[k] = static_cast<float>(s.g.mu[k] - lr_mu * s.mu_grad_sum[k] / s.hits);
                next.push_back(s);
                added.push_back(clone);
            } else {
                const Eigen::Matrix3d r = rotation_matrix(s.g.rot);
                for (int child = 0; child < 2; ++child) {
                    Slot c;
                    c.g = s.g;
                    Eigen::Vector3d local;
                    for (int k = 0; k < 3; ++k) local[k] = std::exp(static_cast<double>(s.g.log_scale[k])) * normal(rng);
                    const Eigen::Vector3d offset = r * local;
                    for (int k = 0; k < 3; ++k) {
                        c.g.mu[k] = static_cast<float>(s.g.mu[k] + offset[k]);
                        c.g.log_scale[k] = static_cast<float>(s.g.log_scale[k] - std::log(1.6));
                    }
                    added.push_back(c);
                }
            }
        }
        for (Slot& a : added) next.push_back(std::move(a));
        slots.clear();
        for (Slot& s : next) {
            if (sigmoid(s.g.opacity_logit) < cfg.prune_opacity) continue;
            s.grad_sum = 0.0;
            s.hits = 0;
            s.mu_grad_sum = {0.0, 0.0, 0.0};
            slots.push_back(std::move(s));
        }
    }
};

}  // namespace

RefineResult refine_scene(const GaussianScene& scene, const PseudoGtSet& gt, const RefineConfig& cfg, std::uint64_t seed,
                          const RefineObserver& observer) {
    cfg.validate();
    require(!scene.empty(), ErrorCode::InvalidArgument, "cannot refine an empty scene");
    require(!gt.empty(), ErrorCode::InvalidArgument, "no pseudo ground-truth views");
    for (const PseudoGtView& v : gt) {
        v.intrinsics.validate();
        require(v.image.height() == v.intrinsics.height && v.image.width() == v.intrinsics.width && v.image.channels() == 3,
                ErrorCode::InvalidArgument, "pseudo ground-truth image does not match its intrinsics");
    }
    if (!cfg.checkpoint_dir.empty()) std::filesystem::create_directories(cfg.checkpoint_dir);

    Optimizer opt{cfg, {}, scene_extent(scene), std::mt19937_64(seed)};
    for (const Gaussian& g : scene.gaussians) opt.slots.push_back(Slot{g});

    std::vector<std::size_t> order(gt.size());
    std::size_t cursor = order.size();
    auto next_view = [&]() -> const PseudoGtView& {
        if (cursor == order.size()) {
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            std::shuffle(order.begin(), order.end(), opt.rng);
            cursor = 0;
        }
        return gt[order[cursor++]];
    };

    RefineResult result;
    for (int it = 1; it <= cfg.iters; ++it) {
        const double progress = cfg.iters > 1 ? static_cast<double>(it - 1) / (cfg.iters - 1) : 0.0;
        const double lr_mu = cfg.lr.mu * std::pow(cfg.lr.mu_final_factor, progress);

        const GaussianScene current = opt.scene();
        std::vector<ParamVec> grads(current.size(), ParamVec{});
        LossRecord rec;
        rec.iter = it;
        const double share = 1.0 / cfg.views_per_iter;
        for (int k = 0; k < cfg.views_per_iter; ++k) {
            const PseudoGtView& view = next_view();
            const RenderPass pass(current, view.pose, view.intrinsics, cfg.render);
            Image grad;
            const LossRecord l = photometric_loss(pass.output().rgb, view.image, cfg.lambda_ssim, &grad);
            if (!std::isfinite(l.total)) fail(ErrorCode::Domain, "non-finite loss at iteration " + std::to_string(it));
            rec.l1 += share * l.l1;
            rec.ssim_term += share * l.ssim_term;
            rec.total += share * l.total;
            for (double& gv : grad.data()) gv *= share;
            const SceneGradients sg = pass.backward(grad);
            for (std::size_t i = 0; i < current.size(); ++i) {
                const ParamVec d = flatten(sg.grads[i]);
                for (int j = 0; j < kParams; ++j) grads[i][j] += d[j];
                if (sg.hit_count[i]) {
                    Slot& s = opt.slots[i];
                    s.grad_sum += sg.screen_grad_norm[i];
                    ++s.hits;
                    for (int j = 0; j < 3; ++j) s.mu_grad_sum[j] += d[j];
                }
            }
        }
        for (const ParamVec& g : grads)
            for (double v : g)
                if (!std::isfinite(v)) fail(ErrorCode::Domain, "non-finite gradient at iteration " + std::to_string(it));

        opt.step(grads, lr_mu, it);

        if (it >= cfg.densify_from && it <= cfg.densify_until && it % cfg.densify_interval == 0) {
            opt.densify(lr_mu);
            ++result.densify_events;
            if (opt.slots.empty()) fail(ErrorCode::Pipeline, "scene is empty after pruning at iteration " + std::to_string(it));
        }
        rec.gaussians = opt.slots.size();
        result.log.push_back(rec);

        if (!cfg.checkpoint_dir.empty() && it % cfg.checkpoint_interval == 0) {
            char name[32];
            std::snprintf(name, sizeof name, "ckpt_%06d.gsb", it);
            save_scene(opt.scene(), cfg.checkpoint_dir / name);
        }
        if (observer && !observer(rec)) break;
    }
    result.scene = opt.scene();
    return result;
}

}  // namespace panosplat
