// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "panosplat/metrics.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "panosplat/error.hpp"
#include "panosplat/parallel.hpp"

namespace panosplat {

namespace {

constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;
constexpr int kRadius = kSsimWindow / 2;

const std::array<double, kSsimWindow>& gaussian_taps() {
    static const std::array<double, kSsimWindow> taps = [] {
        std::array<double, kSsimWindow> g{};
        double sum = 0.0;
        for (int i = 0; i < kSsimWindow; ++i) {
            const double d = i - kRadius;
            g[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
            sum += g[i];
        }
        for (double& v : g) v /= sum;
        return g;
    }();
    return taps;
}

using Plane = std::vector<double>;

// Valid-mode separable Gaussian correlation: (h, w) -> (h - 10, w - 10).
Plane blur_valid(const Plane& in, int h, int w) {
    const auto& g = gaussian_taps();
    const int mh = h - 2 * kRadius, mw = w - 2 * kRadius;
    Plane tmp(static_cast<std::size_t>(h) * mw);
    for (int y = 0; y < h; ++y) {
        const double* row = in.data() + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < mw; ++x) {
            double s = 0.0;
            for (int k = 0; k < kSsimWindow; ++k) s += g[k] * row[x + k];
            tmp[static_cast<std::size_t>(y) * mw + x] = s;
        }
    }
    Plane out(static_cast<std::size_t>(mh) * mw, 0.0);
    for (int y = 0; y < mh; ++y) {
        double* dst = out.data() + static_cast<std::size_t>(y) * mw;
        for (int k = 0; k < kSsimWindow; ++k) {
            const double* src = tmp.data() + static_cast<std::size_t>(y + k) * mw;
            for (int x = 0; x < mw; ++x) dst[x] += g[k] * src[x];
        }
    }
    return out;
}

// Adjoint of blur_valid: (h - 10, w - 10) -> (h, w).
Plane blur_adjoint(const Plane& map, int h, int w) {
    const auto& g = gaussian_taps();
    const int mh = h - 2 * kRadius, mw = w - 2 * kRadius;
    Plane tmp(static_cast<std::size_t>(h) * mw, 0.0);
    for (int y = 0; y < mh; ++y) {
        const double* src = map.data() + static_cast<std::size_t>(y) * mw;
        for (int k = 0; k < kSsimWindow; ++k) {
            double* dst = tmp.data() + static_cast<std::size_t>(y + k) * mw;
            for (int x = 0; x < mw; ++x) dst[x] += g[k] * src[x];
        }
    }
    Plane out(static_cast<std::size_t>(h) * w, 0.0);
    for (int y = 0; y < h; ++y) {
        const double* src = tmp.data() + static_cast<std::size_t>(y) * mw;
        double* dst = out.data() + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < mw; ++x)
            for (int k = 0; k < kSsimWindow; ++k) dst[x + k] += g[k] * src[x];
    }
    return out;
}

Plane channel_plane(const Image& img, int c) {
    Plane p(static_cast<std::size_t>(img.height()) * img.width());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) p[static_cast<std::size_t>(y) * img.width() + x] = img.at(y, x, c);
    return p;
}

void check_pair(const Image& a, const Image& b) {
    require(a.same_shape(b), ErrorCode::InvalidArgument, "metric inputs differ in shape");
    require(!a.empty(), ErrorCode::InvalidArgument, "metric inputs are empty");
}

void check_erp(const Image& a, const ErpGrid& grid) {
    require(a.height() == grid.height && a.width() == grid.width, ErrorCode::InvalidArgument,
            "metric inputs do not match the ERP grid");
}

double to_db(double mse) { return mse < 1e-10 ? kPsnrCap : 10.0 * std::log10(1.0 / mse); }

std::vector<double> erp_map_weights(const ErpGrid& grid) {
    std::vector<double> w;
    for (int y = kRadius; y < grid.height - kRadius; ++y) w.push_back(erp_weight_row(y, grid));
    return w;
}

}  // namespace

double psnr(const Image& a, const Image& b) {
    check_pair(a, b);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        sum += d * d;
    }
    return to_db(sum / static_cast<double>(a.size()));
}

double ws_psnr(const Image& a, const Image& b, const ErpGrid& grid) {
    check_pair(a, b);
    check_erp(a, grid);
    double num = 0.0, den = 0.0;
    for (int y = 0; y < a.height(); ++y) {
        const double w = erp_weight_row(y, grid);
        double row = 0.0;
        for (int x = 0; x < a.width(); ++x) {
            for (int c = 0; c < a.channels(); ++c) {
                const double d = a.at(y, x, c) - b.at(y, x, c);
                row += d * d;
            }
        }
        num += w * row;
        den += w;
    }
    return to_db(num / (den * a.width() * a.channels()));
}

double ssim_with_grad(const Image& a, const Image& b, const std::vector<double>& row_weights, Image* grad_a) {
    check_pair(a, b);
    const int h = a.height(), w = a.width();
    require(h >= kSsimWindow && w >= kSsimWindow, ErrorCode::InvalidArgument, "SSIM needs at least 11x11 pixels");
    const int mh = h - 2 * kRadius, mw = w - 2 * kRadius;
    require(row_weights.empty() || static_cast<int>(row_weights.size()) == mh, ErrorCode::InvalidArgument,
            "SSIM row weights do not match the map height");
    double wsum = 0.0;
    for (int y = 0; y < mh; ++y) wsum += row_weights.empty() ? 1.0 : row_weights[y];
    require(wsum > 0.0, ErrorCode::Domain, "SSIM row weights sum to zero");
    const double norm = 1.0 / (wsum * mw * a.channels());

    if (grad_a) *grad_a = Image(h, w, a.channels());
    double total = 0.0;
    for (int c = 0; c < a.channels(); ++c) {
        const Plane pa = channel_plane(a, c), pb = channel_plane(b, c);
        Plane aa(pa.size()), bb(pa.size()), ab(pa.size());
        for (std::size_t i = 0; i < pa.size(); ++i) {
            aa[i] = pa[i] * pa[i];
            bb[i] = pb[i] * pb[i];
            ab[i] = pa[i] * pb[i];
        }
        const Plane mu_a = blur_valid(pa, h, w), mu_b = blur_valid(pb, h, w);
        const Plane e_aa = blur_valid(aa, h, w), e_bb = blur_valid(bb, h, w), e_ab = blur_valid(ab, h, w);

        Plane d_mu, d_aa, d_ab;
        if (grad_a) {
            d_mu.resize(mu_a.size());
            d_aa.resize(mu_a.size());
            d_ab.resize(mu_a.size());
        }
        for (int y = 0; y < mh; ++y) {
            const double rw = row_weights.empty() ? 1.0 : row_weights[y];
            for (int x = 0; x < mw; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * mw + x;
                const double ma = mu_a[i], mb = mu_b[i];
                const double s_aa = e_aa[i] - ma * ma, s_bb = e_bb[i] - mb * mb, s_ab = e_ab[i] - ma * mb;
                const double A = 2.0 * ma * mb + kC1, B = 2.0 * s_ab + kC2;
                const double C = ma * ma + mb * mb + kC1, D = s_aa + s_bb + kC2;
                const double q = A / (C * D);
                const double s = q * B;
                total += rw * s;
                if (grad_a) {
                    const double k = rw * norm;
                    // grouped so that every term cancels exactly when a == b
                    const double ds_dmu = 2.0 * B / (C * D) * (mb - ma * (A / C));
                    const double ds_daa = -q * (B / D);
                    const double ds_dab = 2.0 * q;
                    // chain through the raw moments E[a], E[a^2], E[ab]
                    d_mu[i] = k * (ds_dmu - 2.0 * ma * ds_daa - mb * ds_dab);
                    d_aa[i] = k * ds_daa;
                    d_ab[i] = k * ds_dab;
                }
            }
        }
        if (grad_a) {
            const Plane g_mu = blur_adjoint(d_mu, h, w), g_aa = blur_adjoint(d_aa, h, w), g_ab = blur_adjoint(d_ab, h, w);
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    const std::size_t i = static_cast<std::size_t>(y) * w + x;
                    grad_a->at(y, x, c) = g_mu[i] + 2.0 * pa[i] * g_aa[i] + pb[i] * g_ab[i];
                }
            }
        }
    }
    return total * norm;
}

double ssim(const Image& a, const Image& b) { return ssim_with_grad(a, b, {}, nullptr); }

double ws_ssim(const Image& a, const Image& b, const ErpGrid& grid) {
    check_pair(a, b);
    check_erp(a, grid);
    require(grid.height >= kSsimWindow && grid.width >= kSsimWindow, ErrorCode::InvalidArgument,
            "SSIM needs at least 11x11 pixels");
    return ssim_with_grad(a, b, erp_map_weights(grid), nullptr);
}

const char* metric_name(Metric m) {
    switch (m) {
        case Metric::Psnr: return "psnr";
        case Metric::Ssim: return "ssim";
        case Metric::WsPsnr: return "ws_psnr";
        case Metric::WsSsim: return "ws_ssim";
    }
    return "unknown";
}

const MetricSeries& MetricReport::get(Metric m) const {
    for (const MetricSeries& s : series)
        if (s.metric == m) return s;
    fail(ErrorCode::InvalidArgument, std::string("metric not in report: ") + metric_name(m));
}

MetricReport evaluate(const std::vector<Image>& pred, const std::vector<Image>& ref, const ErpGrid& grid,
                      const std::vector<Metric>& metrics) {
    require(pred.size() == ref.size(), ErrorCode::InvalidArgument,
            "prediction has " + std::to_string(pred.size()) + " frames, reference has " + std::to_string(ref.size()));
    require(!pred.empty(), ErrorCode::InvalidArgument, "no frames to evaluate");
    require(!metrics.empty(), ErrorCode::InvalidArgument, "no metrics requested");
    MetricReport report;
    report.frames = pred.size();
    for (Metric m : metrics) report.series.push_back({m, std::vector<double>(pred.size()), 0.0});

    std::vector<std::string> errors(pred.size());
    parallel_for(pred.size(), [&](std::size_t f) {
        try {
            for (MetricSeries& s : report.series) {
                switch (s.metric) {
                    case Metric::Psnr: s.per_frame[f] = psnr(pred[f], ref[f]); break;
                    case Metric::Ssim: s.per_frame[f] = ssim(pred[f], ref[f]); break;
                    case Metric::WsPsnr: s.per_frame[f] = ws_psnr(pred[f], ref[f], grid); break;
                    case Metric::WsSsim: s.per_frame[f] = ws_ssim(pred[f], ref[f], grid); break;
                }
            }
        } catch (const Error& e) {
            errors[f] = e.what();
        }
    });
    for (std::size_t f = 0; f < errors.size(); ++f)
        if (!errors[f].empty()) fail(ErrorCode::InvalidArgument, "frame " + std::to_string(f) + ": " + errors[f]);

    for (MetricSeries& s : report.series) {
        double sum = 0.0;
        for (double v : s.per_frame) sum += v;
        s.mean = sum / static_cast<double>(s.per_frame.size());
    }
    return report;
}

void write_report(std::ostream& os, const MetricReport& report) {
    char buf[96];
    os << "# metric frame value\n";
    for (const MetricSeries& s : report.series) {
        for (std::size_t f = 0; f < s.per_frame.size(); ++f) {
            std::snprintf(buf, sizeof buf, "%s %zu %.10g\n", metric_name(s.metric), f, s.per_frame[f]);
            os << buf;
        }
    }
    os << "# mean over " << report.frames << " frames\n";
    for (const MetricSeries& s : report.series) {
        std::snprintf(buf, sizeof buf, "# %-8s %.6f\n", metric_name(s.metric), s.mean);
        os << buf;
    }
}

}  // namespace panosplat
