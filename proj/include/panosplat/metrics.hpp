// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "panosplat/image.hpp"
#include "panosplat/sphere_geom.hpp"

namespace panosplat {

inline constexpr double kPsnrCap = 99.0;
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

double psnr(const Image& a, const Image& b);

/// Mean SSIM over the valid window positions, averaged over channels.
double ssim(const Image& a, const Image& b);

double ws_psnr(const Image& a, const Image& b, const ErpGrid& grid);

/// SSIM map weighted by the ERP row weight of each window's center row.
double ws_ssim(const Image& a, const Image& b, const ErpGrid& grid);

/// Weighted mean SSIM and, if grad_a is non-null, its gradient with respect to
/// a. row_weights has one entry per map row (H - 10) or is empty for uniform.
double ssim_with_grad(const Image& a, const Image& b, const std::vector<double>& row_weights, Image* grad_a);

enum class Metric { Psnr, Ssim, WsPsnr, WsSsim };

const char* metric_name(Metric m);

struct MetricSeries {
    Metric metric;
    std::vector<double> per_frame;
    double mean = 0.0;
};

struct MetricReport {
    std::size_t frames = 0;
    std::vector<MetricSeries> series;

    const MetricSeries& get(Metric m) const;
    double mean(Metric m) const { return get(m).mean; }
};

/// Scores each prediction against its reference. Frames are evaluated in
/// parallel; the report does not depend on the thread count.
MetricReport evaluate(const std::vector<Image>& pred, const std::vector<Image>& ref, const ErpGrid& grid,
                      const std::vector<Metric>& metrics = {Metric::Psnr, Metric::Ssim, Metric::WsPsnr, Metric::WsSsim});

/// One "metric frame value" line per score, then a "# mean" table.
void write_report(std::ostream& os, const MetricReport& report);

}  // namespace panosplat
