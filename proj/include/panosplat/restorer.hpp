// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "panosplat/diffusion_kernels.hpp"
#include "panosplat/image.hpp"

namespace panosplat {

struct RestoreRequest {
    VideoSequence degraded;
    Image anchor;  // fully observed first panorama
    std::string scene_id = "scene";
    int target_scale = 1;

    void validate() const;
};

struct RestoreResult {
    std::vector<Image> frames;  // T x (sH x sW x 3)
    std::string provenance;
};

inline constexpr double kHoleThreshold = 0.5;

/// Nearest-neighbour upsampling by an integer factor.
Image upsample_nearest(const Image& image, int scale);

/// Fills pixels with alpha < kHoleThreshold by push-pull pyramid
/// interpolation; other pixels are copied bit-exactly. Returns false (and
/// leaves `rgb` unchanged) when the frame has no valid pixel.
bool pushpull_fill(Image& rgb, const Image& alpha);

RestoreResult restore_identity(const RestoreRequest& req);
RestoreResult restore_pushpull(const RestoreRequest& req);

// File-exchange protocol with an external restorer process. Layout under
// exchange_dir/scene_id/:
//   request.json, frames/%05d.png, alpha/%05d.png, anchor.png, REQUEST_READY
//   restored/%05d.png, RESULT_READY    (adapter side)
//   ERROR                              (adapter-side failure message)
// Markers are created by renaming a temporary file.

inline constexpr int kExchangeSchemaVersion = 1;

struct ExternalOptions {
    std::filesystem::path exchange_dir;
    double timeout_s = 600.0;
    double poll_interval_s = 0.5;
};

RestoreResult restore_external(const RestoreRequest& req, const ExternalOptions& opts);

/// Request as seen by an adapter after REQUEST_READY.
struct ExchangeRequest {
    std::filesystem::path scene_dir;
    std::string scene_id;
    int frames = 0, height = 0, width = 0, target_scale = 1;
    std::vector<std::string> frame_files, alpha_files;
    std::string anchor_file;
};

ExchangeRequest read_exchange_request(const std::filesystem::path& scene_dir);
RestoreRequest load_exchange_request(const ExchangeRequest& req);
void write_exchange_result(const std::filesystem::path& scene_dir, const std::vector<Image>& frames);
void write_exchange_error(const std::filesystem::path& scene_dir, const std::string& message);

/// Creates `path` with `content` by writing a sibling temporary and renaming.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace panosplat
