// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "panosplat/image.hpp"

namespace panosplat {

/// 8-bit PNG, 1 (gray) or 3 (RGB) channels; values are clamped to [0, 1] and
/// rounded to the nearest code.
void write_png(const std::filesystem::path& path, const Image& image);

/// Reads an 8-bit gray, RGB or RGBA PNG into [0, 1] values. Gray stays single
/// channel, RGBA drops alpha.
Image read_png(const std::filesystem::path& path);

/// Single-channel little-endian PFM ("Pf", negative scale), rows stored
/// bottom-to-top per the format.
void write_pfm(const std::filesystem::path& path, const Image& image);
Image read_pfm(const std::filesystem::path& path);

/// Rounds every sample to the 8-bit grid used by write_png.
Image quantize_8bit(const Image& image);

}  // namespace panosplat
