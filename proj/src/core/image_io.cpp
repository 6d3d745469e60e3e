// Copyright (C) 2026 The panosplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "panosplat/image_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <png.h>

#include "panosplat/error.hpp"

namespace panosplat {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const noexcept {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::uint8_t to_code(double v) {
    if (!(v > 0.0)) return 0;
    if (v >= 1.0) return 255;
    return static_cast<std::uint8_t>(std::lround(v * 255.0));
}

}  // namespace

Image quantize_8bit(const Image& image) {
    Image out = image;
    for (double& v : out.data()) v = to_code(v) / 255.0;
    return out;
}

void write_png(const std::filesystem::path& path, const Image& image) {
    require(image.channels() == 1 || image.channels() == 3, ErrorCode::InvalidArgument,
            "png output needs 1 or 3 channels: " + path.string());
    require(!image.empty(), ErrorCode::InvalidArgument, "cannot write an empty image: " + path.string());
    FilePtr file(std::fopen(path.string().c_str(), "wb"));
    require(file != nullptr, ErrorCode::Io, "cannot open " + path.string() + " for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    require(png != nullptr, ErrorCode::Io, "png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        fail(ErrorCode::Io, "png_create_info_struct failed");
    }

    std::vector<std::uint8_t> rows(image.size());
    for (std::size_t i = 0; i < image.size(); ++i) rows[i] = to_code(image.data()[i]);
    std::vector<png_bytep> row_ptrs(static_cast<std::size_t>(image.height()));
    const std::size_t stride = static_cast<std::size_t>(image.width()) * image.channels();
    for (int y = 0; y < image.height(); ++y) row_ptrs[y] = rows.data() + y * stride;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(ErrorCode::Io, "libpng failed writing " + path.string());
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, image.width(), image.height(), 8,
                 image.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 6);
    png_set_rows(png, info, row_ptrs.data());
    png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
    png_destroy_write_struct(&png, &info);
}

Image read_png(const std::filesystem::path& path) {
    require(std::filesystem::exists(path), ErrorCode::NotFound, "image not found: " + path.string());
    FilePtr file(std::fopen(path.string().c_str(), "rb"));
    require(file != nullptr, ErrorCode::Io, "cannot open " + path.string());
    png_byte sig[8];
    require(std::fread(sig, 1, 8, file.get()) == 8 && png_sig_cmp(sig, 0, 8) == 0, ErrorCode::Parse,
            "not a png file: " + path.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    require(png != nullptr, ErrorCode::Io, "png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        fail(ErrorCode::Io, "png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(ErrorCode::Parse, "corrupt png: " + path.string());
    }
    png_init_io(png, file.get());
    png_set_sig_bytes(png, 8);
    png_read_png(png, info, PNG_TRANSFORM_STRIP_16 | PNG_TRANSFORM_PACKING | PNG_TRANSFORM_EXPAND, nullptr);

    const int width = static_cast<int>(png_get_image_width(png, info));
    const int height = static_cast<int>(png_get_image_height(png, info));
    const int color = png_get_color_type(png, info);
    const int in_channels = png_get_channels(png, info);
    png_bytepp rows = png_get_rows(png, info);

    const bool gray = (color & PNG_COLOR_MASK_COLOR) == 0;
    const int out_channels = gray ? 1 : 3;
    Image out(height, width, out_channels);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            for (int c = 0; c < out_channels; ++c) {
                out.at(y, x, c) = rows[y][x * in_channels + c] / 255.0;
            }
        }
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

void write_pfm(const std::filesystem::path& path, const Image& image) {
    require(image.channels() == 1, ErrorCode::InvalidArgument, "pfm output must be single channel");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot open " + path.string() + " for writing");
    out << "Pf\n" << image.width() << " " << image.height() << "\n-1.0\n";
    std::vector<std::uint8_t> row(static_cast<std::size_t>(image.width()) * 4);
    for (int y = image.height() - 1; y >= 0; --y) {
        for (int x = 0; x < image.width(); ++x) {
            const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(image.at(y, x)));
            for (int b = 0; b < 4; ++b) row[x * 4 + b] = static_cast<std::uint8_t>((bits >> (8 * b)) & 0xffu);
        }
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    require(static_cast<bool>(out), ErrorCode::Io, "failed writing " + path.string());
}

Image read_pfm(const std::filesystem::path& path) {
    require(std::filesystem::exists(path), ErrorCode::NotFound, "depth file not found: " + path.string());
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path.string());
    std::string magic;
    int width = 0, height = 0;
    double scale = 0.0;
    in >> magic >> width >> height >> scale;
    require(static_cast<bool>(in) && magic == "Pf", ErrorCode::Parse,
            path.string() + ": expected a single-channel 'Pf' header");
    require(width > 0 && height > 0, ErrorCode::Parse, path.string() + ": invalid pfm dimensions");
    require(scale < 0.0, ErrorCode::Parse, path.string() + ": only little-endian pfm is supported");
    in.get();  // single whitespace byte ends the header

    Image out(height, width, 1);
    std::vector<std::uint8_t> row(static_cast<std::size_t>(width) * 4);
    for (int y = height - 1; y >= 0; --y) {
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
        require(static_cast<bool>(in), ErrorCode::Parse, path.string() + ": truncated pfm data");
        for (int x = 0; x < width; ++x) {
            std::uint32_t bits = 0;
            for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(row[x * 4 + b]) << (8 * b);
            out.at(y, x) = std::bit_cast<float>(bits);
        }
    }
    return out;
}

}  // namespace panosplat
