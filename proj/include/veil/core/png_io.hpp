#pragma once

#include <cstdio>
#include <cstdint>
#include <string>
#include <vector>

#include <png.h>

#include "veil/core/common.hpp"

namespace veil {

struct RawImage {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> rgb; // interleaved, 3 bytes per pixel
};

namespace detail {

struct FileCloser {
    FILE* f;
    ~FileCloser() { if (f) std::fclose(f); }
};

} // namespace detail

inline void write_png_rgb8(const std::string& path, int width, int height,
                           const std::vector<uint8_t>& rgb) {
    require(rgb.size() == size_t(width) * height * 3, "write_png: buffer size mismatch for ", path);
    FILE* f = std::fopen(path.c_str(), "wb");
    require(f != nullptr, "write_png: cannot open '", path, "' for writing");
    detail::FileCloser closer{f};

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    require(png != nullptr, "write_png: png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        fail("write_png: png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail("write_png: libpng error while writing '", path, "'");
    }
    png_init_io(png, f);
    png_set_compression_level(png, 6);
    png_set_IHDR(png, info, png_uint_32(width), png_uint_32(height), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(static_cast<size_t>(height));
    for (int y = 0; y < height; ++y)
        rows[size_t(y)] = const_cast<png_bytep>(rgb.data() + size_t(y) * width * 3);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

inline RawImage read_png_rgb8(const std::string& path) {
    FILE* f = std::fopen(path.c_str(), "rb");
    require(f != nullptr, "read_png: cannot open '", path, "'");
    detail::FileCloser closer{f};

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    require(png != nullptr, "read_png: png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        fail("read_png: png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail("read_png: libpng error while reading '", path, "'");
    }
    png_init_io(png, f);
    png_read_info(png, info);

    // Normalize any input to 8-bit RGB.
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);

    RawImage img;
    img.width = int(png_get_image_width(png, info));
    img.height = int(png_get_image_height(png, info));
    const size_t rowbytes = png_get_rowbytes(png, info);
    require(rowbytes == size_t(img.width) * 3, "read_png: unexpected row size in '", path, "'");
    img.rgb.resize(size_t(img.height) * rowbytes);
    std::vector<png_bytep> rows(static_cast<size_t>(img.height));
    for (int y = 0; y < img.height; ++y)
        rows[size_t(y)] = img.rgb.data() + size_t(y) * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

} // namespace veil
