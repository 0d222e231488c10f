#include "core/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>
#include <vector>

#include "core/errors.hpp"
#include "core/io_util.hpp"

namespace fs = std::filesystem;

namespace uclearn {

namespace {

struct MemSink {
    std::vector<std::uint8_t> bytes;
};

void png_mem_write(png_structp png, png_bytep data, png_size_t len) {
    auto* sink = static_cast<MemSink*>(png_get_io_ptr(png));
    sink->bytes.insert(sink->bytes.end(), data, data + len);
}

void png_mem_flush(png_structp) {}

struct MemSource {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos;
};

void png_mem_read(png_structp png, png_bytep out, png_size_t len) {
    auto* src = static_cast<MemSource*>(png_get_io_ptr(png));
    if (src->pos + len > src->size) {
        png_error(png, "unexpected end of PNG stream");
    }
    std::memcpy(out, src->data + src->pos, len);
    src->pos += len;
}

} // namespace

void write_png_rgb8(const fs::path& path, const Image& img) {
    if (img.channels != 3) throw_param("write_png_rgb8: image must have 3 channels");

    std::vector<std::uint8_t> rows(std::size_t(img.height) * img.width * 3);
    for (std::size_t i = 0; i < img.data.size(); ++i) rows[i] = quantize_byte(img.data[i]);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw_io("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw_io("png_create_info_struct failed");
    }

    MemSink sink;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw_io("libpng write error: " + path.string());
    }
    png_set_write_fn(png, &sink, png_mem_write, png_mem_flush);
    png_set_compression_level(png, 6);
    png_set_filter(png, 0, PNG_FILTER_NONE);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height),
                 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> row_ptrs(img.height);
    for (int h = 0; h < img.height; ++h) row_ptrs[h] = rows.data() + std::size_t(h) * img.width * 3;
    png_write_image(png, row_ptrs.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);

    atomic_write_file(path, sink.bytes.data(), sink.bytes.size());
}

Image read_png_rgb8(const fs::path& path) {
    std::vector<std::uint8_t> bytes;
    try {
        bytes = read_binary_file(path);
    } catch (const Error&) {
        throw_format("cannot read PNG file: " + path.string());
    }
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
        throw_format("not a PNG file: " + path.string());
    }

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw_io("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw_io("png_create_info_struct failed");
    }

    std::vector<std::uint8_t> raw;
    std::vector<png_bytep> row_ptrs;
    int width = 0;
    int height = 0;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw_format("corrupt PNG file: " + path.string());
    }

    MemSource src{bytes.data(), bytes.size(), 0};
    png_set_read_fn(png, &src, png_mem_read);
    png_read_info(png, info);

    width = static_cast<int>(png_get_image_width(png, info));
    height = static_cast<int>(png_get_image_height(png, info));
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);

    // Normalize any input to 8-bit RGB.
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    if (png_get_rowbytes(png, info) != std::size_t(width) * 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw_format("unexpected PNG row layout: " + path.string());
    }

    raw.resize(std::size_t(height) * width * 3);
    row_ptrs.resize(height);
    for (int h = 0; h < height; ++h) row_ptrs[h] = raw.data() + std::size_t(h) * width * 3;
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Image img(height, width, 3);
    for (std::size_t i = 0; i < raw.size(); ++i) img.data[i] = dequantize_byte(raw[i]);
    return img;
}

} // namespace uclearn
