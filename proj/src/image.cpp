#include "mdcontour/image.hpp"

#include "mdcontour/error.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace mdcontour {

Rgba blend(const Rgba& dst, const Rgba& src, double coverage)
{
    const double c = std::clamp(coverage, 0.0, 1.0) * (src.a / 255.0);
    auto mix = [c](std::uint8_t d, std::uint8_t s) {
        return static_cast<std::uint8_t>(std::lround(d + (static_cast<double>(s) - d) * c));
    };
    return {mix(dst.r, src.r), mix(dst.g, src.g), mix(dst.b, src.b),
            static_cast<std::uint8_t>(std::lround(dst.a + (255.0 - dst.a) * c))};
}

namespace {

struct ReadCursor {
    std::span<const std::uint8_t> bytes;
    std::size_t offset = 0;
};

void on_png_error(png_structp, png_const_charp message)
{
    throw Error(ErrorCode::FormatError, std::string("PNG: ") + message);
}

void on_png_warning(png_structp, png_const_charp) {}

} // namespace

std::vector<std::uint8_t> encode_png(const RenderedImage& image)
{
    std::vector<std::uint8_t> out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, on_png_error, on_png_warning);
    png_infop info = png_create_info_struct(png);
    try {
        png_set_write_fn(
            png, &out,
            [](png_structp p, png_bytep data, png_size_t length) {
                auto* buffer = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(p));
                buffer->insert(buffer->end(), data, data + length);
            },
            nullptr);
        png_set_compression_level(png, 6);
        png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_PAETH);
        png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_RGBA, PNG_INTERLACE_NONE,
                     PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        std::vector<png_byte> row(static_cast<std::size_t>(image.width) * 4);
        for (std::uint32_t y = 0; y < image.height; ++y) {
            for (std::uint32_t x = 0; x < image.width; ++x) {
                const Rgba& c = image.at(x, y);
                row[4 * x + 0] = c.r;
                row[4 * x + 1] = c.g;
                row[4 * x + 2] = c.b;
                row[4 * x + 3] = c.a;
            }
            png_write_row(png, row.data());
        }
        png_write_end(png, nullptr);
    } catch (...) {
        png_destroy_write_struct(&png, &info);
        throw;
    }
    png_destroy_write_struct(&png, &info);
    return out;
}

RenderedImage decode_png(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0)
        throw Error(ErrorCode::FormatError, "not a PNG file");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, on_png_error, on_png_warning);
    png_infop info = png_create_info_struct(png);
    RenderedImage image;
    ReadCursor cursor{bytes, 0};
    try {
        png_set_read_fn(png, &cursor, [](png_structp p, png_bytep data, png_size_t length) {
            auto* c = static_cast<ReadCursor*>(png_get_io_ptr(p));
            if (c->offset + length > c->bytes.size())
                png_error(p, "unexpected end of data");
            std::memcpy(data, c->bytes.data() + c->offset, length);
            c->offset += length;
        });
        png_read_info(png, info);
        const png_byte color = png_get_color_type(png, info);
        if (png_get_bit_depth(png, info) == 16)
            png_set_strip_16(png);
        if (color == PNG_COLOR_TYPE_PALETTE)
            png_set_palette_to_rgb(png);
        if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
            png_set_gray_to_rgb(png);
        if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8)
            png_set_expand_gray_1_2_4_to_8(png);
        if (png_get_valid(png, info, PNG_INFO_tRNS))
            png_set_tRNS_to_alpha(png);
        if (!(color & PNG_COLOR_MASK_ALPHA) && !png_get_valid(png, info, PNG_INFO_tRNS))
            png_set_filler(png, 0xFF, PNG_FILLER_AFTER);
        png_set_interlace_handling(png);
        png_read_update_info(png, info);

        image = RenderedImage(png_get_image_width(png, info), png_get_image_height(png, info));
        std::vector<png_byte> data(static_cast<std::size_t>(image.width) * image.height * 4);
        std::vector<png_bytep> rows(image.height);
        for (std::uint32_t y = 0; y < image.height; ++y)
            rows[y] = data.data() + static_cast<std::size_t>(y) * image.width * 4;
        png_read_image(png, rows.data());
        for (std::size_t i = 0; i < image.pixels.size(); ++i)
            image.pixels[i] = {data[4 * i], data[4 * i + 1], data[4 * i + 2], data[4 * i + 3]};
    } catch (...) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return image;
}

void write_png(const std::filesystem::path& path, const RenderedImage& image)
{
    const auto bytes = encode_png(image);
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

RenderedImage read_png(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_png(bytes);
}

} // namespace mdcontour
