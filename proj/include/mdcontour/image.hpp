#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace mdcontour {

struct Rgba {
    std::uint8_t r = 0, g = 0, b = 0, a = 255;
    friend constexpr bool operator==(const Rgba&, const Rgba&) = default;
};

struct RenderedImage {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<Rgba> pixels; // row-major, row 0 at the top

    RenderedImage() = default;
    RenderedImage(std::uint32_t w, std::uint32_t h, Rgba fill = {}) : width(w), height(h), pixels(std::size_t{w} * h, fill) {}

    Rgba& at(std::uint32_t x, std::uint32_t y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    const Rgba& at(std::uint32_t x, std::uint32_t y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

// Linear blend of dst toward src by coverage in [0, 1].
Rgba blend(const Rgba& dst, const Rgba& src, double coverage);

// 8-bit RGBA, non-interlaced, fixed compression settings (byte-stable output).
std::vector<std::uint8_t> encode_png(const RenderedImage& image);
RenderedImage decode_png(std::span<const std::uint8_t> bytes);

void write_png(const std::filesystem::path& path, const RenderedImage& image);
RenderedImage read_png(const std::filesystem::path& path);

} // namespace mdcontour
